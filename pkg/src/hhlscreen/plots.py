"""Figure rendering for report outputs.

Every CSV-producing report path can drop a PNG next to the delimited file;
these helpers own the matplotlib calls so the rest of the package stays
headless-safe.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import KAPPA_BIN_EDGES


def save_kappa_histograms(histograms: dict, path):
    """Grouped bars of five-bin kappa proportions, one group color per set."""
    fig, ax = plt.subplots(figsize=(7, 4))
    names = list(histograms)
    width = 0.8 / max(len(names), 1)
    centers = np.arange(5)
    for k, name in enumerate(names):
        ax.bar(centers + k * width, histograms[name].proportions, width=width, label=name)
    ax.set_xticks(centers + 0.4 - width / 2)
    ax.set_xticklabels([f"{KAPPA_BIN_EDGES[i]:.0f}-{KAPPA_BIN_EDGES[i+1]:.0f}"
                        for i in range(5)], fontsize=8)
    ax.set_xlabel("condition number bin")
    ax.set_ylabel("proportion")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_learning_curve(rows: list[dict], path):
    """Mean accuracy lines with fold-std bands versus training fraction."""
    fig, ax = plt.subplots(figsize=(7, 4))
    frac = np.array([r["fraction"] for r in rows])
    for key, label in (("train", "training accuracy"), ("val", "validation accuracy")):
        mean = np.array([r[f"{key}_mean"] for r in rows])
        std = np.array([r[f"{key}_std"] for r in rows])
        ax.plot(frac, mean, marker="o", label=label)
        ax.fill_between(frac, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("fraction of training data")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_score_bars(rows: list[dict], path):
    """Grouped metric bars per report row (variant/split)."""
    metrics = ("accuracy", "f1", "recall", "specificity", "balanced_accuracy")
    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.8 / max(len(rows), 1)
    centers = np.arange(len(metrics))
    for k, row in enumerate(rows):
        vals = [float(row[m]) for m in metrics]
        label = f"{row['dataset_variant']}/{row['split_name']}"
        ax.bar(centers + k * width, vals, width=width, label=label)
    ax.set_xticks(centers + 0.4 - width / 2)
    ax.set_xticklabels(metrics, fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_depth_vs_size(depth_by_size: dict[int, list[int]], path):
    """Mean depth versus matrix size on a log depth axis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    sizes = sorted(depth_by_size)
    means = [float(np.mean(depth_by_size[n])) for n in sizes]
    ax.plot(sizes, means, marker="s")
    ax.set_yscale("log")
    ax.set_xticks(sizes)
    ax.set_xlabel("matrix size")
    ax.set_ylabel("mean circuit depth (layers)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
