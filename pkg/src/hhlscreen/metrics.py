"""Confusion-matrix scores and cross-validated learning curves.

Zero-denominator metrics report 0.0 and carry an "undefined" flag instead of
NaN so CSV reports stay machine-readable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ScoreReport:
    accuracy: float
    precision: float
    recall: float
    specificity: float
    f1: float
    balanced_accuracy: float
    undefined: tuple[str, ...] = ()


def confusion(preds, labels) -> ConfusionMatrix:
    """Standard counts; the positive class is "well suited" (label 1)."""
    preds = np.asarray(preds, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if preds.shape != labels.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {labels.shape}")
    bad = set(np.unique(preds)) | set(np.unique(labels))
    if not bad <= {0, 1}:
        raise ValueError(f"labels must be binary, got values {sorted(bad)}")
    return ConfusionMatrix(
        tp=int(np.sum((preds == 1) & (labels == 1))),
        fp=int(np.sum((preds == 1) & (labels == 0))),
        tn=int(np.sum((preds == 0) & (labels == 0))),
        fn=int(np.sum((preds == 0) & (labels == 1))),
    )


def report(cm: ConfusionMatrix) -> ScoreReport:
    if cm.total == 0:
        raise ValueError("cannot score an empty confusion matrix")
    undefined = []

    def ratio(name, num, den):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    accuracy = (cm.tp + cm.tn) / cm.total
    precision = ratio("precision", cm.tp, cm.tp + cm.fp)
    recall = ratio("recall", cm.tp, cm.tp + cm.fn)
    specificity = ratio("specificity", cm.tn, cm.tn + cm.fp)
    f1 = ratio("f1", 2.0 * precision * recall, precision + recall)
    balanced = (recall + specificity) / 2.0
    return ScoreReport(accuracy=accuracy, precision=precision, recall=recall,
                       specificity=specificity, f1=f1, balanced_accuracy=balanced,
                       undefined=tuple(undefined))


def stratified_folds(labels, folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified k-fold index partition."""
    labels = np.asarray(labels, dtype=int)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for value in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == value)
        if len(idx) < folds:
            raise ValueError(
                f"class {value} has {len(idx)} samples, fewer than {folds} folds")
        idx = idx[rng.permutation(len(idx))]
        for i, j in enumerate(idx):
            buckets[i % folds].append(int(j))
    return [np.array(sorted(b), dtype=int) for b in buckets]


def learning_curve(model_factory, features, labels, folds: int = 5,
                   fractions=None, seed: int = 0) -> list[dict]:
    """Mean +/- std train and validation accuracy versus training-set size.

    For each fraction of the available training data, every fold in turn is
    held out for validation while the model trains on that fraction of the
    remaining samples.  ``model_factory(x_train, y_train, x_val, y_val)``
    must return a trained model exposing scores through ``predict``.
    """
    from .mlp import predict  # local import keeps this module model-agnostic

    if fractions is None:
        fractions = [round(0.1 * k, 1) for k in range(1, 11)]
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    fold_idx = stratified_folds(labels, folds, seed)
    rows = []
    for frac in fractions:
        if not 0.0 < frac <= 1.0:
            raise ValueError("fractions must lie in (0, 1]")
        train_acc, val_acc = [], []
        for k in range(folds):
            val_ids = fold_idx[k]
            train_ids = np.concatenate([fold_idx[i] for i in range(folds) if i != k])
            rng = np.random.default_rng(seed + 1000 * k)
            train_ids = train_ids[rng.permutation(len(train_ids))]
            take = max(2, int(round(frac * len(train_ids))))
            sub = train_ids[:take]
            if len(np.unique(labels[sub])) < 2:  # tiny fractions can miss a class
                both = [np.flatnonzero(labels[train_ids] == v)[0] for v in (0, 1)]
                sub = np.concatenate([sub, train_ids[both]])
            model = model_factory(features[sub], labels[sub],
                                  features[val_ids], labels[val_ids])
            train_acc.append(float(np.mean(predict(model, features[sub]) == labels[sub])))
            val_acc.append(float(np.mean(predict(model, features[val_ids]) == labels[val_ids])))
        rows.append({
            "fraction": float(frac),
            "train_mean": float(np.mean(train_acc)),
            "train_std": float(np.std(train_acc)),
            "val_mean": float(np.mean(val_acc)),
            "val_std": float(np.std(val_acc)),
        })
    return rows
