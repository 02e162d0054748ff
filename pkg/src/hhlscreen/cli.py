"""Command-line pipeline: generate, depth, featurize, train, evaluate, iris, curve.

Every subcommand is deterministic for a fixed seed and never mutates its
input files.  Configuration comes from key=value files (flag > config file >
built-in default); the HHLSCREEN_CONFIG environment variable names a default
config file.  Report-producing commands render a PNG figure next to each
delimited output unless --no-plot is given.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset, plots
from .dataset import DepthCutoff, DepthRecord, KAPPA_BIN_EDGES
from .features import extract, variant_names, FEATURE_REGISTRY, VARIANTS
from .matrices import ResampleBudgetError, SingularMatrixError
from .metrics import confusion, learning_curve, report
from .mlp import (MlpModel, TrainConfig, forward, init_model, load_model,
                  predict, save_model, train, tune_threshold)

DEFAULT_SIZES = (2, 4, 8, 16)
DEFAULT_COUNTS = {2: 600, 4: 1000, 8: 80, 16: 16}
DEFAULT_CUTOFF = "quantile:0.476"
IRIS_POSITIVE_TARGET = 0.80
CONFIG_ENV = "HHLSCREEN_CONFIG"

CONFIG_KEYS = {
    "seed", "sizes", "counts", "cutoff", "variant", "jobs", "val_fraction",
    "max_epochs", "batch_size", "lr0", "tune_threshold", "count", "match_total",
    "positive_fraction", "folds", "fractions", "restarts",
}

REPORT_COLUMNS = ("dataset_variant", "split_name", "accuracy", "f1",
                  "recall", "specificity", "balanced_accuracy")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract says 1
        raise UsageError(message)


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            cfg[key] = value.strip()
    return cfg


def _setting(args, config: dict, key: str, default, cast):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return cast(config[key])
    return default


def _parse_sizes(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _parse_counts(text: str) -> dict[int, int]:
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        size, sep, count = part.partition(":")
        if not sep:
            raise ValueError(f"counts must look like '4:875', got {part!r}")
        out[int(size)] = int(count)
    return out


def _records_from_depth_file(path) -> list[DepthRecord]:
    records = []
    for rec in dataset.read_jsonl(path):
        m = dataset.record_to_matrix(rec)
        records.append(DepthRecord(matrix=m, s=int(rec["s"]), kappa=float(rec["kappa"]),
                                   n_l=int(rec["n_l"]), depth=int(rec["depth"])))
    return records


def _depth_file_rows(records) -> list[dict]:
    return [dataset.matrix_record(r.matrix, s=r.s, kappa=r.kappa, n_l=r.n_l, depth=r.depth)
            for r in records]


def _samples_to_xy(samples, variant: str):
    x = np.stack([extract(s.matrix, variant).values for s in samples])
    y = np.array([s.label for s in samples], dtype=int)
    return x, y


def _stratified_xy_split(x, y, fraction: float, seed: int):
    rng = np.random.default_rng(seed)
    hold = []
    for value in sorted(set(y.tolist())):
        idx = np.flatnonzero(y == value)
        idx = idx[rng.permutation(len(idx))]
        hold.extend(idx[:int(round(fraction * len(idx)))].tolist())
    hold_mask = np.zeros(len(y), dtype=bool)
    hold_mask[hold] = True
    return (x[~hold_mask], y[~hold_mask]), (x[hold_mask], y[hold_mask])


def _train_config(args, config) -> TrainConfig:
    return TrainConfig(
        lr0=float(_setting(args, config, "lr0", 0.01, float)),
        max_epochs=int(_setting(args, config, "max_epochs", 500, int)),
        batch_size=int(_setting(args, config, "batch_size", 64, int)),
        seed=int(_setting(args, config, "seed", 0, int)),
    )


def _train_selected(input_dim: int, train_xy, val_xy, cfg: TrainConfig,
                    restarts: int) -> MlpModel:
    """Train `restarts` fresh initializations; keep the best validation loss.

    Seeds run seed..seed+restarts-1; ties resolve to the earliest seed, so the
    selection is deterministic.
    """
    best = None
    for k in range(max(1, restarts)):
        run_cfg = TrainConfig(**{**cfg.__dict__, "seed": cfg.seed + k})
        model = init_model(input_dim, seed=run_cfg.seed)
        train(model, train_xy, val_xy, run_cfg)
        loss = model.train_meta["best_val_loss"]
        if best is None or (loss is not None and loss < best.train_meta["best_val_loss"]):
            best = model
    return best


def _score_row(variant: str, split: str, preds, labels) -> dict:
    rep = report(confusion(preds, labels))
    return {
        "dataset_variant": variant, "split_name": split,
        "accuracy": rep.accuracy, "f1": rep.f1, "recall": rep.recall,
        "specificity": rep.specificity, "balanced_accuracy": rep.balanced_accuracy,
    }


def _write_report(path, rows, append: bool = False, plot: bool = True):
    exists = Path(path).exists()
    mode = "a" if append and exists else "w"
    with open(path, mode, newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([row["dataset_variant"], row["split_name"]]
                            + [repr(float(row[c])) for c in REPORT_COLUMNS[2:]])
    if plot:
        with open(path, newline="", encoding="utf-8") as fh:
            all_rows = list(csv.DictReader(fh))
        plots.save_score_bars(all_rows, Path(path).with_suffix(".png"))


def _write_histograms(path, hists: dict, plot: bool = True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "proportion", "set_name"])
        for name, hist in hists.items():
            for b in range(5):
                writer.writerow([repr(KAPPA_BIN_EDGES[b]), repr(KAPPA_BIN_EDGES[b + 1]),
                                 repr(hist.proportions[b]), name])
    if plot:
        plots.save_kappa_histograms(hists, Path(path).with_suffix(".png"))


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args):
    config = _load_config(args.config)
    seed = int(_setting(args, config, "seed", 0, int))
    sizes = _setting(args, config, "sizes", DEFAULT_SIZES, _parse_sizes)
    if isinstance(sizes, str):
        sizes = _parse_sizes(sizes)
    counts = _setting(args, config, "counts", DEFAULT_COUNTS, _parse_counts)
    if isinstance(counts, str):
        counts = _parse_counts(counts)
    corpus = dataset.build_corpus(sizes, counts, seed)
    dataset.write_jsonl(args.out, [
        dataset.matrix_record(m, s=m.sparsity, kappa=m.kappa) for m in corpus])
    print(f"wrote {len(corpus)} matrices to {args.out}")
    return 0


def cmd_depth(args):
    config = _load_config(args.config)
    jobs = int(_setting(args, config, "jobs", os.cpu_count() or 1, int))
    matrices = [dataset.record_to_matrix(rec) for rec in dataset.read_jsonl(args.infile)]
    if not matrices:
        raise ValueError(f"no matrices found in {args.infile}")
    records = dataset.compute_depths(matrices, jobs=jobs)
    dataset.write_jsonl(args.out, _depth_file_rows(records))
    print(f"wrote {len(records)} depth records to {args.out}")
    return 0


def cmd_featurize(args):
    config = _load_config(args.config)
    variant = _setting(args, config, "variant", None, str)
    if variant not in VARIANTS:
        raise UsageError(f"--variant must be one of {VARIANTS}")
    cutoff = DepthCutoff.parse(_setting(args, config, "cutoff", DEFAULT_CUTOFF, str))
    records = _records_from_depth_file(args.infile)
    labeling = dataset.label_corpus(records, cutoff)
    samples = labeling.samples
    if args.only_size:
        samples = tuple(s for s in samples if s.matrix.n == args.only_size)
        if not samples:
            raise ValueError(f"no matrices of size {args.only_size} in {args.infile}")
    if variant == "d4":
        bad = sorted({s.matrix.n for s in samples} - {4})
        if bad:
            raise ValueError(
                f"variant d4 takes 4x4 matrices only, corpus has sizes {bad}; "
                "use --only-size 4 to select the 4x4 subset")
    jobs = int(_setting(args, config, "jobs", os.cpu_count() or 1, int))
    if args.test_out:
        seed = int(_setting(args, config, "seed", 0, int))
        fraction = args.test_fraction if args.test_fraction is not None else 0.2
        train_s, test_s = dataset.split(samples, fraction, seed)
        dataset.write_feature_csv(args.out, train_s, variant, jobs=jobs)
        dataset.write_feature_csv(args.test_out, test_s, variant, jobs=jobs)
        samples = train_s
    else:
        dataset.write_feature_csv(args.out, samples, variant, jobs=jobs)
    meta = {
        "variant": variant, "cutoff_mode": cutoff.mode, "cutoff_value": cutoff.value,
        "threshold": labeling.threshold, "positive_fraction": labeling.positive_fraction,
        "rows": len(samples),
    }
    if args.meta_out:
        with open(args.meta_out, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
    print(f"wrote {len(samples)} rows to {args.out} "
          f"(threshold {labeling.threshold:.0f}, positive {labeling.positive_fraction:.3f})")
    return 0


def cmd_train(args):
    config = _load_config(args.config)
    x, y, _, names = dataset.read_feature_csv(args.infile)
    val_fraction = float(_setting(args, config, "val_fraction", 0.2, float))
    cfg = _train_config(args, config)
    restarts = int(_setting(args, config, "restarts", 1, int))
    (x_tr, y_tr), (x_val, y_val) = _stratified_xy_split(x, y, val_fraction, cfg.seed)
    model = _train_selected(x.shape[1], (x_tr, y_tr), (x_val, y_val), cfg, restarts)
    if args.tune_threshold:
        tune_threshold(model, (x_val, y_val))
    model.train_meta["feature_names"] = list(names)
    save_model(model, args.model)
    scores = forward(model, x_val)
    val_acc = float(np.mean((scores > model.threshold).astype(int) == y_val))
    print(f"trained on {len(x_tr)} rows ({model.train_meta['epochs_run']} epochs), "
          f"validation accuracy {val_acc:.3f}, threshold {model.threshold:.3f}; "
          f"saved to {args.model}")
    return 0


def cmd_evaluate(args):
    model = load_model(args.model)
    x, y, _, _ = dataset.read_feature_csv(args.infile)
    preds = predict(model, x)
    row = _score_row(args.variant_name, args.split_name, preds, y)
    _write_report(args.out, [row], append=args.append, plot=not args.no_plot)
    print(", ".join(f"{k}={row[k]:.3f}" for k in REPORT_COLUMNS[2:]))
    return 0


def cmd_curve(args):
    config = _load_config(args.config)
    x, y, _, _ = dataset.read_feature_csv(args.infile)
    folds = int(_setting(args, config, "folds", 5, int))
    fractions = _setting(args, config, "fractions", None, str)
    fractions = ([float(f) for f in fractions.split(",")] if isinstance(fractions, str)
                 else None)
    cfg = _train_config(args, config)

    def factory(x_tr, y_tr, x_val, y_val):
        model = init_model(x.shape[1], seed=cfg.seed)
        return train(model, (x_tr, y_tr), (x_val, y_val), cfg)

    rows = learning_curve(factory, x, y, folds=folds, fractions=fractions, seed=cfg.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "train_mean", "train_std", "val_mean", "val_std"])
        for r in rows:
            writer.writerow([repr(r[k]) for k in
                             ("fraction", "train_mean", "train_std", "val_mean", "val_std")])
    if not args.no_plot:
        plots.save_learning_curve(rows, Path(args.out).with_suffix(".png"))
    print(f"wrote learning curve ({len(rows)} points) to {args.out}")
    return 0


def cmd_iris(args):
    config = _load_config(args.config)
    seed = int(_setting(args, config, "seed", 0, int))
    jobs = int(_setting(args, config, "jobs", os.cpu_count() or 1, int))
    count = int(_setting(args, config, "count", 500, int))
    match_total = int(_setting(args, config, "match_total", count, int))
    target = float(_setting(args, config, "positive_fraction", IRIS_POSITIVE_TARGET, float))
    variants = tuple(args.variants.split(",")) if args.variants else VARIANTS
    for v in variants:
        if v not in VARIANTS:
            raise UsageError(f"unknown variant {v!r}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plot = not args.no_plot

    iris_csv = args.iris or dataset.iris_data_path()
    matrices = dataset.iris_matrices(iris_csv, count, seed)
    iris_records = dataset.compute_depths(matrices, jobs=jobs)
    dataset.write_jsonl(out_dir / "iris_depths.jsonl", _depth_file_rows(iris_records))
    cutoff = DepthCutoff(mode="quantile", value=target)
    iris_labeling = dataset.label_corpus(iris_records, cutoff)
    iris_hist = dataset.kappa_histogram([r.kappa for r in iris_records])

    if args.pool:
        pool_records = _records_from_depth_file(args.pool)
        pool_records = [r for r in pool_records if r.matrix.n == 4 and r.s == 4]
        if not pool_records:
            raise ValueError("pool file holds no 4x4, s=4 matrices")
    else:
        demands = dataset._apportion(iris_hist.proportions, match_total)
        pool_matrices = dataset.build_matching_pool(iris_hist, demands, seed)
        pool_records = dataset.compute_depths(pool_matrices, jobs=jobs)
        dataset.write_jsonl(out_dir / "pool_depths.jsonl", _depth_file_rows(pool_records))
    pool_hist = dataset.kappa_histogram([r.kappa for r in pool_records])

    hists = {"random_4x4_s4": pool_hist, "iris": iris_hist}
    summary = {
        "iris_count": len(iris_records),
        "iris_threshold": iris_labeling.threshold,
        "iris_positive_fraction": iris_labeling.positive_fraction,
        "iris_kappa_clipped": iris_hist.clipped,
        "iris_sparsities": sorted({r.s for r in iris_records}),
        "pool_size": len(pool_records),
    }
    report_rows = []

    if args.match:
        selected = dataset.distribution_match(pool_records, iris_hist, match_total, seed)
        sel_hist = dataset.kappa_histogram([r.kappa for r in selected])
        hists["selected"] = sel_hist
        matched_labeling = dataset.label_corpus(selected, cutoff)
        train_s, val_s = dataset.split(matched_labeling.samples, 0.2, seed)
        summary.update({
            "selected_size": len(selected),
            "selected_histogram": list(sel_hist.proportions),
            "iris_histogram": list(iris_hist.proportions),
            "matched_threshold": matched_labeling.threshold,
            "matched_positive_fraction": matched_labeling.positive_fraction,
        })
        cfg = _train_config(args, config)
        restarts = int(_setting(args, config, "restarts", 1, int))
        for variant in variants:
            x_tr, y_tr = _samples_to_xy(train_s, variant)
            x_val, y_val = _samples_to_xy(val_s, variant)
            model = _train_selected(x_tr.shape[1], (x_tr, y_tr), (x_val, y_val),
                                    cfg, restarts)
            tune_threshold(model, (x_val, y_val))
            save_model(model, out_dir / f"model_{variant}_matched.json")
            report_rows.append(_score_row(variant, "validation",
                                          predict(model, x_val), y_val))
            x_iris, y_iris = _samples_to_xy(iris_labeling.samples, variant)
            report_rows.append(_score_row(variant, "test_iris",
                                          predict(model, x_iris), y_iris))

    if args.baseline_model:
        base = load_model(args.baseline_model)
        x_iris, y_iris = _samples_to_xy(iris_labeling.samples, args.baseline_variant)
        report_rows.append(_score_row(args.baseline_variant, "test_iris_baseline",
                                      predict(base, x_iris), y_iris))

    _write_histograms(out_dir / "histograms.csv", hists, plot=plot)
    if report_rows:
        _write_report(out_dir / "report.csv", report_rows, plot=plot)
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    print(f"iris run complete: positive fraction "
          f"{iris_labeling.positive_fraction:.3f} at threshold "
          f"{iris_labeling.threshold:.0f}; outputs in {out_dir}")
    return 0


def cmd_list_features(args):
    for name, category, scaling in FEATURE_REGISTRY:
        print(f"{name}\t{category}\t{scaling}")
    print(f"# total {len(FEATURE_REGISTRY)} registry features; "
          f"variants: " + ", ".join(f"{v}={len(variant_names(v))}" for v in VARIANTS))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="hhlscreen",
                     description="Label linear-system matrices as well or poorly "
                                 "suited for HHL under a depth budget.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file "
                                        f"(default: ${CONFIG_ENV})")
        p.add_argument("--seed", type=int, help="RNG seed (default 0)")

    p = sub.add_parser("generate", help="generate a random matrix corpus")
    common(p)
    p.add_argument("--out", required=True, help="output corpus JSONL")
    p.add_argument("--sizes", help="comma list of sizes, e.g. 2,4,8,16")
    p.add_argument("--counts", help="per-size per-config counts, e.g. 2:700,4:875")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("depth", help="attach full HHL circuit depths")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="corpus JSONL")
    p.add_argument("--out", required=True, help="output depth JSONL")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("featurize", help="label a depth corpus and extract features")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="depth JSONL")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.add_argument("--variant", help="d1 | d2 | d3 | d4")
    p.add_argument("--cutoff", help="absolute:LAYERS or quantile:FRACTION "
                                    f"(default {DEFAULT_CUTOFF})")
    p.add_argument("--only-size", type=int, help="keep only matrices of this size "
                                                 "(labels still come from the full corpus)")
    p.add_argument("--meta-out", help="write labeling metadata JSON here")
    p.add_argument("--test-out", help="also write a stratified held-out test CSV here")
    p.add_argument("--test-fraction", type=float, help="held-out share (default 0.2)")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train the MLP classifier on a feature CSV")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="feature CSV")
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--tune-threshold", action="store_true",
                   help="tune the decision threshold for balanced accuracy")
    p.add_argument("--val-fraction", type=float, help="validation share (default 0.2)")
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr0", type=float)
    p.add_argument("--restarts", type=int,
                   help="train this many seeds, keep the best validation loss")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a feature CSV")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True, help="feature CSV")
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--variant-name", default="d1", help="label for the report row")
    p.add_argument("--split-name", default="test", help="label for the report row")
    p.add_argument("--append", action="store_true", help="append to an existing report")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("iris", help="run the Iris case study end to end")
    common(p)
    p.add_argument("--iris", help="iris CSV (default: bundled copy)")
    p.add_argument("--pool", help="depth JSONL for the matching pool "
                                  "(default: generate a stratified pool)")
    p.add_argument("--count", type=int, help="number of iris matrices (default 500)")
    p.add_argument("--match", action="store_true",
                   help="retrain on a kappa-distribution-matched selected set")
    p.add_argument("--match-total", type=int, help="selected-set size (default: count)")
    p.add_argument("--positive-fraction", type=float,
                   help=f"calibrated positive share (default {IRIS_POSITIVE_TARGET})")
    p.add_argument("--variants", help="comma list of variants to retrain (default all)")
    p.add_argument("--baseline-model", help="generic model to score on the iris test set")
    p.add_argument("--baseline-variant", default="d4")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr0", type=float)
    p.add_argument("--restarts", type=int,
                   help="train this many seeds, keep the best validation loss")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_iris)

    p = sub.add_parser("curve", help="five-fold cross-validated learning curve")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="feature CSV")
    p.add_argument("--out", required=True, help="curve CSV")
    p.add_argument("--folds", type=int)
    p.add_argument("--fractions", help="comma list, default 0.1..1.0")
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr0", type=float)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("list-features", help="print the canonical feature registry")
    p.set_defaults(func=cmd_list_features)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FloatingPointError, ResampleBudgetError, SingularMatrixError,
            np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
