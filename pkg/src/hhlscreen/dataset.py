"""Corpus generation, depth labeling, splits, histograms, and Iris sampling.

Pipelines hand matrices around as JSONL (one interchange object per line,
with structural metadata attached as it becomes available) and tabular ML
data as CSV.  Every function is deterministic for a fixed seed; parallel
depth computation merges worker results by id so scheduling cannot change
any output byte.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from multiprocessing import Pool

import numpy as np

from .features import FeatureVector, extract
from .hhl import build_hhl
from .matrices import (GenSpec, SystemMatrix, condition_number, dilate,
                       generate_random_sparse, normalize)

KAPPA_BIN_EDGES = tuple(np.linspace(1.0, 1000.0, 6))


@dataclass(frozen=True)
class DepthRecord:
    """One matrix with its measured full circuit depth."""

    matrix: SystemMatrix
    s: int
    kappa: float
    n_l: int
    depth: int

    @property
    def id(self) -> str:
        return self.matrix.id or ""


@dataclass(frozen=True)
class LabeledSample:
    id: str
    matrix: SystemMatrix
    s: int
    kappa: float
    depth: int
    label: int


@dataclass(frozen=True)
class DepthCutoff:
    mode: str  # "absolute" or "quantile"
    value: float

    def __post_init__(self):
        if self.mode == "absolute":
            if self.value <= 0:
                raise ValueError("absolute cutoff must be positive")
        elif self.mode == "quantile":
            if not 0.0 < self.value < 1.0:
                raise ValueError("quantile target fraction must be in (0, 1)")
        else:
            raise ValueError(f"unknown cutoff mode {self.mode!r}")

    @classmethod
    def parse(cls, text: str) -> "DepthCutoff":
        """Parse 'absolute:1000000' or 'quantile:0.476'."""
        mode, _, value = text.partition(":")
        if not value:
            raise ValueError(f"cutoff must look like 'quantile:0.476', got {text!r}")
        return cls(mode=mode, value=float(value))


@dataclass(frozen=True)
class LabelingResult:
    samples: tuple[LabeledSample, ...]
    cutoff: DepthCutoff
    threshold: float  # induced absolute threshold (== value in absolute mode)
    positive_fraction: float


@dataclass(frozen=True)
class KappaHistogram:
    counts: tuple[int, ...]
    proportions: tuple[float, ...]
    clipped: int

    def __post_init__(self):
        if abs(sum(self.proportions) - 1.0) > 1e-9:
            raise ValueError("histogram proportions must sum to 1")


def _spawn_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def build_corpus(sizes, per_config_count, seed: int) -> list[SystemMatrix]:
    """Random matrices for every (n, s in 1..n) configuration.

    ``per_config_count`` is either one count for every configuration or a
    mapping from size to its per-configuration count, which lets the default
    corpus mimic the heavy large-size share of an exhaustive sweep without
    paying for it at every size.
    """
    sizes = sorted(set(int(n) for n in sizes))
    out: list[SystemMatrix] = []
    for n in sizes:
        count = per_config_count[n] if isinstance(per_config_count, dict) else int(per_config_count)
        for s in range(1, n + 1):
            for i in range(count):
                m = generate_random_sparse(
                    GenSpec(n=n, s=s, seed=_spawn_seed(seed, n, s, i)))
                out.append(SystemMatrix(m.elements, provenance=m.provenance,
                                        id=f"r{n:02d}s{s:02d}i{i:06d}"))
    return out


def _depth_worker(m: SystemMatrix) -> DepthRecord:
    work = m if m.is_symmetric else dilate(m)
    result = build_hhl(work)
    return DepthRecord(matrix=m, s=m.sparsity, kappa=condition_number(m),
                       n_l=result.config.n_l, depth=result.full_depth)


def compute_depths(matrices, jobs: int = 1) -> list[DepthRecord]:
    """Full HHL depth per matrix (non-symmetric input is dilated first).

    Results come back ordered by matrix id regardless of worker scheduling.
    """
    matrices = list(matrices)
    if jobs and jobs > 1:
        with Pool(jobs) as pool:
            records = pool.map(_depth_worker, matrices, chunksize=8)
    else:
        records = [_depth_worker(m) for m in matrices]
    return sorted(records, key=lambda r: r.id)


def label_corpus(records, cutoff: DepthCutoff) -> LabelingResult:
    """Binary suitability labels: well suited = depth strictly below the threshold.

    Quantile mode picks, among achievable thresholds, the one whose positive
    fraction is closest to the target (depth ties can make the exact target
    unreachable); the induced absolute threshold is reported either way.
    """
    records = sorted(records, key=lambda r: r.id)
    if not records:
        raise ValueError("cannot label an empty corpus")
    depths = np.array([r.depth for r in records], dtype=float)
    if cutoff.mode == "absolute":
        threshold = cutoff.value
    else:
        candidates = np.concatenate([np.unique(depths), [depths.max() + 1.0]])
        fractions = [(np.mean(depths < t), t) for t in candidates]
        _, threshold = min(fractions, key=lambda ft: (abs(ft[0] - cutoff.value), ft[1]))
    samples = tuple(
        LabeledSample(id=r.id, matrix=r.matrix, s=r.s, kappa=r.kappa,
                      depth=r.depth, label=int(r.depth < threshold))
        for r in records)
    positive = float(np.mean([s.label for s in samples]))
    return LabelingResult(samples=samples, cutoff=cutoff,
                          threshold=float(threshold), positive_fraction=positive)


def split(samples, test_fraction: float, seed: int):
    """Deterministic stratified train/test split; disjoint and exhaustive."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test fraction must be in (0, 1)")
    samples = sorted(samples, key=lambda s: s.id)
    by_label: dict[int, list] = {}
    for s in samples:
        by_label.setdefault(s.label, []).append(s)
    if len(by_label) < 2:
        raise ValueError("both classes must be present to stratify")
    rng = np.random.default_rng(seed)
    train: list = []
    test: list = []
    for label in sorted(by_label):
        group = by_label[label]
        order = rng.permutation(len(group))
        n_test = int(round(test_fraction * len(group)))
        picked = set(order[:n_test])
        for i, s in enumerate(group):
            (test if i in picked else train).append(s)
    train.sort(key=lambda s: s.id)
    test.sort(key=lambda s: s.id)
    return train, test


def iris_data_path():
    """Bundled copy of the classic 150-row iris table."""
    return resources.files("hhlscreen.data") / "iris.csv"


def load_iris_rows(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 4:
            raise ValueError("iris CSV needs 4 numeric feature columns")
        rows = []
        for line in reader:
            if not line:
                continue
            try:
                rows.append([float(x) for x in line[:4]])
            except ValueError as exc:
                raise ValueError(f"malformed iris row {line!r}") from exc
    if len(rows) != 150:
        raise ValueError(f"iris table must have 150 data rows, found {len(rows)}")
    return np.array(rows)


IRIS_DRAW_BUDGET = 200_000
_DET_RTOL = 1e-10


def iris_matrices(iris_csv, count: int, seed: int) -> list[SystemMatrix]:
    """Spectral-normalized 4x4 systems built from 4 distinct iris rows each.

    Draws are rejected unless the raw matrix has full rank (|det| above a
    row-norm-relative threshold), so every output is invertible and, because
    the iris table has no zero entries, has sparsity 4.
    """
    data = load_iris_rows(iris_csv)
    rng = np.random.default_rng(seed)
    out: list[SystemMatrix] = []
    for _ in range(IRIS_DRAW_BUDGET):
        if len(out) >= count:
            break
        idx = rng.choice(len(data), size=4, replace=False)
        raw = data[idx]
        scale = float(np.prod(np.linalg.norm(raw, axis=1)))
        if abs(np.linalg.det(raw)) <= _DET_RTOL * scale:
            continue
        m = normalize(SystemMatrix(raw, provenance="iris",
                                   id=f"iris{len(out):05d}"))
        out.append(m)
    if len(out) < count:
        raise ValueError(f"could not draw {count} invertible iris matrices")
    return out


def kappa_histogram(kappas) -> KappaHistogram:
    """Five equal-width condition-number bins on [1, 1000]; overflow clips into the top bin."""
    values = np.asarray(list(kappas), dtype=float)
    if values.size == 0:
        raise ValueError("histogram needs at least one sample")
    clipped = int(np.sum(values > KAPPA_BIN_EDGES[-1]))
    counts, _ = np.histogram(np.clip(values, 1.0, 1000.0), bins=KAPPA_BIN_EDGES)
    proportions = counts / counts.sum()
    return KappaHistogram(counts=tuple(int(c) for c in counts),
                          proportions=tuple(float(p) for p in proportions),
                          clipped=clipped)


def _bin_index(kappa: float) -> int:
    idx = int(np.searchsorted(KAPPA_BIN_EDGES, min(kappa, 1000.0), side="right") - 1)
    return min(max(idx, 0), 4)


def _apportion(proportions, total: int) -> list[int]:
    """Largest-remainder rounding: per-bin counts summing to total, each within 1 of exact."""
    exact = [p * total for p in proportions]
    counts = [math.floor(e) for e in exact]
    remainder = total - sum(counts)
    order = sorted(range(len(exact)), key=lambda i: (exact[i] - counts[i], i), reverse=True)
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def distribution_match(source_pool, target_hist: KappaHistogram, total: int, seed: int):
    """Subset of the pool whose kappa histogram tracks the target within 1/total per bin."""
    pool = sorted(source_pool, key=lambda r: r.id)
    for r in pool:
        if r.matrix.n != 4 or r.s != 4:
            raise ValueError("distribution matching expects a pool of 4x4, s=4 matrices")
    bins: dict[int, list] = {b: [] for b in range(5)}
    for r in pool:
        bins[_bin_index(r.kappa)].append(r)
    demands = _apportion(target_hist.proportions, total)
    shortfalls = {b: demands[b] - len(bins[b]) for b in range(5) if demands[b] > len(bins[b])}
    if shortfalls:
        detail = ", ".join(f"bin {b + 1} short {k}" for b, k in sorted(shortfalls.items()))
        raise ValueError(f"pool cannot cover the target histogram: {detail}")
    rng = np.random.default_rng(seed)
    selected: list = []
    for b in range(5):
        group = bins[b]
        order = rng.permutation(len(group))
        selected.extend(group[i] for i in order[:demands[b]])
    selected.sort(key=lambda r: r.id)
    return selected


def build_matching_pool(target_hist: KappaHistogram, demands, seed: int,
                        margin: float = 1.2) -> list[SystemMatrix]:
    """Stratified 4x4, s=4 pool covering each target bin's demand.

    Natural draws rarely land in the high-kappa bins, so candidates are
    drawn (cheaply, without depth measurement) until every bin holds
    margin * demand matrices; only the kept matrices move on to the
    expensive depth stage.
    """
    need = [math.ceil(margin * d) for d in demands]
    got: dict[int, list[SystemMatrix]] = {b: [] for b in range(5)}
    k = 0
    budget = 2_000_000
    while any(len(got[b]) < need[b] for b in range(5)) and k < budget:
        m = generate_random_sparse(GenSpec(n=4, s=4, seed=_spawn_seed(seed, 7, k)))
        k += 1
        b = _bin_index(m.kappa)
        if len(got[b]) < need[b]:
            got[b].append(m)
    if any(len(got[b]) < need[b] for b in range(5)):
        raise ValueError("could not fill every kappa bin within the draw budget")
    out: list[SystemMatrix] = []
    i = 0
    for b in range(5):
        for m in got[b]:
            out.append(SystemMatrix(m.elements, provenance=m.provenance,
                                    id=f"pool{i:06d}"))
            i += 1
    return out


# ---------------------------------------------------------------------------
# file formats

def matrix_record(m: SystemMatrix, **extra) -> dict:
    rec = json.loads(m.to_json())
    rec.update(extra)
    return rec


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def record_to_matrix(rec: dict) -> SystemMatrix:
    n = int(rec["n"])
    a = np.array(rec["elements"], dtype=float).reshape(n, n)
    return SystemMatrix(a, provenance=str(rec.get("provenance", "random")),
                        id=rec.get("id"))


def _extract_worker(args) -> FeatureVector:
    matrix, variant = args
    return extract(matrix, variant)


def extract_many(samples, variant: str, jobs: int = 1) -> list[FeatureVector]:
    """Feature vectors for many samples; order follows the input regardless of jobs."""
    samples = list(samples)
    if jobs and jobs > 1:
        with Pool(jobs) as pool:
            return pool.map(_extract_worker, [(s.matrix, variant) for s in samples],
                            chunksize=32)
    return [extract(s.matrix, variant) for s in samples]


def write_feature_csv(path, samples, variant: str, jobs: int = 1):
    """Feature file: registry-ordered columns plus label, depth, id."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to featurize")
    vectors = extract_many(samples, variant, jobs=jobs)
    names = vectors[0].names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["label", "depth", "id"])
        for fv, s in zip(vectors, samples):
            writer.writerow([repr(float(v)) for v in fv.values]
                            + [s.label, s.depth, s.id])


def read_feature_csv(path):
    """(feature matrix, labels, ids, feature names) from a feature file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-3:] != ["label", "depth", "id"]:
            raise ValueError("feature CSV must end with label, depth, id columns")
        names = tuple(header[:-3])
        rows, labels, ids = [], [], []
        for line in reader:
            if not line:
                continue
            rows.append([float(x) for x in line[:len(names)]])
            labels.append(int(line[-3]))
            ids.append(line[-1])
    return np.array(rows), np.array(labels, dtype=int), ids, names
