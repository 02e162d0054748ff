"""Matrix feature catalog: structure, value, diagonal, and conditioning families.

The registry below fixes the canonical feature order once; every extracted
vector follows it bitwise-deterministically.  Conditioning estimates come
from Gershgorin disks and Brauer (Cassini oval) pairs, which bound eigenvalue
magnitudes without any eigendecomposition; the exact condition number is the
single deliberately-expensive feature and is only included in the variant
that asks for it.

Degenerate statistics (empty nonzero sets, a single sample's std, an all-zero
diagonal) produce 0.0 so vectors stay finite and fixed-length.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrices import ZERO_TOL, SystemMatrix, condition_number

VARIANTS = ("d1", "d2", "d3", "d4")

_MIN_BOUND_CLAMP = 1e-12
# Rayleigh-quotient accuracy is quadratic in subspace error; 200 steps keep
# the estimate within ~1% even for nearly-degenerate top singular values.
_POWER_ITERATIONS = 200


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple[str, ...]
    variant: str

    def __post_init__(self):
        if len(self.values) != len(self.names):
            raise ValueError("feature values and names must align")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, (float(v) for v in self.values)))


@dataclass(frozen=True)
class CondEstimates:
    gersh_max: float
    gersh_min: float
    gersh_ratio: float
    gersh_overlap: float
    cassini_max: float
    cassini_min: float
    cassini_ratio: float


def _stats(x: np.ndarray) -> tuple[float, float, float, float]:
    """(min, max, mean, std); zeros when the sample is empty."""
    if x.size == 0:
        return 0.0, 0.0, 0.0, 0.0
    return float(np.min(x)), float(np.max(x)), float(np.mean(x)), float(np.std(x))


def _masked_rowwise(a: np.ndarray, mask: np.ndarray, reducer) -> np.ndarray:
    """Per-row reducer over nonzero entries; rows without any yield 0.0."""
    out = np.zeros(a.shape[0])
    for i in range(a.shape[0]):
        vals = a[i, mask[i]]
        if vals.size:
            out[i] = reducer(vals)
    return out


def _two_norm_estimate(a: np.ndarray) -> float:
    """Largest singular value via power iteration on A^T A.

    Deliberately avoids a full decomposition so the estimate qualifies for
    the eigendecomposition-free feature variants.
    """
    g = a.T @ a
    rng = np.random.default_rng(12345)  # fixed start; extraction stays deterministic
    v = rng.standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(_POWER_ITERATIONS):
        w = g @ v
        norm = np.linalg.norm(w)
        if norm <= ZERO_TOL:
            return 0.0
        v = w / norm
    return float(np.sqrt(v @ g @ v))


def structure_features(A: SystemMatrix) -> dict[str, float]:
    a = A.elements
    n = A.n
    mask = np.abs(a) > ZERO_TOL
    row_counts = mask.sum(axis=1)
    col_counts = mask.sum(axis=0)
    nnz = int(mask.sum())
    s = int(row_counts.max()) if n else 0
    matching = mask & mask.T
    diagonals = sum(1 for k in range(-(n - 1), n) if np.any(np.abs(np.diag(a, k)) > ZERO_TOL))
    out = {
        "st_sparsity": float(s),
        "st_sparsity_to_size": s / n,
        "st_nnz": float(nnz),
        "st_fill_rate": nnz / (n * n),
        "st_nonvoid_diagonals": float(diagonals),
        "st_symmetry": 1.0 if A.is_symmetric else 0.0,
        "st_relative_symmetric_rate": matching.sum() / nnz if nnz else 0.0,
    }
    for prefix, counts in (("st_row_nnz", row_counts), ("st_col_nnz", col_counts)):
        mn, mx, mean, std = _stats(counts.astype(float))
        out.update({f"{prefix}_min": mn, f"{prefix}_max": mx,
                    f"{prefix}_mean": mean, f"{prefix}_std": std})
    return out


def value_features(A: SystemMatrix) -> dict[str, float]:
    a = A.elements
    mask = np.abs(a) > ZERO_TOL
    out: dict[str, float] = {}

    def put(prefix: str, sample: np.ndarray):
        mn, mx, mean, std = _stats(sample)
        out.update({f"{prefix}_min": mn, f"{prefix}_max": mx,
                    f"{prefix}_mean": mean, f"{prefix}_std": std})

    put("va_elem", a.ravel())
    put("va_row_avg", a.mean(axis=1))
    put("va_col_avg", a.mean(axis=0))
    put("va_row_std", a.std(axis=1))
    put("va_col_std", a.std(axis=0))
    put("va_nz_elem", a[mask])
    put("va_nz_row_avg", _masked_rowwise(a, mask, np.mean))
    put("va_nz_col_avg", _masked_rowwise(a.T, mask.T, np.mean))
    put("va_nz_row_std", _masked_rowwise(a, mask, np.std))
    put("va_nz_col_std", _masked_rowwise(a.T, mask.T, np.std))
    put("va_row_sum", a.sum(axis=1))
    put("va_col_sum", a.sum(axis=0))

    diag = np.diag(a)
    out["va_diag_mean"] = float(diag.mean())
    out["va_diag_std"] = float(diag.std())
    upper = a[np.triu_indices_from(a, k=1)]
    lower = a[np.tril_indices_from(a, k=-1)]
    out["va_upper_tri_mean"] = float(upper.mean()) if upper.size else 0.0
    out["va_upper_tri_std"] = float(upper.std()) if upper.size else 0.0
    out["va_lower_tri_mean"] = float(lower.mean()) if lower.size else 0.0
    out["va_lower_tri_std"] = float(lower.std()) if lower.size else 0.0
    out["va_norm_one"] = float(np.abs(a).sum(axis=0).max())
    out["va_norm_two"] = _two_norm_estimate(a)
    out["va_norm_inf"] = float(np.abs(a).sum(axis=1).max())
    out["va_norm_frobenius"] = float(np.linalg.norm(a))
    out["va_sym_part_frobenius"] = float(np.linalg.norm(0.5 * (a + a.T)))
    out["va_asym_part_frobenius"] = float(np.linalg.norm(0.5 * (a - a.T)))
    return out


def diagonal_features(A: SystemMatrix) -> dict[str, float]:
    a = A.elements
    n = A.n
    mask = np.abs(a) > ZERO_TOL
    rows, cols = np.nonzero(mask)
    out: dict[str, float] = {}

    below = rows - cols
    out["di_bandwidth_lower"] = float(below[below > 0].max()) if np.any(below > 0) else 0.0
    above = cols - rows
    out["di_bandwidth_upper"] = float(above[above > 0].max()) if np.any(above > 0) else 0.0

    widths = np.zeros(n)
    for j in range(n):
        idx = np.flatnonzero(mask[:, j])
        if idx.size:
            widths[j] = idx.max() - idx.min()
    out["di_col_width_avg"] = float(widths.mean()) if n else 0.0
    out["di_col_width_max"] = float(widths.max()) if n else 0.0

    if rows.size:
        dist = np.abs(rows - cols).astype(float)
        out["di_dist_diag_mean"] = float(dist.mean())
        out["di_dist_diag_std"] = float(dist.std())
        diff = a[rows, cols] - a[rows, rows]
        out["di_diff_diag_mean"] = float(diff.mean())
        out["di_diff_diag_std"] = float(diff.std())
    else:
        out["di_dist_diag_mean"] = out["di_dist_diag_std"] = 0.0
        out["di_diff_diag_mean"] = out["di_diff_diag_std"] = 0.0

    row_max_diff = a.max(axis=1) - np.diag(a)
    out["di_row_max_diff_mean"] = float(row_max_diff.mean())
    out["di_row_max_diff_std"] = float(row_max_diff.std())

    abs_a = np.abs(a)
    diag_abs = np.abs(np.diag(a))
    row_off = abs_a.sum(axis=1) - diag_abs
    col_off = abs_a.sum(axis=0) - diag_abs
    out["di_dominant_rows_pct"] = float(np.mean(diag_abs > row_off) * 100.0)
    out["di_dominant_cols_pct"] = float(np.mean(diag_abs > col_off) * 100.0)

    nz_diag = diag_abs[diag_abs > ZERO_TOL]
    out["di_diag_value_rate"] = float(nz_diag.min() / nz_diag.max()) if nz_diag.size else 0.0
    return out


def _disks(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centers = np.diag(a)
    radii = np.sum(np.abs(a), axis=1) - np.abs(centers)
    return centers, radii


def gershgorin(A: SystemMatrix) -> dict[str, float]:
    """Disk-based magnitude bounds, their ratio, and total pairwise overlap."""
    centers, radii = _disks(A.elements)
    lam_max = float(np.max(np.abs(centers) + radii))
    lam_min = max(float(np.min(np.abs(centers) - radii)), _MIN_BOUND_CLAMP)
    lo = centers - radii
    hi = centers + radii
    overlap = 0.0
    n = len(centers)
    for i in range(n):
        for j in range(i + 1, n):
            overlap += max(0.0, min(hi[i], hi[j]) - max(lo[i], lo[j]))
    return {
        "cn_gersh_lambda_max": lam_max,
        "cn_gersh_lambda_min": lam_min,
        "cn_gersh_ratio": lam_max / lam_min,
        "cn_gersh_overlap": overlap,
    }


def _interval_distance(lo: float, hi: float) -> float:
    """Distance from 0 to the closed interval [lo, hi]."""
    if lo > 0.0:
        return lo
    if hi < 0.0:
        return -hi
    return 0.0


def cassini(A: SystemMatrix) -> dict[str, float]:
    """Brauer oval bounds over index pairs; never wider than the disk bounds.

    Per pair (i, j) the oval |z - c_i| * |z - c_j| <= r_i * r_j meets the real
    axis in either one interval or two lobes around the centers (the product
    parabola dips below -r_i*r_j between distant centers); both cases are
    solved analytically.  The magnitude bounds are exact certificates for
    real spectra, hence for every symmetric matrix here.
    """
    centers, radii = _disks(A.elements)
    n = len(centers)
    if n < 2:
        g = gershgorin(A)
        return {"cn_cassini_lambda_max": g["cn_gersh_lambda_max"],
                "cn_cassini_lambda_min": g["cn_gersh_lambda_min"],
                "cn_cassini_ratio": g["cn_gersh_ratio"]}
    lam_max = 0.0
    lam_min = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            mid = 0.5 * (centers[i] + centers[j])
            gap_sq = (0.5 * (centers[i] - centers[j])) ** 2
            k = radii[i] * radii[j]
            outer = np.sqrt(gap_sq + k)
            lam_max = max(lam_max, abs(mid - outer), abs(mid + outer))
            if k < gap_sq:  # two lobes, one around each center
                inner = np.sqrt(gap_sq - k)
                pair_min = min(
                    _interval_distance(mid - outer, mid - inner),
                    _interval_distance(mid + inner, mid + outer))
            else:
                pair_min = _interval_distance(mid - outer, mid + outer)
            lam_min = min(lam_min, pair_min)
    lam_min = max(float(lam_min), _MIN_BOUND_CLAMP)
    return {
        "cn_cassini_lambda_max": float(lam_max),
        "cn_cassini_lambda_min": lam_min,
        "cn_cassini_ratio": float(lam_max) / lam_min,
    }


def cond_estimates(A: SystemMatrix) -> CondEstimates:
    g = gershgorin(A)
    c = cassini(A)
    return CondEstimates(
        gersh_max=g["cn_gersh_lambda_max"], gersh_min=g["cn_gersh_lambda_min"],
        gersh_ratio=g["cn_gersh_ratio"], gersh_overlap=g["cn_gersh_overlap"],
        cassini_max=c["cn_cassini_lambda_max"], cassini_min=c["cn_cassini_lambda_min"],
        cassini_ratio=c["cn_cassini_ratio"])


def _registry() -> tuple[tuple[str, str, str], ...]:
    """(name, category, scaling) rows; scaling is how the feature reacts to A -> c*A
    for c > 0: 'linear' (multiplies by c), 'invariant', or 'none' (clamp-dependent)."""
    probe = SystemMatrix(np.array([[1.0, 0.25], [0.25, 0.5]]))
    rows: list[tuple[str, str, str]] = []
    invariant_st = set(structure_features(probe))
    for name in invariant_st:
        rows.append((name, "structure", "invariant"))
    for name in value_features(probe):
        rows.append((name, "value", "linear"))
    di_scaling = {
        "di_bandwidth_lower": "invariant", "di_bandwidth_upper": "invariant",
        "di_col_width_avg": "invariant", "di_col_width_max": "invariant",
        "di_dist_diag_mean": "invariant", "di_dist_diag_std": "invariant",
        "di_diff_diag_mean": "linear", "di_diff_diag_std": "linear",
        "di_row_max_diff_mean": "linear", "di_row_max_diff_std": "linear",
        "di_dominant_rows_pct": "invariant", "di_dominant_cols_pct": "invariant",
        "di_diag_value_rate": "invariant",
    }
    for name in diagonal_features(probe):
        rows.append((name, "diagonal", di_scaling[name]))
    cn_scaling = {
        "cn_gersh_lambda_max": "linear", "cn_gersh_lambda_min": "none",
        "cn_gersh_ratio": "none", "cn_gersh_overlap": "linear",
        "cn_cassini_lambda_max": "linear", "cn_cassini_lambda_min": "none",
        "cn_cassini_ratio": "none",
    }
    for name in {**gershgorin(probe), **cassini(probe)}:
        rows.append((name, "condition", cn_scaling[name]))
    rows.append(("cn_condition_number", "condition", "invariant"))
    rows.sort(key=lambda r: ({"structure": 0, "value": 1, "diagonal": 2, "condition": 3}[r[1]], r[0]))
    return tuple(rows)


FEATURE_REGISTRY: tuple[tuple[str, str, str], ...] = _registry()
REGISTRY_NAMES: tuple[str, ...] = tuple(name for name, _, _ in FEATURE_REGISTRY)
BASE_NAMES: tuple[str, ...] = tuple(
    name for name, cat, _ in FEATURE_REGISTRY if cat != "condition")
GERSH_CASSINI_NAMES: tuple[str, ...] = tuple(
    name for name, cat, _ in FEATURE_REGISTRY
    if cat == "condition" and name != "cn_condition_number")
RAW_NAMES_4X4: tuple[str, ...] = tuple(
    f"raw_{i}_{j}" for i in range(4) for j in range(4))


def variant_names(variant: str) -> tuple[str, ...]:
    """Canonical ordered feature names for one dataset variant."""
    if variant == "d1":
        return BASE_NAMES + ("cn_condition_number",)
    if variant == "d2":
        return BASE_NAMES + GERSH_CASSINI_NAMES
    if variant == "d3":
        return BASE_NAMES
    if variant == "d4":
        return RAW_NAMES_4X4
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def extract(A: SystemMatrix, variant: str) -> FeatureVector:
    """Feature vector for one dataset variant; d4 is raw elements, 4x4 only."""
    names = variant_names(variant)
    if variant == "d4":
        if A.n != 4:
            raise ValueError(f"variant d4 takes 4x4 matrices, got {A.n}x{A.n}")
        return FeatureVector(np.array(A.elements.ravel(), dtype=float), names, variant)
    table: dict[str, float] = {}
    table.update(structure_features(A))
    table.update(value_features(A))
    table.update(diagonal_features(A))
    if variant == "d2":
        table.update(gershgorin(A))
        table.update(cassini(A))
    elif variant == "d1":
        table["cn_condition_number"] = condition_number(A)
    return FeatureVector(np.array([table[n] for n in names]), names, variant)
