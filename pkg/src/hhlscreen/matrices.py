"""Real symmetric system matrices: generation, normalization, spectra.

Everything downstream (circuit construction, feature extraction, corpus
building) consumes the types defined here.  Matrices are small (<= 32x32
after dilation) and stored dense in float64.  All operations are pure;
``SystemMatrix`` instances are treated as immutable values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# One global zero threshold keeps sparsity and feature definitions consistent.
ZERO_TOL = 1e-12
# Relative eigenvalue floor below which a matrix counts as singular.
SINGULAR_RTOL = 1e-13

VALID_SIZES = (2, 4, 8, 16)


class SingularMatrixError(ValueError):
    """Raised when an operation needs an invertible matrix and got none."""


class NotSymmetricError(ValueError):
    """Raised when an operation requires a symmetric input."""


class ResampleBudgetError(RuntimeError):
    """Raised when random generation rejects too many candidates in a row."""


@dataclass(eq=False)
class SystemMatrix:
    """Dense real square matrix plus provenance tag and optional id."""

    elements: np.ndarray
    provenance: str = "random"
    id: str | None = None

    def __post_init__(self):
        a = np.asarray(self.elements, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a = np.ascontiguousarray(a)
        a.flags.writeable = False
        self.elements = a

    @property
    def n(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def is_symmetric(self) -> bool:
        return bool(np.allclose(self.elements, self.elements.T, atol=ZERO_TOL, rtol=0.0))

    @cached_property
    def sparsity(self) -> int:
        return sparsity(self)

    @cached_property
    def kappa(self) -> float:
        return condition_number(self)

    def to_json(self) -> str:
        return json.dumps({
            "id": self.id,
            "n": self.n,
            "elements": [float(x) for x in self.elements.ravel()],
            "provenance": self.provenance,
        })

    @classmethod
    def from_json(cls, text: str) -> "SystemMatrix":
        obj = json.loads(text)
        n = int(obj["n"])
        a = np.array(obj["elements"], dtype=float).reshape(n, n)
        return cls(a, provenance=str(obj["provenance"]), id=obj.get("id"))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by magnitude (descending) and their condition number."""

    eigenvalues: tuple[float, ...]
    kappa: float


@dataclass(frozen=True)
class GenSpec:
    """Parameters for one random symmetric sparse matrix draw."""

    n: int
    s: int
    kappa_max: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.n not in VALID_SIZES:
            raise ValueError(f"n must be one of {VALID_SIZES}, got {self.n}")
        if not 1 <= self.s <= self.n:
            raise ValueError(f"s must be in [1, {self.n}], got {self.s}")
        if self.kappa_max < 1.0:
            raise ValueError("kappa_max must be >= 1")


def sparsity(A: SystemMatrix | np.ndarray) -> int:
    """Smallest s such that every row has at most s entries above the zero threshold."""
    a = A.elements if isinstance(A, SystemMatrix) else np.asarray(A, dtype=float)
    if a.size == 0:
        return 0
    return int(np.max(np.sum(np.abs(a) > ZERO_TOL, axis=1)))


def eigendecomposition(A: SystemMatrix) -> tuple[np.ndarray, np.ndarray]:
    """(eigenvalues, eigenvectors) of a symmetric matrix, LAPACK symmetric solver."""
    if not A.is_symmetric:
        raise NotSymmetricError("eigendecomposition requires a symmetric matrix")
    return np.linalg.eigh(A.elements)


def spectrum(A: SystemMatrix) -> Spectrum:
    """Full eigendecomposition of a symmetric matrix, magnitude-sorted.

    Raises ``NotSymmetricError`` for non-symmetric input (condition numbers of
    those go through ``condition_number``, which falls back to singular values)
    and ``SingularMatrixError`` when the smallest eigenvalue magnitude is
    numerically zero.
    """
    lam, _ = eigendecomposition(A)
    order = np.argsort(-np.abs(lam), kind="stable")
    lam = lam[order]
    amax = abs(lam[0])
    amin = abs(lam[-1])
    if amax == 0.0 or amin < SINGULAR_RTOL * amax:
        raise SingularMatrixError("matrix is numerically singular")
    return Spectrum(tuple(float(x) for x in lam), float(amax / amin))


def condition_number(A: SystemMatrix) -> float:
    """Ratio of extreme eigenvalue magnitudes; singular-value ratio if non-symmetric."""
    if A.is_symmetric:
        return spectrum(A).kappa
    sig = np.linalg.svd(A.elements, compute_uv=False)
    if sig[0] == 0.0 or sig[-1] < SINGULAR_RTOL * sig[0]:
        raise SingularMatrixError("matrix is numerically singular")
    return float(sig[0] / sig[-1])


def normalize(A: SystemMatrix) -> SystemMatrix:
    """Divide every element by the spectral norm.

    The result has largest singular value 1, so all singular values lie in
    [1/kappa, 1].  The condition number is unchanged.
    """
    norm = float(np.linalg.norm(A.elements, 2))
    if norm <= ZERO_TOL:
        raise ValueError("cannot normalize a zero matrix")
    return SystemMatrix(A.elements / norm, provenance=A.provenance, id=A.id)


def dilate(A: SystemMatrix) -> SystemMatrix:
    """Embed A into the symmetric block matrix [[0, A], [A^T, 0]] (size doubles)."""
    n = A.n
    out = np.zeros((2 * n, 2 * n))
    out[:n, n:] = A.elements
    out[n:, :n] = A.elements.T
    return SystemMatrix(out, provenance="dilated", id=A.id)


def gram_transform(A: SystemMatrix, b: np.ndarray) -> tuple[SystemMatrix, np.ndarray]:
    """Rewrite A x = b as the symmetric positive semidefinite system (A^T A) x = A^T b."""
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise ValueError(f"b has shape {b.shape}, expected ({A.n},)")
    g = A.elements.T @ A.elements
    g = 0.5 * (g + g.T)  # scrub roundoff asymmetry
    return SystemMatrix(g, provenance="gram", id=A.id), A.elements.T @ b


def ideal_matrix(n: int) -> SystemMatrix:
    """Diagonal matrix alternating 1 and 1/2: the cheapest-to-invert benchmark (kappa = 2)."""
    if n < 2 or n & (n - 1):
        raise ValueError(f"n must be a power of 2 >= 2, got {n}")
    diag = np.where(np.arange(n) % 2 == 0, 1.0, 0.5)
    return SystemMatrix(np.diag(diag), provenance="ideal")


def _random_support(rng: np.random.Generator, n: int, s: int) -> np.ndarray | None:
    """Symmetric boolean support whose maximum row count is exactly s.

    s = 1 yields the diagonal pattern.  For s >= 2 the pattern is grown from
    random symmetric pairs (diagonal singletons included), every row keeps at
    least one entry, and extra pairs are added at a random per-matrix density
    so the nonzero count varies between draws.  Returns None when the growth
    stalls before some row reaches s (caller resamples).
    """
    sup = np.zeros((n, n), dtype=bool)
    count = np.zeros(n, dtype=int)
    if s == 1:
        np.fill_diagonal(sup, True)
        return sup
    for i in rng.permutation(n):
        if count[i] > 0:
            continue
        if rng.random() < 0.5:
            sup[i, i] = True
            count[i] += 1
        else:
            room = np.flatnonzero((count < s) & (np.arange(n) != i))
            if room.size == 0:
                sup[i, i] = True
                count[i] += 1
            else:
                j = int(rng.choice(room))
                sup[i, j] = sup[j, i] = True
                count[i] += 1
                count[j] += 1
    budget = 8 * n * n
    while count.max() < s and budget:
        budget -= 1
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if i == j:
            if not sup[i, i] and count[i] < s:
                sup[i, i] = True
                count[i] += 1
        elif not sup[i, j] and count[i] < s and count[j] < s:
            sup[i, j] = sup[j, i] = True
            count[i] += 1
            count[j] += 1
    if count.max() != s:
        return None
    density = rng.random()
    for flat in rng.permutation(n * n):
        i, j = divmod(int(flat), n)
        if j < i or sup[i, j] or rng.random() > density:
            continue
        if i == j:
            if count[i] < s:
                sup[i, i] = True
                count[i] += 1
        elif count[i] < s and count[j] < s:
            sup[i, j] = sup[j, i] = True
            count[i] += 1
            count[j] += 1
    return sup


RESAMPLE_BUDGET = 10_000


def generate_random_sparse(spec: GenSpec) -> SystemMatrix:
    """Random symmetric matrix with exact sparsity s, kappa <= kappa_max, spectral norm 1.

    Candidate supports are drawn via ``_random_support``, filled with i.i.d.
    uniform[-1, 1] values symmetrized by averaging mirrored pairs, then
    normalized.  Candidates violating the sparsity/invertibility/kappa
    contract are rejected; after ``RESAMPLE_BUDGET`` consecutive rejections a
    ``ResampleBudgetError`` is raised.  Deterministic for a fixed spec.
    """
    rng = np.random.default_rng(spec.seed)
    for _ in range(RESAMPLE_BUDGET):
        sup = _random_support(rng, spec.n, spec.s)
        if sup is None:
            continue
        vals = rng.uniform(-1.0, 1.0, size=(spec.n, spec.n))
        vals = 0.5 * (vals + vals.T)
        a = np.where(sup, vals, 0.0)
        lam = np.linalg.eigvalsh(a)
        amax = float(np.max(np.abs(lam)))
        amin = float(np.min(np.abs(lam)))
        if amax == 0.0 or amin < SINGULAR_RTOL * amax:
            continue
        if amax / amin > spec.kappa_max:
            continue
        cand = SystemMatrix(a / amax, provenance="random")
        if cand.sparsity != spec.s:
            continue
        return cand
    raise ResampleBudgetError(
        f"no acceptable matrix in {RESAMPLE_BUDGET} candidates for {spec}")
