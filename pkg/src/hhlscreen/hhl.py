"""HHL circuit assembly, register sizing, depth measurement, and verification.

A full run is staged as: uniform |b> load, phase estimation (Hadamard fan,
controlled powers of exp(iAt), inverse QFT), eigenvalue inversion by a
multiplexed Y rotation on the flag qubit, inverse phase estimation, and flag
measurement.  The controlled power for counting-qubit weight 2^k is the same
synthesized block applied 2^k times, so circuits are kept as (block, repeat)
stages; depth composes exactly through max-plus transfer matrices without
materializing millions of gates.  Register layout: qubit 0 = flag, qubits
1..n_l = eigenvalue register (most significant first), the rest = solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import (Circuit, compose, cx_gate, depth, gate_count, h_gate,
                       inverse, phase_gate, simulate)
from .matrices import NotSymmetricError, SystemMatrix, spectrum
from .synthesis import controlled, matrix_exponential, mux_ry, peephole, synthesize

MAX_SIM_QUBITS = 6


@dataclass(frozen=True)
class HhlConfig:
    n_b: int
    n_l: int
    t: float
    epsilon: float


@dataclass(frozen=True)
class Stage:
    """A circuit applied `times` times in sequence."""

    circuit: Circuit
    times: int = 1


@dataclass
class HhlResult:
    circuit: Circuit | None
    full_depth: int
    gate_total: int
    config: HhlConfig
    success_probability: float | None = None
    stages: tuple[Stage, ...] = ()


def pe_register_size(kappa: float, n_b: int) -> int:
    """Eigenvalue-register width: grows by one each time kappa crosses a power of two."""
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    return max(n_b + 1, math.ceil(math.log2(kappa)) + 1)


def prepare_b(n_b: int, num_qubits: int | None = None, offset: int = 0) -> Circuit:
    """Hadamard on every solution qubit: the uniform |b> load, depth exactly 1."""
    nq = num_qubits if num_qubits is not None else n_b
    return Circuit(nq, [h_gate(offset + i) for i in range(n_b)])


def qft_circuit(num_qubits: int, qubits: list[int], total: int) -> Circuit:
    """Exact QFT on the given qubits (first = most significant), swaps included."""
    c = Circuit(total)
    for i in range(num_qubits):
        c.add(h_gate(qubits[i]))
        for j in range(i + 1, num_qubits):
            angle = math.pi / 2 ** (j - i)
            # controlled phase = P(a/2) on both + CX-conjugated P(-a/2)
            c.add(phase_gate(qubits[j], angle / 2))
            c.add(phase_gate(qubits[i], angle / 2))
            c.add(cx_gate(qubits[j], qubits[i]))
            c.add(phase_gate(qubits[i], -angle / 2))
            c.add(cx_gate(qubits[j], qubits[i]))
    for i in range(num_qubits // 2):
        a, b = qubits[i], qubits[num_qubits - 1 - i]
        c.add(cx_gate(a, b))
        c.add(cx_gate(b, a))
        c.add(cx_gate(a, b))
    return c


def _edge_sign(a: np.ndarray) -> float:
    """Sign assigned to the +/-1/2 phase edge, read off the Gershgorin disks.

    The edge bin is reachable only by an eigenvalue of maximal magnitude,
    which must live in the disk attaining the magnitude bound; that disk's
    center sign is exact for diagonal matrices and for any 2x2 symmetric
    matrix, and a sound heuristic otherwise.
    """
    centers = np.diag(a)
    radii = np.sum(np.abs(a), axis=1) - np.abs(centers)
    i = int(np.argmax(np.abs(centers) + radii))
    return -1.0 if centers[i] < 0 else 1.0


def _is_definite(a: np.ndarray) -> bool:
    """True when the Gershgorin disks prove all eigenvalues share one sign."""
    centers = np.diag(a)
    radii = np.sum(np.abs(a), axis=1) - np.abs(centers)
    return float(np.min(centers - radii)) > 0.0 or float(np.max(centers + radii)) < 0.0


def _evolution_time(sigma_max: float, kappa: float, n_l: int, definite: bool) -> float:
    """Time for exp(iAt) anchoring the smallest eigenvalue magnitude on bin 1.

    With t = 2*pi*kappa / (2^n_l * sigma_max) the phase of an eigenvalue
    lambda is kappa*lambda/(2^n_l * sigma_max); the largest magnitude maps to
    kappa/2^n_l <= 1/2 (the register formula guarantees kappa <= 2^(n_l - 1)),
    so the spectrum fits the signed band, and the smallest maps to exactly
    one register step, the finest representable magnitude.  Dyadic spectra
    land exactly on register states.

    When the disks cannot certify a definite spectrum, eigenvalues of both
    signs may approach the +/-1/2 edge where e^{+i pi} = e^{-i pi} makes the
    sign unrecoverable, so the time is shaved by one register step to keep
    the spectrum strictly inside the band.
    """
    t = 2.0 * math.pi * kappa / (2 ** n_l * sigma_max)
    if not definite:
        t *= (2 ** n_l - 1) / 2 ** n_l
    return t


def _decoded_eigenvalue(j: int, n_l: int, edge_sign: float) -> float:
    """Register state -> phase in [-1/2, 1/2], two's-complement with a signed top edge."""
    half = 1 << (n_l - 1)
    size = 1 << n_l
    if j == half:
        return edge_sign * (half / size)
    if j > half:
        return (j - size) / size
    return j / size


def _inversion_angles(n_l: int, edge_sign: float) -> np.ndarray:
    """Exact-reciprocal rotation table: angle_j = 2*arcsin(C / lambda_j), C = 2^-n_l."""
    c = 1.0 / (1 << n_l)
    angles = np.zeros(1 << n_l)
    for j in range(1, 1 << n_l):
        lam = _decoded_eigenvalue(j, n_l, edge_sign)
        angles[j] = 2.0 * math.asin(c / lam)
    return angles


def _maxplus_transfer(circuit: Circuit) -> np.ndarray:
    """M[q, p] = layers added on qubit q per unit of initial frontier on qubit p."""
    nq = circuit.num_qubits
    m = np.full((nq, nq), -np.inf)
    np.fill_diagonal(m, 0.0)
    for g in circuit.gates:
        row = m[list(g.qubits)].max(axis=0) + 1.0
        m[list(g.qubits)] = row
    return m


def _maxplus_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, :, None] + b[None, :, :]).max(axis=1)


def _maxplus_power(m: np.ndarray, times: int) -> np.ndarray:
    result = np.full_like(m, -np.inf)
    np.fill_diagonal(result, 0.0)
    base = m
    while times:
        if times & 1:
            result = _maxplus_matmul(result, base)
        base = _maxplus_matmul(base, base)
        times >>= 1
    return result


def staged_depth(stages: tuple[Stage, ...], num_qubits: int) -> int:
    frontier = np.zeros(num_qubits)
    for st in stages:
        m = _maxplus_transfer(st.circuit)
        if st.times > 1:
            m = _maxplus_power(m, st.times)
        frontier = (m + frontier[None, :]).max(axis=1)
    return int(frontier.max()) if num_qubits else 0


def classical_solve(A: SystemMatrix, b: np.ndarray) -> np.ndarray:
    """Unit-norm A^{-1} b: the fidelity oracle for simulated runs."""
    x = np.linalg.solve(A.elements, np.asarray(b, dtype=float))
    return x / np.linalg.norm(x)


def build_hhl(A: SystemMatrix) -> HhlResult:
    """Assemble the full staged circuit for a symmetric, normalized, invertible A.

    The depth and gate totals are always computed; the flat circuit and the
    flag-success probability are attached only when the register fits the
    statevector simulator (<= MAX_SIM_QUBITS qubits).
    """
    if not A.is_symmetric:
        raise NotSymmetricError("build_hhl needs a symmetric matrix; dilate first")
    spec = spectrum(A)  # raises SingularMatrixError on singular input
    n_b = int(round(math.log2(A.n)))
    if 2 ** n_b != A.n:
        raise ValueError(f"matrix size must be a power of 2, got {A.n}")
    n_l = pe_register_size(spec.kappa, n_b)
    t = _evolution_time(abs(spec.eigenvalues[0]), spec.kappa, n_l,
                        _is_definite(A.elements))
    edge_sign = _edge_sign(A.elements)
    config = HhlConfig(n_b=n_b, n_l=n_l, t=t, epsilon=2.0 ** -n_l)

    total = 1 + n_l + n_b
    pe = list(range(1, 1 + n_l))
    sol = list(range(1 + n_l, total))

    prep = prepare_b(n_b, total, offset=1 + n_l)
    pe_h = Circuit(total, [h_gate(q) for q in pe])

    u = matrix_exponential(A, t)
    block_local = synthesize(controlled(u, 1))  # control = local qubit 0
    power_stages = []
    for k, ctrl in enumerate(pe):  # pe[0] is the most significant counting qubit
        mapping = {0: ctrl}
        mapping.update({1 + i: sol[i] for i in range(n_b)})
        remapped = Circuit(total, [
            type(g)(g.kind, tuple(mapping[q] for q in g.qubits), g.params)
            for g in block_local.gates
        ])
        power_stages.append(Stage(remapped, times=1 << (n_l - 1 - k)))

    iqft = inverse(qft_circuit(n_l, pe, total))
    inv_rot = peephole(Circuit(total, mux_ry(_inversion_angles(n_l, edge_sign), pe, 0)))

    stages: list[Stage] = [Stage(prep), Stage(pe_h)]
    stages += power_stages
    stages.append(Stage(iqft))
    stages.append(Stage(inv_rot))
    stages.append(Stage(inverse(iqft)))
    stages += [Stage(inverse(st.circuit), st.times) for st in reversed(power_stages)]
    stages.append(Stage(pe_h))
    staged = tuple(stages)

    full_depth = staged_depth(staged, total)
    gate_total = sum(st.times * gate_count(st.circuit) for st in staged)

    flat = None
    success = None
    if total <= MAX_SIM_QUBITS:
        flat = compose(*[
            Circuit(total, st.circuit.gates * st.times) for st in staged
        ])
        psi = np.zeros(2 ** total, dtype=complex)
        psi[0] = 1.0
        out = simulate(flat, psi)
        flag_mask = np.arange(2 ** total) >= 2 ** (total - 1)  # qubit 0 is the MSB
        success = float(np.sum(np.abs(out[flag_mask]) ** 2))
    return HhlResult(circuit=flat, full_depth=full_depth, gate_total=gate_total,
                     config=config, success_probability=success, stages=staged)


def full_depth(A: SystemMatrix) -> int:
    """Depth of the fully synthesized elementary-gate circuit for A."""
    return build_hhl(A).full_depth


def post_selected_fidelity(result: HhlResult, reference: np.ndarray) -> float:
    """Overlap of the flag=1 solution-register state with a unit reference vector.

    Computed from the conditional density matrix of the solution register
    given a successful flag measurement, so leftover eigenvalue-register
    amplitude (phase-truncation residue) counts against the fidelity.
    """
    if result.circuit is None:
        raise ValueError("result was built above the simulatable register size")
    cfg = result.config
    total = 1 + cfg.n_l + cfg.n_b
    psi = np.zeros(2 ** total, dtype=complex)
    psi[0] = 1.0
    out = simulate(result.circuit, psi)
    dim_b = 2 ** cfg.n_b
    # flag=1 block, reshaped to (eigenvalue register, solution register)
    block = out[2 ** (total - 1):].reshape(2 ** cfg.n_l, dim_b)
    norm_sq = float(np.sum(np.abs(block) ** 2))
    if norm_sq <= 0.0:
        return 0.0
    ref = np.asarray(reference, dtype=complex)
    overlap_sq = float(np.sum(np.abs(block @ ref.conj()) ** 2))
    return math.sqrt(overlap_sq / norm_sq)
