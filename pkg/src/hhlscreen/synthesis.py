"""Exact unitary synthesis over {single-qubit rotation, CX}.

Multi-qubit unitaries are decomposed recursively in quantum Shannon style:
a cosine-sine split on the most significant qubit yields two block-diagonal
multiplexers and a multiplexed Ry; each block-diagonal factor is demultiplexed
through a unitary diagonalization into smaller unitaries plus a multiplexed
Rz.  Single-qubit leaves use the ZYZ Euler decomposition.  The gate count is
O(4^q); exactness (up to global phase) rather than asymptotic optimality is
the goal, since everything here runs at <= 6 qubits.
"""
from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.linalg import cossin, schur

from .circuits import CX_KIND, U_KIND, Circuit, Gate, cx_gate, ry_gate, rz_gate, u_gate
from .matrices import SystemMatrix, eigendecomposition

UNITARY_ATOL = 1e-9
MAX_SYNTH_QUBITS = 6
_ANGLE_TOL = 1e-12


class NotUnitaryError(ValueError):
    """Raised when a matrix expected to be unitary is not."""


def assert_unitary(u: np.ndarray, atol: float = UNITARY_ATOL):
    u = np.asarray(u)
    dim = u.shape[0]
    if u.ndim != 2 or u.shape[1] != dim:
        raise NotUnitaryError(f"expected a square matrix, got shape {u.shape}")
    err = np.linalg.norm(u @ u.conj().T - np.eye(dim))
    if err > atol:
        raise NotUnitaryError(f"matrix deviates from unitarity by {err:.3e}")


def matrix_exponential(A: SystemMatrix, t: float) -> np.ndarray:
    """exp(i*A*t) for symmetric A via eigendecomposition."""
    lam, vecs = eigendecomposition(A)
    return (vecs * np.exp(1j * t * lam)) @ vecs.conj().T


def controlled(u: np.ndarray, num_controls: int = 1) -> np.ndarray:
    """Block-diagonal embedding diag(I, ..., I, U) on control + target qubits."""
    if num_controls < 1:
        raise ValueError("need at least one control")
    dim = u.shape[0]
    total = dim * 2 ** num_controls
    if total > 2 ** MAX_SYNTH_QUBITS:
        raise ValueError(f"controlled unitary would need > {MAX_SYNTH_QUBITS} qubits")
    out = np.eye(total, dtype=complex)
    out[-dim:, -dim:] = u
    return out


def zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """(theta, phi, lam, phase) with U = e^{i phase} Rz(phi) Ry(theta) Rz(lam)."""
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    su = u / cmath.sqrt(det)
    theta = 2.0 * math.atan2(abs(su[1, 0]), abs(su[0, 0]))
    if abs(su[1, 0]) < _ANGLE_TOL:
        phi = 2.0 * cmath.phase(su[1, 1])
        lam = 0.0
    elif abs(su[0, 0]) < _ANGLE_TOL:
        phi = 2.0 * cmath.phase(su[1, 0])
        lam = 0.0
    else:
        phi = cmath.phase(su[1, 1]) + cmath.phase(su[1, 0])
        lam = cmath.phase(su[1, 1]) - cmath.phase(su[1, 0])
    # Recover the global phase against the original matrix.
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    recon = np.array([
        [c * np.exp(-0.5j * (phi + lam)), -s * np.exp(-0.5j * (phi - lam))],
        [s * np.exp(0.5j * (phi - lam)), c * np.exp(0.5j * (phi + lam))],
    ])
    k = np.unravel_index(np.argmax(np.abs(recon)), recon.shape)
    phase = cmath.phase(u[k] / recon[k])
    return theta, phi, lam, phase


def _mux_rotation(make_gate, angles: np.ndarray, controls: list[int], target: int) -> list[Gate]:
    """Rotation on `target` whose angle is selected by the control basis state.

    Demultiplexes recursively: splitting on the most significant control turns
    the 2^k angle table into sum/difference halves separated by CX conjugation.
    """
    if not controls:
        if abs(angles[0]) < _ANGLE_TOL:
            return []
        return [make_gate(target, float(angles[0]))]
    half = len(angles) // 2
    low, high = angles[:half], angles[half:]
    gates = _mux_rotation(make_gate, (low + high) / 2.0, controls[1:], target)
    gates.append(cx_gate(controls[0], target))
    gates += _mux_rotation(make_gate, (low - high) / 2.0, controls[1:], target)
    gates.append(cx_gate(controls[0], target))
    return gates


def mux_ry(angles, controls: list[int], target: int) -> list[Gate]:
    return _mux_rotation(ry_gate, np.asarray(angles, dtype=float), list(controls), target)


def mux_rz(angles, controls: list[int], target: int) -> list[Gate]:
    return _mux_rotation(rz_gate, np.asarray(angles, dtype=float), list(controls), target)


def _demultiplex(u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor diag(u1, u2) = diag(V, V) @ diag(D, D*) @ diag(W, W).

    V diagonalizes u1 @ u2^dagger (a unitary matrix, diagonalized through a
    complex Schur form, which is genuinely diagonal for normal input);
    D holds the principal square roots of its eigenvalues.
    """
    prod = u1 @ u2.conj().T
    evals, vecs = schur(prod, output="complex")
    d = np.sqrt(np.diag(evals).astype(complex))
    w = d.conj()[:, None] * (vecs.conj().T @ u1)
    return vecs, d, w


def _synthesize_into(u: np.ndarray, qubits: list[int], gates: list[Gate]):
    if len(qubits) == 1:
        theta, phi, lam, phase = zyz_angles(u)
        gates.append(u_gate(qubits[0], theta, phi, lam, phase))
        return
    half = u.shape[0] // 2
    (u1, u2), cs_angles, (v1h, v2h) = cossin(u, p=half, q=half, separate=True)
    top, rest = qubits[0], qubits[1:]

    v_v, v_d, v_w = _demultiplex(v1h, v2h)
    _synthesize_into(v_w, rest, gates)
    gates.extend(mux_rz(-2.0 * np.angle(v_d), rest, top))
    _synthesize_into(v_v, rest, gates)

    gates.extend(mux_ry(2.0 * np.asarray(cs_angles), rest, top))

    u_v, u_d, u_w = _demultiplex(u1, u2)
    _synthesize_into(u_w, rest, gates)
    gates.extend(mux_rz(-2.0 * np.angle(u_d), rest, top))
    _synthesize_into(u_v, rest, gates)


def synthesize(u: np.ndarray) -> Circuit:
    """Exact circuit for a unitary on up to MAX_SYNTH_QUBITS qubits.

    The simulated unitary of the result matches the input up to global phase;
    identity-angle rotations and cancelling CX pairs are peephole-removed.
    """
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    nq = int(round(math.log2(dim))) if dim > 0 else 0
    if dim < 2 or 2 ** nq != dim:
        raise ValueError(f"unitary dimension must be a power of 2 >= 2, got {dim}")
    if nq > MAX_SYNTH_QUBITS:
        raise ValueError(f"synthesis supports at most {MAX_SYNTH_QUBITS} qubits")
    assert_unitary(u)
    gates: list[Gate] = []
    _synthesize_into(u, list(range(nq)), gates)
    return peephole(Circuit(nq, gates))


def _is_identity_rotation(gate: Gate) -> bool:
    """True when the gate's matrix is the identity up to global phase."""
    if gate.kind != U_KIND:
        return False
    theta, phi, lam, _ = gate.params
    if abs(math.remainder(theta, 2.0 * math.pi)) > _ANGLE_TOL:
        return False
    # theta = 0 (mod 2pi): matrix is diag(e^{-i(phi+lam)/2}, e^{i(phi+lam)/2})
    # times a phase; cos(theta/2) = -1 branch folds into the same form.
    return abs(math.remainder(phi + lam, 2.0 * math.pi)) < _ANGLE_TOL


def peephole(circuit: Circuit) -> Circuit:
    """Drop identity rotations and cancel adjacent identical CX pairs, to fixpoint."""
    gates = list(circuit.gates)
    changed = True
    while changed:
        changed = False
        kept: list[Gate] = []
        for g in gates:
            if _is_identity_rotation(g):
                changed = True
                continue
            if (g.kind == CX_KIND and kept and kept[-1].kind == CX_KIND
                    and kept[-1].qubits == g.qubits):
                kept.pop()
                changed = True
                continue
            kept.append(g)
        gates = kept
    return Circuit(circuit.num_qubits, gates)
