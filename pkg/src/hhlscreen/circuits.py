"""Elementary-gate circuit IR, greedy-layer depth, and a statevector simulator.

The gate basis is {general single-qubit rotation, CX}.  A single-qubit gate
carries ZYZ Euler angles plus a global phase and realizes the matrix

    exp(i*phase) * Rz(phi) @ Ry(theta) @ Rz(lam)

Qubit 0 is the most significant bit of the statevector index.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

U_KIND = "u"
CX_KIND = "cx"


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == U_KIND:
            if len(self.qubits) != 1 or len(self.params) != 4:
                raise ValueError("u gate takes one qubit and (theta, phi, lam, phase)")
        elif self.kind == CX_KIND:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError("cx gate takes two distinct qubits")
            if self.params:
                raise ValueError("cx gate takes no parameters")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if any(not math.isfinite(p) for p in self.params):
            raise ValueError("gate parameters must be finite")

    def matrix(self) -> np.ndarray:
        """2x2 (u) or 4x4 (cx) unitary of this gate alone."""
        if self.kind == CX_KIND:
            return np.array([[1, 0, 0, 0],
                             [0, 1, 0, 0],
                             [0, 0, 0, 1],
                             [0, 0, 1, 0]], dtype=complex)
        theta, phi, lam, phase = self.params
        c = math.cos(theta / 2)
        s = math.sin(theta / 2)
        return np.exp(1j * phase) * np.array([
            [c * np.exp(-0.5j * (phi + lam)), -s * np.exp(-0.5j * (phi - lam))],
            [s * np.exp(0.5j * (phi - lam)), c * np.exp(0.5j * (phi + lam))],
        ])

    def inverse(self) -> "Gate":
        if self.kind == CX_KIND:
            return self
        theta, phi, lam, phase = self.params
        return Gate(U_KIND, self.qubits, (-theta, -lam, -phi, -phase))


def u_gate(qubit: int, theta: float, phi: float, lam: float, phase: float = 0.0) -> Gate:
    return Gate(U_KIND, (qubit,), (float(theta), float(phi), float(lam), float(phase)))


def h_gate(qubit: int) -> Gate:
    # H = e^{i pi/2} Rz(0) Ry(pi/2) Rz(pi)
    return u_gate(qubit, math.pi / 2, 0.0, math.pi, math.pi / 2)


def x_gate(qubit: int) -> Gate:
    return u_gate(qubit, math.pi, 0.0, math.pi, math.pi / 2)


def ry_gate(qubit: int, angle: float) -> Gate:
    return u_gate(qubit, angle, 0.0, 0.0)


def rz_gate(qubit: int, angle: float) -> Gate:
    return u_gate(qubit, 0.0, 0.0, angle)


def phase_gate(qubit: int, angle: float) -> Gate:
    # diag(1, e^{i angle})
    return u_gate(qubit, 0.0, 0.0, angle, angle / 2)


def cx_gate(control: int, target: int) -> Gate:
    return Gate(CX_KIND, (control, target))


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate):
        if any(q < 0 or q >= self.num_qubits for q in gate.qubits):
            raise ValueError(f"gate {gate} out of range for {self.num_qubits} qubits")

    def add(self, gate: Gate):
        self._check(gate)
        self.gates.append(gate)

    def extend(self, gates):
        for g in gates:
            self.add(g)

    def __len__(self) -> int:
        return len(self.gates)


def depth(circuit: Circuit) -> int:
    """Critical-path layer count under greedy layering.

    Each gate enters the earliest layer after the last layer touching any of
    its qubits; the depth is the highest occupied layer.
    """
    frontier = [0] * circuit.num_qubits
    for g in circuit.gates:
        layer = 1 + max(frontier[q] for q in g.qubits)
        for q in g.qubits:
            frontier[q] = layer
    return max(frontier, default=0) if frontier else 0


def gate_count(circuit: Circuit) -> int:
    return len(circuit.gates)


def compose(*circuits: Circuit) -> Circuit:
    """Concatenate circuits over a shared register."""
    if not circuits:
        raise ValueError("compose needs at least one circuit")
    nq = max(c.num_qubits for c in circuits)
    out = Circuit(nq)
    for c in circuits:
        out.extend(c.gates)
    return out


def inverse(circuit: Circuit) -> Circuit:
    """Reverse the gate order and invert each gate."""
    return Circuit(circuit.num_qubits, [g.inverse() for g in reversed(circuit.gates)])


def _apply_single(state: np.ndarray, mat: np.ndarray, qubit: int, nq: int) -> np.ndarray:
    psi = state.reshape([2] * nq)
    psi = np.moveaxis(psi, qubit, -1)
    psi = psi @ mat.T
    return np.moveaxis(psi, -1, qubit).reshape(-1)


def _apply_cx(state: np.ndarray, control: int, target: int, nq: int) -> np.ndarray:
    psi = state.reshape([2] * nq).copy()
    sel: list = [slice(None)] * nq
    sel[control] = 1
    block = psi[tuple(sel)]
    psi[tuple(sel)] = np.flip(block, axis=target if target < control else target - 1)
    return psi.reshape(-1)


def simulate(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """Apply the circuit to a statevector; returns a new vector of the same norm."""
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (2 ** circuit.num_qubits,):
        raise ValueError(
            f"state has shape {psi.shape}, expected ({2 ** circuit.num_qubits},)")
    psi = psi.copy()
    for g in circuit.gates:
        if g.kind == U_KIND:
            psi = _apply_single(psi, g.matrix(), g.qubits[0], circuit.num_qubits)
        else:
            psi = _apply_cx(psi, g.qubits[0], g.qubits[1], circuit.num_qubits)
    return psi


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Full unitary of the circuit (columns = images of basis states)."""
    dim = 2 ** circuit.num_qubits
    cols = [simulate(circuit, np.eye(dim, dtype=complex)[:, k]) for k in range(dim)]
    return np.stack(cols, axis=1)


def dumps(circuit: Circuit) -> str:
    """Debug dump: one text line per gate, `GATE kind targets params`."""
    lines = []
    for g in circuit.gates:
        targets = ",".join(str(q) for q in g.qubits)
        params = ",".join(repr(p) for p in g.params)
        lines.append(f"GATE {g.kind} {targets} {params}".rstrip())
    return "\n".join(lines)


def summary(circuit: Circuit) -> str:
    """Depth and gate-count summary as JSON."""
    return json.dumps({
        "depth": depth(circuit),
        "gates": gate_count(circuit),
        "qubits": circuit.num_qubits,
    })
