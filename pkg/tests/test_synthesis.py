"""Unitary synthesis: ZYZ, multiplexed rotations, Shannon recursion, peephole."""
import numpy as np
import pytest

from hhlscreen.circuits import Circuit, circuit_unitary, cx_gate, depth, ry_gate, simulate, u_gate
from hhlscreen.matrices import SystemMatrix, generate_random_sparse, GenSpec
from hhlscreen.synthesis import (NotUnitaryError, controlled, matrix_exponential,
                                 mux_ry, mux_rz, peephole, synthesize, zyz_angles)


def haar_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def phase_distance(u, v):
    tr = np.trace(u.conj().T @ v)
    phase = tr / abs(tr) if abs(tr) > 1e-14 else 1.0
    return np.linalg.norm(u - phase * v)


class TestZyz:
    def test_round_trip(self):
        for seed in range(100):
            u = haar_unitary(2, seed)
            theta, phi, lam, phase = zyz_angles(u)
            rec = u_gate(0, theta, phi, lam, phase).matrix()
            assert np.linalg.norm(u - rec) < 1e-10

    def test_diagonal_and_antidiagonal_branches(self):
        for u in (np.diag([1.0, 1j]), np.array([[0.0, 1.0], [-1.0, 0.0]])):
            theta, phi, lam, phase = zyz_angles(np.asarray(u, complex))
            rec = u_gate(0, theta, phi, lam, phase).matrix()
            assert np.linalg.norm(u - rec) < 1e-12


class TestMux:
    @pytest.mark.parametrize("controls", [1, 2, 3])
    def test_mux_ry_matches_dense_multiplexer(self, controls):
        rng = np.random.default_rng(controls)
        angles = rng.uniform(-np.pi, np.pi, size=2 ** controls)
        c = Circuit(controls + 1, mux_ry(angles, list(range(controls)), controls))
        got = circuit_unitary(c)
        want = np.zeros((2 ** (controls + 1), 2 ** (controls + 1)), dtype=complex)
        for j, a in enumerate(angles):  # control register is the high bits
            block = np.array([[np.cos(a / 2), -np.sin(a / 2)],
                              [np.sin(a / 2), np.cos(a / 2)]])
            want[2 * j: 2 * j + 2, 2 * j: 2 * j + 2] = block
        assert phase_distance(want, got) < 1e-10

    def test_mux_rz_matches_dense_multiplexer(self):
        rng = np.random.default_rng(9)
        angles = rng.uniform(-np.pi, np.pi, size=4)
        c = Circuit(3, mux_rz(angles, [0, 1], 2))
        got = circuit_unitary(c)
        want = np.zeros((8, 8), dtype=complex)
        for j, a in enumerate(angles):
            want[2 * j: 2 * j + 2, 2 * j: 2 * j + 2] = np.diag(
                [np.exp(-0.5j * a), np.exp(0.5j * a)])
        assert phase_distance(want, got) < 1e-10


class TestSynthesize:
    def test_identity_collapses_to_nothing(self):
        assert depth(synthesize(np.eye(4))) == 0

    def test_single_qubit_is_one_gate(self):
        c = synthesize(haar_unitary(2, 3))
        assert len(c.gates) <= 1

    @pytest.mark.parametrize("qubits", [1, 2, 3])
    def test_round_trip(self, qubits):
        for seed in range(25):
            u = haar_unitary(2 ** qubits, seed)
            assert phase_distance(u, circuit_unitary(synthesize(u))) <= 1e-8

    def test_rejects_non_unitary(self):
        with pytest.raises(NotUnitaryError):
            synthesize(np.ones((4, 4)))

    def test_rejects_oversized(self):
        with pytest.raises(ValueError, match="at most"):
            synthesize(np.eye(2 ** 7))

    def test_columns_reproduced_on_basis_states(self):
        u = haar_unitary(8, 17)
        c = synthesize(u)
        for k in range(8):
            e = np.zeros(8, dtype=complex)
            e[k] = 1.0
            col = simulate(c, e)
            overlap = abs(np.vdot(u[:, k], col))
            assert overlap > 1.0 - 1e-9


class TestControlled:
    def test_cnot(self):
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        np.testing.assert_allclose(controlled(x, 1),
                                   np.array([[1, 0, 0, 0], [0, 1, 0, 0],
                                             [0, 0, 0, 1], [0, 0, 1, 0]]))

    def test_controlled_identity_is_identity(self):
        np.testing.assert_allclose(controlled(np.eye(4), 2), np.eye(16))

    def test_action_on_control_one_subspace(self):
        u = haar_unitary(4, 5)
        circ = synthesize(controlled(u, 1))
        rng = np.random.default_rng(6)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        state = np.concatenate([np.zeros(4), psi])  # control qubit |1>
        out = simulate(circ, state)
        overlap = abs(np.vdot(np.concatenate([np.zeros(4), u @ psi]), out))
        assert overlap > 1.0 - 1e-9

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            controlled(np.eye(2 ** 6), 1)


class TestMatrixExponential:
    def test_zero_matrix(self):
        np.testing.assert_allclose(
            matrix_exponential(SystemMatrix(np.zeros((2, 2))), 1.7), np.eye(2), atol=1e-14)

    def test_diagonal_example(self):
        u = matrix_exponential(SystemMatrix(np.diag([1.0, 0.5])), 2 * np.pi)
        np.testing.assert_allclose(np.diag(u), [1.0, -1.0], atol=1e-12)

    def test_unitarity(self):
        for seed in range(10):
            m = generate_random_sparse(GenSpec(n=8, s=5, seed=seed))
            u = matrix_exponential(m, 2.3)
            assert np.linalg.norm(u @ u.conj().T - np.eye(8)) <= 1e-10


class TestPeephole:
    def test_removes_identity_rotation(self):
        c = Circuit(1, [u_gate(0, 0.0, 0.3, -0.3, 1.0)])
        assert peephole(c).gates == []

    def test_cancels_adjacent_cx_pairs(self):
        c = Circuit(2, [cx_gate(0, 1), cx_gate(0, 1)])
        assert peephole(c).gates == []

    def test_keeps_blocked_cx_pairs(self):
        c = Circuit(2, [cx_gate(0, 1), ry_gate(1, 0.4), cx_gate(0, 1)])
        assert len(peephole(c).gates) == 3

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        gates = []
        for _ in range(30):
            if rng.random() < 0.4:
                gates.append(cx_gate(*rng.choice(3, size=2, replace=False).tolist()))
            else:
                gates.append(u_gate(int(rng.integers(3)), *rng.uniform(-1, 1, size=4)))
        once = peephole(Circuit(3, gates))
        twice = peephole(once)
        assert once.gates == twice.gates

    def test_preserves_unitary(self):
        c = Circuit(2, [cx_gate(0, 1), u_gate(0, 0.0, 0.2, -0.2, 0.0), cx_gate(0, 1),
                        ry_gate(1, 0.9)])
        before = circuit_unitary(c)
        after = circuit_unitary(peephole(c))
        tr = np.trace(before.conj().T @ after)
        assert abs(abs(tr) - 4.0) < 1e-10
