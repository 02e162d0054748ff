"""Circuit IR: depth layering, simulation, inversion, dump formats."""
import json

import numpy as np
import pytest

from hhlscreen.circuits import (Circuit, Gate, circuit_unitary, compose, cx_gate,
                                depth, dumps, gate_count, h_gate, inverse,
                                phase_gate, ry_gate, simulate, summary, u_gate,
                                x_gate)


def random_circuit(num_qubits, num_gates, seed):
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(num_gates):
        if rng.random() < 0.5 and num_qubits >= 2:
            c, t = rng.choice(num_qubits, size=2, replace=False)
            gates.append(cx_gate(int(c), int(t)))
        else:
            q = int(rng.integers(num_qubits))
            gates.append(u_gate(q, *rng.uniform(-np.pi, np.pi, size=4)))
    return Circuit(num_qubits, gates)


def random_state(num_qubits, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2 ** num_qubits) + 1j * rng.normal(size=2 ** num_qubits)
    return psi / np.linalg.norm(psi)


class TestGate:
    def test_cx_needs_distinct_qubits(self):
        with pytest.raises(ValueError):
            Gate("cx", (1, 1))

    def test_u_needs_four_params(self):
        with pytest.raises(ValueError):
            Gate("u", (0,), (1.0, 2.0))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Gate("toffoli", (0, 1, 2))

    def test_u_inverse_matrix(self):
        g = u_gate(0, 0.7, -1.2, 2.2, 0.4)
        np.testing.assert_allclose(g.inverse().matrix(), g.matrix().conj().T, atol=1e-12)


class TestDepth:
    def test_empty(self):
        assert depth(Circuit(3)) == 0

    def test_disjoint_gates_share_layer(self):
        assert depth(Circuit(2, [h_gate(0), x_gate(1)])) == 1

    def test_chain(self):
        # hand-simulated greedy layering: H enters layer 1, CX layer 2, X layer 3
        assert depth(Circuit(2, [h_gate(0), cx_gate(0, 1), x_gate(1)])) == 3

    def test_subadditive_under_composition(self):
        for seed in range(10):
            c1 = random_circuit(4, 12, seed)
            c2 = random_circuit(4, 12, seed + 100)
            assert depth(compose(c1, c2)) <= depth(c1) + depth(c2)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            Circuit(1, [cx_gate(0, 1)])


class TestSimulate:
    def test_hadamard(self):
        out = simulate(Circuit(1, [h_gate(0)]), np.array([1.0, 0.0]))
        np.testing.assert_allclose(out, np.array([1.0, 1.0]) / np.sqrt(2), atol=1e-12)

    def test_empty_circuit_identity(self):
        psi = random_state(3, 0)
        np.testing.assert_allclose(simulate(Circuit(3), psi), psi)

    def test_norm_preserved(self):
        for seed in range(10):
            c = random_circuit(4, 30, seed)
            out = simulate(c, random_state(4, seed + 50))
            assert abs(np.linalg.norm(out) - 1.0) < 1e-10

    def test_cx_truth_table(self):
        c = Circuit(2, [cx_gate(0, 1)])
        np.testing.assert_allclose(circuit_unitary(c),
                                   np.array([[1, 0, 0, 0], [0, 1, 0, 0],
                                             [0, 0, 0, 1], [0, 0, 1, 0]]), atol=1e-12)

    def test_phase_gate(self):
        c = Circuit(1, [phase_gate(0, np.pi / 3)])
        np.testing.assert_allclose(circuit_unitary(c),
                                   np.diag([1.0, np.exp(1j * np.pi / 3)]), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            simulate(Circuit(2), np.ones(3))


class TestInverse:
    def test_empty(self):
        assert inverse(Circuit(2)).gates == []

    def test_hadamard_self_inverse(self):
        inv = inverse(Circuit(1, [h_gate(0)]))
        np.testing.assert_allclose(circuit_unitary(inv),
                                   circuit_unitary(Circuit(1, [h_gate(0)])), atol=1e-12)

    def test_round_trip_fidelity(self):
        for seed in range(8):
            c = random_circuit(3, 5, seed)
            psi = random_state(3, seed + 10)
            back = simulate(inverse(c), simulate(c, psi))
            assert abs(np.vdot(back, psi)) >= 1.0 - 1e-10


class TestFormats:
    def test_dump_lines(self):
        c = Circuit(2, [ry_gate(0, 0.5), cx_gate(0, 1)])
        lines = dumps(c).splitlines()
        assert lines[0].startswith("GATE u 0 ")
        assert lines[1] == "GATE cx 0,1"

    def test_summary_json(self):
        c = Circuit(2, [h_gate(0), cx_gate(0, 1)])
        data = json.loads(summary(c))
        assert data == {"depth": 2, "gates": 2, "qubits": 2}
        assert gate_count(c) == 2
