"""Feature catalog: registry stability, hand examples, bound certificates."""
import numpy as np
import pytest

from hhlscreen.features import (BASE_NAMES, FEATURE_REGISTRY, GERSH_CASSINI_NAMES,
                                cassini, cond_estimates, diagonal_features, extract,
                                gershgorin, structure_features, value_features,
                                variant_names)
from hhlscreen.matrices import GenSpec, SystemMatrix, generate_random_sparse, spectrum


def random_matrix(seed):
    n = [2, 4, 8][seed % 3]
    return generate_random_sparse(GenSpec(n=n, s=1 + seed % n, seed=seed))


class TestRegistry:
    def test_counts(self):
        assert len(FEATURE_REGISTRY) == 96
        assert len(variant_names("d1")) == 89
        assert len(variant_names("d2")) == 95
        assert len(variant_names("d3")) == 88
        assert len(variant_names("d4")) == 16

    def test_category_partition(self):
        categories = {}
        for _, cat, _ in FEATURE_REGISTRY:
            categories[cat] = categories.get(cat, 0) + 1
        assert categories == {"structure": 15, "value": 60, "diagonal": 13, "condition": 8}

    def test_extraction_bitwise_stable(self):
        m = random_matrix(7)
        a = extract(m, "d2")
        b = extract(m, "d2")
        assert a.names == b.names
        np.testing.assert_array_equal(a.values, b.values)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            variant_names("d5")


class TestStructure:
    def test_identity(self):
        st = structure_features(SystemMatrix(np.eye(4)))
        assert st["st_sparsity"] == 1.0
        assert st["st_nnz"] == 4.0
        assert st["st_fill_rate"] == 0.25
        assert st["st_symmetry"] == 1.0
        assert st["st_relative_symmetric_rate"] == 1.0
        assert st["st_nonvoid_diagonals"] == 1.0

    def test_all_ones(self):
        st = structure_features(SystemMatrix(np.ones((4, 4))))
        assert st["st_sparsity"] == 4.0
        assert st["st_fill_rate"] == 1.0
        assert st["st_nonvoid_diagonals"] == 7.0  # 2N - 1

    def test_upper_triangular_matching_rate(self):
        st = structure_features(SystemMatrix(np.array([[1.0, 1.0], [0.0, 1.0]])))
        assert abs(st["st_relative_symmetric_rate"] - 2.0 / 3.0) < 1e-12


class TestValue:
    def test_symmetric_matrix_has_zero_asym_norm(self):
        m = generate_random_sparse(GenSpec(n=4, s=3, seed=1))
        assert value_features(m)["va_asym_part_frobenius"] == 0.0

    def test_identity_norms(self):
        va = value_features(SystemMatrix(np.eye(2)))
        assert abs(va["va_norm_frobenius"] - np.sqrt(2)) < 1e-12
        assert va["va_norm_one"] == 1.0
        assert va["va_norm_inf"] == 1.0

    def test_two_norm_within_classical_brackets(self):
        for seed in range(30):
            m = random_matrix(seed)
            va = value_features(m)
            upper = min(va["va_norm_frobenius"],
                        np.sqrt(va["va_norm_one"] * va["va_norm_inf"]))
            assert va["va_norm_two"] <= upper + 1e-9
            assert va["va_norm_two"] >= 1e-3 * va["va_norm_one"]

    def test_two_norm_accuracy(self):
        # estimator, not certificate: near-degenerate top singular values slow
        # the power iteration, so only percent-level agreement is contracted
        for seed in range(20):
            m = random_matrix(seed)
            est = value_features(m)["va_norm_two"]
            true = np.linalg.norm(m.elements, 2)
            assert abs(est - true) <= 1e-2 * true


class TestDiagonal:
    def test_diagonal_matrix(self):
        di = diagonal_features(SystemMatrix(np.diag([2.0, -1.0, 3.0])))
        assert di["di_bandwidth_lower"] == 0.0
        assert di["di_bandwidth_upper"] == 0.0
        assert di["di_dist_diag_mean"] == 0.0
        assert di["di_dominant_rows_pct"] == 100.0
        assert di["di_dominant_cols_pct"] == 100.0
        assert abs(di["di_diag_value_rate"] - 1.0 / 3.0) < 1e-12

    def test_tridiagonal_bandwidths(self):
        a = np.diag(np.full(4, 2.0)) + np.diag(np.ones(3), 1) + np.diag(np.ones(3), -1)
        di = diagonal_features(SystemMatrix(a))
        assert di["di_bandwidth_lower"] == 1.0
        assert di["di_bandwidth_upper"] == 1.0

    def test_dominance_hand_case(self):
        di = diagonal_features(SystemMatrix(np.array([[4.0, 1.0], [3.0, 4.0]])))
        assert di["di_dominant_rows_pct"] == 100.0
        assert di["di_dominant_cols_pct"] == 100.0


class TestGershgorin:
    def test_hand_case(self):
        g = gershgorin(SystemMatrix(np.array([[2.0, 1.0], [1.0, 2.0]])))
        assert g["cn_gersh_lambda_max"] == 3.0
        assert g["cn_gersh_lambda_min"] == 1.0
        assert g["cn_gersh_ratio"] == 3.0
        assert g["cn_gersh_overlap"] == 2.0

    def test_diagonal_matrix(self):
        g = gershgorin(SystemMatrix(np.diag([3.0, -0.5])))
        assert g["cn_gersh_lambda_max"] == 3.0
        assert g["cn_gersh_lambda_min"] == 0.5
        assert g["cn_gersh_overlap"] == 0.0

    def test_upper_bound_dominates_spectral_radius(self):
        for seed in range(100):
            m = random_matrix(seed)
            g = gershgorin(m)
            rho = max(abs(l) for l in spectrum(m).eigenvalues)
            assert g["cn_gersh_lambda_max"] >= rho - 1e-12


class TestCassini:
    def test_diagonal_equals_gershgorin(self):
        m = SystemMatrix(np.diag([3.0, -0.5, 1.0]))
        g, c = gershgorin(m), cassini(m)
        assert c["cn_cassini_lambda_max"] == g["cn_gersh_lambda_max"]
        assert c["cn_cassini_lambda_min"] == g["cn_gersh_lambda_min"]

    def test_hand_case(self):
        c = cassini(SystemMatrix(np.array([[2.0, 1.0], [1.0, 2.0]])))
        assert abs(c["cn_cassini_lambda_max"] - 3.0) < 1e-12
        assert abs(c["cn_cassini_lambda_min"] - 1.0) < 1e-12

    def test_never_wider_than_gershgorin(self):
        for seed in range(200):
            m = random_matrix(seed)
            est = cond_estimates(m)
            assert est.cassini_max <= est.gersh_max + 1e-12
            assert est.cassini_min >= est.gersh_min - 1e-12
            assert est.cassini_ratio <= est.gersh_ratio + 1e-9

    def test_bounds_contain_spectrum(self):
        for seed in range(200):
            m = random_matrix(seed)
            est = cond_estimates(m)
            for lam in spectrum(m).eigenvalues:
                assert est.cassini_min - 1e-12 <= abs(lam) <= est.cassini_max + 1e-12


class TestExtract:
    def test_d4_is_raw_row_major(self):
        grid = SystemMatrix(np.arange(1.0, 17.0).reshape(4, 4))
        fv = extract(grid, "d4")
        np.testing.assert_array_equal(fv.values, np.arange(1.0, 17.0))

    def test_d4_rejects_other_sizes(self):
        with pytest.raises(ValueError, match="4x4"):
            extract(SystemMatrix(np.eye(8)), "d4")

    def test_d3_has_no_conditioning_features(self):
        names = variant_names("d3")
        assert not any(n.startswith("cn_") for n in names)
        assert names == BASE_NAMES

    def test_d2_has_estimates_but_no_exact_kappa(self):
        names = variant_names("d2")
        assert "cn_condition_number" not in names
        assert set(GERSH_CASSINI_NAMES) <= set(names)

    def test_d1_identity_kappa(self):
        fv = extract(SystemMatrix(np.eye(4)), "d1")
        assert fv.as_dict()["cn_condition_number"] == 1.0

    def test_d2_d3_need_no_eigendecomposition(self, monkeypatch):
        def boom(*args, **kwargs):
            raise AssertionError("eigendecomposition called")
        monkeypatch.setattr(np.linalg, "eigvalsh", boom)
        monkeypatch.setattr(np.linalg, "eigh", boom)
        monkeypatch.setattr(np.linalg, "svd", boom)
        monkeypatch.setattr(np.linalg, "eig", boom)
        m = SystemMatrix(np.array([[1.0, 0.2, 0.0, 0.0],
                                   [0.2, 0.8, 0.1, 0.0],
                                   [0.0, 0.1, 0.9, 0.3],
                                   [0.0, 0.0, 0.3, 0.7]]))
        extract(m, "d2")
        extract(m, "d3")
        extract(m, "d4")


class TestScaling:
    def test_per_feature_scaling_classes(self):
        c = 3.0
        for seed in (0, 5, 11):
            m = random_matrix(seed)
            scaled = SystemMatrix(m.elements * c)
            base = dict(zip(variant_names("d2"), extract(m, "d2").values))
            big = dict(zip(variant_names("d2"), extract(scaled, "d2").values))
            for name, _, scaling in FEATURE_REGISTRY:
                if name not in base:
                    continue
                if scaling == "linear":
                    np.testing.assert_allclose(big[name], c * base[name], rtol=1e-9,
                                               atol=1e-12, err_msg=name)
                elif scaling == "invariant":
                    np.testing.assert_allclose(big[name], base[name], rtol=1e-9,
                                               atol=1e-12, err_msg=name)
