"""Corpus building, labeling, splitting, Iris sampling, distribution matching."""
import numpy as np
import pytest

from hhlscreen import dataset
from hhlscreen.dataset import (DepthCutoff, DepthRecord, KappaHistogram,
                               build_corpus, build_matching_pool, compute_depths,
                               distribution_match, iris_data_path, iris_matrices,
                               kappa_histogram, label_corpus, split)
from hhlscreen.matrices import SystemMatrix


def fake_record(i, depth, kappa=10.0, n=4, s=4):
    m = SystemMatrix(np.eye(n) * (1.0 - 1e-3 * (i % 7)), id=f"m{i:04d}")
    return DepthRecord(matrix=m, s=s, kappa=kappa, n_l=4, depth=depth)


class TestBuildCorpus:
    def test_size_two_count(self):
        corpus = build_corpus([2], 10, seed=0)
        assert len(corpus) == 20  # s in {1, 2}
        assert len({m.id for m in corpus}) == 20

    def test_per_size_counts(self):
        corpus = build_corpus([2, 4], {2: 3, 4: 2}, seed=0)
        assert len(corpus) == 2 * 3 + 4 * 2

    def test_kappa_filter_holds(self):
        corpus = build_corpus([2, 4], 5, seed=1)
        assert all(m.kappa <= 1000.0 for m in corpus)

    def test_deterministic(self):
        a = build_corpus([4], 3, seed=9)
        b = build_corpus([4], 3, seed=9)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.elements, y.elements)

    def test_depth_banding_by_kappa(self):
        # matrices in a higher kappa bin are deeper on average at fixed (n, s)
        corpus = [m for m in build_corpus([4], 40, seed=2) if m.sparsity == 4]
        records = compute_depths(corpus, jobs=1)
        low = [r.depth for r in records if 4 <= r.kappa < 8]
        high = [r.depth for r in records if 16 <= r.kappa < 32]
        assert low and high
        assert np.mean(high) > np.mean(low)


class TestComputeDepths:
    def test_non_symmetric_goes_through_dilation(self):
        m = SystemMatrix(np.array([[1.0, 0.4], [0.1, 0.9]]), id="x")
        rec = compute_depths([m], jobs=1)[0]
        sym = SystemMatrix(0.5 * (m.elements + m.elements.T), id="x")
        assert rec.depth > compute_depths([sym], jobs=1)[0].depth
        assert rec.s == 2

    def test_parallel_matches_serial(self):
        corpus = build_corpus([2], 4, seed=3)
        serial = compute_depths(corpus, jobs=1)
        parallel = compute_depths(corpus, jobs=2)
        assert [(r.id, r.depth) for r in serial] == [(r.id, r.depth) for r in parallel]


class TestLabeling:
    def test_absolute_cutoff(self):
        records = [fake_record(0, 10), fake_record(1, 20)]
        result = label_corpus(records, DepthCutoff("absolute", 15))
        assert [s.label for s in result.samples] == [1, 0]
        assert result.threshold == 15

    def test_quantile_hits_target_on_tie_free_depths(self):
        records = [fake_record(i, 100 + i) for i in range(200)]
        result = label_corpus(records, DepthCutoff("quantile", 0.476))
        assert abs(result.positive_fraction - 0.476) <= 1.0 / 200

    def test_stricter_quantile_lowers_positive_fraction(self):
        records = [fake_record(i, 100 + i) for i in range(200)]
        base = label_corpus(records, DepthCutoff("quantile", 0.476))
        strict = label_corpus(records, DepthCutoff("quantile", 0.362))
        assert strict.positive_fraction < base.positive_fraction

    def test_relabeling_idempotent(self):
        records = [fake_record(i, 50 * (1 + i % 5)) for i in range(40)]
        first = label_corpus(records, DepthCutoff("absolute", 120))
        again = label_corpus(records, DepthCutoff("absolute", 120))
        assert [s.label for s in first.samples] == [s.label for s in again.samples]

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            label_corpus([], DepthCutoff("absolute", 10))

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            DepthCutoff("quantile", 1.5)
        with pytest.raises(ValueError):
            DepthCutoff("absolute", -1)
        with pytest.raises(ValueError):
            DepthCutoff("median", 0.5)
        assert DepthCutoff.parse("quantile:0.476").value == 0.476


class TestSplit:
    def _samples(self, n_pos, n_neg):
        out = []
        for i in range(n_pos + n_neg):
            rec = fake_record(i, 10)
            out.append(dataset.LabeledSample(id=rec.id, matrix=rec.matrix, s=4,
                                             kappa=5.0, depth=10,
                                             label=1 if i < n_pos else 0))
        return out

    def test_ratios_preserved(self):
        samples = self._samples(60, 40)
        train, test = split(samples, 0.2, seed=0)
        assert len(train) == 80 and len(test) == 20
        assert abs(sum(s.label for s in test) - 12) <= 1

    def test_deterministic_and_exhaustive(self):
        samples = self._samples(30, 30)
        a_train, a_test = split(samples, 0.25, seed=5)
        b_train, b_test = split(samples, 0.25, seed=5)
        assert [s.id for s in a_train] == [s.id for s in b_train]
        assert {s.id for s in a_train} | {s.id for s in a_test} == {s.id for s in samples}
        assert not ({s.id for s in a_train} & {s.id for s in a_test})

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            split(self._samples(10, 0), 0.2, seed=0)


class TestIris:
    def test_bundled_table_loads(self):
        rows = dataset.load_iris_rows(iris_data_path())
        assert rows.shape == (150, 4)
        assert np.all(rows > 0.0)

    def test_sampled_matrices_contract(self):
        ms = iris_matrices(iris_data_path(), 40, seed=0)
        assert len(ms) == 40
        for m in ms:
            assert m.n == 4
            assert m.provenance == "iris"
            assert m.sparsity == 4
            sig = np.linalg.svd(m.elements, compute_uv=False)
            assert sig[-1] > 1e-10 * sig[0]  # full rank
            assert abs(sig[0] - 1.0) < 1e-12  # normalized

    def test_deterministic(self):
        a = iris_matrices(iris_data_path(), 5, seed=3)
        b = iris_matrices(iris_data_path(), 5, seed=3)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.elements, y.elements)

    def test_malformed_csv_rejected(self, tmp_path):
        bad = tmp_path / "iris.csv"
        bad.write_text("sepal_length,sepal_width,petal_length,petal_width\n1,2,3,x\n")
        with pytest.raises(ValueError):
            dataset.load_iris_rows(bad)

    def test_row_count_enforced(self, tmp_path):
        short = tmp_path / "iris.csv"
        short.write_text("a,b,c,d\n" + "\n".join("1,2,3,4" for _ in range(10)) + "\n")
        with pytest.raises(ValueError, match="150"):
            dataset.load_iris_rows(short)


class TestHistogram:
    def test_three_values(self):
        h = kappa_histogram([100.0, 500.0, 900.0])
        assert h.counts == (1, 0, 1, 0, 1)
        np.testing.assert_allclose(h.proportions, (1/3, 0, 1/3, 0, 1/3))

    def test_single_low_value(self):
        h = kappa_histogram([1.0])
        assert h.proportions[0] == 1.0

    def test_clipping_counted(self):
        h = kappa_histogram([50.0, 5000.0])
        assert h.clipped == 1
        assert h.counts[4] == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kappa_histogram([])

    def test_proportions_validated(self):
        with pytest.raises(ValueError):
            KappaHistogram(counts=(1, 0, 0, 0, 0), proportions=(0.5, 0, 0, 0, 0),
                           clipped=0)


class TestDistributionMatch:
    def _pool(self, kappas):
        return [fake_record(i, 100, kappa=k) for i, k in enumerate(kappas)]

    def test_single_bin_target(self):
        pool = self._pool([10.0] * 30 + [900.0] * 5)
        target = kappa_histogram([5.0, 100.0, 150.0])  # all in bin 1
        chosen = distribution_match(pool, target, 10, seed=0)
        assert len(chosen) == 10
        assert all(r.kappa < 200.8 for r in chosen)

    def test_per_bin_gap_bound(self):
        rng = np.random.default_rng(0)
        pool = self._pool(rng.uniform(1, 1000, size=500))
        target = kappa_histogram(rng.uniform(1, 1000, size=300))
        total = 120
        chosen = distribution_match(pool, target, total, seed=1)
        got = kappa_histogram([r.kappa for r in chosen])
        for p_got, p_want in zip(got.proportions, target.proportions):
            assert abs(p_got - p_want) <= 1.0 / total + 1e-12

    def test_subset_of_pool(self):
        pool = self._pool(np.linspace(1, 999, 50))
        target = kappa_histogram(np.linspace(1, 999, 80))
        chosen = distribution_match(pool, target, 20, seed=2)
        ids = {r.id for r in pool}
        assert all(r.id in ids for r in chosen)

    def test_shortfall_reported(self):
        pool = self._pool([10.0] * 50)  # nothing outside bin 1
        target = kappa_histogram([900.0] * 10)
        with pytest.raises(ValueError, match="bin 5"):
            distribution_match(pool, target, 10, seed=0)

    def test_pool_restriction_enforced(self):
        bad = [fake_record(0, 100, n=8, s=4)]
        with pytest.raises(ValueError, match="4x4"):
            distribution_match(bad, kappa_histogram([10.0]), 1, seed=0)


class TestMatchingPool:
    def test_covers_demands(self):
        target = kappa_histogram([50.0] * 8 + [900.0])
        demands = dataset._apportion(target.proportions, 18)
        pool = build_matching_pool(target, demands, seed=0)
        records = [DepthRecord(matrix=m, s=m.sparsity, kappa=m.kappa, n_l=0, depth=0)
                   for m in pool]
        chosen = distribution_match(records, target, 18, seed=0)
        assert len(chosen) == 18


class TestFileFormats:
    def test_jsonl_round_trip(self, tmp_path):
        corpus = build_corpus([2], 3, seed=0)
        path = tmp_path / "c.jsonl"
        dataset.write_jsonl(path, [dataset.matrix_record(m, s=m.sparsity) for m in corpus])
        back = dataset.read_jsonl(path)
        assert len(back) == len(corpus)
        m0 = dataset.record_to_matrix(back[0])
        np.testing.assert_array_equal(m0.elements, corpus[0].elements)

    def test_feature_csv_round_trip(self, tmp_path):
        records = compute_depths(build_corpus([2], 6, seed=1), jobs=1)
        labeling = label_corpus(records, DepthCutoff("quantile", 0.5))
        path = tmp_path / "f.csv"
        dataset.write_feature_csv(path, labeling.samples, "d3")
        x, y, ids, names = dataset.read_feature_csv(path)
        assert x.shape == (12, 88)
        assert set(y) <= {0, 1}
        assert ids == [s.id for s in labeling.samples]
