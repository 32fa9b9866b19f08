"""Tests for the PML, NML and KT criteria and the order estimator."""
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

import pymarkovorder as pmo
from pymarkovorder import (
    CapacityError,
    Criterion,
    InputRangeError,
    InputValueError,
    PenaltySpec,
    Sample,
    SampleCounts,
)


def assert_close(a: float, b: float, rtol: float = 1e-9, atol: float = 1e-10) -> bool:
    assert np.isclose(a, b, rtol=rtol, atol=atol).all()


def all_samples(n: int, size: int = 2):
    for symbols in itertools.product(range(size), repeat=n):
        yield Sample(pmo.Alphabet(size), list(symbols))


class TestKT:
    @pytest.mark.parametrize("n", range(1, 11))
    def test_sequential_closed_form(self, n):
        for s in all_samples(n):
            sc = SampleCounts(s)
            for k in range(min(n - 1, 3) + 1):
                seq = pmo.kt_log_prob(sc, k)
                assert_close(seq, pmo.kt_log_prob_closed_form(sc, k))
                exact = pmo.kt_prob_exact(s, k)
                assert_close(seq, math.log2(exact.numerator) - math.log2(exact.denominator))
                assert pmo.kt_ml_gap(sc, k) >= -1e-9

    @pytest.mark.parametrize("n", [1, 4, 8])
    def test_sums_to_one(self, n):
        for k in range(min(n - 1, 3) + 1):
            total = sum(pmo.kt_prob_exact(s, k) for s in all_samples(n))
            assert total == 1
            assert_close(sum(2.0 ** pmo.kt_log_prob(s, k) for s in all_samples(n)), 1.0)

    def test_ternary(self):
        for s in all_samples(5, 3):
            for k in range(3):
                exact = float(pmo.kt_prob_exact(s, k))
                assert_close(2.0 ** pmo.kt_log_prob(s, k), exact)

    def test_values(self):
        assert pmo.kt_prob_exact(Sample.from_string("0"), 0) == Fraction(1, 2)
        assert pmo.kt_prob_exact(Sample.from_string("00"), 0) == Fraction(3, 8)
        assert_close(pmo.kt_score(Sample.from_string("00"), 0), math.log2(8 / 3))

    def test_order_range(self):
        with pytest.raises(InputRangeError) as ex:
            _ = pmo.kt_log_prob(Sample.from_string("0101"), 4)
        assert "0 <= k <= n - 1 = 3" in str(ex.value)


class TestNML:
    @pytest.mark.parametrize("n", range(1, 17))
    def test_iid_brute_force(self, n):
        terms = [2.0 ** pmo.log_ml(s, 0) for s in all_samples(n)]
        assert_close(pmo.nml_log_normalizer(2, n, 0), math.log2(math.fsum(terms)), rtol=0, atol=1e-8)

    @pytest.mark.parametrize("n", range(2, 11))
    def test_normalizer(self, n):
        for k in range(min(n - 1, 3) + 1):
            value = pmo.nml_log_normalizer(2, n, k)
            assert value > 0
            terms = [2.0 ** pmo.log_ml(s, k) for s in all_samples(n)]
            assert_close(value, math.log2(math.fsum(terms)), rtol=0, atol=1e-8)

    def test_score_is_distribution(self):
        for k in range(4):
            total = math.fsum(2.0 ** -pmo.nml_score(s, k) for s in all_samples(6))
            assert_close(total, 1.0)
        assert_close(pmo.nml_score(Sample.from_string("01"), 0), math.log2(10))

    def test_last_order(self):
        assert pmo.nml_log_normalizer(3, 6, 5) == 6 * math.log2(3)

    def test_large_iid(self):
        n = 10_000
        assert_close(pmo.nml_log_normalizer(2, n, 0), 0.5 * math.log2(n * math.pi / 2), rtol=1e-2)

    def test_capacity(self):
        with pytest.raises(CapacityError) as ex:
            _ = pmo.nml_log_normalizer(2, 40, 1)
        assert "Use the KT criterion instead" in str(ex.value)

    def test_range(self):
        with pytest.raises(InputRangeError):
            _ = pmo.nml_log_normalizer(2, 0, 0)
        with pytest.raises(InputRangeError):
            _ = pmo.nml_log_normalizer(2, 4, 4)


class TestCriterion:
    def test_parse(self):
        assert Criterion.parse("pml").label == "pml:bic"
        assert Criterion.parse("pml:aic").penalty == PenaltySpec.aic()
        assert Criterion.parse("NML").kind == "nml"
        assert Criterion.parse("const:3").label == "pml:const:3"

    def test_invalid(self):
        with pytest.raises(InputValueError) as ex:
            _ = Criterion("mdl")
        assert "Given criterion (mdl)" in str(ex.value)
        with pytest.raises(InputValueError):
            _ = Criterion.parse("mdl")

    def test_pml_score(self):
        s = Sample.from_string("0100")
        assert_close(pmo.pml_score(s, 1, PenaltySpec.constant(0.0)), 2.0)
        assert_close(Criterion.parse("pml:aic").score(s, 1), 4.0)


class TestEstimate:
    def test_alternating(self):
        est = pmo.estimate_order(Sample.from_string("0101010101"), "pml:bic", 4)
        assert est.chosen_k == 1
        assert est.bound_used == 4
        assert est.pruned_at is None
        assert est.score_min == dict(est.scores)[1]
        frame = est.to_frame()
        assert frame.columns.tolist() == ["k", "score"]
        assert frame["k"].tolist() == [0, 1, 2, 3, 4]
        s = Sample.from_string("0101010101")
        for k, value in est.scores:
            assert_close(value, pmo.pml_score(s, k, PenaltySpec.bic()))

    def test_alternating_pruned(self):
        est = pmo.estimate_order(Sample.from_string("0101010101"), "pml:bic", 4, prune=True)
        assert est.chosen_k == 1
        assert est.pruned_at == 1
        assert [k for k, _ in est.scores] == [0, 1]

    def test_tie(self):
        est = pmo.estimate_order(Sample.from_string("00"), Criterion("pml", PenaltySpec.constant(0.0)), 1)
        assert [v for _, v in est.scores] == [0.0, 0.0]
        assert est.chosen_k == 0

    def test_distinct_pruning(self):
        s = Sample.from_string("00010111")
        est = pmo.estimate_order(s, "kt", 7, prune=True)
        assert est.pruned_at == 3
        assert len(est.scores) == 4
        full = pmo.estimate_order(s, "kt", 7)
        assert full.pruned_at is None
        assert [k for k, _ in full.scores] == list(range(8))
        assert full.chosen_k == est.chosen_k
        assert full.scores[:4] == est.scores

    @pytest.mark.parametrize("crit", ["pml:bic", "pml:aic", "kt", "nml"])
    def test_full_trace(self, crit):
        criterion = Criterion.parse(crit)
        for s in all_samples(8):
            est = pmo.estimate_order(s, criterion)
            assert [k for k, _ in est.scores] == list(range(8))
            for k, value in est.scores:
                assert_close(value, criterion.score(s, k))
            pruned = pmo.estimate_order(s, criterion, prune=True)
            assert pruned.chosen_k == est.chosen_k

    def test_max_order(self):
        with pytest.raises(InputRangeError) as ex:
            _ = pmo.estimate_order(Sample.from_string("0101"), "kt", 4)
        assert "0 <= r <= n - 1 = 3" in str(ex.value)
        assert pmo.estimate_order(Sample.from_string("01" * 40), "kt").bound_used == 61

    def test_nml_capacity(self):
        with pytest.raises(CapacityError):
            _ = pmo.estimate_order(Sample.from_string("0110" * 16), "nml")

    @pytest.mark.parametrize(
        ("name", "n", "order"),
        [
            ("iid-biased", 2**13, 0),
            ("markov1", 2**13, 1),
            ("markov2", 2**13, 2),
            ("markov3", 2**14, 3),
            ("ternary1", 2**12, 1),
        ],
    )
    def test_zoo_bic(self, zoo, name, n, order):
        sample = zoo[name].sample_path(n, seed=7)
        assert pmo.estimate_order(sample, "pml:bic", 8).chosen_k == order

    def test_kt_uniform(self, zoo):
        model = zoo["iid-uniform"]
        chosen = [pmo.estimate_order(model.sample_path(2**12, seed), "kt", 20).chosen_k for seed in range(1, 11)]
        assert sum(k >= 1 for k in chosen) >= 5
