"""Tests for the d-bar distance and the empirical Markov estimator."""
import itertools

import numpy as np
import pytest

import pymarkovorder as pmo
from pymarkovorder import (
    Alphabet,
    BlockDistribution,
    CapacityError,
    InputRangeError,
    InputValueError,
    Sample,
)

GRID = np.linspace(0.0, 1.0, 10)


def assert_close(a: float, b: float, atol: float = 1e-8) -> bool:
    assert np.isclose(a, b, rtol=0, atol=atol).all()


def bernoulli(p: float) -> BlockDistribution:
    return BlockDistribution.from_mapping({"0": 1.0 - p, "1": p})


def random_law(rng: np.random.Generator, length: int = 3) -> BlockDistribution:
    probs = rng.dirichlet(np.full(2**length, 0.5))
    return BlockDistribution(Alphabet(2), length, np.arange(2**length), probs / probs.sum())


def test_hamming():
    assert pmo.hamming_per_letter("0101", "0101") == 0.0
    assert pmo.hamming_per_letter([0, 1, 1, 0], [1, 1, 1, 1]) == 0.5
    with pytest.raises(InputValueError) as ex:
        _ = pmo.hamming_per_letter("01", "011")
    assert "string lengths" in str(ex.value)


class TestBlockDistribution:
    def test_support(self):
        law = BlockDistribution.from_mapping({"11": 0.5, "00": 0.5, "01": 0.0})
        assert law.codes.tolist() == [0, 3]
        assert law.digits().tolist() == [[0, 0], [1, 1]]
        assert law.as_dict() == {"00": 0.5, "11": 0.5}

    def test_invalid(self):
        with pytest.raises(InputRangeError) as ex:
            _ = BlockDistribution.from_mapping({"00": 0.5, "11": 0.4})
        assert "sum of probabilities" in str(ex.value)
        with pytest.raises(InputValueError):
            _ = BlockDistribution.from_mapping({"00": 0.5, "1": 0.5})


class TestExact:
    @pytest.mark.parametrize(("p", "q"), itertools.product(GRID, GRID))
    def test_bernoulli(self, p, q):
        value, plan = pmo.dbar_exact(bernoulli(p), bernoulli(q))
        assert_close(value, abs(p - q))
        assert_close(plan.mass.sum(), 1.0)

    @pytest.mark.parametrize(("p", "q"), [(0.2, 0.7), (0.5, 0.1), (0.9, 0.3)])
    def test_product(self, p, q):
        law_p = pmo.block_distribution(pmo.iid_model([1 - p, p]), 3)
        law_q = pmo.block_distribution(pmo.iid_model([1 - q, q]), 3)
        assert_close(pmo.dbar_exact(law_p, law_q)[0], abs(p - q))

    def test_point_masses(self):
        value, plan = pmo.dbar_exact(
            BlockDistribution.point_mass("0000"), BlockDistribution.point_mass("0111")
        )
        assert_close(value, 0.75)
        assert plan.as_dict() == {("0000", "0111"): 1.0}

    def test_metric(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p, q, r = (random_law(rng) for _ in range(3))
            d_pq, plan = pmo.dbar_exact(p, q)
            d_qp = pmo.dbar_exact(q, p)[0]
            d_pr = pmo.dbar_exact(p, r)[0]
            d_rq = pmo.dbar_exact(r, q)[0]
            assert_close(d_pq, d_qp)
            assert d_pq <= d_pr + d_rq + 1e-8
            assert pmo.dbar_exact(p, p)[0] == 0.0
            assert max(plan.certificate.values()) <= 1e-9
            assert 0.0 <= d_pq <= 1.0

    def test_mismatch(self):
        with pytest.raises(InputValueError) as ex:
            _ = pmo.dbar_exact(BlockDistribution.point_mass("00"), BlockDistribution.point_mass("000"))
        assert "block length" in str(ex.value)

    def test_capacity(self):
        rng = np.random.default_rng(2)
        with pytest.raises(CapacityError) as ex:
            _ = pmo.dbar_exact(random_law(rng), random_law(rng), budget=10)
        assert "dbar_upper_greedy" in str(ex.value)


class TestGreedy:
    def test_coupling(self):
        assert pmo.maximal_coupling([0.5, 0.5], [0.5, 0.5], 0.99) == (1, 1)
        assert pmo.maximal_coupling([1.0, 0.0], [0.0, 1.0], 0.3) == (0, 1)
        assert pmo.maximal_coupling([0.6, 0.4], [0.4, 0.6], 0.1) == (0, 0)
        assert pmo.maximal_coupling([0.6, 0.4], [0.4, 0.6], 0.9) == (0, 1)

    def test_upper_bound(self, zoo):
        pairs = [
            (zoo["markov1"], zoo["iid-uniform"]),
            (zoo["markov2"], zoo["markov1"]),
            (zoo["iid-biased"], zoo["markov3"]),
        ]
        for model_p, model_q in pairs:
            exact = pmo.dbar_exact(
                pmo.block_distribution(model_p, 4), pmo.block_distribution(model_q, 4)
            )[0]
            mean, se = pmo.dbar_upper_greedy(model_p, model_q, 4, trials=200, seed=3)
            assert mean >= exact - 3 * se
            assert se > 0

    def test_same_model(self, zoo):
        mean, se = pmo.dbar_upper_greedy(zoo["markov2"], zoo["markov2"], 6, trials=20, seed=0)
        assert mean == 0.0
        assert se == 0.0

    def test_gmodel(self, gmodel):
        mean, _ = pmo.dbar_upper_greedy(gmodel, gmodel, 8, trials=5, seed=0, burn_in=64)
        assert mean == 0.0


class TestEstimator:
    def test_alternating(self):
        chain = pmo.empirical_markov_estimator(Sample.from_string("01" * 20), 1)
        assert_close(chain.transition, [[0.0, 1.0], [1.0, 0.0]])
        assert_close(chain.stationary, [0.5, 0.5])

    def test_unseen_context(self):
        chain = pmo.empirical_markov_estimator(Sample.from_string("0000"), 1)
        assert_close(chain.transition, [[1.0, 0.0], [0.5, 0.5]])
        assert_close(chain.stationary, [1.0, 0.0])

    def test_consistency(self, zoo):
        model = zoo["markov2"]
        chain = pmo.empirical_markov_estimator(model.sample_path(2**16, seed=4), 2)
        truth = pmo.block_distribution(model, 4)
        fitted = pmo.block_distribution(chain, 4)
        assert pmo.dbar_exact(truth, fitted)[0] < 0.02


class TestBlockLaw:
    def test_markov(self, zoo):
        law = pmo.block_distribution(zoo["markov1"], 2)
        assert_close(sum(law.as_dict().values()), 1.0)
        assert_close(law.as_dict()["11"], 0.6 * 0.8)
        assert law.truncation_error == 0.0

    def test_gmodel(self, gmodel):
        law = pmo.block_distribution(gmodel, 3)
        assert law.truncation_error == gmodel.gamma_upper(7)
        assert_close(law.probs.sum(), 1.0)

    def test_capacity(self, zoo):
        with pytest.raises(CapacityError):
            _ = pmo.block_distribution(zoo["markov1"], 30)
