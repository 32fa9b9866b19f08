"""Tests for the oracle order, the K_n threshold and the bound evaluators."""
import math

import numpy as np
import pandas as pd
import pytest

import pymarkovorder as pmo
from pymarkovorder import (
    BoundInputs,
    InputRangeError,
    InputValueError,
    InsufficientEntropiesError,
    MissingConstantError,
    PenaltySpec,
)

BIC = PenaltySpec.bic()


def assert_close(a: float, b: float, rtol: float = 1e-9, atol: float = 1e-12) -> bool:
    assert np.isclose(a, b, rtol=rtol, atol=atol).all()


class TestOracle:
    @pytest.mark.parametrize("log_n", [16, 18, 20])
    def test_zoo_consistency(self, zoo, log_n):
        for model in zoo.values():
            h = model.true_entropies(16)
            assert pmo.oracle_pml_order(h, 2**log_n, BIC, model.size).order == model.order

    def test_iid(self):
        for n in (16, 1024, 2**20):
            for pen in (BIC, PenaltySpec.power(0.6), PenaltySpec.aic()):
                assert pmo.oracle_pml_order([0.8] * 24, n, pen).order == 0

    def test_short_h(self, zoo):
        with pytest.raises(InsufficientEntropiesError) as ex:
            _ = pmo.oracle_pml_order(zoo["markov1"].true_entropies(2), 2**16, BIC)
        assert "len(h)" in str(ex.value)

    def test_increasing(self):
        with pytest.raises(InputRangeError) as ex:
            _ = pmo.oracle_pml_order([0.5, 0.6, 0.6], 16, BIC)
        assert "nonincreasing" in str(ex.value)

    def test_stability(self):
        h = [1.0] + [0.5] * 9
        res = pmo.oracle_pml_order(h, 1024, BIC, h_se=[1e-6] * 10)
        assert res.order == 1
        assert res.stable
        assert len(res.scores) == 10
        res = pmo.oracle_pml_order(h, 1024, BIC, h_se=[0.01] * 10)
        assert res.order == 1
        assert not res.stable

    def test_gmodel_nondecreasing(self, gmodel):
        q = gmodel.quantities(16, path_len=2**16, seed=2)
        pen = PenaltySpec.power(0.6)
        orders = [pmo.oracle_pml_order(q.h, 2**j, pen).order for j in range(10, 21, 2)]
        assert orders == sorted(orders)


def test_k_threshold():
    assert pmo.k_threshold(100, [0.5, 0.25, 0.125, 0.0625], 0.1) == 3
    assert pmo.k_threshold(2.7, [1.0, 1.0, 1.0], 0.5) == 2
    assert pmo.k_threshold(0.5, [1.0], 0.5) == 0
    with pytest.raises(InputRangeError) as ex:
        _ = pmo.k_threshold(3, [1.0], 0.0)
    assert "f(n)" in str(ex.value)


class TestSimpleBounds:
    def test_overshoot(self):
        assert pmo.bound_overshoot(1024, 0, 0.0, 1.0) == 1.0
        assert pmo.bound_overshoot(2**10, 30, 0.0, 1.0) == 2.0**-10
        with pytest.raises(InputRangeError):
            _ = pmo.bound_overshoot(16, 3, 0.0, 0.0)

    def test_lambdas(self):
        assert_close(pmo.nonnull_lambdas(0.75), (0.0, 2.0))
        with pytest.raises(InputRangeError):
            _ = pmo.nonnull_lambdas(0.0)

    def test_entropy_deviation(self):
        res = pmo.bound_entropy_deviation(2**20, 0.4, 0.5, 0.5)
        assert res.max_order == 2
        assert_close(res.threshold, 2.0**-2)
        assert 0.0 <= res.conditional_bound <= 1.0
        assert 0.0 <= res.block_bound <= 1.0
        with pytest.raises(InputRangeError) as ex:
            _ = pmo.bound_entropy_deviation(1024, 0.5, 0.5, 0.5)
        assert "0 < eps < 1/2" in str(ex.value)

    def test_entropy_deviation_decays(self):
        values = [pmo.bound_entropy_deviation(2**j, 0.45, 1.0, 0.0).block_bound for j in (60, 100, 140)]
        assert values[0] >= values[1] >= values[2]
        assert values[2] < 1.0

    def test_beta(self):
        beta1, beta2 = pmo.beta_constants(lambda k: 0.2 * 0.5**k)
        assert beta1 > 1.0
        assert beta2 > 16.0
        with pytest.raises(InputRangeError) as ex:
            _ = pmo.beta_constants([0.3])
        assert "2 |A| gamma(1)" in str(ex.value)


class TestUndershoot:
    def test_order_threshold(self):
        k_n = pmo.undershoot_order_threshold("pml", 2**20, 0.3, 20.0, 1.0, BIC)
        assert_close(k_n, 0.025)
        assert_close(pmo.undershoot_order_threshold("nml", 2**16, 0.25, 1.0, 1.0), 0.5)
        with pytest.raises(MissingConstantError) as ex:
            _ = pmo.undershoot_order_threshold("pml", 2**16, 0.25, 1.0, 1.0)
        assert "pen" in str(ex.value)
        with pytest.raises(InputValueError):
            _ = pmo.undershoot_order_threshold("mdl", 2**16, 0.25, 1.0, 1.0)

    def test_exponential(self):
        inputs = BoundInputs(
            n=2**20, pen=BIC, eps=0.3, alpha0=0.5, alpha=0.5, delta1=1.0, zeta1=20.0, delta2=1.0, zeta2=20.0
        )
        res = pmo.bound_undershoot_threshold("pml", inputs)
        assert_close(res.k_n, 0.025)
        assert 0.0 <= res.probability <= 1.0
        assert not res.n_sufficient

    def test_eps_range(self):
        inputs = BoundInputs(
            n=2**20, pen=BIC, eps=0.1, alpha0=0.5, alpha=0.5, delta1=1.0, zeta1=20.0, delta2=1.0, zeta2=20.0
        )
        with pytest.raises(InputRangeError) as ex:
            _ = pmo.bound_undershoot_threshold("pml", inputs)
        assert "6 log|A| / zeta1" in str(ex.value)

    def test_missing(self):
        with pytest.raises(MissingConstantError) as ex:
            _ = pmo.bound_undershoot_threshold("kt", BoundInputs(n=1024, eps=0.3))
        assert "alpha0, alpha, delta1, zeta1" in str(ex.value)

    def test_entropy_gap(self):
        inputs = BoundInputs(n=2**20, eps=0.3, alpha0=0.5, alpha=0.5, delta1=1.0, zeta1=20.0, c_kt=1.0)
        res = pmo.bound_undershoot_threshold(
            "kt", inputs, "entropy-gap", h=[1.5, 1.0, 0.8, 0.8], entropy_rate=0.8
        )
        assert res.k_n == 1.0
        with pytest.raises(MissingConstantError):
            _ = pmo.bound_undershoot_threshold("kt", inputs, "entropy-gap")

    def test_bounded(self, gmodel):
        inputs = BoundInputs(
            n=2**20, pen=BIC, eta=0.02, theta1=1.0, theta2=1.0, k_theta=0, p_inf=0.3, alpha0=0.8, alpha=0.4
        )
        res = pmo.bound_bounded_undershoot("pml", inputs, gmodel.gamma_upper)
        assert res.k_n == 0.0
        assert 0.0 <= res.probability <= 1.0
        assert res.n_sufficient


class TestDbarBound:
    def test_values(self, gmodel):
        inputs = BoundInputs(
            n=2**20,
            pen=BIC,
            p_inf=0.3,
            alpha0=0.8,
            alpha=0.4,
            theta1=1.0,
            theta2=1.0,
            k_theta=0,
            eta=0.02,
            mu=0.25,
            c_kt=1.0,
        )
        res = pmo.bound_dbar(inputs, gmodel.gamma_upper)
        assert res.k_n == 0
        assert res.threshold > 0.0
        assert len(res.terms) == 3
        assert 0.0 <= res.probability <= 1.0

    def test_missing(self, gmodel):
        with pytest.raises(MissingConstantError) as ex:
            _ = pmo.bound_dbar(BoundInputs(n=1024, pen=BIC), gmodel.gamma_upper)
        assert "required by the d-bar bound" in str(ex.value)


def test_entropy_tv_lemma():
    rng = np.random.default_rng(0)
    for i in range(1000):
        k = 1 + i % 4
        p = rng.dirichlet(np.ones(2**k))
        r = rng.dirichlet(np.ones(2**k))
        q = 0.85 * p + 0.15 * r
        diff, bound = pmo.entropy_tv_bound(p, q, k)
        assert diff <= bound + 1e-12
    diff, bound = pmo.entropy_tv_bound([0.5, 0.5], [0.55, 0.45], 1)
    assert_close(diff, 1.0 - pmo.entropy_bits([0.55, 0.45]))
    assert_close(bound, 0.1 * (1.0 - math.log2(0.1)))
    with pytest.raises(InputRangeError) as ex:
        _ = pmo.entropy_tv_bound([1.0, 0.0], [0.0, 1.0], 1)
    assert "d <= 1/e" in str(ex.value)


def test_entropy_tv_units():
    diff, bound = pmo.entropy_tv_bound([1.0, 0.0], [0.9, 0.1], 1)
    assert_close(diff, pmo.entropy_bits([0.9, 0.1]))
    assert_close(bound, 0.2 * (1.0 - math.log2(0.2)))
    assert diff <= bound
    # the nats-scaled form is too small here
    assert diff > bound / math.log2(math.e)


def test_kt_constant(zoo):
    samples = [zoo["markov1"].sample_path(512, seed) for seed in range(3)]
    c = pmo.fit_kt_constant(samples, [0, 1, 2])
    for s in samples:
        for k in (0, 1, 2):
            width = 2.0**k
            slack = 0.5 * width * math.log2(s.n / width)
            assert pmo.kt_ml_gap(s, k) <= c * width + slack + 1e-9


class TestBoundInputs:
    def test_from_mapping(self):
        inputs = BoundInputs.from_mapping({"n": 64, "pen": "bic", "p_inf": 0.2})
        assert inputs.pen == BIC
        assert inputs.provenance == {"p_inf": "user"}
        assert inputs.with_n(128).n == 128

    def test_unknown(self):
        with pytest.raises(InputValueError) as ex:
            _ = BoundInputs.from_mapping({"n": 64, "gamma0": 1.0})
        assert "Given bound parameter (gamma0)" in str(ex.value)


class TestGrid:
    def test_overshoot(self):
        frame = pmo.bound_grid("overshoot", {"p_inf": 0.5, "k": 10}, [4, 8])
        assert frame.columns.tolist() == ["n", "threshold", "bound", "note"]
        assert frame["bound"].tolist() == [0.015625, 0.0625]
        assert frame["threshold"].tolist() == [10.0, 10.0]
        assert frame["note"].tolist() == ["", ""]

    def test_refused(self):
        frame = pmo.bound_grid("entropy-deviation", {"eps": 0.25}, [16, 32])
        assert frame["bound"].isna().all()
        assert frame["note"].str.contains("alpha0, alpha").all()

    def test_undershoot_note(self):
        params = {
            "criterion": "pml",
            "pen": "bic",
            "eps": 0.3,
            "alpha0": 0.5,
            "alpha": 0.5,
            "delta1": 1.0,
            "zeta1": 20.0,
            "delta2": 1.0,
            "zeta2": 20.0,
        }
        frame = pmo.bound_grid("undershoot", params, [2**20])
        assert_close(frame["threshold"].iloc[0], 0.025)
        assert frame["note"].iloc[0].startswith("n below")

    def test_dbar(self):
        params = {
            "pen": "bic",
            "p_inf": 0.3,
            "alpha0": 0.8,
            "alpha": 0.4,
            "theta1": 1.0,
            "theta2": 1.0,
            "k_theta": 0,
            "eta": 0.02,
            "mu": 0.25,
            "c_kt": 1.0,
            "delta1": 0.4,
            "zeta1": 1.0,
        }
        frame = pmo.bound_grid("dbar", params, [2**16, 2**20])
        assert frame["note"].tolist() == ["", ""]
        assert (frame["threshold"] > 0).all()

    def test_codes(self):
        params = {"p_inf": 0.5, "k": 10}
        by_code = pmo.bound_grid("t2", params, [4, 8])
        pd.testing.assert_frame_equal(by_code, pmo.bound_grid("overshoot", params, [4, 8]))
        assert pmo.analysis.BOUND_CODES == {
            "t2": "overshoot",
            "t6": "entropy-deviation",
            "t8": "undershoot",
            "t10": "dbar",
            "prop1": "undershoot-gap",
        }
        refused = pmo.bound_grid("t6", {"eps": 0.25}, [16])
        assert refused["note"].str.contains("alpha0, alpha").all()

    def test_invalid(self):
        with pytest.raises(InputValueError) as ex:
            _ = pmo.bound_grid("t3", {}, [16])
        assert "overshoot" in str(ex.value)
        assert "prop1" in str(ex.value)
