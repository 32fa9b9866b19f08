"""Tests for the experiment harness."""
import numpy as np
import pandas as pd
import pytest

import pymarkovorder as pmo
from pymarkovorder import ExperimentConfig, InputRangeError, InputValueError

MARKOV1 = {"zoo": "markov1"}


def config(**kwargs) -> ExperimentConfig:
    params = {"name": "test", "kind": "divergence", "model": MARKOV1, "n_grid": (256, 512), "trials": 5}
    params.update(kwargs)
    return ExperimentConfig(**params)


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip", keep_default_na=False)


class TestConfig:
    def test_validation(self):
        with pytest.raises(InputValueError) as ex:
            _ = config(kind="trend")
        assert "Given kind (trend)" in str(ex.value)
        with pytest.raises(InputRangeError) as ex:
            _ = config(n_grid=(16, 16))
        assert "n_grid" in str(ex.value)
        with pytest.raises(InputValueError):
            _ = config(max_order="fixed:x")
        with pytest.raises(InputRangeError):
            _ = config(kind="oracle_ratio", kappa=0.4)
        with pytest.raises(InputRangeError):
            _ = config(kind="entropy_deviation", eps=0.5)
        with pytest.raises(InputRangeError):
            _ = config(trials=0)

    def test_from_mapping(self):
        cfg = ExperimentConfig.from_mapping(
            {
                "experiment": {"name": "m", "kind": "divergence", "n_grid": "2^8:2^12:2", "criteria": "kt"},
                "model": MARKOV1,
            }
        )
        assert cfg.n_grid == (256, 1024, 4096)
        assert cfg.criteria == ("kt",)
        with pytest.raises(InputValueError) as ex:
            _ = ExperimentConfig.from_mapping({"name": "m", "kind": "divergence", "n_grid": [16], "seed": 1, "model": MARKOV1})
        assert "Given experiment key (seed)" in str(ex.value)
        with pytest.raises(InputValueError) as ex:
            _ = ExperimentConfig.from_mapping({"name": "m", "kind": "divergence", "model": MARKOV1})
        assert "n_grid" in str(ex.value)
        with pytest.raises(InputValueError):
            _ = ExperimentConfig.from_mapping({"name": "m", "kind": "divergence", "n_grid": [16]})

    def test_from_toml(self, tmp_path, markov1_toml):
        path = tmp_path / "experiment.toml"
        path.write_text(
            "[experiment]\n"
            'name = "file"\n'
            'kind = "divergence"\n'
            f'model = "{markov1_toml.name}"\n'
            "n_grid = [256, 1024]\n"
            "trials = 3\n"
            "[constants]\n"
            "delta1 = 0.5\n",
            encoding="utf-8",
        )
        cfg = ExperimentConfig.from_toml(path)
        assert cfg.model["name"] == "toml-markov1"
        assert cfg.constants == {"delta1": 0.5}
        assert cfg.to_dict()["n_grid"] == [256, 1024]

    def test_max_order(self):
        assert config(max_order="fixed:12").max_order_for(8) == 7
        assert config(max_order="log:1.5").max_order_for(1024) == 15
        assert config().max_order_for(1024) is None
        assert config(kind="dbar_pipeline").max_order_for(256) == 8

    def test_criteria_list(self):
        cfg = config(criteria=("pml", "kt", "pml:aic"), penalties=("bic", "aic"))
        assert [c.label for c in cfg.criteria_list()] == ["pml:bic", "pml:aic", "kt"]
        oracle = config(kind="oracle_ratio", kappa=0.7)
        assert [c.label for c in oracle.criteria_list()] == ["pml:power:0.7"]


def test_divergence_slope():
    frame = pd.DataFrame({"criterion": "x", "n": [4, 4, 16, 16], "k_hat": [1, 1, 3, 3]})
    assert pmo.divergence_slope(frame, "x", 10) == {"slope": 1.0, "slope_lo": 1.0, "slope_hi": 1.0}
    assert np.isnan(pmo.divergence_slope(frame, "y")["slope"])


class TestDivergence:
    def test_run(self):
        cfg = config(criteria=("pml", "kt"), bootstrap=50)
        result = pmo.run_experiment(cfg)
        assert result.trials.columns.tolist() == pmo.experiments.TRIAL_COLUMNS
        assert len(result.trials) == 20
        assert result.trials["criterion"].unique().tolist() == ["pml:bic", "kt"]
        assert result.aggregates[["criterion", "n"]].values.tolist() == [
            ["pml:bic", 256],
            ["pml:bic", 512],
            ["kt", 256],
            ["kt", 512],
        ]
        assert (result.aggregates["trials"] == 5).all()
        assert set(result.summary["criteria"]) == {"pml:bic", "kt"}
        assert result.summary["true_order"] == 1
        assert result.curve["series"].tolist() == ["pml:bic", "pml:bic", "kt", "kt"]
        assert len(result.timings) == 20
        assert result.skipped == []
        stats = result.summary["criteria"]["kt"]
        assert {"slope", "slope_lo", "slope_hi", "mean_k_nondecreasing"} <= set(stats)

    def test_skipped_cell(self):
        result = pmo.run_experiment(config(criteria=("nml",), n_grid=(16, 64), max_order="fixed:1", trials=2))
        assert result.trials["n"].unique().tolist() == [16]
        assert len(result.skipped) == 1
        cell = result.skipped[0]
        assert (cell["criterion"], cell["n"]) == ("nml", 64)
        assert "budget" in cell["reason"]
        assert result.aggregates["n"].tolist() == [16]

    def test_deterministic(self, tmp_path):
        cfg = config(criteria=("pml", "kt"), bootstrap=20)
        first = pmo.run_experiment(cfg).write(tmp_path / "a")
        second = pmo.run_experiment(cfg).write(tmp_path / "b")
        for key in ("trials", "aggregates", "curve", "manifest"):
            assert first[key].read_bytes() == second[key].read_bytes()
        assert first["manifest"].name == "manifest.json"

    def test_aggregates_from_csv(self, tmp_path):
        result = pmo.run_experiment(config(criteria=("pml", "kt"), bootstrap=0))
        paths = result.write(tmp_path)
        recomputed = pmo.aggregate_orders(read_csv(paths["trials"]), 1)
        pd.testing.assert_frame_equal(recomputed, result.aggregates, check_dtype=False)

    def test_workers(self):
        serial = pmo.run_experiment(config(bootstrap=0))
        parallel = pmo.run_experiment(config(bootstrap=0, max_workers=2))
        pd.testing.assert_frame_equal(serial.trials, parallel.trials)

    def test_kind_mismatch(self):
        with pytest.raises(InputValueError):
            _ = pmo.run_oracle_ratio_experiment(config())


def test_oracle_ratio():
    cfg = config(kind="oracle_ratio", n_grid=(2**12, 2**13), kappa=0.6, trials=4)
    result = pmo.run_experiment(cfg)
    assert (result.trials["ratio"] == 1.0).all()
    assert (result.trials["k_oracle"] == 1).all()
    assert result.aggregates["label"].tolist() == ["exact", "exact"]
    assert result.aggregates["k_oracle"].tolist() == [1, 1]
    assert result.summary["frac_within_last"] == 1.0
    assert result.summary["unstable_n"] == []
    assert set(result.curve["series"]) == {"frac_within", "k_oracle"}


class TestEntropyDeviation:
    def test_run(self):
        cfg = config(kind="entropy_deviation", n_grid=(2**10, 2**12), trials=4, eps=0.25)
        result = pmo.run_experiment(cfg)
        assert result.trials.columns.tolist() == pmo.experiments.ENTROPY_COLUMNS
        assert result.aggregates["n"].tolist() == [2**10, 2**12]
        assert (result.aggregates["threshold"] > 0).all()
        assert np.isclose(result.summary["alpha0"], 0.5)
        assert isinstance(result.summary["bound_holds"], bool)

    def test_gmodel(self):
        cfg = config(kind="entropy_deviation", model={"type": "gmodel", "theta0": 0.3, "c": 0.2, "rho": 0.5})
        with pytest.raises(InputValueError) as ex:
            _ = pmo.run_experiment(cfg)
        assert "exact entropies" in str(ex.value)


class TestDbarPipeline:
    def test_run(self):
        cfg = config(kind="dbar_pipeline", n_grid=(256, 1024), trials=3, block_len=3)
        result = pmo.run_experiment(cfg)
        assert result.summary["self_distance"] == 0.0
        assert result.summary["truncation_error"] == 0.0
        assert result.aggregates["bound_note"].tolist() == ["no constants", "no constants"]
        assert result.aggregates["bound_threshold"].isna().all()
        assert ((result.trials["dbar"] >= 0) & (result.trials["dbar"] <= 1)).all()

    def test_penalty(self):
        with pytest.raises(InputRangeError) as ex:
            _ = pmo.run_experiment(config(kind="dbar_pipeline", penalties=("aic",)))
        assert "log2(n) / 2" in str(ex.value)
        with pytest.raises(InputValueError):
            _ = pmo.run_experiment(config(kind="dbar_pipeline", criteria=("kt",)))


@pytest.mark.slow
class TestAcceptance:
    def test_bic_markov1(self):
        cfg = config(name="bic", n_grid=(2**14,), trials=200, max_order="fixed:12", bootstrap=0)
        result = pmo.run_experiment(cfg)
        assert result.aggregates["p_true"].iloc[0] >= 0.95

    def test_kt_uniform(self):
        grid = pmo.parse_grid("2^8:2^14:2")
        cfg = config(
            name="kt", model={"zoo": "iid-uniform"}, criteria=("kt",), n_grid=tuple(grid), trials=200, max_workers=4
        )
        result = pmo.run_experiment(cfg)
        stats = result.summary["criteria"]["kt"]
        assert stats["mean_k_nondecreasing"]
        last = result.aggregates.set_index("n").loc[2**14]
        assert last["trials"] == 200
        assert last["mean_k"] >= 1

    def test_gmodel_bic(self):
        grid = pmo.parse_grid("2^10:2^18:1")
        model = {"type": "gmodel", "theta0": 0.3, "c": 0.2, "rho": 0.5}
        cfg = config(name="gmodel", model=model, n_grid=tuple(grid), trials=100, bootstrap=200, max_workers=4)
        stats = pmo.run_experiment(cfg).summary["criteria"]["pml:bic"]
        assert stats["slope"] > 0
        assert stats["slope_lo"] > 0

    def test_entropy_deviation(self):
        cfg = config(kind="entropy_deviation", n_grid=(2**12, 2**14, 2**16), trials=500, eps=0.25, max_workers=4)
        result = pmo.run_experiment(cfg)
        assert result.summary["bound_holds"]
        assert result.summary["freq_nonincreasing"]
