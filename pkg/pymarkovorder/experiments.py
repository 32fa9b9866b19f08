"""Config-driven Monte Carlo experiments on order estimation, empirical entropies and d-bar."""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Literal, NamedTuple

import cytoolz.curried as tlz
import numpy as np
import pandas as pd
import scipy.stats as ss
import ujson as json

from pymarkovorder._utils import config_hash, load_toml, parse_grid
from pymarkovorder.analysis import (
    BoundInputs,
    OracleOrder,
    bound_dbar,
    bound_entropy_deviation,
    oracle_pml_order,
)
from pymarkovorder.core import PenaltySpec, SeedSpec
from pymarkovorder.counting import SampleCounts, empirical_cond_entropy, empirical_entropy
from pymarkovorder.criteria import NML_BUDGET, Criterion, estimate_order
from pymarkovorder.dbar import block_distribution, dbar_exact, empirical_markov_estimator
from pymarkovorder.exceptions import (
    CapacityError,
    InputRangeError,
    InputValueError,
    InsufficientEntropiesError,
    MissingConstantError,
)
from pymarkovorder.processes import (
    MC_PATH_LEN,
    GeometricBinaryGModel,
    MarkovChainModel,
    ProcessModel,
    model_from_config,
    nonnullness_constants,
)

if TYPE_CHECKING:
    ExperimentKind = Literal["divergence", "oracle_ratio", "entropy_deviation", "dbar_pipeline"]
    TrialFn = Callable[["_TrialTask"], list[dict[str, Any]]]

logger = logging.getLogger(__name__)

KINDS = ("divergence", "oracle_ratio", "entropy_deviation", "dbar_pipeline")
DEFAULT_TRIALS = 200
BOOTSTRAP_RESAMPLES = 1000
CI_LEVEL = 0.95
ORACLE_K_MAX = 16
TRIAL_COLUMNS = ["experiment", "model", "criterion", "penalty", "n", "trial", "k_hat", "score_min"]
ENTROPY_COLUMNS = [
    "experiment",
    "model",
    "n",
    "trial",
    "max_order",
    "block_dev",
    "cond_dev",
    "block_event",
    "cond_event",
]
TIMING_COLUMNS = ["experiment", "criterion", "n", "trial", "runtime_ms"]
CURVE_COLUMNS = ["series", "x", "y", "y_lo", "y_hi"]
AGGREGATE_COLUMNS = [
    "model",
    "criterion",
    "penalty",
    "n",
    "trials",
    "mean_k",
    "std_k",
    "q05",
    "median",
    "q95",
    "mean_score",
    "p_true",
    "p_over",
    "p_under",
]

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "aggregate_orders",
    "divergence_slope",
    "run_divergence_experiment",
    "run_oracle_ratio_experiment",
    "run_entropy_deviation_experiment",
    "run_dbar_pipeline_experiment",
    "run_experiment",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one experiment.

    Parameters
    ----------
    name : str
        Experiment id, also a key of every per-trial seed.
    kind : {"divergence", "oracle_ratio", "entropy_deviation", "dbar_pipeline"}
        The experiment to run.
    model : dict
        Model config accepted by :func:`~pymarkovorder.processes.model_from_config`.
    n_grid : tuple of int
        Strictly increasing sample sizes.
    criteria : tuple of str, optional
        Criteria such as ``pml``, ``nml``, ``kt`` or ``pml:aic``. A bare
        ``pml`` expands to one criterion per entry of ``penalties``.
    penalties : tuple of str, optional
        Penalties of the bare ``pml`` entries, defaults to BIC.
    trials : int, optional
        Trials per sample size, defaults to 200.
    master_seed : int, optional
        Seed of the ``SeedSpec``; trial ``t`` at size ``n`` draws from
        ``SeedSpec(master_seed).rng(name, n, t)``.
    max_order : str, optional
        ``auto`` (all orders that can be coded), ``fixed:<r>`` or
        ``log:<eta>`` for ``r = ceil(eta log2 n)``.
    out_dir : str, optional
        Output directory of :meth:`ExperimentResult.write`.
    max_workers : int, optional
        Worker processes, 1 runs the trials in this process.
    kappa, xi : float, optional
        Power penalty exponent and ratio tolerance of the oracle ratio experiment.
    eps : float, optional
        Rate of the entropy deviation experiment.
    eta : float, optional
        Order bound coefficient of the d-bar pipeline.
    block_len : int, optional
        Block length of the d-bar pipeline.
    budget : int, optional
        NML enumeration budget.
    bootstrap : int, optional
        Bootstrap resamples of the divergence slope, 0 disables the interval.
    oracle_k_max, oracle_path_len : int, optional
        Largest order and path length of the Monte Carlo oracle entropies.
    constants : dict, optional
        Process constants for the bound overlays.
    """

    name: str
    kind: ExperimentKind
    model: dict[str, Any]
    n_grid: tuple[int, ...]
    criteria: tuple[str, ...] = ("pml",)
    penalties: tuple[str, ...] = ("bic",)
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    max_order: str = "auto"
    out_dir: str | None = None
    max_workers: int = 1
    kappa: float = 0.6
    xi: float = 0.5
    eps: float = 0.25
    eta: float = 1.0
    block_len: int = 4
    budget: int = NML_BUDGET
    bootstrap: int = BOOTSTRAP_RESAMPLES
    oracle_k_max: int = ORACLE_K_MAX
    oracle_path_len: int = MC_PATH_LEN
    constants: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InputValueError("kind", KINDS, self.kind)
        if self.trials < 1:
            raise InputRangeError("trials", ">= 1", self.trials)
        grid = self.n_grid
        if not grid or grid[0] < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InputRangeError("n_grid", "a strictly increasing sequence of sizes >= 2", str(grid))
        if self.max_workers < 1:
            raise InputRangeError("max_workers", ">= 1", self.max_workers)
        if self.bootstrap < 0:
            raise InputRangeError("bootstrap", ">= 0", self.bootstrap)
        if self.block_len < 1:
            raise InputRangeError("block_len", ">= 1", self.block_len)
        rule, _, value = self.max_order.partition(":")
        try:
            valid = rule == "auto" or (rule == "fixed" and int(value) >= 0) or (rule == "log" and float(value) > 0)
        except ValueError:
            valid = False
        if not valid:
            raise InputValueError("max_order", ["auto", "fixed:<r>", "log:<eta>"], self.max_order)
        if self.kind == "oracle_ratio" and not 0.5 < self.kappa < 1.0:
            raise InputRangeError("kappa", "1/2 < kappa < 1", self.kappa)
        if self.kind == "entropy_deviation" and not 0.0 < self.eps < 0.5:
            raise InputRangeError("eps", "0 < eps < 1/2", self.eps)

    @classmethod
    def from_mapping(cls, config: dict[str, Any], base_dir: str | Path | None = None) -> ExperimentConfig:
        """Build from a mapping with an ``[experiment]`` table or a flat one.

        The model is a ``[model]`` table or ``model = "path.toml"``, resolved
        against ``base_dir``. An optional ``[constants]`` table feeds the
        bound overlays.
        """
        table = dict(config.get("experiment", config))
        model = table.pop("model", config.get("model"))
        constants = table.pop("constants", config.get("constants", {}))
        if model is None:
            raise InputValueError("model", ["a [model] table", "a model file path"], "missing")
        if isinstance(model, str):
            path = Path(model) if base_dir is None else Path(base_dir, model)
            loaded = load_toml(path)
            model = loaded.get("model", loaded)

        valid = {f.name for f in dataclasses.fields(cls)}
        unknown = set(table) - valid
        if unknown:
            raise InputValueError("experiment key", sorted(valid), ", ".join(sorted(unknown)))
        missing = [k for k in ("name", "kind", "n_grid") if k not in table]
        if missing:
            raise InputValueError("experiment key", missing, "missing")
        for key in ("criteria", "penalties"):
            if isinstance(table.get(key), str):
                table[key] = [table[key]]
            if key in table:
                table[key] = tuple(str(v) for v in table[key])
        table["n_grid"] = tuple(parse_grid(table["n_grid"]))
        if "max_order" in table:
            table["max_order"] = str(table["max_order"])
        return cls(model=dict(model), constants=dict(constants), **table)

    @classmethod
    def from_toml(cls, path: str | Path) -> ExperimentConfig:
        """Load an experiment config file."""
        return cls.from_mapping(load_toml(path), Path(path).parent)

    def to_dict(self) -> dict[str, Any]:
        """Plain form of the config, used for the manifest and its hash."""
        return {
            k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()
        }

    @property
    def seeds(self) -> SeedSpec:
        return SeedSpec(self.master_seed)

    def max_order_for(self, n: int) -> int | None:
        """The order bound ``r`` at sample size ``n``, ``None`` for ``auto``."""
        rule, _, value = self.max_order.partition(":")
        if rule == "auto":
            if self.kind != "dbar_pipeline":
                return None
            rule, value = "log", str(self.eta)
        r = int(value) if rule == "fixed" else math.ceil(float(value) * math.log2(n))
        return max(0, min(r, n - 1))

    def criteria_list(self) -> list[Criterion]:
        """Criteria in report order."""
        if self.kind == "oracle_ratio":
            return [Criterion("pml", PenaltySpec.power(self.kappa), self.budget)]
        out: list[Criterion] = []
        for name in self.criteria:
            if name.strip().lower() == "pml":
                out.extend(Criterion("pml", PenaltySpec.parse(p), self.budget) for p in self.penalties)
            else:
                out.append(Criterion.parse(name, self.budget))
        return list(tlz.unique(out, key=lambda c: c.label))


@dataclass
class ExperimentResult:
    """Per-trial rows, aggregates, plot-ready curves and a summary of one experiment.

    ``trials`` holds no timings so that reruns with the same config give
    identical files; wall times are in ``timings``. ``skipped`` lists the
    ``(criterion, n)`` cells dropped from the grid with their reason.
    """

    config: ExperimentConfig
    trials: pd.DataFrame
    aggregates: pd.DataFrame
    curve: pd.DataFrame
    timings: pd.DataFrame
    summary: dict[str, Any] = field(default_factory=dict)
    skipped: list[dict[str, Any]] = field(default_factory=list)

    def write(self, out_dir: str | Path | None = None) -> dict[str, Path]:
        """Write the CSV files and ``manifest.json`` and return their paths."""
        root = Path(out_dir or self.config.out_dir or "results")
        root.mkdir(parents=True, exist_ok=True)
        frames = {
            "trials": self.trials,
            "aggregates": self.aggregates,
            "curve": self.curve,
            "timings": self.timings,
        }
        paths = {key: root / f"{key}.csv" for key in frames}
        for key, frame in frames.items():
            frame.to_csv(paths[key], index=False, lineterminator="\n")

        config = self.config.to_dict()
        manifest = {
            "name": self.config.name,
            "kind": self.config.kind,
            "config": config,
            "config_hash": config_hash(config),
            "master_seed": self.config.master_seed,
            "build": _build_info(),
            "summary": _jsonable(self.summary),
            "skipped": _jsonable(self.skipped),
            "files": sorted(p.name for p in paths.values()),
        }
        paths["manifest"] = root / "manifest.json"
        paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("Wrote %s results to %s", self.config.name, root)
        return paths


class _TrialTask(NamedTuple):
    config: ExperimentConfig
    n: int
    trial: int
    extra: dict[str, Any]


_MODELS: dict[str, ProcessModel] = {}


def _model(config: ExperimentConfig) -> ProcessModel:
    key = config_hash(config.model)
    if key not in _MODELS:
        _MODELS[key] = model_from_config(config.model)
    return _MODELS[key]


def _build_info() -> dict[str, str]:
    info = {}
    for dist in ("pymarkovorder", "numpy", "scipy", "pandas"):
        try:
            info[dist] = version(dist)
        except PackageNotFoundError:
            info[dist] = "999"
    return info


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


def _draw(config: ExperimentConfig, n: int, trial: int) -> tuple[ProcessModel, SampleCounts]:
    model = _model(config)
    sample = model.sample_path(n, config.seeds.rng(config.name, n, trial))
    return model, SampleCounts(sample)


def _order_row(config: ExperimentConfig, model: ProcessModel, crit: Criterion, n: int, trial: int) -> dict[str, Any]:
    return {
        "experiment": config.name,
        "model": model.name,
        "criterion": crit.label,
        "penalty": crit.penalty.label if crit.kind == "pml" else "none",
        "n": n,
        "trial": trial,
    }


def _order_trial(task: _TrialTask) -> list[dict[str, Any]]:
    config, n, trial, _ = task
    model, counts = _draw(config, n, trial)
    r = config.max_order_for(n)
    rows = []
    for crit in config.criteria_list():
        row = _order_row(config, model, crit, n, trial)
        start = time.perf_counter()
        try:
            est = estimate_order(counts.sample, crit, r)
        except CapacityError as ex:
            row["error"] = str(ex)
        else:
            row["k_hat"], row["score_min"] = est.chosen_k, est.score_min
        row["runtime_ms"] = (time.perf_counter() - start) * 1e3
        rows.append(row)
    return rows


def _dbar_trial(task: _TrialTask) -> list[dict[str, Any]]:
    config, n, trial, _ = task
    model, counts = _draw(config, n, trial)
    truth = block_distribution(model, config.block_len)
    r = config.max_order_for(n)
    rows = []
    for crit in config.criteria_list():
        row = _order_row(config, model, crit, n, trial)
        start = time.perf_counter()
        try:
            est = estimate_order(counts.sample, crit, r)
            fitted = empirical_markov_estimator(counts.sample, est.chosen_k)
            row["dbar"] = dbar_exact(truth, block_distribution(fitted, config.block_len))[0]
        except (CapacityError, InputRangeError) as ex:
            row["error"] = str(ex)
        else:
            row["k_hat"], row["score_min"] = est.chosen_k, est.score_min
        row["runtime_ms"] = (time.perf_counter() - start) * 1e3
        rows.append(row)
    return rows


def _entropy_trial(task: _TrialTask) -> list[dict[str, Any]]:
    config, n, trial, extra = task
    model, counts = _draw(config, n, trial)
    if not isinstance(model, MarkovChainModel):
        raise InputValueError("model", ["a Markov chain with exact entropies"], type(model).__name__)
    start = time.perf_counter()
    k_max = int(extra["max_order"])
    block_dev = max(
        (abs(empirical_entropy(counts, k) - model.block_entropy(k)) for k in range(1, k_max + 1)),
        default=0.0,
    )
    cond_dev = max(
        abs(empirical_cond_entropy(counts, k) - model.cond_entropy(k)) for k in range(k_max + 1)
    )
    threshold = float(extra["threshold"])
    return [
        {
            "experiment": config.name,
            "model": model.name,
            "criterion": "entropy",
            "n": n,
            "trial": trial,
            "max_order": k_max,
            "block_dev": block_dev,
            "cond_dev": cond_dev,
            "block_event": block_dev > threshold,
            "cond_event": cond_dev > threshold,
            "runtime_ms": (time.perf_counter() - start) * 1e3,
        }
    ]


def _run_tasks(
    config: ExperimentConfig,
    fn: TrialFn,
    grid: tuple[int, ...] | list[int] | None = None,
    extra: dict[int, dict[str, Any]] | None = None,
) -> list[dict[str, Any]]:
    """Run all trials, in worker processes when ``max_workers > 1``, in grid order."""
    extra = extra or {}
    tasks = [
        _TrialTask(config, n, t, extra.get(n, {}))
        for n in (config.n_grid if grid is None else grid)
        for t in range(config.trials)
    ]
    logger.info("%s: %d trials over %d sample sizes", config.name, len(tasks), len(tasks) // config.trials)
    if config.max_workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * config.max_workers))
        with ProcessPoolExecutor(max_workers=config.max_workers) as pool:
            chunks = list(pool.map(fn, tasks, chunksize=chunk))
    else:
        chunks = [fn(task) for task in tasks]
    return list(tlz.concat(chunks))


def _split(
    config: ExperimentConfig, rows: list[dict[str, Any]], columns: list[str]
) -> tuple[pd.DataFrame, pd.DataFrame, list[dict[str, Any]]]:
    """Sort rows and drop the cells with a failed trial."""
    rank = {c.label: i for i, c in enumerate(config.criteria_list())}
    rows = sorted(rows, key=lambda r: (rank.get(r["criterion"], 0), r["n"], r["trial"]))
    failed: dict[tuple[str, int], str] = {}
    for row in rows:
        if "error" in row:
            failed.setdefault((row["criterion"], row["n"]), row["error"])
    skipped = [{"criterion": c, "n": n, "reason": reason} for (c, n), reason in failed.items()]
    for cell in skipped:
        logger.warning("%s: skipped %s at n=%d: %s", config.name, cell["criterion"], cell["n"], cell["reason"])
    kept = [r for r in rows if (r["criterion"], r["n"]) not in failed]
    return pd.DataFrame(kept, columns=columns), pd.DataFrame(kept, columns=TIMING_COLUMNS), skipped


def _quantiles(values: np.ndarray, prefix: str = "") -> dict[str, float]:
    q05, q50, q95 = np.quantile(values, [0.05, 0.5, 0.95])
    return {f"{prefix}q05": float(q05), f"{prefix}median": float(q50), f"{prefix}q95": float(q95)}


def _binomial_interval(successes: int, trials: int) -> tuple[float, float]:
    """Clopper-Pearson interval at ``CI_LEVEL``."""
    a = (1.0 - CI_LEVEL) / 2.0
    lo = float(ss.beta.ppf(a, successes, trials - successes + 1)) if successes > 0 else 0.0
    hi = float(ss.beta.ppf(1.0 - a, successes + 1, trials - successes)) if successes < trials else 1.0
    return lo, hi


def _mean_interval(mean: float, std: float, count: int) -> tuple[float, float]:
    half = float(ss.norm.ppf(0.5 + CI_LEVEL / 2.0)) * std / math.sqrt(count)
    return mean - half, mean + half


def aggregate_orders(trials: pd.DataFrame, true_order: int | None = None) -> pd.DataFrame:
    """Per ``(criterion, n)`` summaries of the chosen orders.

    Parameters
    ----------
    trials : pandas.DataFrame
        Per-trial rows with at least the ``model``, ``criterion``,
        ``penalty``, ``n``, ``k_hat`` and ``score_min`` columns.
    true_order : int, optional
        The order of the process, which enables the frequencies of exact
        recovery, overestimation and underestimation.

    Returns
    -------
    pandas.DataFrame
        One row per cell in order of first appearance.
    """
    rows = []
    keys = ["model", "criterion", "penalty", "n"]
    for (model, crit, pen, n), grp in trials.groupby(keys, sort=False):
        k = grp["k_hat"].to_numpy(dtype="f8")
        row = {
            "model": model,
            "criterion": crit,
            "penalty": pen,
            "n": int(n),
            "trials": int(k.size),
            "mean_k": float(k.mean()),
            "std_k": float(k.std(ddof=1)) if k.size > 1 else 0.0,
            **_quantiles(k),
            "mean_score": float(grp["score_min"].mean()),
        }
        if true_order is None:
            row.update(p_true=math.nan, p_over=math.nan, p_under=math.nan)
        else:
            row.update(
                p_true=float((k == true_order).mean()),
                p_over=float((k > true_order).mean()),
                p_under=float((k < true_order).mean()),
            )
        rows.append(row)
    return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)


def divergence_slope(
    trials: pd.DataFrame, criterion: str, resamples: int = BOOTSTRAP_RESAMPLES, seed: SeedSpec | int = 0
) -> dict[str, float]:
    """Least-squares slope of the mean chosen order against ``log2 n`` with a bootstrap interval.

    Trials are resampled with replacement within each sample size and the
    slope refitted ``resamples`` times; the interval is the central
    ``CI_LEVEL`` percentile range of the refitted slopes.
    """
    grp = trials[trials["criterion"] == criterion]
    ns = sorted(int(n) for n in grp["n"].unique())
    nan = {"slope": math.nan, "slope_lo": math.nan, "slope_hi": math.nan}
    if len(ns) < 2:
        return nan
    x = np.log2(np.array(ns, dtype="f8"))
    xc = x - x.mean()
    cells = [grp.loc[grp["n"] == n, "k_hat"].to_numpy(dtype="f8") for n in ns]
    y = np.array([c.mean() for c in cells])
    slope = float(xc @ y / (xc @ xc))
    if resamples == 0:
        return {**nan, "slope": slope}
    spec = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    rng = spec.rng("bootstrap", criterion)
    boot = np.column_stack([c[rng.integers(0, c.size, (resamples, c.size))].mean(axis=1) for c in cells])
    slopes = boot @ xc / (xc @ xc)
    lo, hi = np.quantile(slopes, [(1.0 - CI_LEVEL) / 2.0, (1.0 + CI_LEVEL) / 2.0])
    return {"slope": slope, "slope_lo": float(lo), "slope_hi": float(hi)}


def _order_curve(aggregates: pd.DataFrame, column: str = "mean_k", std: str = "std_k") -> pd.DataFrame:
    rows = []
    for _, a in aggregates.iterrows():
        lo, hi = _mean_interval(a[column], a[std], int(a["trials"]))
        rows.append({"series": a["criterion"], "x": math.log2(a["n"]), "y": a[column], "y_lo": lo, "y_hi": hi})
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def _true_order(model: ProcessModel) -> int | None:
    return model.order if isinstance(model, MarkovChainModel) else None


def _check_kind(config: ExperimentConfig, kind: str) -> None:
    if config.kind != kind:
        raise InputValueError("kind", [kind], config.kind)


def run_divergence_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Chosen orders along the sample size grid and the growth rate of their mean.

    For every criterion the mean chosen order is regressed on ``log2 n``.
    A positive slope whose bootstrap interval excludes 0 indicates the
    logarithmic growth expected for infinite memory or for NML and KT on
    uniform i.i.d. data, a flat one the consistency expected for Markov chains.
    Cells that exceed a capacity budget are skipped and listed.
    """
    _check_kind(config, "divergence")
    model = _model(config)
    true_order = _true_order(model)
    trials, timings, skipped = _split(config, _run_tasks(config, _order_trial), TRIAL_COLUMNS)
    aggregates = aggregate_orders(trials, true_order)

    summary: dict[str, Any] = {"true_order": true_order, "criteria": {}}
    for crit in config.criteria_list():
        cells = aggregates[aggregates["criterion"] == crit.label]
        means = cells["mean_k"].to_numpy()
        summary["criteria"][crit.label] = {
            **divergence_slope(trials, crit.label, config.bootstrap, config.seeds),
            "mean_k_nondecreasing": bool((np.diff(means) >= 0).all()),
            "mean_k_last": float(means[-1]) if means.size else math.nan,
        }
    return ExperimentResult(config, trials, aggregates, _order_curve(aggregates), timings, summary, skipped)


def _oracle_orders(
    config: ExperimentConfig, model: ProcessModel, pen: PenaltySpec
) -> tuple[dict[int, OracleOrder], list[dict[str, Any]], str]:
    if isinstance(model, GeometricBinaryGModel):
        quantities = model.quantities(
            config.oracle_k_max, config.oracle_path_len, config.seeds.rng(config.name, "oracle")
        )
        label = "approximate: geometric memory decay"
    else:
        quantities = model.quantities(config.oracle_k_max)
        label = "exact"
    oracle, skipped = {}, []
    for n in config.n_grid:
        try:
            oracle[n] = oracle_pml_order(quantities.h, n, pen, model.size, quantities.h_se)
        except InsufficientEntropiesError as ex:
            skipped.append({"criterion": f"pml:{pen.label}", "n": n, "reason": str(ex)})
            logger.warning("%s: no oracle order at n=%d: %s", config.name, n, ex)
    return oracle, skipped, label


def run_oracle_ratio_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Ratio of the PML order with ``pen(n) = n**kappa`` to the oracle order.

    The oracle order uses exact conditional entropies for Markov chains and
    Monte Carlo ones with standard errors for the g-model, whose oracle is
    flagged unstable when its arg-min changes within three standard errors.
    The g-model only approximates the superexponential memory decay under
    which the ratio is known to converge, and the summary is labelled so.
    """
    _check_kind(config, "oracle_ratio")
    model = _model(config)
    crit = config.criteria_list()[0]
    oracle, oracle_skipped, label = _oracle_orders(config, model, crit.penalty)
    grid = [n for n in config.n_grid if n in oracle]
    trials, timings, skipped = _split(config, _run_tasks(config, _order_trial, grid), TRIAL_COLUMNS)

    k_oracle = trials["n"].map(lambda n: oracle[n].order).astype("i8")
    ratio = np.where(
        k_oracle > 0,
        trials["k_hat"] / k_oracle.where(k_oracle > 0, 1),
        np.where(trials["k_hat"] == 0, 1.0, np.inf),
    )
    trials = trials.assign(k_oracle=k_oracle, ratio=ratio)

    rows, curve = [], []
    for n, grp in trials.groupby("n", sort=False):
        r = grp["ratio"].to_numpy(dtype="f8")
        within = int((np.abs(r - 1.0) <= config.xi).sum())
        rows.append(
            {
                "n": int(n),
                "trials": int(r.size),
                "k_oracle": oracle[n].order,
                "stable": oracle[n].stable,
                "mean_k": float(grp["k_hat"].mean()),
                **_quantiles(r, "ratio_"),
                "frac_within": within / r.size,
                "label": label,
            }
        )
        lo, hi = _binomial_interval(within, r.size)
        curve.append({"series": "frac_within", "x": math.log2(n), "y": within / r.size, "y_lo": lo, "y_hi": hi})
        k = float(oracle[n].order)
        curve.append({"series": "k_oracle", "x": math.log2(n), "y": k, "y_lo": k, "y_hi": k})
    aggregates = pd.DataFrame(rows)
    summary = {
        "label": label,
        "xi": config.xi,
        "kappa": config.kappa,
        "unstable_n": [int(n) for n in grid if not oracle[n].stable],
        "frac_within_last": float(aggregates["frac_within"].iloc[-1]) if rows else math.nan,
    }
    curve_frame = pd.DataFrame(curve, columns=CURVE_COLUMNS).sort_values(["series", "x"], kind="stable")
    return ExperimentResult(
        config,
        trials,
        aggregates,
        curve_frame.reset_index(drop=True),
        timings,
        summary,
        oracle_skipped + skipped,
    )


def run_entropy_deviation_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Frequency of large empirical entropy deviations against their probability bound.

    At each ``n`` the event is ``max_k |H_k - H_k(true)| > n**-(1/2 - eps)``
    over ``1 <= k <= eps log n / (4 log|A|)``, and likewise for the
    conditional entropies over ``0 <= k`` up to the same order. The model
    must be a Markov chain so that the true entropies are exact.
    """
    _check_kind(config, "entropy_deviation")
    model = _model(config)
    if not isinstance(model, MarkovChainModel):
        raise InputValueError("model", ["a Markov chain with exact entropies"], type(model).__name__)
    quantities = model.quantities(0)
    bounds = {
        n: bound_entropy_deviation(n, config.eps, quantities.alpha0, quantities.alpha, model.size)
        for n in config.n_grid
    }
    extra = {n: {"threshold": b.threshold, "max_order": b.max_order} for n, b in bounds.items()}
    rows = _run_tasks(config, _entropy_trial, extra=extra)
    trials, timings, skipped = _split(config, rows, ENTROPY_COLUMNS)

    agg, curve = [], []
    for n, grp in trials.groupby("n", sort=False):
        b = bounds[int(n)]
        count = len(grp)
        hits = int(grp["block_event"].sum())
        cond_hits = int(grp["cond_event"].sum())
        freq = hits / count
        agg.append(
            {
                "n": int(n),
                "trials": count,
                "max_order": b.max_order,
                "threshold": b.threshold,
                "freq_block": freq,
                "freq_cond": cond_hits / count,
                "rhs_block": b.block_bound,
                "rhs_cond": b.conditional_bound,
                "holds": bool(b.block_bound >= 1.0 or freq <= b.block_bound),
            }
        )
        lo, hi = _binomial_interval(hits, count)
        curve.append({"series": "freq_block", "x": float(n), "y": freq, "y_lo": lo, "y_hi": hi})
        rhs = b.block_bound
        curve.append({"series": "rhs_block", "x": float(n), "y": rhs, "y_lo": rhs, "y_hi": rhs})
    aggregates = pd.DataFrame(agg)
    freqs = aggregates["freq_block"].to_numpy() if agg else np.empty(0)
    summary = {
        "eps": config.eps,
        "alpha0": quantities.alpha0,
        "alpha": quantities.alpha,
        "bound_holds": bool(aggregates["holds"].all()) if agg else True,
        "freq_nonincreasing": bool((np.diff(freqs) <= 0).all()),
    }
    curve_frame = pd.DataFrame(curve, columns=CURVE_COLUMNS).sort_values(["series", "x"], kind="stable")
    return ExperimentResult(
        config, trials, aggregates, curve_frame.reset_index(drop=True), timings, summary, skipped
    )


def _model_constants(model: ProcessModel) -> dict[str, float]:
    alpha0, alpha, p_inf = nonnullness_constants(model)
    return {"p_inf": p_inf, "alpha0": alpha0, "alpha": alpha}


def _dbar_overlay(config: ExperimentConfig, model: ProcessModel, pen: PenaltySpec, n: int) -> tuple[float, float, str]:
    """Threshold and probability of the d-bar bound, or the reason it is unavailable."""
    if not config.constants:
        return math.nan, math.nan, "no constants"
    params = {
        **_model_constants(model),
        **config.constants,
        "n": n,
        "alphabet_size": model.size,
        "pen": pen,
        "eta": config.eta,
    }
    try:
        res = bound_dbar(BoundInputs.from_mapping(params), model.gamma_upper)
    except (InputRangeError, MissingConstantError) as ex:
        return math.nan, math.nan, str(ex)
    return res.threshold, res.probability, ""


def run_dbar_pipeline_experiment(config: ExperimentConfig) -> ExperimentResult:
    """d-bar distance between the true block law and that of the fitted Markov estimator.

    Each trial estimates the order by PML bounded by ``ceil(eta log2 n)``
    (unless ``max_order`` says otherwise), fits the empirical Markov chain
    of that order and solves the exact d-bar problem on ``block_len``
    blocks. When ``constants`` are given, the distance threshold of the
    estimation bound is reported next to the curve.
    """
    _check_kind(config, "dbar_pipeline")
    model = _model(config)
    crits = config.criteria_list()
    bad = [c.label for c in crits if c.kind != "pml"]
    if bad:
        raise InputValueError("criteria", ["pml:<penalty>"], ", ".join(bad))
    for crit in crits:
        for n in config.n_grid:
            if crit.penalty(n) < 0.5 * math.log2(n) - 1e-12:
                raise InputRangeError(f"{crit.label} penalty at n={n}", ">= log2(n) / 2", crit.penalty(n))

    truth = block_distribution(model, config.block_len)
    self_distance = dbar_exact(truth, truth)[0]
    columns = [*TRIAL_COLUMNS, "dbar"]
    trials, timings, skipped = _split(config, _run_tasks(config, _dbar_trial), columns)

    agg, curve = [], []
    for (crit_label, n), grp in trials.groupby(["criterion", "n"], sort=False):
        d = grp["dbar"].to_numpy(dtype="f8")
        std = float(d.std(ddof=1)) if d.size > 1 else 0.0
        crit = next(c for c in crits if c.label == crit_label)
        threshold, probability, note = _dbar_overlay(config, model, crit.penalty, int(n))
        agg.append(
            {
                "model": model.name,
                "criterion": crit_label,
                "n": int(n),
                "trials": int(d.size),
                "mean_k": float(grp["k_hat"].mean()),
                "mean_dbar": float(d.mean()),
                "se_dbar": std / math.sqrt(d.size),
                "bound_threshold": threshold,
                "bound_probability": probability,
                "bound_note": note,
            }
        )
        lo, hi = _mean_interval(float(d.mean()), std, int(d.size))
        curve.append({"series": crit_label, "x": math.log2(n), "y": float(d.mean()), "y_lo": lo, "y_hi": hi})
        if math.isfinite(threshold):
            curve.append({"series": f"{crit_label}:bound", "x": math.log2(n), "y": threshold, "y_lo": threshold, "y_hi": threshold})
    aggregates = pd.DataFrame(agg)

    summary: dict[str, Any] = {
        "block_len": config.block_len,
        "truncation_error": truth.truncation_error,
        "self_distance": self_distance,
        "criteria": {},
    }
    for crit in crits:
        means = aggregates.loc[aggregates["criterion"] == crit.label, "mean_dbar"].to_numpy() if agg else np.empty(0)
        summary["criteria"][crit.label] = {
            "dbar_nonincreasing": bool((np.diff(means) <= 0).all()),
            "dbar_first": float(means[0]) if means.size else math.nan,
            "dbar_last": float(means[-1]) if means.size else math.nan,
        }
    return ExperimentResult(config, trials, aggregates, pd.DataFrame(curve, columns=CURVE_COLUMNS), timings, summary, skipped)


def run_experiment(config: ExperimentConfig | str | Path) -> ExperimentResult:
    """Run the experiment named by ``config.kind``; a path is loaded with :meth:`ExperimentConfig.from_toml`."""
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_toml(config)
    runners: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
        "divergence": run_divergence_experiment,
        "oracle_ratio": run_oracle_ratio_experiment,
        "entropy_deviation": run_entropy_deviation_experiment,
        "dbar_pipeline": run_dbar_pipeline_experiment,
    }
    start = time.perf_counter()
    result = runners[config.kind](config)
    logger.info("%s finished in %.1f s", config.name, time.perf_counter() - start)
    return result
