"""Top-level package for PyMarkovOrder."""
from importlib.metadata import PackageNotFoundError, version

from pymarkovorder._utils import config_hash, load_toml, parse_grid, read_sample, write_sample
from pymarkovorder.analysis import (
    BoundInputs,
    DbarBound,
    EntropyDeviationBound,
    OracleOrder,
    UndershootBound,
    beta_constants,
    bound_bounded_undershoot,
    bound_dbar,
    bound_entropy_deviation,
    bound_grid,
    bound_overshoot,
    bound_undershoot_threshold,
    entropy_tv_bound,
    fit_kt_constant,
    k_threshold,
    nonnull_lambdas,
    oracle_pml_order,
    undershoot_order_threshold,
)
from pymarkovorder.core import (
    Alphabet,
    PenaltySpec,
    Sample,
    SeedSpec,
    entropy_bits,
    xlog2x,
)
from pymarkovorder.counting import (
    CountTable,
    SampleCounts,
    block_entropy_profile,
    count_table,
    empirical_cond_entropy,
    empirical_cond_prob,
    empirical_entropy,
    empirical_prob,
    log_ml,
    log_ml_profile,
)
from pymarkovorder.criteria import (
    Criterion,
    OrderEstimate,
    estimate_order,
    kt_log_prob,
    kt_log_prob_closed_form,
    kt_ml_gap,
    kt_prob_exact,
    kt_score,
    nml_log_normalizer,
    nml_score,
    pml_score,
)
from pymarkovorder.dbar import (
    BlockDistribution,
    CouplingPlan,
    block_distribution,
    dbar_exact,
    dbar_upper_greedy,
    empirical_markov_estimator,
    hamming_per_letter,
    maximal_coupling,
)
from pymarkovorder.exceptions import (
    CapacityError,
    ConvergenceError,
    EmptyWindowError,
    InputRangeError,
    InputTypeError,
    InputValueError,
    InsufficientEntropiesError,
    MissingConstantError,
    NonNullWarning,
    OrderOverflowError,
    SymbolRangeError,
)
from pymarkovorder.experiments import (
    ExperimentConfig,
    ExperimentResult,
    aggregate_orders,
    divergence_slope,
    run_dbar_pipeline_experiment,
    run_divergence_experiment,
    run_entropy_deviation_experiment,
    run_experiment,
    run_oracle_ratio_experiment,
)
from pymarkovorder.print_versions import show_versions
from pymarkovorder.processes import (
    GeometricBinaryGModel,
    MarkovChainModel,
    ProcessModel,
    ProcessQuantities,
    continuity_rates,
    iid_model,
    load_model,
    markov_stationary,
    markov_zoo,
    model_from_config,
    nonnullness_constants,
    sample_path,
    true_entropies,
)

try:
    __version__ = version("pymarkovorder")
except PackageNotFoundError:
    __version__ = "999"

__all__ = [
    "Alphabet",
    "Sample",
    "PenaltySpec",
    "SeedSpec",
    "xlog2x",
    "entropy_bits",
    "CountTable",
    "SampleCounts",
    "count_table",
    "empirical_prob",
    "empirical_cond_prob",
    "empirical_entropy",
    "empirical_cond_entropy",
    "log_ml",
    "log_ml_profile",
    "block_entropy_profile",
    "Criterion",
    "OrderEstimate",
    "pml_score",
    "kt_log_prob",
    "kt_log_prob_closed_form",
    "kt_prob_exact",
    "kt_score",
    "kt_ml_gap",
    "nml_log_normalizer",
    "nml_score",
    "estimate_order",
    "ProcessModel",
    "ProcessQuantities",
    "MarkovChainModel",
    "GeometricBinaryGModel",
    "iid_model",
    "markov_stationary",
    "markov_zoo",
    "sample_path",
    "true_entropies",
    "continuity_rates",
    "nonnullness_constants",
    "model_from_config",
    "load_model",
    "BoundInputs",
    "OracleOrder",
    "UndershootBound",
    "EntropyDeviationBound",
    "DbarBound",
    "oracle_pml_order",
    "k_threshold",
    "bound_overshoot",
    "nonnull_lambdas",
    "undershoot_order_threshold",
    "bound_undershoot_threshold",
    "bound_bounded_undershoot",
    "bound_entropy_deviation",
    "beta_constants",
    "bound_dbar",
    "entropy_tv_bound",
    "fit_kt_constant",
    "bound_grid",
    "BlockDistribution",
    "CouplingPlan",
    "hamming_per_letter",
    "dbar_exact",
    "maximal_coupling",
    "dbar_upper_greedy",
    "empirical_markov_estimator",
    "block_distribution",
    "ExperimentConfig",
    "ExperimentResult",
    "aggregate_orders",
    "divergence_slope",
    "run_divergence_experiment",
    "run_oracle_ratio_experiment",
    "run_entropy_deviation_experiment",
    "run_dbar_pipeline_experiment",
    "run_experiment",
    "read_sample",
    "write_sample",
    "load_toml",
    "parse_grid",
    "config_hash",
    "InputTypeError",
    "InputValueError",
    "InputRangeError",
    "EmptyWindowError",
    "SymbolRangeError",
    "OrderOverflowError",
    "CapacityError",
    "ConvergenceError",
    "MissingConstantError",
    "InsufficientEntropiesError",
    "NonNullWarning",
    "show_versions",
    "__version__",
]
