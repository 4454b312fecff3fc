"""Information-theoretic analysis of financial return series.

Discrete entropy estimators, mutual information and transfer entropy on
symbolized returns, drawdown/drawup statistics with stretched-exponential
magnitude fits, approximate entropy, Gaussian-emission hidden Markov
models, volatility simulators, and conditional factor regressions.
"""
from .apen import (
    Absolute,
    ApEnParams,
    ApEnResult,
    FractionOfSd,
    apen,
    apen_block_bootstrap,
    apen_conditional,
    apen_conditional_rolling,
    apen_iid_analytic,
    apen_rolling,
)
from .dependence import (
    SymbolSeries,
    TeResult,
    effective_transfer_entropy,
    mi_noise_floor,
    mutual_information,
    transfer_entropy,
)
from .draws import (
    Draw,
    DrawFit,
    DrawStats,
    conditional_mean_length,
    detect_draws,
    discretize_by_draw,
    discretize_by_return,
    draw_statistics,
    draw_symbols,
    expected_runs,
    fit_stretched_exponential,
    run_length_pmf,
    sample_stretched_exponential,
)
from .entropy import (
    GRASSBERGER,
    NAIVE,
    EntropyEstimate,
    Histogram,
    TransitionMatrix,
    block_histogram,
    conditional_block_entropy,
    entropy_from_histogram,
    expected_state_duration,
    grassberger_entropy,
    markov_entropy_rate,
    naive_entropy,
    renyi_entropy,
    state_duration_pmf,
    stationary_distribution,
)
from .hmm import (
    DecodedStates,
    GofResult,
    HmmModel,
    StateReport,
    decode,
    fit_em,
    forward,
    geometric_duration_test,
    parameter_stderrs,
    state_report,
    viterbi,
)
from .regress import (
    Design,
    FitResult,
    Panel,
    build_design,
    fit_model,
    pooled_ols,
    standardize,
)
from .simulate import (
    Ar1,
    CorrelatedGaussian,
    Garch11,
    MarkovSwitch,
    MixtureNormal,
    VolJump,
    figure_suite,
    suite_names,
)

__version__ = "0.1.0"

__all__ = [
    "Absolute",
    "ApEnParams",
    "ApEnResult",
    "FractionOfSd",
    "apen",
    "apen_block_bootstrap",
    "apen_conditional",
    "apen_conditional_rolling",
    "apen_iid_analytic",
    "apen_rolling",
    "SymbolSeries",
    "TeResult",
    "effective_transfer_entropy",
    "mi_noise_floor",
    "mutual_information",
    "transfer_entropy",
    "Draw",
    "DrawFit",
    "DrawStats",
    "conditional_mean_length",
    "detect_draws",
    "discretize_by_draw",
    "discretize_by_return",
    "draw_statistics",
    "draw_symbols",
    "expected_runs",
    "fit_stretched_exponential",
    "run_length_pmf",
    "sample_stretched_exponential",
    "GRASSBERGER",
    "NAIVE",
    "EntropyEstimate",
    "Histogram",
    "TransitionMatrix",
    "block_histogram",
    "conditional_block_entropy",
    "entropy_from_histogram",
    "expected_state_duration",
    "grassberger_entropy",
    "markov_entropy_rate",
    "naive_entropy",
    "renyi_entropy",
    "state_duration_pmf",
    "stationary_distribution",
    "DecodedStates",
    "GofResult",
    "HmmModel",
    "StateReport",
    "decode",
    "fit_em",
    "forward",
    "geometric_duration_test",
    "parameter_stderrs",
    "state_report",
    "viterbi",
    "Design",
    "FitResult",
    "Panel",
    "build_design",
    "fit_model",
    "pooled_ols",
    "standardize",
    "Ar1",
    "CorrelatedGaussian",
    "Garch11",
    "MarkovSwitch",
    "MixtureNormal",
    "VolJump",
    "figure_suite",
    "suite_names",
    "__version__",
]
