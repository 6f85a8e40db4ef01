"""Discrete-time fractional Poisson process: exact laws, samplers and checks."""

from .counting import (
    CountPmfQuery,
    PmfTable,
    count_gf_check,
    count_pmf_exact,
    count_pmf_oracle,
    count_table,
)
from .errors import (
    CancellationError,
    ConvergenceError,
    DomainError,
    NegativeProbabilityError,
    NumericalError,
    RangeError,
    TableOverflowError,
)
from .fraccalc import (
    GridFunction,
    SignedLogValue,
    fractional_difference_caputo,
    fractional_difference_rl,
    fractional_sum,
    gbc,
    hhat,
    nabla,
    rising_factorial,
)
from .mittagleffler import ProcessParams, SeriesControl, SeriesResult, ml_eval, ml_survival
from .montecarlo import (
    McEstimate,
    PathRecord,
    SamplerConfig,
    mc_count_estimate,
    sample_sibuya,
    sample_waiting_time,
    simulate_paths,
)
from .renewal import (
    WaitingTimeDist,
    wt_cdf,
    wt_partial_mean,
    wt_pgf_closed,
    wt_pgf_series,
    wt_pmf,
)
from .subordination import (
    SibuyaDist,
    compare_models,
    sibuya_pgf,
    sibuya_pmf,
    sub_wt_pgf,
    sub_wt_pmf,
)

__version__ = "0.1.0"

__all__ = [
    "CancellationError",
    "ConvergenceError",
    "CountPmfQuery",
    "DomainError",
    "GridFunction",
    "McEstimate",
    "NegativeProbabilityError",
    "NumericalError",
    "PathRecord",
    "PmfTable",
    "ProcessParams",
    "RangeError",
    "SamplerConfig",
    "SeriesControl",
    "SeriesResult",
    "SibuyaDist",
    "SignedLogValue",
    "TableOverflowError",
    "WaitingTimeDist",
    "compare_models",
    "count_gf_check",
    "count_pmf_exact",
    "count_pmf_oracle",
    "count_table",
    "fractional_difference_caputo",
    "fractional_difference_rl",
    "fractional_sum",
    "gbc",
    "hhat",
    "mc_count_estimate",
    "ml_eval",
    "ml_survival",
    "nabla",
    "rising_factorial",
    "sample_sibuya",
    "sample_waiting_time",
    "sibuya_pgf",
    "sibuya_pmf",
    "simulate_paths",
    "sub_wt_pgf",
    "sub_wt_pmf",
    "wt_cdf",
    "wt_partial_mean",
    "wt_pgf_closed",
    "wt_pgf_series",
    "wt_pmf",
]
