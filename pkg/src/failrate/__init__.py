"""Failure-rate comparison with the exact conditional rate test."""

__version__ = "0.1.0"

from .dist import (
    BinomialParams,
    DiscreteDist,
    NegBinomialParams,
    PoissonParams,
    binom_pmf,
    binom_survival,
    inverse_survival,
    negbinom_pmf,
    normal_survival,
    poisson_pmf,
)
from .errors import DegenerateVarianceError, DomainError, InfeasiblePlanError
from .kernels import BACKEND
from .planner import AirObservation, GrowIntervals, GrowWindow, PlanRequest, air, rank_slices, time_to_wait
from .process import (
    BinomCompound,
    CensoredSample,
    CountObservation,
    DetCompound,
    Exponential,
    Lomax,
    ManyWindows,
    NegBinomial,
    Poisson,
    SingleWindow,
    count_in_window,
    count_pmf,
    estimate_rate,
    estimator_variance_study,
    hazard_rate,
    interarrival_sample,
    model_from_dict,
    mttf_censored,
)
from .rate_test import (
    RateTestInput,
    TestOutcome,
    adjust_alpha_hat,
    contorted_p_value,
    decide,
    rate_test_p_value,
)
from .tradeoff import (
    Scenario,
    TradeoffCurve,
    alpha_closed_form_detcompound,
    beta_closed_form,
    beta_negbinomial,
    curve_closed_form,
    curve_monte_carlo,
    qq_data,
)
from .wald import WaldInput, compare_tests, wald_p_value
