"""Wald test for a log rate ratio under Negative-Binomial counts.

The model is ``log E[Y_ij] = log t + beta_0 + beta_1 x_j`` with ``x = 0`` for
control and ``1`` for treatment, so ``beta_1 = log(lambda_1 / lambda_0)``. The
dispersion ``k = 1/m`` is supplied by the caller rather than estimated.

The variance of ``beta_1_hat`` times the control-group size is taken as::

    V = (1 + eta^2) / (mu_t (lambda_0 + eta lambda_1)) + (1 + eta) k / eta

with ``eta`` the treatment-to-control subject ratio and ``mu_t`` the exposure
per subject, so that ``mu_t * lambda`` is a count per subject and ``V`` does
not depend on the time unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .dist import normal_survival
from .errors import DegenerateVarianceError, DomainError
from .montecarlo import run_chunks
from .process import NegBinomial
from .rate_test import rate_test_p_values
from .tradeoff import Scenario, _check_grid, curve_from_p_values, default_alpha_hat_grid


@dataclass(frozen=True)
class WaldInput:
    control_counts: Sequence[int]
    treatment_counts: Sequence[int]
    exposure: float
    dispersion: float

    def __post_init__(self):
        if len(self.control_counts) == 0 or len(self.treatment_counts) == 0:
            raise DomainError("both groups need at least one subject")
        if not self.exposure > 0:
            raise DomainError("exposure must be positive")
        if not self.dispersion > 0:
            raise DomainError("dispersion k must be positive")
        if min(min(self.control_counts), min(self.treatment_counts)) < 0:
            raise DomainError("counts must be nonnegative")

    @property
    def eta(self) -> float:
        return len(self.treatment_counts) / len(self.control_counts)


def wald_variance(eta: float, mu_t: float, lambda0: float, lambda1: float, k: float) -> float:
    return (1 + eta * eta) / (mu_t * (lambda0 + eta * lambda1)) + (1 + eta) * k / eta


def wald_p_value(inp: WaldInput) -> float:
    """One-sided p-value for ``beta_1 > 0``.

    Raises
    ------
    DegenerateVarianceError
        If either group has no events, since ``log(0)`` makes the estimate
        and its variance undefined.
    """
    y0 = math.fsum(inp.control_counts)
    y1 = math.fsum(inp.treatment_counts)
    if y0 == 0 or y1 == 0:
        raise DegenerateVarianceError(
            "degenerate variance: a group has zero events, so the log rate ratio is undefined"
        )
    n0, n1 = len(inp.control_counts), len(inp.treatment_counts)
    lam0 = y0 / n0 / inp.exposure
    lam1 = y1 / n1 / inp.exposure
    beta1 = math.log(lam1) - math.log(lam0)
    v = wald_variance(inp.eta, inp.exposure, lam0, lam1, inp.dispersion)
    return normal_survival(beta1, math.sqrt(v / n0))


def wald_p_values(y0_sum, y1_sum, n0: int, n1: int, exposure: float, k: float) -> np.ndarray:
    """Vectorized p-values from group totals; NaN where a group has no events."""
    y0 = np.asarray(y0_sum, dtype=float)
    y1 = np.asarray(y1_sum, dtype=float)
    ok = (y0 > 0) & (y1 > 0)
    lam0 = np.where(ok, y0, 1.0) / n0 / exposure
    lam1 = np.where(ok, y1, 1.0) / n1 / exposure
    eta = n1 / n0
    v = wald_variance(eta, exposure, lam0, lam1, k)
    z = (np.log(lam1) - np.log(lam0)) / np.sqrt(v / n0)
    return np.where(ok, 0.5 * special.erfc(z / math.sqrt(2.0)), np.nan)


@dataclass
class Comparison:
    wald_curve: object
    rate_curve: object
    degenerate_fraction: float
    degenerate_example: tuple | None = None


def simulate_subjects(scenario: Scenario, trials: int, seed: int, null: bool,
                      workers: int = 1) -> np.ndarray:
    """Per-subject counts, shape ``(trials, windows0 + windows1)``.

    Each window is one subject observed for ``t`` (the Wald test's ``Y_ij``);
    the control subjects come first.
    """
    s = scenario
    treatment = s.control if null else s.treatment
    a, b = s.windows0, s.windows1

    def draw(rng, size):
        c = s.control.sample(s.t0, size * a, rng).reshape(size, a)
        x = treatment.sample(s.t1, size * b, rng).reshape(size, b)
        return np.concatenate([c, x], axis=1)

    return run_chunks(draw, trials, seed, stream=0 if null else 1, workers=workers)


def compare_tests(scenario: Scenario, alpha_hat_grid=None, trials: int = 100_000,
                  seed: int = 0, workers: int = 1) -> Comparison:
    """Wald and rate-test curves on the same simulated subjects.

    Trials where a group has zero events have no Wald p-value. They are left
    out of the Wald curve and counted in ``degenerate_fraction`` (over null
    and alternative trials together). The rate test uses every trial.
    """
    if not isinstance(scenario.control, NegBinomial):
        raise DomainError("compare_tests needs a NegBinomial scenario")
    if scenario.t0 != scenario.t1:
        raise DomainError("both groups must share the per-subject exposure")
    grid = _check_grid(default_alpha_hat_grid() if alpha_hat_grid is None else alpha_hat_grid)
    a, b = scenario.windows0, scenario.windows1
    k = 1.0 / scenario.control.shape
    phis = {}
    example = None
    degenerate = 0
    for null in (True, False):
        counts = simulate_subjects(scenario, trials, seed, null, workers)
        y0 = counts[:, :a].sum(axis=1)
        y1 = counts[:, a:].sum(axis=1)
        rate = rate_test_p_values(y0, y1, scenario.exposure0, scenario.exposure1)
        wald = wald_p_values(y0, y1, a, b, scenario.t0, k)
        bad = np.isnan(wald)
        degenerate += int(bad.sum())
        if example is None and bad.any():
            i = int(np.flatnonzero(bad)[0])
            example = (tuple(int(v) for v in counts[i, :a]), tuple(int(v) for v in counts[i, a:]))
        if bad.all():
            raise DegenerateVarianceError("degenerate variance: every simulated trial has a group with zero events")
        phis[null] = (rate, wald[~bad])
    rate_curve = curve_from_p_values(phis[True][0], phis[False][0], grid,
                                     "monte_carlo", trials, seed)
    wald_curve = curve_from_p_values(phis[True][1], phis[False][1], grid,
                                     "monte_carlo", trials, seed)
    frac = degenerate / (2 * trials)
    wald_curve.extra["degenerate_fraction"] = frac
    rate_curve.extra["degenerate_fraction"] = 0.0
    return Comparison(wald_curve, rate_curve, frac, example)
