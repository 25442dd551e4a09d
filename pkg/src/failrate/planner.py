"""Annual interruption rate, slice ranking and time-to-wait planning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InfeasiblePlanError
from .process import (
    BinomCompound,
    CountObservation,
    NegBinomial,
    model_from_dict,
)
from .rate_test import RateTestInput, rate_test_p_value
from .tradeoff import (
    Scenario,
    curve_closed_form,
    curve_monte_carlo,
    default_alpha_hat_grid,
    nb_plateau,
)

#: 100 VM-years in VM-days (365-day year).
AIR_UNIT_DAYS = 36500.0


@dataclass(frozen=True)
class AirObservation:
    interruptions: int
    uptime_days: float

    def __post_init__(self):
        if self.interruptions < 0:
            raise DomainError("interruptions must be nonnegative")
        if not self.uptime_days > 0:
            raise DomainError("uptime must be positive")


def air(obs: AirObservation) -> float:
    """Interruptions per 100 VM-years of up-time."""
    return obs.interruptions * AIR_UNIT_DAYS / obs.uptime_days


def rank_slices(slices: Sequence[tuple[str, CountObservation]], reference: CountObservation) -> list[dict]:
    """Slices ordered by the p-value of "slice rate exceeds the reference rate".

    Ties are broken by higher estimated rate first, then by id.
    """
    rows = []
    for sid, obs in slices:
        phi = rate_test_p_value(RateTestInput(reference, obs))
        rows.append((phi, -obs.rate, str(sid)))
    rows.sort()
    return [{"id": sid, "p_value": phi} for phi, _, sid in rows]


# ---------------------------------------------------------------------------
# time to wait
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowWindow:
    """One window per arm whose length is chosen."""


@dataclass(frozen=True)
class GrowIntervals:
    """Windows of fixed length ``interval``; the number per arm is chosen."""

    interval: float

    def __post_init__(self):
        if not self.interval > 0:
            raise DomainError("interval length must be positive")


@dataclass(frozen=True)
class PlanRequest:
    """Baseline process, effect size and target error rates.

    ``effect`` is a rate increase for the Poisson-driven families and a decrease
    of ``theta`` for the NB family. BinomCompound is planned by Monte Carlo
    with ``trials`` draws per probe.
    """

    model: object
    effect: float
    target_alpha: float
    target_beta: float
    design: GrowWindow | GrowIntervals = field(default_factory=GrowWindow)
    trials: int = 20_000
    seed: int = 0

    def __post_init__(self):
        for name in ("target_alpha", "target_beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {v}")
        if not self.effect > 0:
            raise DomainError("effect must be positive")
        self.model.with_effect(self.effect)  # validates e.g. dtheta < theta

    @classmethod
    def from_dict(cls, spec: dict) -> "PlanRequest":
        spec = dict(spec)
        try:
            model = model_from_dict(spec.pop("model"))
            effect = float(spec.pop("effect"))
            alpha = float(spec.pop("target_alpha"))
            beta = float(spec.pop("target_beta"))
        except KeyError as exc:
            raise DomainError(f"plan request is missing {exc}") from None
        design = spec.pop("design", {"kind": "grow_window"})
        kind = design.get("kind")
        if kind == "grow_window":
            d = GrowWindow()
        elif kind == "grow_intervals":
            d = GrowIntervals(float(design["interval"]))
        else:
            raise DomainError(f"unknown design {kind!r}")
        trials = int(spec.pop("trials", 20_000))
        seed = int(spec.pop("seed", 0))
        if spec:
            raise DomainError(f"unknown plan keys: {sorted(spec)}")
        return cls(model, effect, alpha, beta, d, trials, seed)

    def to_dict(self) -> dict:
        if isinstance(self.design, GrowIntervals):
            design = {"kind": "grow_intervals", "interval": self.design.interval}
        else:
            design = {"kind": "grow_window"}
        out = {
            "model": self.model.to_dict(),
            "effect": self.effect,
            "target_alpha": self.target_alpha,
            "target_beta": self.target_beta,
            "design": design,
        }
        if isinstance(self.model, BinomCompound):
            out["trials"] = self.trials
            out["seed"] = self.seed
        return out


@dataclass(frozen=True)
class Probe:
    size: float
    alpha_hat: float
    alpha: float
    beta: float
    meets: bool
    beta_se: float = 0.0


def _scenario(req: PlanRequest, size) -> Scenario:
    if isinstance(req.design, GrowIntervals):
        return Scenario.from_effect(req.model, req.effect, req.design.interval,
                                    req.design.interval, int(size), int(size))
    return Scenario.from_effect(req.model, req.effect, float(size))


def _calibrated_closed(s: Scenario, target_alpha: float, iters: int = 48) -> tuple[float, float, float]:
    """Largest threshold whose realized alpha is within target, by bisection in logit space."""

    def alpha_beta(ah):
        c = curve_closed_form(s, [ah])
        return float(c.alpha[0]), float(c.beta[0])

    lo, hi = -30.0, 30.0  # logit bounds
    best = None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ah = 1.0 / (1.0 + math.exp(-mid))
        a, b = alpha_beta(ah)
        if a <= target_alpha:
            lo, best = mid, (ah, a, b)
        else:
            hi = mid
    if best is None:
        ah = 1.0 / (1.0 + math.exp(-lo))
        a, b = alpha_beta(ah)
        best = (ah, a, b) if a <= target_alpha else (ah, 0.0, 1.0)
    return best + (0.0,)


def _calibrated_mc(s: Scenario, req: PlanRequest) -> tuple[float, float, float]:
    """Monte Carlo version: both targets must hold with a two-standard-error margin."""
    grid = default_alpha_hat_grid(399, 1e-5, 1 - 1e-5)
    c = curve_monte_carlo(s, grid, req.trials, req.seed)
    ok = np.flatnonzero(c.alpha + 2 * c.alpha_se <= req.target_alpha)
    if ok.size == 0:
        return float(grid[0]), 1.0, 1.0, 0.0
    i = int(ok[-1])
    return float(grid[i]), float(c.alpha[i]), float(c.beta[i]), float(c.beta_se[i])


def evaluate(req: PlanRequest, size) -> Probe:
    s = _scenario(req, size)
    if isinstance(req.model, BinomCompound):
        ah, a, b, se = _calibrated_mc(s, req)
    else:
        ah, a, b, se = _calibrated_closed(s, req.target_alpha)
    # Monte Carlo probes must meet the target by two standard errors
    return Probe(float(size), ah, a, b, b + 2 * se <= req.target_beta, se)


def _check_feasible(req: PlanRequest) -> None:
    if isinstance(req.model, NegBinomial) and isinstance(req.design, GrowWindow):
        plateau = nb_plateau(req.model.shape, req.model.theta, req.effect, req.target_alpha)
        if req.target_beta <= plateau:
            raise InfeasiblePlanError(
                f"target beta {req.target_beta} is at or below the single-window limit "
                f"{plateau:.4f}; no window length reaches it. Use GrowIntervals "
                "(more independent observation periods) instead.",
                plateau=plateau,
            )


def time_to_wait(req: PlanRequest, start: float = 1.0, rtol: float = 1e-3,
                 max_doublings: int = 40) -> dict:
    """Smallest window (or interval count) meeting both targets.

    Doubling (or halving) brackets the answer; bisection then narrows it to
    ``rtol`` for windows and to adjacent integers for counts. Returns the plan
    report as a JSON-ready dict.
    """
    _check_feasible(req)
    integer = isinstance(req.design, GrowIntervals)
    trace: list[Probe] = []

    def probe(size):
        try:
            p = evaluate(req, size)
        except DomainError as exc:
            raise InfeasiblePlanError(f"search left the computable range at size {size}: {exc}") from None
        trace.append(p)
        return p

    size = 1 if integer else float(start)
    first = probe(size)
    if first.meets:
        hi_p = first
        lo = None
        if not integer:
            lo_size = size
            for _ in range(max_doublings):
                lo_size /= 2
                p = probe(lo_size)
                if not p.meets:
                    lo = lo_size
                    break
                hi_p = p
            if lo is None:
                raise InfeasiblePlanError("targets are met for arbitrarily small windows")
        else:
            lo = 0
    else:
        lo = size
        hi_p = None
        for _ in range(max_doublings):
            size = size * 2
            p = probe(size)
            if p.meets:
                hi_p = p
                break
            lo = size
        if hi_p is None:
            raise InfeasiblePlanError(f"targets not met up to size {size}")
    hi = hi_p.size
    while (hi - lo > 1) if integer else (hi / lo > 1 + rtol):
        mid = (lo + hi) // 2 if integer else 0.5 * (lo + hi)
        p = probe(mid)
        if p.meets:
            hi, hi_p = mid, p
        else:
            lo = mid
    key = "count" if integer else "t"
    rec = {key: int(hi) if integer else hi, "alpha_hat": hi_p.alpha_hat}
    if integer:
        rec["interval"] = req.design.interval
    return {
        "request": req.to_dict(),
        "recommendation": rec,
        "achieved": {"alpha": hi_p.alpha, "beta": hi_p.beta, "beta_se": hi_p.beta_se},
        "search_trace": [
            {key: int(p.size) if integer else p.size, "alpha_hat": p.alpha_hat,
             "alpha": p.alpha, "beta": p.beta, "meets": p.meets}
            for p in trace
        ],
    }
