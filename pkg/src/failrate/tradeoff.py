"""False positive / false negative trade-off curves.

For a threshold ``alpha_hat`` the rate test accepts iff ``n1 <= k_n`` where
``k_n = S_{X0}^{-1}(alpha_hat)`` and ``X0 ~ B(n, p)``. Two probabilities are of
interest:

``alpha(alpha_hat)``
    realized false positive rate, both arms drawn from the control model;
``beta(alpha_hat)``
    false negative rate, the treatment arm drawn from the treatment model.

Closed form
-----------
``k_n`` is nondecreasing in ``n``, so ``j <= k_n`` iff ``n >= n*(j)`` where
``n*(j)`` is the first total whose threshold reaches ``j``. With ``n = N0 + j``
the double sum over ``(n, j)`` collapses to one sum over the treatment count::

    beta  = sum_j P(N1 = j)  P(N0 >= n*(j) - j)
    alpha = sum_j P(N1' = j) P(N0 <  n*(j) - j)

Both are O(support) once the thresholds are known, and the rejection
probability is summed directly rather than formed as ``1 - acceptance``.

The test statistic is the treatment count throughout.

Tie convention: the closed form accepts iff ``S(n1 - 1) > alpha_hat``
(with relative slack ``TIE_RTOL``), the Monte Carlo path rejects iff
``phi < alpha_hat``. They differ only when ``alpha_hat`` equals an attainable
tail probability exactly, e.g. ``alpha_hat = 1/2`` with ``p = 1/2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from . import kernels
from .dist import EPS, TIE_RTOL, DiscreteDist
from .errors import DomainError
from .montecarlo import run_chunks
from .process import BinomCompound, DetCompound, NegBinomial, Poisson, model_from_dict
from .rate_test import rate_test_p_values

CSV_COLUMNS = ["alpha_hat", "alpha", "beta", "alpha_se", "beta_se", "method"]


def default_alpha_hat_grid(size: int = 199, lo: float = 1e-3, hi: float = 0.999) -> np.ndarray:
    """Logit-spaced thresholds; with an odd size the middle point is exactly 1/2."""
    if size < 1:
        raise DomainError("grid size must be positive")
    if size == 1:
        return np.array([0.5])
    x = np.linspace(special.logit(lo), special.logit(hi), size)
    grid = special.expit(x)
    grid[0], grid[-1] = lo, hi
    if size % 2 and math.isclose(lo + hi, 1.0):
        grid[size // 2] = 0.5
    return grid


def _check_grid(grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid >= 1):
        raise DomainError("alpha_hat grid values must lie in (0, 1)")
    return grid


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Control and treatment processes observed over ``windows`` windows each.

    ``t0``/``t1`` are window lengths; the test sees total exposures
    ``windows0 * t0`` and ``windows1 * t1``.
    """

    control: Poisson | DetCompound | BinomCompound | NegBinomial
    treatment: Poisson | DetCompound | BinomCompound | NegBinomial
    t0: float
    t1: float
    windows0: int = 1
    windows1: int = 1
    effect: float | None = None
    name: str = ""

    def __post_init__(self):
        if type(self.control) is not type(self.treatment):
            raise DomainError("control and treatment must belong to the same family")
        if not (self.t0 > 0 and self.t1 > 0):
            raise DomainError("exposures must be positive")
        for w in (self.windows0, self.windows1):
            if w < 1 or int(w) != w:
                raise DomainError("window counts must be positive integers")

    @classmethod
    def from_effect(cls, control, effect: float, t0: float, t1: float | None = None,
                    windows0: int = 1, windows1: int = 1, name: str = "") -> "Scenario":
        """Treatment is ``control.with_effect(effect)`` (rate up, or theta down for NB)."""
        return cls(control, control.with_effect(effect), t0, t0 if t1 is None else t1,
                   windows0, windows1, effect, name)

    @property
    def exposure0(self) -> float:
        return self.windows0 * self.t0

    @property
    def exposure1(self) -> float:
        return self.windows1 * self.t1

    @property
    def head_prob(self) -> float:
        return self.exposure1 / (self.exposure0 + self.exposure1)

    def null_scenario(self) -> "Scenario":
        return Scenario(self.control, self.control, self.t0, self.t1,
                        self.windows0, self.windows1, 0.0, self.name)

    def to_dict(self) -> dict:
        out = {
            "control": self.control.to_dict(),
            "treatment": self.treatment.to_dict(),
            "t0": self.t0,
            "t1": self.t1,
            "windows0": self.windows0,
            "windows1": self.windows1,
        }
        if self.effect is not None:
            out["effect"] = self.effect
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, spec: dict) -> "Scenario":
        spec = dict(spec)
        try:
            control = model_from_dict(spec.pop("control"))
            t0 = float(spec.pop("t0"))
        except KeyError as exc:
            raise DomainError(f"scenario is missing {exc}") from None
        t1 = float(spec.pop("t1", t0))
        w0 = int(spec.pop("windows0", 1))
        w1 = int(spec.pop("windows1", w0))
        name = str(spec.pop("name", ""))
        effect = spec.pop("effect", None)
        treatment = spec.pop("treatment", None)
        if spec:
            raise DomainError(f"unknown scenario keys: {sorted(spec)}")
        if treatment is not None:
            return cls(control, model_from_dict(treatment), t0, t1, w0, w1, effect, name)
        if effect is None:
            raise DomainError("scenario needs either 'treatment' or 'effect'")
        return cls.from_effect(control, float(effect), t0, t1, w0, w1, name)


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

@dataclass
class TradeoffCurve:
    alpha_hat: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_se: np.ndarray
    beta_se: np.ndarray
    method: str = "closed_form"
    trials: int | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return self.alpha_hat.size

    def points(self) -> list[dict]:
        return [
            {"alpha_hat": float(a), "alpha": float(x), "beta": float(y)}
            for a, x, y in zip(self.alpha_hat, self.alpha, self.beta)
        ]

    def beta_at_alpha(self, alpha: float) -> tuple[float, float]:
        """Interpolated beta at realized ``alpha`` and its standard error.

        Attained step points are joined linearly. Where several thresholds
        attain the same alpha the lowest beta (largest threshold) is used. The
        error combines the beta error with the alpha error pushed through the
        local slope.
        """
        order = np.argsort(self.alpha_hat, kind="stable")
        a, b = self.alpha[order], self.beta[order]
        ase, bse = self.alpha_se[order], self.beta_se[order]
        # last index of every run of equal alpha
        keep = np.append(a[1:] != a[:-1], True)
        a, b, ase, bse = a[keep], b[keep], ase[keep], bse[keep]
        if not a[0] <= alpha <= a[-1]:
            raise DomainError(f"alpha={alpha} is outside the attained range [{a[0]}, {a[-1]}]")
        hi = int(np.searchsorted(a, alpha, side="left"))
        if a[hi] == alpha or hi == 0:
            return float(b[hi]), float(bse[hi])
        lo = hi - 1
        w = (alpha - a[lo]) / (a[hi] - a[lo])
        beta = (1 - w) * b[lo] + w * b[hi]
        slope = (b[hi] - b[lo]) / (a[hi] - a[lo])
        s_b = (1 - w) * bse[lo] + w * bse[hi]
        s_a = (1 - w) * ase[lo] + w * ase[hi]
        return float(beta), float(math.hypot(s_b, slope * s_a))

    def write_csv(self, path, extra_columns: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            write_curve_csv(self, fh, extra_columns)


def write_curve_csv(curve: TradeoffCurve, fh, extra_columns: Sequence[str] = ()) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + list(extra_columns))
    for i in range(len(curve)):
        row = [
            repr(float(curve.alpha_hat[i])),
            repr(float(curve.alpha[i])),
            repr(float(curve.beta[i])),
            repr(float(curve.alpha_se[i])),
            repr(float(curve.beta_se[i])),
            curve.method,
        ]
        row += [repr(float(curve.extra[c])) for c in extra_columns]
        writer.writerow(row)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def _thresholds(n_max: int, p: float, alpha_hat: float, null: str, scenario: Scenario) -> np.ndarray:
    if null == "design":
        return kernels.binom_thresholds(n_max, p, alpha_hat, TIE_RTOL)
    if null != "true":
        raise DomainError(f"null must be 'design' or 'true', got {null!r}")
    model = scenario.control
    if isinstance(model, Poisson):
        return kernels.binom_thresholds(n_max, p, alpha_hat, TIE_RTOL)
    if isinstance(model, DetCompound):
        if model.batch != scenario.treatment.batch:
            raise DomainError("true-null thresholds need equal batch sizes")
        # conditional null of a batch-l process is l * B(n // l, p)
        l = model.batch
        kx = kernels.binom_thresholds(n_max // l, p, alpha_hat, TIE_RTOL)
        return l * kx[np.arange(n_max + 1) // l]
    raise DomainError("true-null thresholds are only available for Poisson and DetCompound")


def _first_reach(k: np.ndarray, j_max: int) -> np.ndarray:
    """n*(j) = min{n : k[n] >= j} for j = 0..j_max (k.size when never reached)."""
    return np.searchsorted(k, np.arange(j_max + 1), side="left")


def _accept_reject(d0: DiscreteDist, d1: DiscreteDist, k: np.ndarray) -> tuple[float, float]:
    nstar = _first_reach(k, d1.support_max)
    need = nstar - np.arange(d1.support_max + 1)
    reached = nstar < k.size
    # P(N0 >= need) and P(N0 < need)
    upper = np.where(reached, d0.survival(need - 1), 0.0)
    lower = np.where(reached, d0.cdf(need - 1), d0.cdf(d0.support_max))
    return math.fsum(d1.pmf * upper), math.fsum(d1.pmf * lower)


def _count_dists(scenario: Scenario, eps: float):
    s = scenario
    d0 = s.control.count_dist(s.t0, s.windows0, eps)
    d1 = s.treatment.count_dist(s.t1, s.windows1, eps)
    d1_null = s.control.count_dist(s.t1, s.windows1, eps)
    return d0, d1, d1_null


def curve_closed_form(scenario: Scenario, alpha_hat_grid=None, null: str = "design",
                      eps: float = EPS) -> TradeoffCurve:
    """Exact (truncated) alpha and beta for every threshold in the grid."""
    grid = _check_grid(default_alpha_hat_grid() if alpha_hat_grid is None else alpha_hat_grid)
    d0, d1, d1_null = _count_dists(scenario, eps)
    n_max = d0.support_max + max(d1.support_max, d1_null.support_max)
    p = scenario.head_prob
    alpha = np.empty(grid.size)
    beta = np.empty(grid.size)
    for i, ah in enumerate(grid):
        k = _thresholds(n_max, p, float(ah), null, scenario)
        beta[i] = min(1.0, _accept_reject(d0, d1, k)[0])
        alpha[i] = min(1.0, _accept_reject(d0, d1_null, k)[1])
    zeros = np.zeros(grid.size)
    return TradeoffCurve(grid, alpha, beta, zeros, zeros.copy(), "closed_form")


def beta_closed_form(scenario: Scenario, alpha_hat: float, null: str = "design",
                     eps: float = EPS) -> float:
    """False negative rate at threshold ``alpha_hat``."""
    return float(curve_closed_form(scenario, [alpha_hat], null, eps).beta[0])


def alpha_closed_form(scenario: Scenario, alpha_hat: float, null: str = "design",
                      eps: float = EPS) -> float:
    """Realized false positive rate at threshold ``alpha_hat``."""
    return float(curve_closed_form(scenario, [alpha_hat], null, eps).alpha[0])


def alpha_closed_form_detcompound(rate: float, l: int, t0: float, t1: float,
                                  alpha_hat: float, eps: float = EPS) -> float:
    """Realized false positive rate of the plain rate test on batch-``l`` data.

    With ``M ~ Poisson(rate (t0 + t1))`` arrivals in total, the treatment arm
    holds ``B(M, p)`` of them and the test sees ``l`` times the counts::

        alpha = 1 - sum_m P(M = m) P(B(m, p) <= floor(S_{X0}^{-1}(alpha_hat) / l)),
        X0 ~ B(l m, p).
    """
    if l < 1 or int(l) != l:
        raise DomainError("l must be a positive integer")
    if not 0.0 < alpha_hat < 1.0:
        raise DomainError("alpha_hat must lie in (0, 1)")
    p = t1 / (t0 + t1)
    weights = DiscreteDist.poisson(rate * (t0 + t1), eps).pmf
    m = np.arange(weights.size)
    k = kernels.binom_thresholds(l * (weights.size - 1), p, alpha_hat, TIE_RTOL)
    # rejection mass directly: P(B(m, p) > cut)
    reject = special.bdtrc(k[l * m] // l, m, p)
    return min(1.0, math.fsum(weights * reject))


def beta_negbinomial(m: float, theta: float, dtheta: float, t: float, a: int, b: int,
                     alpha_hat: float, eps: float = EPS) -> float:
    """False negative rate for NB(m, theta) control vs NB(m, theta - dtheta) treatment.

    Each arm observes ``a`` (resp. ``b``) windows of length ``t``, so the totals
    are ``NB(a m, theta / (theta + t))`` and ``NB(b m, (theta - dtheta) / (theta - dtheta + t))``.
    """
    if dtheta >= theta:
        raise DomainError(f"dtheta={dtheta} must be below theta={theta}")
    scenario = Scenario.from_effect(NegBinomial(m, theta), dtheta, t, t, a, b)
    return beta_closed_form(scenario, alpha_hat, eps=eps)


def nb_plateau(m: float, theta: float, dtheta: float, alpha: float, a: int = 1, b: int = 1) -> float:
    """Limit of beta as the single window grows, at realized false positive rate ``alpha``.

    For large windows the counts are proportional to the Gamma rates, so the
    test compares ``L1 / (L0 + L1)`` with a threshold; calibrated to
    ``alpha`` that threshold is the upper-``alpha`` point of
    ``Beta(b m, a m)``.
    """
    theta1 = theta - dtheta
    if theta1 <= 0:
        raise DomainError("dtheta must be below theta")
    # X = theta L1 / (theta L1 + theta L0) ~ Beta(bm, am) under the null
    r = special.betaincinv(b * m, a * m, 1.0 - alpha)
    # under the alternative theta1 L1 ~ Gamma(bm, 1); reject iff L1/(L0+L1) > cut
    u = r * theta1 / (theta * (1 - r) + r * theta1)
    return float(special.betainc(b * m, a * m, u))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def simulate_counts(scenario: Scenario, trials: int, seed: int, null: bool,
                    workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(n0, n1) per trial; the null and alternative use separate seed streams."""
    s = scenario
    treatment = s.control if null else s.treatment

    def draw(rng, size):
        n0 = s.control.sample(s.t0, size, rng, s.windows0)
        n1 = treatment.sample(s.t1, size, rng, s.windows1)
        return np.stack([n0, n1], axis=1)

    out = run_chunks(draw, trials, seed, stream=0 if null else 1, workers=workers)
    return out[:, 0], out[:, 1]


def curve_from_p_values(phi_null: np.ndarray, phi_alt: np.ndarray, alpha_hat_grid,
                        method: str = "monte_carlo", trials: int | None = None,
                        seed: int | None = None) -> TradeoffCurve:
    """alpha = share of null p-values below each threshold; beta = share of alternative at or above."""
    grid = _check_grid(alpha_hat_grid)
    s0 = np.sort(phi_null)
    sa = np.sort(phi_alt)
    alpha = np.searchsorted(s0, grid, side="left") / s0.size
    beta = 1.0 - np.searchsorted(sa, grid, side="left") / sa.size
    return TradeoffCurve(
        grid, alpha, beta,
        np.sqrt(alpha * (1 - alpha) / s0.size),
        np.sqrt(beta * (1 - beta) / sa.size),
        method, trials, seed,
    )


def attainable_grid(*p_value_arrays, limit: int = 4000) -> np.ndarray:
    """Thresholds just above each distinct simulated p-value (thinned to ``limit``).

    Sweeping these hits every attainable operating point of a discrete test.
    """
    vals = np.unique(np.concatenate([np.asarray(a, dtype=float) for a in p_value_arrays]))
    vals = vals[(vals > 0) & (vals < 1)]
    grid = np.unique(np.minimum(np.nextafter(vals * (1 + TIE_RTOL), 1.0), 1 - 1e-15))
    if grid.size > limit:
        grid = grid[np.linspace(0, grid.size - 1, limit).round().astype(int)]
    return grid


PValueFn = Callable[[np.ndarray, np.ndarray, float, float], np.ndarray]


def curve_monte_carlo(scenario: Scenario, alpha_hat_grid=None, trials: int = 100_000,
                      seed: int = 0, workers: int = 1,
                      p_value_fn: PValueFn | None = None) -> TradeoffCurve:
    """Simulated trade-off curve.

    ``p_value_fn(n0, n1, T0, T1)`` defaults to the rate test; pass another
    function (e.g. a contorted p-value) to evaluate a different decision rule
    on the same simulated data.
    """
    if trials < 1000:
        raise DomainError("trials must be at least 1000")
    grid = _check_grid(default_alpha_hat_grid() if alpha_hat_grid is None else alpha_hat_grid)
    fn = rate_test_p_values if p_value_fn is None else p_value_fn
    e0, e1 = scenario.exposure0, scenario.exposure1
    phi0 = fn(*simulate_counts(scenario, trials, seed, True, workers), e0, e1)
    phia = fn(*simulate_counts(scenario, trials, seed, False, workers), e0, e1)
    return curve_from_p_values(phi0, phia, grid, "monte_carlo", trials, seed)


# ---------------------------------------------------------------------------
# QQ
# ---------------------------------------------------------------------------

def qq_data(dist_x: DiscreteDist, dist_y: DiscreteDist, q_grid) -> list[dict]:
    """Paired quantiles ``min{k : F(k) >= q}`` of two distributions."""
    q_grid = np.atleast_1d(np.asarray(q_grid, dtype=float))
    if q_grid.size == 0 or np.any(q_grid <= 0) or np.any(q_grid >= 1):
        raise DomainError("q grid values must lie in (0, 1)")
    return [
        {"q": float(q), "x_quantile": dist_x.inverse_cdf(q), "y_quantile": dist_y.inverse_cdf(q)}
        for q in q_grid
    ]


def default_q_grid(size: int) -> np.ndarray:
    if size < 1:
        raise DomainError("grid size must be positive")
    return (np.arange(size) + 0.5) / size


def qq_rms_residual(points: Sequence[dict], scale_x: float = 1.0, scale_y: float = 1.0) -> float:
    """RMS residual of the QQ points about their least-squares line.

    Quantiles are divided by ``scale_x``/``scale_y`` first (e.g. the mean batch
    size) so values are comparable across batch sizes.
    """
    x = np.array([p["x_quantile"] for p in points], dtype=float) / scale_x
    y = np.array([p["y_quantile"] for p in points], dtype=float) / scale_y
    slope, intercept = np.polyfit(x, y, 1)
    return float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
