"""Point-process models, simulators and rate estimators.

Four count processes are supported:

``Poisson(rate)``
    Homogeneous Poisson process.
``DetCompound(rate, batch)``
    Poisson arrivals, each carrying exactly ``batch`` events.
``BinomCompound(rate, tosses, head_prob)``
    Poisson arrivals, each carrying a ``B(tosses, head_prob)`` batch.
``NegBinomial(shape, theta)``
    Mixed Poisson process whose rate is drawn once per observation window
    from a Gamma distribution with **shape** ``m`` and **rate** ``theta``,
    i.e. density ``theta e^{-theta x} (theta x)^{m-1} / Gamma(m)`` and mean
    ``m / theta``. ``theta`` is measured in time units. Note that numpy's
    ``Generator.gamma`` takes a *scale*, so draws use ``scale=1/theta``.

Aggregating ``windows`` independent windows of length ``t`` is the same as a
single window of length ``windows * t`` for the three Poisson-driven families
(independent increments). For the mixed process every window draws its own
rate, so the total is ``NB(windows * m, theta / (theta + t))``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import ClassVar, Sequence

import numpy as np

from . import kernels
from .dist import (
    EPS,
    DiscreteDist,
    negbinom_logpmf,
    negbinom_pmf_array,
    poisson_logpmf,
    poisson_pmf_array,
)
from .errors import DomainError

# largest (trials x windows) block drawn at once by the mixed-process sampler
_BLOCK = 1 << 21


def make_rng(seed) -> np.random.Generator:
    """Generator from an int seed, a SeedSequence, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise DomainError("an explicit seed or generator is required")
    return np.random.default_rng(seed)


def _check_exposure(t):
    if not t > 0:
        raise DomainError(f"exposure must be positive, got {t}")


def _check_windows(windows):
    if windows < 1 or int(windows) != windows:
        raise DomainError(f"windows must be a positive integer, got {windows}")


# ---------------------------------------------------------------------------
# process models
# ---------------------------------------------------------------------------

class _Model:
    family: ClassVar[str]

    def to_dict(self) -> dict:
        return {"family": self.family, **asdict(self)}

    def count_dist(self, t: float, windows: int = 1, eps: float = EPS) -> DiscreteDist:
        return DiscreteDist(self.pmf_array(t, windows, eps))


@dataclass(frozen=True)
class Poisson(_Model):
    rate: float
    family: ClassVar[str] = "poisson"

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError(f"rate must be nonnegative, got {self.rate}")

    def with_effect(self, effect: float) -> "Poisson":
        return Poisson(self.rate + effect)

    def mean_count(self, t, windows=1):
        return self.rate * t * windows

    def variance_count(self, t, windows=1):
        return self.rate * t * windows

    def sample(self, t, size, rng, windows=1):
        return make_rng(rng).poisson(self.rate * t * windows, size=size)

    def pmf_array(self, t, windows=1, eps=EPS):
        return poisson_pmf_array(self.rate * t * windows, eps)


@dataclass(frozen=True)
class DetCompound(_Model):
    rate: float
    batch: int
    family: ClassVar[str] = "det_compound"

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError(f"rate must be nonnegative, got {self.rate}")
        if self.batch < 1 or int(self.batch) != self.batch:
            raise DomainError(f"batch must be a positive integer, got {self.batch}")

    def with_effect(self, effect: float) -> "DetCompound":
        return DetCompound(self.rate + effect, self.batch)

    def mean_count(self, t, windows=1):
        return self.rate * t * windows * self.batch

    def variance_count(self, t, windows=1):
        return self.rate * t * windows * self.batch ** 2

    def sample(self, t, size, rng, windows=1):
        return self.batch * make_rng(rng).poisson(self.rate * t * windows, size=size)

    def pmf_array(self, t, windows=1, eps=EPS):
        arrivals = poisson_pmf_array(self.rate * t * windows, eps)
        pmf = np.zeros((arrivals.size - 1) * self.batch + 1)
        pmf[:: self.batch] = arrivals
        return pmf


@dataclass(frozen=True)
class BinomCompound(_Model):
    rate: float
    tosses: int
    head_prob: float
    family: ClassVar[str] = "binom_compound"

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError(f"rate must be nonnegative, got {self.rate}")
        if self.tosses < 1 or int(self.tosses) != self.tosses:
            raise DomainError(f"tosses must be a positive integer, got {self.tosses}")
        if not 0.0 <= self.head_prob <= 1.0:
            raise DomainError(f"head_prob must lie in [0, 1], got {self.head_prob}")

    def with_effect(self, effect: float) -> "BinomCompound":
        return BinomCompound(self.rate + effect, self.tosses, self.head_prob)

    def mean_count(self, t, windows=1):
        return self.rate * t * windows * self.tosses * self.head_prob

    def variance_count(self, t, windows=1):
        # lambda t E[C^2] with C ~ B(l, p)
        l, p = self.tosses, self.head_prob
        return self.rate * t * windows * (l * p * (1 - p) + (l * p) ** 2)

    def sample(self, t, size, rng, windows=1):
        rng = make_rng(rng)
        arrivals = rng.poisson(self.rate * t * windows, size=size)
        return rng.binomial(self.tosses * arrivals, self.head_prob)

    def pmf_array(self, t, windows=1, eps=EPS):
        # given m arrivals the count is B(l m, p); mix over m ~ Poisson(lambda t).
        # half the tail budget goes to the mixing index, half to the count
        weights = poisson_pmf_array(self.rate * t * windows, eps / 2)
        pmf = kernels.binom_compound_pmf(
            np.ascontiguousarray(weights), int(self.tosses), float(self.head_prob)
        )
        cum = np.cumsum(pmf)
        keep = int(np.searchsorted(cum, cum[-1] - eps / 2, side="left")) + 1
        return pmf[: min(keep, pmf.size)]


@dataclass(frozen=True)
class NegBinomial(_Model):
    shape: float
    theta: float
    family: ClassVar[str] = "negative_binomial"

    def __post_init__(self):
        if not self.shape > 0:
            raise DomainError(f"shape must be positive, got {self.shape}")
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")

    @property
    def mean_rate(self):
        return self.shape / self.theta

    def with_effect(self, effect: float) -> "NegBinomial":
        if effect >= self.theta:
            raise DomainError(f"theta decrease {effect} must be below theta={self.theta}")
        return NegBinomial(self.shape, self.theta - effect)

    def head_prob(self, t):
        return self.theta / (self.theta + t)

    def mean_count(self, t, windows=1):
        return windows * t * self.shape / self.theta

    def variance_count(self, t, windows=1):
        # per window: t E(L) + t^2 V(L)
        return windows * (t * self.shape / self.theta + t * t * self.shape / self.theta ** 2)

    def sample(self, t, size, rng, windows=1):
        rng = make_rng(rng)
        scalar = size is None
        size = 1 if scalar else int(size)
        out = np.empty(size, dtype=np.int64)
        step = max(1, _BLOCK // windows)
        for start in range(0, size, step):
            stop = min(size, start + step)
            rates = rng.gamma(self.shape, 1.0 / self.theta, size=(stop - start, windows))
            out[start:stop] = rng.poisson(rates * t).sum(axis=1)
        return int(out[0]) if scalar else out

    def pmf_array(self, t, windows=1, eps=EPS):
        return negbinom_pmf_array(self.shape * windows, self.head_prob(t), eps)


ProcessModel = Poisson | DetCompound | BinomCompound | NegBinomial

_FAMILIES = {cls.family: cls for cls in (Poisson, DetCompound, BinomCompound, NegBinomial)}


def model_from_dict(spec: dict) -> ProcessModel:
    """Build a model from ``{"family": ..., <field>: <value>, ...}``."""
    spec = dict(spec)
    family = spec.pop("family", None)
    try:
        cls = _FAMILIES[family]
    except KeyError:
        raise DomainError(
            f"unknown family {family!r}; expected one of {sorted(_FAMILIES)}"
        ) from None
    try:
        return cls(**spec)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {family}: {exc}") from None


# ---------------------------------------------------------------------------
# counts
# ---------------------------------------------------------------------------

def count_in_window(model: ProcessModel, t: float, rng_seed) -> int:
    """One draw of the number of events in a window of length ``t``."""
    _check_exposure(t)
    return int(model.sample(t, None, make_rng(rng_seed)))


def sample_counts(model: ProcessModel, t: float, size: int, rng, windows: int = 1) -> np.ndarray:
    """``size`` independent totals over ``windows`` windows of length ``t``."""
    _check_exposure(t)
    _check_windows(windows)
    return np.asarray(model.sample(t, size, make_rng(rng), windows), dtype=np.int64)


def count_pmf(model: ProcessModel, t: float, k, windows: int = 1, eps: float = EPS):
    """Exact P(N(t) = k) (binomial compounding via the truncated mixture sum)."""
    _check_exposure(t)
    _check_windows(windows)
    k = np.asarray(k)
    if isinstance(model, Poisson):
        out = np.exp(poisson_logpmf(model.rate * t * windows, k))
    elif isinstance(model, DetCompound):
        arrivals = k // model.batch
        out = np.where(
            k % model.batch == 0,
            np.exp(poisson_logpmf(model.rate * t * windows, arrivals)),
            0.0,
        )
    elif isinstance(model, NegBinomial):
        out = np.exp(negbinom_logpmf(model.shape * windows, model.head_prob(t), k))
    else:
        out = model.count_dist(t, windows, eps).pmf_at(k)
    return float(out) if np.ndim(out) == 0 else out


def histogram(model: ProcessModel, t: float, samples: int, rng_seed, windows: int = 1) -> list[dict]:
    """Simulated counts tabulated against the exact PMF (rows: k, count, pmf)."""
    draws = sample_counts(model, t, samples, rng_seed, windows)
    counts = np.bincount(draws)
    pmf = count_pmf(model, t, np.arange(counts.size), windows)
    return [
        {"k": int(k), "count": int(c), "pmf": float(p)}
        for k, (c, p) in enumerate(zip(counts, np.atleast_1d(pmf)))
    ]


def write_histogram_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["k", "count", "pmf"], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({"k": row["k"], "count": row["count"], "pmf": repr(row["pmf"])})


# ---------------------------------------------------------------------------
# rate estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountObservation:
    """``events`` observed over ``exposure`` units of (up-)time."""

    events: int
    exposure: float

    def __post_init__(self):
        if self.events < 0 or int(self.events) != self.events:
            raise DomainError(f"events must be a nonnegative integer, got {self.events}")
        # zero exposure is rejected rather than read as "no events": n/t would be 0/0
        _check_exposure(self.exposure)

    @property
    def rate(self) -> float:
        return self.events / self.exposure


def estimate_rate(observations: Sequence[CountObservation]) -> float:
    """Maximum-likelihood rate: total events over total exposure."""
    if not observations:
        raise DomainError("at least one observation is required")
    events = sum(o.events for o in observations)
    exposure = math.fsum(o.exposure for o in observations)
    return events / exposure


# ---------------------------------------------------------------------------
# hazard rates and inter-arrival times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"rate must be positive, got {self.rate}")

    def pdf(self, t):
        return self.rate * np.exp(-self.rate * np.asarray(t, dtype=float))

    def sf(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def mean(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class Lomax:
    """Inter-arrival law of the Gamma-mixed Poisson process.

    ``S(t) = (theta / (theta + t))^m`` and ``f(t) = m theta^m / (theta + t)^(m+1)``.
    """

    shape: float
    theta: float

    def __post_init__(self):
        if not self.shape > 0 or not self.theta > 0:
            raise DomainError("Lomax shape and theta must be positive")

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        m, th = self.shape, self.theta
        return m * th ** m / (th + t) ** (m + 1)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return (self.theta / (self.theta + t)) ** self.shape


def hazard_rate(family: Exponential | Lomax, t):
    """Instantaneous event rate f(t) / S(t)."""
    if np.any(np.asarray(t) < 0):
        raise DomainError("t must be nonnegative")
    out = family.pdf(t) / family.sf(t)
    return float(out) if np.ndim(out) == 0 else out


def interarrival_samples(family: Exponential | Lomax, size, rng, method: str = "inverse"):
    """Inter-arrival draws.

    ``method="inverse"`` inverts the CDF; ``method="mixture"`` (Lomax only)
    draws a Gamma rate and then an exponential wait, i.e. samples the mixed
    process directly.
    """
    rng = make_rng(rng)
    if isinstance(family, Exponential):
        return rng.exponential(1.0 / family.rate, size=size)
    if method == "inverse":
        u = rng.random(size=size)
        # S(t) = u  =>  t = theta (u^{-1/m} - 1); 1-u ~ u
        return family.theta * np.expm1(-np.log1p(-u) / family.shape)
    if method == "mixture":
        rates = rng.gamma(family.shape, 1.0 / family.theta, size=size)
        return rng.exponential(1.0, size=size) / rates
    raise DomainError(f"unknown sampling method {method!r}")


def interarrival_sample(family: Exponential | Lomax, rng_seed, method: str = "inverse") -> float:
    return float(interarrival_samples(family, None, rng_seed, method))


# ---------------------------------------------------------------------------
# censored exponential data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CensoredSample:
    """Up-times ending in a failure (``uncensored``) or cut off without one (``censored``)."""

    uncensored: tuple[float, ...]
    censored: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "uncensored", tuple(float(x) for x in self.uncensored))
        object.__setattr__(self, "censored", tuple(float(x) for x in self.censored))
        if any(x < 0 for x in self.uncensored + self.censored):
            raise DomainError("durations must be nonnegative")

    def log_likelihood(self, rate: float) -> float:
        """Exponential log-likelihood with right censoring."""
        total = math.fsum(self.uncensored) + math.fsum(self.censored)
        return len(self.uncensored) * math.log(rate) - rate * total


def mttf_censored(sample: CensoredSample) -> float:
    """Mean time to failure: all up-time divided by the number of failures.

    The failure-rate estimate is its reciprocal.
    """
    if not sample.uncensored:
        raise DomainError("no uncensored observations: the rate MLE is undefined")
    return (math.fsum(sample.uncensored) + math.fsum(sample.censored)) / len(sample.uncensored)


# ---------------------------------------------------------------------------
# estimator behaviour under repeated sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingleWindow:
    t: float


@dataclass(frozen=True)
class ManyWindows:
    count: int
    t: float


@dataclass(frozen=True)
class EstimatorStudy:
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    trials: int


def estimator_variance_study(
    model: ProcessModel, design: SingleWindow | ManyWindows, trials: int, rng_seed
) -> EstimatorStudy:
    """Monte-Carlo mean and variance of the rate estimate ``N / total time``.

    ``variance_se`` uses the large-sample standard error of a sample variance,
    ``sqrt((mu4 - s^4) / trials)``.
    """
    if trials < 2:
        raise DomainError("trials must be at least 2")
    if isinstance(design, SingleWindow):
        windows, t = 1, design.t
    else:
        windows, t = design.count, design.t
    counts = sample_counts(model, t, trials, rng_seed, windows)
    est = counts / (windows * t)
    mean = float(est.mean())
    var = float(est.var(ddof=1))
    mu4 = float(np.mean((est - mean) ** 4))
    return EstimatorStudy(
        mean=mean,
        variance=var,
        mean_se=math.sqrt(var / trials),
        variance_se=math.sqrt(max(mu4 - var * var, 0.0) / trials),
        trials=trials,
    )
