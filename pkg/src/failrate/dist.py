"""Discrete and continuous distribution primitives.

Every PMF is evaluated in log space (``gammaln`` for factorials and binomial
coefficients) and exponentiated at the end, so counts in the thousands or
millions neither overflow nor underflow prematurely.

Survival functions follow the strict convention ``S(k) = P(X > k)``, and the
discrete inverse survival function is

    S^{-1}(q) = min{k : S(k) <= q},

which makes a non-randomized test that rejects when ``P(X >= x) < q``
conservative: its realized size never exceeds ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import DomainError

#: Tail mass that may be dropped when an infinite support is truncated.
EPS = 1e-12
#: Hard cap on the number of terms kept for any truncated support.
MAX_TERMS = 10_000_000
#: Relative slack when comparing a survival value against a level, so that
#: exact ties such as ``P(B(2r+1, 1/2) > r) = 1/2`` are not lost to rounding.
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class BinomialParams:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise DomainError(f"binomial n must be a nonnegative integer, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"binomial p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class NegBinomialParams:
    """Number of tails before the ``m``-th head, heads having probability ``p``.

    ``m`` may be any positive real; the gamma-function form of the PMF is
    used throughout.
    """

    m: float
    p: float

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"negative binomial m must be positive, got {self.m}")
        if not 0.0 < self.p <= 1.0:
            raise DomainError(f"negative binomial p must lie in (0, 1], got {self.p}")


@dataclass(frozen=True)
class PoissonParams:
    mean: float

    def __post_init__(self):
        if not self.mean >= 0:
            raise DomainError(f"Poisson mean must be nonnegative, got {self.mean}")


def _as_out(x):
    return float(x) if np.ndim(x) == 0 else x


# ---------------------------------------------------------------------------
# log-space PMFs (no argument validation; array friendly)
# ---------------------------------------------------------------------------

def binom_logpmf(n, p, k):
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    return (
        special.gammaln(n + 1)
        - special.gammaln(k + 1)
        - special.gammaln(n - k + 1)
        + special.xlogy(k, p)
        + special.xlog1py(n - k, -p)
    )


def poisson_logpmf(mean, k):
    k = np.asarray(k, dtype=float)
    return special.xlogy(k, mean) - mean - special.gammaln(k + 1)


def negbinom_logpmf(m, p, k):
    k = np.asarray(k, dtype=float)
    return (
        special.gammaln(k + m)
        - special.gammaln(m)
        - special.gammaln(k + 1)
        + m * np.log(p)
        + special.xlog1py(k, -p)
    )


# ---------------------------------------------------------------------------
# public scalar/array operations
# ---------------------------------------------------------------------------

def binom_pmf(params: BinomialParams, k):
    """P(X = k) for X ~ B(n, p); ``k > n`` is a domain error."""
    k_arr = np.asarray(k)
    if np.any(k_arr > params.n) or np.any(k_arr < 0):
        raise DomainError(f"k must lie in [0, {params.n}]")
    return _as_out(np.exp(binom_logpmf(params.n, params.p, k_arr)))


def binom_survival(params: BinomialParams, k: int) -> float:
    """P(X > k) for X ~ B(n, p), by direct summation of the upper tail."""
    n = params.n
    if k < 0:
        return 1.0
    if k >= n:
        return 0.0
    j = np.arange(k + 1, n + 1)
    return min(1.0, math.fsum(np.exp(binom_logpmf(n, params.p, j))))


def poisson_pmf(params: PoissonParams, k):
    return _as_out(np.exp(poisson_logpmf(params.mean, k)))


def negbinom_pmf(params: NegBinomialParams, k):
    """Gamma(k+m) / (Gamma(m) k!) p^m (1-p)^k."""
    return _as_out(np.exp(negbinom_logpmf(params.m, params.p, k)))


def normal_survival(x, sigma: float):
    """P(N(0, sigma^2) > x)."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return _as_out(0.5 * special.erfc(np.asarray(x, dtype=float) / (sigma * math.sqrt(2.0))))


def _check_terms(k_max, what):
    if k_max + 1 > MAX_TERMS:
        raise DomainError(
            f"{what} needs {k_max + 1} terms to reach the truncation tolerance; cap is {MAX_TERMS}"
        )
    return int(k_max)


def poisson_pmf_array(mean: float, eps: float = EPS) -> np.ndarray:
    """PMF on ``0..K`` with ``P(X > K) <= eps``."""
    if mean == 0:
        return np.ones(1)
    k_max = _check_terms(stats.poisson.isf(eps, mean), "Poisson support")
    return np.exp(poisson_logpmf(mean, np.arange(k_max + 1)))


def negbinom_pmf_array(m: float, p: float, eps: float = EPS) -> np.ndarray:
    if p == 1.0:
        return np.ones(1)
    k_max = _check_terms(stats.nbinom.isf(eps, m, p), "negative binomial support")
    return np.exp(negbinom_logpmf(m, p, np.arange(k_max + 1)))


# ---------------------------------------------------------------------------
# DiscreteDist
# ---------------------------------------------------------------------------

class DiscreteDist:
    """A distribution on the nonnegative integers, held as a truncated PMF.

    Parameters
    ----------
    pmf : array_like
        ``pmf[k] = P(X = k)`` for ``k = 0..len(pmf)-1``.
    tail : float, optional
        Mass beyond the stored support. Defaults to whatever is missing from
        ``sum(pmf)`` (never negative). It is added to the survival function so
        that ``cdf(k) + survival(k) == 1`` up to rounding.
    """

    def __init__(self, pmf, tail=None):
        pmf = np.asarray(pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size == 0:
            raise DomainError("pmf must be a nonempty 1-d array")
        if np.any(pmf < 0) or np.any(pmf > 1):
            raise DomainError("pmf values must lie in [0, 1]")
        self.pmf = pmf
        self.tail = max(0.0, 1.0 - math.fsum(pmf)) if tail is None else float(tail)
        # clipping keeps both monotone when rounding pushes a sum past 1
        self._cdf = np.minimum(np.cumsum(pmf), 1.0 - self.tail)
        rev = np.cumsum(pmf[::-1])[::-1]
        self._sf = np.minimum(np.append(rev[1:], 0.0) + self.tail, 1.0)

    # constructors -------------------------------------------------------
    @classmethod
    def binomial(cls, n: int, p: float) -> "DiscreteDist":
        BinomialParams(n, p)
        return cls(np.exp(binom_logpmf(n, p, np.arange(n + 1))), tail=0.0)

    @classmethod
    def poisson(cls, mean: float, eps: float = EPS) -> "DiscreteDist":
        PoissonParams(mean)
        return cls(poisson_pmf_array(mean, eps))

    @classmethod
    def negbinomial(cls, m: float, p: float, eps: float = EPS) -> "DiscreteDist":
        NegBinomialParams(m, p)
        return cls(negbinom_pmf_array(m, p, eps))

    @classmethod
    def uniform(cls, n: int) -> "DiscreteDist":
        return cls(np.full(n + 1, 1.0 / (n + 1)), tail=0.0)

    @classmethod
    def point_mass(cls, k: int, support_max: int | None = None) -> "DiscreteDist":
        size = (k if support_max is None else support_max) + 1
        pmf = np.zeros(size)
        pmf[k] = 1.0
        return cls(pmf, tail=0.0)

    @classmethod
    def mixture(cls, dists, weights) -> "DiscreteDist":
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0) or not math.isclose(weights.sum(), 1.0, rel_tol=1e-12):
            raise DomainError("mixture weights must be nonnegative and sum to 1")
        size = max(d.pmf.size for d in dists)
        pmf = np.zeros(size)
        tail = 0.0
        for d, w in zip(dists, weights):
            pmf[: d.pmf.size] += w * d.pmf
            tail += w * d.tail
        return cls(pmf, tail=tail)

    def scaled(self, factor: int) -> "DiscreteDist":
        """Distribution of ``factor * X``."""
        if factor < 1 or int(factor) != factor:
            raise DomainError("scale factor must be a positive integer")
        pmf = np.zeros((self.pmf.size - 1) * factor + 1)
        pmf[::factor] = self.pmf
        return DiscreteDist(pmf, tail=self.tail)

    # queries ------------------------------------------------------------
    @property
    def support_max(self) -> int:
        return self.pmf.size - 1

    def pmf_at(self, k):
        k = np.asarray(k)
        inside = (k >= 0) & (k <= self.support_max)
        out = np.where(inside, self.pmf[np.clip(k, 0, self.support_max)], 0.0)
        return _as_out(out)

    def cdf(self, k):
        """P(X <= k)."""
        k = np.asarray(k)
        out = np.where(k < 0, 0.0, self._cdf[np.clip(k, 0, self.support_max)])
        out = np.where(k > self.support_max, 1.0 - self.tail, out)
        return _as_out(out)

    def survival(self, k):
        """P(X > k)."""
        k = np.asarray(k)
        out = np.where(k < 0, 1.0, self._sf[np.clip(k, 0, self.support_max)])
        out = np.where(k > self.support_max, self.tail, out)
        return _as_out(out)

    def inverse_survival(self, q: float) -> int:
        return inverse_survival(self, q)

    def inverse_cdf(self, q: float) -> int:
        """min{k : P(X <= k) >= q}."""
        if not 0.0 < q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {q}")
        idx = int(np.searchsorted(self._cdf, q * (1.0 - TIE_RTOL), side="left"))
        return min(idx, self.support_max)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf.size), self.pmf))

    def variance(self) -> float:
        k = np.arange(self.pmf.size)
        mu = self.mean()
        return float(np.dot((k - mu) ** 2, self.pmf))

    def __repr__(self):
        return f"DiscreteDist(support_max={self.support_max}, tail={self.tail:.3g})"


def inverse_survival(dist: DiscreteDist, q: float) -> int:
    """Smallest ``k`` with ``P(X > k) <= q``; nonincreasing in ``q``."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    # survival is nonincreasing, so search the negated array
    return int(np.searchsorted(-dist._sf, -q * (1.0 + TIE_RTOL), side="left"))
