"""Pure numpy implementations of the compiled kernels in ``_core.pyx``."""

import numpy as np
from scipy import special

from .dist import TIE_RTOL, binom_logpmf


def binom_thresholds(n_max, p, q, rtol=TIE_RTOL):
    """k[n] = min{k : P(B(n, p) > k) <= q} for n = 0..n_max.

    Vectorized bisection over all n at once, bracketed around the normal
    approximation and widened to the full range wherever the bracket fails.
    """
    qq = q * (1.0 + rtol)
    n = np.arange(n_max + 1, dtype=np.int64)
    sd = np.sqrt(n * p * (1.0 - p))
    guess = np.floor(n * p + special.ndtri(1.0 - q) * sd)
    width = np.ceil(8.0 * sd) + 8.0
    lo = np.maximum(-1, guess - width).astype(np.int64)
    hi = np.minimum(n, guess + width).astype(np.int64)
    # invariant: S(lo) > qq (or lo == -1), S(hi) <= qq
    lo = np.where(special.bdtrc(lo, n, p) > qq, lo, -1)
    hi = np.where(special.bdtrc(hi, n, p) <= qq, hi, n)
    while True:
        open_ = hi - lo > 1
        if not open_.any():
            break
        mid = (lo + hi) // 2
        ok = special.bdtrc(mid, n, p) <= qq
        hi = np.where(open_ & ok, mid, hi)
        lo = np.where(open_ & ~ok, mid, lo)
    return hi


def binom_compound_pmf(weights, l, p, rel_cut=1e-20):
    weights = np.asarray(weights, dtype=float)
    j_max = l * (weights.size - 1)
    out = np.zeros(j_max + 1)
    for m, w in enumerate(weights):
        if w == 0.0:
            continue
        nn = l * m
        j = np.arange(nn + 1)
        out[: nn + 1] += w * np.exp(binom_logpmf(nn, p, j))
    return out
