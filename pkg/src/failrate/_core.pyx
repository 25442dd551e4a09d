# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; ``_fallback.py`` holds numpy versions with the same signatures."""

import numpy as np

from libc.math cimport exp, log, log1p, lgamma, floor
from scipy.special.cython_special cimport bdtrc

# exact re-evaluation period for the threshold recurrence
cdef Py_ssize_t REANCHOR = 512


cdef inline double _binom_logpmf(double n, double k, double lp, double lq) noexcept nogil:
    return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0) + k * lp + (n - k) * lq


def binom_thresholds(Py_ssize_t n_max, double p, double q, double rtol=1e-9):
    """k[n] = min{k : P(B(n, p) > k) <= q} for n = 0..n_max.

    Walks n upward carrying S_n(k) and pmf_n(k); the threshold grows by at
    most one per step, so the whole sequence costs O(n_max).
    """
    out = np.empty(n_max + 1, dtype=np.int64)
    cdef long long[::1] ks = out
    cdef double qq = q * (1.0 + rtol)
    cdef double lp = log(p), lq = log1p(-p)
    cdef double ratio = p / (1.0 - p)
    cdef double sf = 0.0, pm = 1.0
    cdef long long k = 0
    cdef Py_ssize_t n
    with nogil:
        ks[0] = 0
        for n in range(1, n_max + 1):
            # B(n) = B(n-1) + Bernoulli(p)
            sf = sf + p * pm
            pm = pm * n / (n - k) * (1.0 - p)
            if n % REANCHOR == 0:
                sf = bdtrc(<double>k, <long>n, p)
                pm = exp(_binom_logpmf(n, k, lp, lq))
            if sf > qq:
                pm = pm * (n - k) / (k + 1) * ratio
                k += 1
                sf = sf - pm
                if sf < 0.0:
                    sf = 0.0
            ks[n] = k
    return out


def binom_compound_pmf(double[::1] weights, long l, double p, double rel_cut=1e-20):
    """sum_m weights[m] * P(B(l*m, p) = j) for j = 0..l*(len(weights)-1).

    Each binomial is accumulated outward from its mode and stopped once terms
    fall below ``rel_cut`` times the modal term.
    """
    cdef Py_ssize_t n_w = weights.shape[0]
    cdef Py_ssize_t j_max = l * (n_w - 1)
    out = np.zeros(j_max + 1, dtype=np.float64)
    cdef double[::1] acc = out
    cdef double lp, lq, ratio, w, t_mode, term
    cdef long long nn, mode, j
    cdef Py_ssize_t m
    if p <= 0.0 or p >= 1.0:
        for m in range(n_w):
            acc[0 if p <= 0.0 else l * m] += weights[m]
        return out
    lp = log(p)
    lq = log1p(-p)
    ratio = p / (1.0 - p)
    with nogil:
        for m in range(n_w):
            w = weights[m]
            if w == 0.0:
                continue
            nn = l * m
            mode = <long long>floor((nn + 1) * p)
            if mode > nn:
                mode = nn
            t_mode = exp(_binom_logpmf(nn, mode, lp, lq))
            acc[mode] += w * t_mode
            term = t_mode
            j = mode
            while j < nn:
                term = term * (nn - j) / (j + 1) * ratio
                j += 1
                acc[j] += w * term
                if term < rel_cut * t_mode:
                    break
            term = t_mode
            j = mode
            while j > 0:
                term = term * j / (nn - j + 1) / ratio
                j -= 1
                acc[j] += w * term
                if term < rel_cut * t_mode:
                    break
    return out
