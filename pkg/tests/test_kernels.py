import numpy as np
import pytest
from scipy import special, stats

from failrate import _fallback, kernels

try:
    from failrate import _core
except ImportError:  # extension not built
    _core = None

backends = [pytest.param(_fallback, id="python")]
backends.append(
    pytest.param(_core, id="cython", marks=pytest.mark.skipif(_core is None, reason="extension not built"))
)


def brute_thresholds(n_max, p, q, rtol=1e-9):
    out = []
    for n in range(n_max + 1):
        k = 0
        while special.bdtrc(k, n, p) > q * (1 + rtol):
            k += 1
        out.append(k)
    return np.array(out)


@pytest.mark.parametrize("impl", backends)
@pytest.mark.parametrize("p", [0.5, 0.3, 0.9])
@pytest.mark.parametrize("q", [0.001, 0.05, 0.5, 0.999])
def test_thresholds_match_brute_force(impl, p, q):
    got = impl.binom_thresholds(300, p, q)
    assert np.array_equal(got, brute_thresholds(300, p, q))


@pytest.mark.parametrize("impl", backends)
def test_thresholds_long_run_invariant(impl):
    # k[n] is the least k with S(k) <= q: check both sides on a long sequence
    n_max, p, q = 50_000, 0.37, 0.02
    k = impl.binom_thresholds(n_max, p, q)
    n = np.arange(n_max + 1)
    assert np.all(special.bdtrc(k, n, p) <= q * (1 + 1e-9))
    assert np.all(special.bdtrc(k - 1, n, p)[k > 0] > q * (1 + 1e-9))
    assert np.all(np.diff(k) >= 0) and np.all(np.diff(k) <= 1)


@pytest.mark.skipif(_core is None, reason="extension not built")
def test_backends_agree_on_thresholds():
    for p, q in [(0.5, 0.5), (0.25, 0.01), (0.8, 0.3)]:
        assert np.array_equal(_core.binom_thresholds(20_000, p, q), _fallback.binom_thresholds(20_000, p, q))


@pytest.mark.parametrize("impl", backends)
@pytest.mark.parametrize("mean,l,p", [(5.0, 3, 0.7), (50.0, 10, 0.7), (200.0, 2, 0.3), (3.0, 4, 0.0), (3.0, 4, 1.0)])
def test_compound_pmf_matches_direct_sum(impl, mean, l, p):
    w = stats.poisson.pmf(np.arange(int(stats.poisson.isf(1e-14, mean)) + 1), mean)
    got = impl.binom_compound_pmf(np.ascontiguousarray(w), l, p)
    direct = np.zeros(got.size)
    for m, wm in enumerate(w):
        direct[: l * m + 1] += wm * stats.binom.pmf(np.arange(l * m + 1), l * m, p)
    assert np.max(np.abs(got - direct)) < 1e-13
    assert abs(got.sum() - w.sum()) < 1e-12


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
