import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from failrate.errors import DomainError
from failrate.process import (
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
    histogram,
    interarrival_sample,
    interarrival_samples,
    model_from_dict,
    mttf_censored,
    sample_counts,
    write_histogram_csv,
)

MODELS = [
    Poisson(3.0),
    DetCompound(2.0, 3),
    BinomCompound(2.0, 4, 0.7),
    NegBinomial(2.0, 1.0),
]


def test_count_in_window_examples():
    assert count_in_window(Poisson(0.0), 5.0, 1) == 0
    draws = [count_in_window(DetCompound(2.0, 3), 10.0, s) for s in range(50)]
    assert all(d % 3 == 0 for d in draws)
    assert count_in_window(NegBinomial(2, 1), 1.0, 9) == count_in_window(NegBinomial(2, 1), 1.0, 9)
    with pytest.raises(DomainError):
        count_in_window(Poisson(1.0), 0.0, 1)


def test_nb_sample_mean():
    x = sample_counts(NegBinomial(2.0, 1.0), 1.0, 100_000, 4)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 2.0) <= 3 * se


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_sample_mean_within_4se(model):
    t = 2.5
    x = sample_counts(model, t, 100_000, 11)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - model.mean_count(t)) <= 4 * se


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_sample_variance_matches_formula(model):
    x = sample_counts(model, 2.0, 200_000, 5)
    assert x.var(ddof=1) == pytest.approx(model.variance_count(2.0), rel=0.03)


def test_overdispersion_ordering():
    for model in MODELS[1:]:
        x = sample_counts(model, 3.0, 100_000, 2)
        assert x.var(ddof=1) > x.mean()
    x = sample_counts(Poisson(3.0), 3.0, 100_000, 2)
    ratio = x.var(ddof=1) / x.mean()
    assert abs(ratio - 1) < 0.03


def test_count_pmf_examples():
    assert count_pmf(DetCompound(1.0, 2), 1.0, 3) == 0.0
    assert count_pmf(DetCompound(1.0, 2), 1.0, 4) == pytest.approx(math.exp(-1) / 2)
    pmf = BinomCompound(3.0, 5, 0.7).pmf_array(2.0)
    assert 1 - 1e-12 <= pmf.sum() <= 1 + 1e-12


def test_binom_compound_pmf_small_case_by_hand():
    # lambda t = 1, l = 1, p = 1/2 is Poisson(1/2)
    assert count_pmf(BinomCompound(1.0, 1, 0.5), 1.0, 2) == pytest.approx(stats.poisson.pmf(2, 0.5), rel=1e-12)
    # l = 2: P(M = 1) = sum_m e^-1 / m! * C(2m, 1) (1/2)^(2m)
    exact = sum(math.exp(-1) / math.factorial(m) * math.comb(2 * m, 1) * 0.25**m for m in range(1, 40))
    assert count_pmf(BinomCompound(1.0, 2, 0.5), 1.0, 1) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_pmf_vs_histogram_total_variation(model):
    t = 1.5
    x = sample_counts(model, t, 1_000_000, 21)
    emp = np.bincount(x) / x.size
    pmf = model.pmf_array(t)
    size = max(emp.size, pmf.size)
    tv = 0.5 * np.abs(np.pad(emp, (0, size - emp.size)) - np.pad(pmf, (0, size - pmf.size))).sum()
    assert tv < 0.01


def test_windows_aggregate():
    nb = NegBinomial(1.5, 2.0)
    # sum of independent windows: shape adds up, head probability stays
    assert count_pmf(nb, 1.0, 3, windows=4) == pytest.approx(stats.nbinom.pmf(3, 6.0, 2 / 3), rel=1e-12)
    x = sample_counts(nb, 1.0, 200_000, 3, windows=4)
    assert x.mean() == pytest.approx(nb.mean_count(1.0, 4), rel=0.02)
    assert count_pmf(Poisson(2.0), 1.5, 4, windows=3) == pytest.approx(stats.poisson.pmf(4, 9.0), rel=1e-12)


def test_estimate_rate_examples():
    assert estimate_rate([CountObservation(0, 7.0)]) == 0.0
    obs = [CountObservation(3, 2.0), CountObservation(1, 2.0)]
    assert estimate_rate(obs) == 1.0
    # Poisson log-likelihood maximized numerically
    nll = lambda lam: -sum(o.events * math.log(lam) - lam * o.exposure for o in obs)
    res = optimize.minimize_scalar(nll, bounds=(1e-6, 10), method="bounded", options={"xatol": 1e-10})
    assert res.x == pytest.approx(1.0, abs=1e-6)
    assert estimate_rate([CountObservation(10, 36500.0)]) * 36500 == pytest.approx(10.0)
    with pytest.raises(DomainError):
        estimate_rate([])


def test_zero_exposure_rejected():
    with pytest.raises(DomainError):
        CountObservation(0, 0.0)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 10**6), st.integers(1, 10**6)), min_size=1, max_size=20))
def test_estimate_rate_partition_invariance(parts):
    obs = [CountObservation(n, float(t)) for n, t in parts]
    merged = CountObservation(sum(n for n, _ in parts), float(sum(t for _, t in parts)))
    assert estimate_rate(obs) == estimate_rate([merged])


def test_hazard_rates():
    assert hazard_rate(Exponential(3.0), 17.0) == pytest.approx(3.0)
    lx = Lomax(2.0, 1.5)
    t = np.linspace(0, 20, 50)
    h = hazard_rate(lx, t)
    assert np.all(np.diff(h) < 0)
    assert hazard_rate(lx, 0.0) == pytest.approx(2.0 / 1.5)
    assert hazard_rate(lx, 0.0) == pytest.approx(hazard_rate(Exponential(2.0 / 1.5), 0.0))
    # f integrates to one and matches -dS/dt
    from scipy import integrate

    assert integrate.quad(lambda x: float(lx.pdf(x)), 0, np.inf)[0] == pytest.approx(1.0, rel=1e-9)
    assert float(lx.pdf(2.0)) == pytest.approx(-(lx.sf(2.0 + 1e-6) - lx.sf(2.0 - 1e-6)) / 2e-6, rel=1e-6)


def test_interarrival_samples():
    x = interarrival_samples(Exponential(2.0), 100_000, 1)
    assert abs(x.mean() - 0.5) <= 3 * x.std(ddof=1) / math.sqrt(x.size)
    assert interarrival_sample(Exponential(2.0), 42) == interarrival_sample(Exponential(2.0), 42)
    lx = Lomax(3.0, 2.0)
    a = interarrival_samples(lx, 100_000, 2, "inverse")
    b = interarrival_samples(lx, 100_000, 3, "mixture")
    res = stats.ks_2samp(a, b)
    crit = 1.628 * math.sqrt(2 / 100_000)  # 1% two-sample critical value
    assert res.statistic < crit
    assert stats.kstest(a, lambda v: 1 - lx.sf(v)).pvalue > 0.001


def test_mttf_censored():
    s = CensoredSample([2, 3], [5])
    assert mttf_censored(s) == 5.0
    res = optimize.minimize_scalar(lambda lam: -s.log_likelihood(lam), bounds=(1e-6, 10),
                                   method="bounded", options={"xatol": 1e-12})
    assert 1 / res.x == pytest.approx(5.0, abs=1e-6)
    assert mttf_censored(CensoredSample([4], [])) == 4.0
    assert mttf_censored(CensoredSample([1, 1, 1, 1], [0])) == 1.0
    with pytest.raises(DomainError):
        mttf_censored(CensoredSample([], [3.0]))


def test_estimator_variance_examples():
    lam, t = 5.0, 4.0
    r = estimator_variance_study(Poisson(lam), SingleWindow(t), 50_000, 1)
    assert abs(r.variance - lam / t) <= 3 * r.variance_se
    nb = NegBinomial(2.0, 1.0)
    r = estimator_variance_study(nb, SingleWindow(1000.0), 20_000, 2)
    assert r.variance >= 0.9 * 2.0
    r4 = estimator_variance_study(nb, ManyWindows(40, 1.0), 20_000, 3)
    r16 = estimator_variance_study(nb, ManyWindows(160, 1.0), 20_000, 4)
    assert r4.variance / r16.variance == pytest.approx(4.0, rel=0.1)


def test_model_dicts_round_trip():
    for m in MODELS:
        assert model_from_dict(m.to_dict()) == m
    with pytest.raises(DomainError):
        model_from_dict({"family": "weibull"})
    with pytest.raises(DomainError):
        model_from_dict({"family": "poisson", "rate": 1, "batch": 2})
    with pytest.raises(DomainError):
        DetCompound(1.0, 0)
    with pytest.raises(DomainError):
        NegBinomial(2.0, 1.0).with_effect(1.0)


def test_histogram_csv(tmp_path):
    rows = histogram(DetCompound(1.0, 2), 2.0, 5000, 7)
    path = tmp_path / "h.csv"
    write_histogram_csv(rows, path)
    with open(path) as fh:
        got = list(csv.DictReader(fh))
    assert list(got[0]) == ["k", "count", "pmf"]
    assert sum(int(r["count"]) for r in got) == 5000
    assert all(int(r["count"]) == 0 for r in got if int(r["k"]) % 2)
