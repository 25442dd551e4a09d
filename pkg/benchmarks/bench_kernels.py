"""Compiled vs numpy kernels.

Times ``binom_thresholds`` and ``binom_compound_pmf`` from both backends on
the same inputs, checks that the outputs agree, and times one closed-form
trade-off curve with each backend swapped in.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""

import argparse
import json
import sys
import timeit
from contextlib import contextmanager

import numpy as np
from scipy import stats

from failrate import _fallback, kernels
from failrate.process import NegBinomial
from failrate.tradeoff import Scenario, curve_closed_form, default_alpha_hat_grid

try:
    from failrate import _core
except ImportError:
    _core = None


@contextmanager
def backend(impl):
    saved = kernels.binom_thresholds, kernels.binom_compound_pmf
    kernels.binom_thresholds, kernels.binom_compound_pmf = impl.binom_thresholds, impl.binom_compound_pmf
    try:
        yield
    finally:
        kernels.binom_thresholds, kernels.binom_compound_pmf = saved


def cases():
    for n_max in (10_000, 50_000):
        for p, q in ((0.5, 0.05), (0.3, 0.5)):
            yield (f"binom_thresholds n={n_max} p={p} q={q}",
                   lambda m, n_max=n_max, p=p, q=q: m.binom_thresholds(n_max, p, q))
    for mean, l in ((80.0, 10), (2_000.0, 3)):
        w = stats.poisson.pmf(np.arange(int(stats.poisson.isf(1e-14, mean)) + 1), mean)
        yield (f"binom_compound_pmf mean={mean:g} l={l}",
               lambda m, w=w, l=l: m.binom_compound_pmf(w, l, 0.7))


def best_of(fn, repeat):
    number = 1
    # grow the loop until one sample takes at least 50 ms
    while (first := timeit.timeit(fn, number=number)) < 0.05 and number < 10_000:
        number *= 4
    rest = timeit.repeat(fn, number=number, repeat=repeat - 1) if repeat > 1 else []
    return min([first, *rest]) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    if _core is None:
        print("compiled extension not built; run `pip install --no-build-isolation -e .` first", file=sys.stderr)
        return 1

    rows = []
    for name, call in cases():
        a, b = call(_core), call(_fallback)
        if not np.allclose(a, b, rtol=0, atol=1e-13):
            raise SystemExit(f"backends disagree on {name}")
        rows.append((name, best_of(lambda: call(_core), args.repeat), best_of(lambda: call(_fallback), args.repeat)))

    s = Scenario.from_effect(NegBinomial(2.0, 0.1), 0.05, 100.0)
    grid = default_alpha_hat_grid(5)
    timings = []
    for impl in (_core, _fallback):
        with backend(impl):
            timings.append(best_of(lambda: curve_closed_form(s, grid), max(1, args.repeat // 2)))
    rows.append(("curve_closed_form NB t=100, 5 thresholds", *timings))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'cython [ms]':>12}  {'python [ms]':>12}  {'speedup':>8}")
    for name, fast, slow in rows:
        print(f"{name:<{width}}  {fast * 1e3:12.3f}  {slow * 1e3:12.3f}  {slow / fast:8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([{"case": n, "cython_s": f, "python_s": p} for n, f, p in rows], fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
