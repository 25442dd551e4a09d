"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 infeasible plan.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from contextlib import contextmanager

from . import __version__
from .errors import DomainError, InfeasiblePlanError
from .planner import PlanRequest, rank_slices, time_to_wait
from .process import CountObservation, histogram, model_from_dict
from .rate_test import RateTestInput, decide
from .tradeoff import (
    Scenario,
    curve_closed_form,
    curve_monte_carlo,
    default_alpha_hat_grid,
    default_q_grid,
    qq_data,
    write_curve_csv,
)
from .wald import compare_tests

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 2, 3

EPILOG = "exit codes: 0 success, 2 invalid input, 3 infeasible plan"


class UsageError(DomainError):
    pass


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_json(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None


def _parse_model(text):
    try:
        spec = json.loads(text) if isinstance(text, str) else text
    except json.JSONDecodeError as exc:
        raise UsageError(f"model spec is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise UsageError("model spec must be a JSON object")
    return model_from_dict(spec)


def _merge(config: dict, args, names):
    """Config values overridden by any flag that was given."""
    out = {k: config[k] for k in names if k in config}
    for k in names:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


@contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_test(args) -> int:
    vals = _merge(_load_json(args.config), args, ["n0", "t0", "n1", "t1", "alpha_hat"])
    missing = [k for k in ("n0", "t0", "n1", "t1", "alpha_hat") if k not in vals]
    if missing:
        raise UsageError(f"missing values: {', '.join(missing)}")
    inp = RateTestInput.from_counts(int(vals["n0"]), float(vals["t0"]),
                                    int(vals["n1"]), float(vals["t1"]))
    outcome = decide(inp, float(vals["alpha_hat"]))
    with _open_out(args.output) as fh:
        fh.write(_dump_json(outcome.to_dict()))
    return EXIT_OK


def _scenario_list(config):
    if "scenarios" in config:
        specs = config["scenarios"]
        if not isinstance(specs, list) or not specs:
            raise UsageError("'scenarios' must be a nonempty list")
    else:
        specs = [config]
    return [Scenario.from_dict(s) for s in specs]


def cmd_curve(args) -> int:
    raw = _load_json(args.scenario)
    opts = _merge(raw.get("options", {}), args,
                  ["method", "trials", "seed", "grid_size", "null", "workers"])
    method = opts.get("method", "closed")
    trials = int(opts.get("trials", 100_000))
    seed = int(opts.get("seed", 0))
    workers = int(opts.get("workers", 1))
    grid_size = int(opts.get("grid_size", 199))
    null = opts.get("null", "design")
    if method not in ("closed", "mc", "wald"):
        raise UsageError(f"unknown method {method!r}")
    if workers < 1:
        raise UsageError("workers must be at least 1")
    grid = default_alpha_hat_grid(grid_size)
    config = {k: v for k, v in raw.items() if k != "options"}
    scenarios = _scenario_list(config)

    def render(s: Scenario) -> dict[str, str]:
        files = {}
        if method == "wald":
            cmp = compare_tests(s, grid, trials, seed, workers)
            for name, curve in (("wald", cmp.wald_curve), ("rate", cmp.rate_curve)):
                buf = io.StringIO()
                write_curve_csv(curve, buf, ["degenerate_fraction"])
                files[name] = buf.getvalue()
            return files
        if method == "closed":
            curve = curve_closed_form(s, grid, null)
        else:
            curve = curve_monte_carlo(s, grid, trials, seed, workers)
        buf = io.StringIO()
        write_curve_csv(curve, buf)
        files[""] = buf.getvalue()
        return files

    outputs = []
    for i, s in enumerate(scenarios):
        stem = s.name or f"scenario_{i}"
        for suffix, text in render(s).items():
            outputs.append((f"{stem}_{suffix}" if suffix else stem, text))
    if len(outputs) == 1:
        with _open_out(args.output) as fh:
            fh.write(outputs[0][1])
    else:
        if args.output in (None, "-"):
            raise UsageError("several curves need --output DIR")
        os.makedirs(args.output, exist_ok=True)
        for stem, text in outputs:
            with open(os.path.join(args.output, f"{stem}.csv"), "w", newline="") as fh:
                fh.write(text)
    return EXIT_OK


def cmd_qq(args) -> int:
    cfg = _load_json(args.config)
    vals = _merge(cfg, args, ["x_model", "y_model", "t", "grid_size"])
    for k in ("x_model", "y_model", "t"):
        if k not in vals:
            raise UsageError(f"missing {k}")
    grid_size = int(vals.get("grid_size", 99))
    if grid_size < 1:
        raise UsageError("grid size must be positive")
    t = float(vals["t"])
    if not t > 0:
        raise UsageError("t must be positive")
    dx = _parse_model(vals["x_model"]).count_dist(t)
    dy = _parse_model(vals["y_model"]).count_dist(t)
    rows = qq_data(dx, dy, default_q_grid(grid_size))
    with _open_out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "x_quantile", "y_quantile"])
        for r in rows:
            w.writerow([repr(r["q"]), r["x_quantile"], r["y_quantile"]])
    return EXIT_OK


def _read_slices(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return [(r["id"], CountObservation(int(r["events"]), float(r["exposure"]))) for r in rows]
    except (KeyError, ValueError) as exc:
        raise UsageError(f"ranking CSV needs columns id, events, exposure: {exc}") from None


def cmd_plan(args) -> int:
    if (args.request is None) == (args.rank is None):
        raise UsageError("give exactly one of --request or --rank")
    if args.rank is not None:
        if args.reference_events is None or args.reference_exposure is None:
            raise UsageError("--rank needs --reference-events and --reference-exposure")
        ref = CountObservation(args.reference_events, args.reference_exposure)
        report = rank_slices(_read_slices(args.rank), ref)
    else:
        spec = _load_json(args.request)
        for k in ("target_alpha", "target_beta", "effect"):
            v = getattr(args, k)
            if v is not None:
                spec[k] = v
        report = time_to_wait(PlanRequest.from_dict(spec))
    with _open_out(args.output) as fh:
        fh.write(_dump_json(report))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    vals = _merge(cfg, args, ["model", "t", "samples", "seed", "windows"])
    for k in ("model", "t"):
        if k not in vals:
            raise UsageError(f"missing {k}")
    samples = int(vals.get("samples", 100_000))
    if samples < 1:
        raise UsageError("samples must be positive")
    rows = histogram(_parse_model(vals["model"]), float(vals["t"]), samples,
                     int(vals.get("seed", 0)), int(vals.get("windows", 1)))
    with _open_out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "count", "pmf"])
        for r in rows:
            w.writerow([r["k"], r["count"], repr(r["pmf"])])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="failrate",
        description="Compare failure rates of two point processes.",
        epilog=EPILOG,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run the rate test on two count observations", epilog=EPILOG)
    p.add_argument("--n0", type=int, help="control events")
    p.add_argument("--t0", type=float, help="control exposure")
    p.add_argument("--n1", type=int, help="treatment events")
    p.add_argument("--t1", type=float, help="treatment exposure")
    p.add_argument("--alpha-hat", dest="alpha_hat", type=float, help="rejection threshold")
    p.add_argument("--config", help="JSON file with the same keys (flags win)")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("curve", help="trade-off curve CSV for one or more scenarios", epilog=EPILOG)
    p.add_argument("--scenario", required=True, help="scenario JSON (single, or {'scenarios': [...]})")
    p.add_argument("--method", choices=["closed", "mc", "wald"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.add_argument("--null", choices=["design", "true"], help="closed form thresholds from the assumed or the true null")
    p.add_argument("--workers", type=int, help="threads for Monte Carlo (output does not depend on it)")
    p.add_argument("--output", help="CSV file, or a directory when several curves are produced")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("qq", help="paired quantiles of two count distributions", epilog=EPILOG)
    p.add_argument("--x-model", dest="x_model", help='JSON, e.g. {"family": "det_compound", "rate": 1, "batch": 2}')
    p.add_argument("--y-model", dest="y_model")
    p.add_argument("--t", type=float, help="window length")
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=cmd_qq)

    p = sub.add_parser("plan", help="time-to-wait plan or slice ranking", epilog=EPILOG)
    p.add_argument("--request", help="plan request JSON")
    p.add_argument("--target-alpha", dest="target_alpha", type=float)
    p.add_argument("--target-beta", dest="target_beta", type=float)
    p.add_argument("--effect", type=float)
    p.add_argument("--rank", help="CSV with columns id, events, exposure")
    p.add_argument("--reference-events", dest="reference_events", type=int)
    p.add_argument("--reference-exposure", dest="reference_exposure", type=float)
    p.add_argument("--output")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="simulated count histogram against the exact PMF", epilog=EPILOG)
    p.add_argument("--model")
    p.add_argument("--t", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--windows", type=int)
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on malformed flags
    try:
        return args.func(args)
    except InfeasiblePlanError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DomainError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
