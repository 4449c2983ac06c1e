"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, config, kernels, losses, samplers, trainer
from .samplers import STREAM_MC, RngStream

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("jitterloss")


def _line(name, value, expected, tol, ok):
    print(f"{name:<34} value={value:<14.9g} expected={expected:<14.9g} tol={tol:<8.3g} {'PASS' if ok else 'FAIL'}")
    return ok


# -- verify -----------------------------------------------------------------

THEOREM1_CHECKS = [("jitter_s", 2e-3), ("jitter_5", 2e-4), ("jitter_2", 1e-4)]


def suite_theorem1(n, seed):
    ok = True
    for k, (name, tol) in enumerate(THEOREM1_CHECKS):
        r = analysis.verify_theorem1(samplers.jitter_preset(name), n, tol, RngStream(seed, STREAM_MC + k))
        ok &= _line(f"theorem1 {name}", r["estimate"], r["closed_form"], tol, r["pass"])
    return ok


def suite_theorem2(n, seed):
    rng = RngStream(seed, STREAM_MC + 8)
    m = max(n // 10, 100_000)
    loss = np.abs(rng.normal(0.0, 1.0, m)) * rng.uniform(0.0, 2.0, m)
    alpha = rng.normal(0.0, 1.0, m)
    wrapped = kernels.jitter_transform_many(loss, alpha)
    bad_dom = int(np.sum(wrapped < loss) + np.sum((wrapped == loss) != (loss >= alpha)))
    ok = _line("theorem2 dominance counterexamples", bad_dom, 0, 0, bad_dom == 0)

    neg = -np.abs(alpha[:10_000])
    bad_neg = int(np.sum(kernels.jitter_transform_many(loss[:10_000], neg) != loss[:10_000]))
    ok &= _line("theorem2 negative-alpha changes", bad_neg, 0, 0, bad_neg == 0)

    rep = analysis.mse_experiment(0.5, 0.2, 0.3, max(n, 100_000), RngStream(seed, STREAM_MC + 9))
    gap = rep.mse_raw_a - rep.mse_wrapped_a
    ok &= _line("theorem2 mse_raw_a - mse_wrapped_a", gap, 0.0, 0, gap > 0)
    ok &= _line("theorem2 max_abs_diff_b", rep.max_abs_diff_b, 0.0, 0, rep.max_abs_diff_b == 0)
    return ok


JENSEN_FIXTURES = [
    [(0.01, 0.02), (0.03, 0.02)],
    [(0.05, 0.02)],
    [(0.04, 0.01), (0.04, 0.01), (0.04, 0.01)],
]


def suite_jensen(n, seed):
    ok = True
    for i, fx in enumerate(JENSEN_FIXTURES):
        r = analysis.jensen_check(fx)
        ok &= _line(f"jensen fixture {i} lhs<=rhs", r["lhs"], r["rhs"], 1e-12, r["pass"])
    rng = RngStream(seed, STREAM_MC + 10)
    worst = -math.inf
    for _ in range(1000):
        m = int(rng.gen.integers(1, 20))
        r = analysis.jensen_check(list(zip(rng.uniform(0, 0.1, m), rng.normal(0.0, 0.1, m))))
        worst = max(worst, r["lhs"] - r["rhs"])
    ok &= _line("jensen random max(lhs-rhs)", worst, 0.0, 1e-12, worst <= 1e-12)
    return ok


SUITES = {"theorem1": suite_theorem1, "theorem2": suite_theorem2, "jensen": suite_jensen}


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = [SUITES[s](args.n, args.seed) for s in names]
    return EXIT_OK if all(results) else EXIT_VERIFY


# -- train / sweep / report ---------------------------------------------------


def _load_run_config(path):
    raw = config.read_json(path)
    return config.validate_run(raw)


def cmd_train(args):
    try:
        cfg = _load_run_config(args.config)
    except config.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = args.out or cfg["output_dir"]
    try:
        rec = trainer.run_experiment(cfg, out)
    except (trainer.TrainingError, samplers.DegenerateTruncationError) as e:
        print(f"training failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{rec.run_id} -> {Path(out) / (rec.run_id + '.csv')} ({rec.duration:.1f}s)")
    return EXIT_OK


def _sweep_worker(cfg, out):
    try:
        rec = trainer.run_experiment(cfg, out)
    except Exception as e:  # reported, the sweep carries on
        return cfg, None, f"{type(e).__name__}: {e}"
    rec.model = None
    for m in rec.epochs:
        m.per_batch_risks = []
        m.grad_signs = []
    return cfg, rec, None


def write_report(records, out, failures=()):
    rows = analysis.compare_runs(records)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(analysis.report_csv(rows))
    text = analysis.report_text(rows, failures)
    (out / "report.txt").write_text(text)
    return text


def cmd_sweep(args):
    try:
        raw = config.read_json(args.config) if args.config else config.DEFAULT_SWEEP
        sweep = config.validate_sweep(raw)
    except config.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or sweep["output_dir"]
    runs = config.expand_sweep(sweep)
    workers = sweep.get("workers") or min(len(runs), os.cpu_count() or 1)
    records, failures = [], []
    if workers == 1:
        results = [_sweep_worker(c, out) for c in runs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, runs, [out] * len(runs)))
    for cfg, rec, err in results:
        if err:
            failures.append(f"{losses.wrapper_from_config(cfg['wrapper']).label()} seed={cfg['seed']}: {err}")
        else:
            records.append(rec)
            bad = [m.epoch for m in rec.epochs if not m.jensen["pass"]]
            if bad:
                log.warning("run %s: Jensen bound violated at epochs %s", rec.run_id, bad)
    sys.stdout.write(write_report(records, out, failures))
    return EXIT_RUNTIME if failures else EXIT_OK


def load_record(path) -> trainer.RunRecord:
    """Rebuild a RunRecord (metrics only) from its JSON echo."""
    body = json.loads(Path(path).read_text())
    rec = trainer.RunRecord(body["run_id"], body["config"], body["seed"])
    for e in body["epochs"]:
        rec.epochs.append(trainer.EpochMetrics(
            e["epoch"], e["raw_train_loss"], e["wrapped_train_loss"], [], [],
            e["test_loss"], e["test_accuracy"], e["alpha_stats"], e.get("jensen"),
        ))
    return rec


def cmd_report(args):
    run_dir = Path(args.run_dir)
    paths = sorted(run_dir.glob("*.json"))
    if not paths:
        print(f"no run records in {run_dir}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records = [load_record(p) for p in paths]
        text = write_report(records, args.out or run_dir)
    except (KeyError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(text)
    return EXIT_OK


# -- landscape ------------------------------------------------------------------

CURVES = {
    "parabola": (lambda x: x * x, (-1.0, 1.0)),
    "double-well": (lambda x: (x * x - 1.0) ** 2, (-1.5, 1.5)),
}


def read_curve_csv(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    xs = np.array([float(r[0]) for r in rows])
    ys = np.array([float(r[1]) for r in rows])
    return analysis.CurveSamples(xs, ys), [r[0] for r in rows]


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def cmd_landscape(args):
    xs_text = None
    try:
        if args.csv:
            curve, xs_text = read_curve_csv(args.csv)
        else:
            if args.curve not in CURVES:
                print(f"unknown curve {args.curve!r}; choose from {sorted(CURVES)} or pass --csv", file=sys.stderr)
                return EXIT_CONFIG
            f, (lo, hi) = CURVES[args.curve]
            lo = lo if args.lo is None else args.lo
            hi = hi if args.hi is None else args.hi
            xs = np.linspace(lo, hi, args.grid)
            curve = analysis.CurveSamples(xs, f(xs))
    except (OSError, ValueError, IndexError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    flipped = [analysis.flip_curve(curve, lv) for lv in args.levels]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "original"] + [f"flooded_{lv:g}" for lv in args.levels])
        for i in range(curve.xs.size):
            x = xs_text[i] if xs_text else repr(float(curve.xs[i]))
            w.writerow([x, repr(float(curve.ys[i]))] + [repr(float(c.ys[i])) for c in flipped])
    finally:
        if args.out:
            fh.close()
    summary = sys.stdout if args.out else sys.stderr
    print(f"original: {analysis.count_local_minima(curve, args.tol)} local minima", file=summary)
    for lv, c in zip(args.levels, flipped):
        idx = analysis.local_minima(c, args.tol)
        at = ", ".join(f"{c.xs[i]:.6g}" for i in idx)
        print(f"level {lv:g}: {len(idx)} local minima at x = [{at}]", file=summary)
    return EXIT_OK


# -- entry point ------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="jitterloss", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one run from a JSON config")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int, help="override the config seed")
    t.add_argument("--out", help="output directory (default: config output_dir)")
    t.set_defaults(func=cmd_train)

    v = sub.add_parser("verify", help="Monte Carlo checks of the wrapper math")
    v.add_argument("suite", choices=[*SUITES, "all"])
    v.add_argument("--n", type=int, default=1_000_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    ls = sub.add_parser("landscape", help="flip a 1-D curve at given levels and count minima")
    ls.add_argument("--curve", default="parabola")
    ls.add_argument("--csv", help="user curve: CSV with columns x,y (optional header)")
    ls.add_argument("--lo", type=float)
    ls.add_argument("--hi", type=float)
    ls.add_argument("--grid", type=int, default=2001)
    ls.add_argument("--levels", type=float, nargs="+", default=[0.25])
    ls.add_argument("--tol", type=float, default=0.0, help="plateau merge tolerance")
    ls.add_argument("--out", help="CSV path (default: stdout; summary then goes to stderr)")
    ls.set_defaults(func=cmd_landscape)

    s = sub.add_parser("sweep", help="wrappers x seeds grid, then a report")
    s.add_argument("--config", help="sweep config (default: built-in eight-method grid)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="summarize run JSON records in a directory")
    r.add_argument("run_dir")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
