"""Command-line entry point: generate, solve, verify, verify-sampling, bench."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .dp import MODES, approx_is, greedy_independent
from .errors import BudgetError, CheeseError
from .exact import exact_mis
from .instance import generate_grid, load, save, validate
from .sampling import SamplingParams, estimate_success
from .voronoi import Workspace

SEED_ENV = "CHEESE_MIS_SEED"

REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "version", "seed", "parameters", "results", "timings"],
    "properties": {
        "command": {"enum": ["generate", "solve", "verify", "verify-sampling", "bench"]},
        "version": {"type": "string"},
        "seed": {"type": "integer"},
        "parameters": {"type": "object"},
        "results": {"type": "object"},
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}

SOLVE_RESULT_SCHEMA = {
    "type": "object",
    "required": ["value", "solution", "exact_opt", "guarantee_exponent", "mode", "stats"],
    "properties": {
        "value": {"type": "integer", "minimum": 0},
        "solution": {"type": "array", "items": {"type": "integer"}},
        "exact_opt": {"type": ["integer", "null"]},
        "guarantee_exponent": {"type": "string", "pattern": "^-?[0-9]+/[0-9]+$"},
        "mode": {"enum": list(MODES)},
        "stats": {"type": "object"},
    },
}

DESK_SUITE = [
    (6, 6, "rect:6:1x2,cell:4", 1),
    (6, 7, "rect:8:2x2,cell:4", 2),
    (7, 7, "ball:4:1,rect:6:1x2", 3),
    (8, 8, "rect:10:2x2,cell:6", 4),
    (8, 8, "rect:12:1x3,ball:2:1", 5),
    (9, 9, "rect:14:2x2", 6),
    (10, 10, "rect:16:2x2,cell:4", 7),
    (10, 10, "rect:20:1x2:disjoint", 8),
]


def default_seed():
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        return 0


def report(command, seed, parameters, results, timings):
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "parameters": parameters,
        "results": results,
        "timings": timings,
    }


def emit(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def fail(kind, detail, code=1):
    sys.stdout.write(json.dumps({"error": kind, "detail": detail}, sort_keys=True) + "\n")
    return code


def read_instance(path):
    inst = load(path)
    problems = validate(inst)
    if problems:
        raise _InvalidInput(problems)
    return inst


class _InvalidInput(Exception):
    def __init__(self, problems):
        super().__init__("invalid instance")
        self.problems = problems


# -- subcommands ----------------------------------------------------------------------


def cmd_generate(args):
    t0 = time.perf_counter()
    inst = generate_grid(args.rows, args.cols, args.objects, args.seed, args.metric_seed)
    params = {"rows": args.rows, "cols": args.cols, "objects": args.objects, "metric_seed": inst.metric_seed}
    if not args.out or args.out == "-":
        sys.stdout.write(inst.dumps() + "\n")
        return 0
    save(inst, args.out)
    results = {"n": inst.graph.n, "N": inst.N, "faces": inst.graph.num_faces, "file": args.out}
    emit(report("generate", args.seed, params, results, {"total": time.perf_counter() - t0}), args.report)
    return 0


def solve_instance(inst, args):
    timings = {}
    t0 = time.perf_counter()
    res = approx_is(
        inst, eps=args.epsilon, s_override=args.s_override, mode=args.mode, seed=args.seed,
        tries=args.tries, eta_factor=args.eta_factor,
    )
    timings["approx"] = time.perf_counter() - t0
    stats = dict(res.stats)
    stats.pop("elapsed_seconds", None)
    exact_opt = None
    if args.exact:
        t1 = time.perf_counter()
        try:
            exact_opt = exact_mis(inst).value
        except BudgetError:
            stats["exact_skipped"] = "budget"
        timings["exact"] = time.perf_counter() - t1
    body = res.to_json()
    results = {
        "value": body["value"],
        "solution": body["solution"],
        "exact_opt": exact_opt,
        "guarantee_exponent": body["guarantee_exponent"],
        "mode": body["mode"],
        "s": body["s"],
        "epsilon": body["epsilon"],
        "high_probability_only": body["high_probability_only"],
        "stats": stats,
    }
    return results, timings


def cmd_solve(args):
    inst = read_instance(args.input)
    results, timings = solve_instance(inst, args)
    params = {
        "input": os.path.basename(args.input), "epsilon": args.epsilon, "s_override": args.s_override,
        "mode": args.mode, "tries": args.tries, "eta_factor": args.eta_factor, "exact": args.exact,
    }
    out = report("solve", args.seed, params, results, timings)
    out.update({k: results[k] for k in ("value", "solution", "exact_opt", "guarantee_exponent", "mode", "stats")})
    emit(out, args.out)
    return 0


def cmd_verify(args):
    from .checks import random_independent_family, verify_instance
    from .seeding import rng

    t0 = time.perf_counter()
    try:
        inst = load(args.input)
    except CheeseError as exc:
        return fail(type(exc).__name__, str(exc))
    suites = verify_instance(inst, args.seed, args.families)
    results = {
        "suites": {name: {"passed": not errs, "failures": errs} for name, errs in suites.items()},
        "passed": all(not errs for errs in suites.values()),
    }
    if args.dump and results["passed"]:
        fam = random_independent_family(inst, rng(args.seed, "dump"), 6)
        with open(args.dump, "w") as fh:
            json.dump(Workspace(inst).bundle(fam).to_json(), fh, sort_keys=True)
    params = {"input": os.path.basename(args.input), "families": args.families}
    emit(report("verify", args.seed, params, results, {"total": time.perf_counter() - t0}), args.out)
    return 0 if results["passed"] else 1


def cmd_verify_sampling(args):
    inst = read_instance(args.input)
    t0 = time.perf_counter()
    fam = greedy_independent(inst, inst.ids)
    if len(fam) < args.s:
        return fail("ParameterError", f"independent family of {len(fam)} objects is smaller than s = {args.s}")
    params = SamplingParams.make(len(fam), s=args.s, eta_factor=args.eta_factor, seed=args.seed)
    stats = estimate_success(Workspace(inst), (), fam, params, args.trials)
    if not args.per_trial:
        stats.pop("per_trial")
    p = {"input": os.path.basename(args.input), "s": args.s, "eta_factor": args.eta_factor, "trials": args.trials}
    emit(report("verify-sampling", args.seed, p, stats, {"total": time.perf_counter() - t0}), args.out)
    return 0


def _bench_row(cfg, args):
    rows, cols, spec, seed = cfg
    inst = generate_grid(rows, cols, spec, seed)
    t0 = time.perf_counter()
    res = approx_is(inst, s_override=args.s_override, mode=args.mode, seed=args.seed, eta_factor=args.eta_factor)
    elapsed = time.perf_counter() - t0
    try:
        opt = exact_mis(inst).value
    except BudgetError:
        opt = None
    return {
        "instance": f"grid{rows}x{cols}:{spec}:{seed}",
        "N": inst.N,
        "n": inst.graph.n,
        "exact": opt,
        "approx": res.value,
        "ratio": (opt / res.value) if opt and res.value else None,
        "time": elapsed,
    }


def cmd_bench(args):
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        rows = list(pool.map(lambda c: _bench_row(c, args), DESK_SUITE))
    timings = {r["instance"]: r.pop("time") for r in rows}
    timings["total"] = time.perf_counter() - t0
    params = {"suite": args.suite, "s_override": args.s_override, "mode": args.mode, "threads": args.threads}
    emit(report("bench", args.seed, params, {"rows": rows}, timings), args.out)
    if not args.quiet:
        sys.stderr.write(f"{'instance':40} {'N':>4} {'n':>4} {'exact':>6} {'approx':>6} {'ratio':>6} {'time':>7}\n")
        for r in rows:
            ratio = f"{r['ratio']:.2f}" if r["ratio"] else "-"
            sys.stderr.write(
                f"{r['instance']:40} {r['N']:>4} {r['n']:>4} {str(r['exact']):>6} {r['approx']:>6} "
                f"{ratio:>6} {timings[r['instance']]:>7.2f}\n"
            )
    return 0


# -- parser -------------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="cheese-mis", description=__doc__)
    p.add_argument("--threads", type=int, default=1, help="parallelism cap")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=default_seed(), help=f"top-level seed (env {SEED_ENV})")
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="parallelism cap")

    g = sub.add_parser("generate", help="generate a grid instance")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--objects", required=True, help="kind:count:size[:disjoint],... (rect HxW, ball R, cell)")
    g.add_argument("--metric-seed", type=int, default=None)
    g.add_argument("--out", default=None)
    g.add_argument("--report", default=None, help="where to write the run report (default stdout)")
    seeded(g)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="approximate maximum independent set")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--s-override", type=int, default=None)
    s.add_argument("--mode", choices=MODES, default="sampled")
    s.add_argument("--tries", type=int, default=3, help="split attempts per separator (sampled mode)")
    s.add_argument("--eta-factor", type=float, default=0.4, help="heaviness threshold as a fraction of |F|")
    s.add_argument("--exact", action="store_true", help="also run the exact oracle")
    s.add_argument("--out", default=None)
    seeded(s)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run invariant suites on an instance")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--families", type=int, default=5)
    v.add_argument("--dump", default=None, help="write a diagram/radial debug dump")
    v.add_argument("--out", default=None)
    seeded(v)
    v.set_defaults(func=cmd_verify)

    vs = sub.add_parser("verify-sampling", help="empirical sampling success rates")
    vs.add_argument("--in", dest="input", required=True)
    vs.add_argument("--s", type=int, required=True)
    vs.add_argument("--eta-factor", type=float, default=0.4)
    vs.add_argument("--trials", type=int, default=200)
    vs.add_argument("--per-trial", action="store_true")
    vs.add_argument("--out", default=None)
    seeded(vs)
    vs.set_defaults(func=cmd_verify_sampling)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", choices=["desk"], default="desk")
    b.add_argument("--s-override", type=int, default=4)
    b.add_argument("--mode", choices=MODES, default="sampled")
    b.add_argument("--eta-factor", type=float, default=0.4)
    b.add_argument("--quiet", action="store_true")
    b.add_argument("--out", default=None)
    seeded(b)
    b.set_defaults(func=cmd_bench)
    return p


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "solve" and args.epsilon is None and args.s_override is None:
        parser.error("solve needs --epsilon or --s-override")
    try:
        return args.func(args)
    except _InvalidInput as exc:
        return fail("invalid-instance", exc.problems)
    except (OSError, json.JSONDecodeError) as exc:
        return fail(type(exc).__name__, str(exc))
    except CheeseError as exc:
        return fail(type(exc).__name__, str(exc))


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
