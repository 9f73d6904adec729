"""Command-line entry point.

Exit codes: 0 ok, 1 usage, 2 parse or validation, 3 convergence or mesh
warning, 4 converse violation or failed lemma check, 5 infeasible rate window.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import checks, exponents, measures, ns_lp, protocol
from .measures import ValidationError

OK, USAGE, PARSE, CONVERGENCE, VIOLATION, INFEASIBLE = range(6)

EXPONENT_COLUMNS = ["r", "distance", "raw", "clamped", "argmax_alpha", "argmax_p"]
SIMULATE_COLUMNS = ["n", "eps_total", "eps_coding", "eps_simulation", "eps_rounding", "M", "R"]

EPILOG = f"""\
CSV columns
  exponent, sweep: {', '.join(EXPONENT_COLUMNS)}[, variational, gap]
  simulate:        {', '.join(SIMULATE_COLUMNS)}
  measures:        quantity, value, unit
  lp:              n, k, r, optimum, exponent_at_n, converse_bound, margin
  check:           suite, trials, passed, violations, max_excess

Exit codes: 0 ok, 1 usage, 2 parse, 3 convergence, 4 converse violation or
failed check, 5 infeasible rate window.  INTERCONVERT_THREADS caps the
worker threads used by sweep.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


@dataclass
class RunConfig:
    subcommand: str
    unit: measures.LogUnit
    fmt: str
    output: str | None
    seed: int | None
    args: argparse.Namespace = field(repr=False)


# ---------------------------------------------------------------- output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _emit(cfg: RunConfig, payload, rows: list[dict] | None = None, columns=None) -> None:
    if cfg.fmt == "csv" and rows is not None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns or list(rows[0]), extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(_jsonable(payload), indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threads() -> int:
    raw = os.environ.get("INTERCONVERT_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"INTERCONVERT_THREADS must be an integer, got {raw!r}") from None


def _grid(args) -> exponents.GridSpec:
    g = exponents.GridSpec()
    if args.grid_points is not None and args.grid_points < 4:
        raise UsageError("--grid-points must be at least 4")
    return exponents.GridSpec(points=args.grid_points or g.points,
                              refine_rounds=g.refine_rounds if args.refine_rounds is None
                              else args.refine_rounds,
                              refine_points=g.refine_points, inset=g.inset)


def _rate(value: float) -> float:
    if not (value >= 0 and math.isfinite(value)):
        raise UsageError(f"rate must be a non-negative finite number, got {value}")
    return value


# ---------------------------------------------------------------- subcommands

def cmd_measures(cfg: RunConfig) -> int:
    a, unit = cfg.args, cfg.unit
    out = []

    def add(name, value, labelled=True):
        out.append({"quantity": name, "value": float(value), "unit": unit.value if labelled else ""})

    if a.kl:
        add("kl", measures.kl(*map(measures.load_distribution, a.kl), unit))
    if a.renyi:
        add("renyi", measures.renyi(*map(measures.load_distribution, a.renyi), a.alpha, unit))
    if a.tv:
        add("tv", measures.tv(*map(measures.load_distribution, a.tv)), False)
    if a.fidelity:
        add("fidelity", measures.fidelity(*map(measures.load_distribution, a.fidelity)), False)
    if a.dmax:
        add("dmax", measures.dmax(*map(measures.load_distribution, a.dmax), unit))
    if a.dmax_smooth:
        p, q = map(measures.load_distribution, a.dmax_smooth)
        add("dmax_smooth", measures.dmax_smooth(p, q, a.eps, unit))
    if a.mi:
        add("mi", measures.mi(measures.load_distribution(a.mi[0]), measures.load_channel(a.mi[1]), unit))
    if a.sibson:
        p, w = measures.load_distribution(a.sibson[0]), measures.load_channel(a.sibson[1])
        add("sibson", measures.sibson(p, w, a.alpha, unit))
    if a.augustin:
        p, w = measures.load_distribution(a.augustin[0]), measures.load_channel(a.augustin[1])
        add("augustin", measures.augustin(p, w, a.alpha, unit))
    if a.capacity:
        add("capacity", measures.capacity(measures.load_channel(a.capacity), unit).value)
    if a.renyi_capacity:
        add("renyi_capacity", measures.renyi_capacity(measures.load_channel(a.renyi_capacity),
                                                      a.alpha, unit))
    if a.variance:
        add("channel_variance", measures.channel_variance(measures.load_channel(a.variance), unit))
    if not out:
        raise UsageError("measures: request at least one quantity")
    _emit(cfg, out, out, ["quantity", "value", "unit"])
    return OK


def _exponent_row(res: exponents.ExponentResult) -> dict:
    return {"r": res.r, "distance": res.distance, "raw": res.value, "clamped": res.clamped_value,
            "argmax_alpha": res.argmax_alpha, "argmax_p": res.argmax_p}


def cmd_exponent(cfg: RunConfig) -> int:
    a = cfg.args
    w, t = measures.load_channel(a.w), measures.load_channel(a.t)
    try:
        q = exponents.ExponentQuery(w, t, _rate(a.r), a.distance, _grid(a), cfg.unit, a.alpha_fixed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    res = exponents.sce(q)
    status = OK if res.converged else CONVERGENCE
    if not a.variational:
        _emit(cfg, res.to_json(), [_exponent_row(res)], EXPONENT_COLUMNS)
        return status
    A = tuple(float(x) for x in a.A.split(","))
    var = exponents.variational_sce(q, A[0] if len(A) == 1 else A, a.mesh)
    gap = res.value - var.value
    if var.mesh_too_coarse:
        status = CONVERGENCE
    row = dict(_exponent_row(res), variational=var.value, gap=gap)
    _emit(cfg, {"exponent": res.to_json(), "variational": var.to_json(), "gap": gap},
          [row], EXPONENT_COLUMNS + ["variational", "gap"])
    return status


def cmd_sweep(cfg: RunConfig) -> int:
    a = cfg.args
    w, t = measures.load_channel(a.w), measures.load_channel(a.t)
    rates = [_rate(r) for r in a.r]
    try:
        queries = [exponents.ExponentQuery(w, t, r, d, _grid(a), cfg.unit)
                   for d in a.distance for r in rates]
    except ValueError as e:
        raise UsageError(str(e)) from None
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(exponents.sce, queries))
    rows = [_exponent_row(r) for r in results]
    _emit(cfg, [r.to_json() for r in results], rows, EXPONENT_COLUMNS)
    return OK if all(r.converged for r in results) else CONVERGENCE


def cmd_lp(cfg: RunConfig) -> int:
    a = cfg.args
    w, t = measures.load_channel(a.w), measures.load_channel(a.t)
    r = _rate(a.r)
    if a.n < 1:
        raise UsageError("--n must be at least 1")
    k = math.ceil(r * a.n - 1e-12)
    wn = measures.product_channel(w, a.n)
    tk = measures.product_channel(t, k) if k > 0 else measures.constant_channel([1.0], 1)
    px = None
    if a.p_x:
        px = measures.product_distribution(measures.load_distribution(a.p_x), a.n)
    if a.assist == "sr":
        if px is not None:
            raise UsageError("--p-x applies to the non-signaling LP only")
        rep = ns_lp.sr_success_tv(wn, tk)
    else:
        rep = ns_lp.ns_success_tv(wn, tk, p_x=px)
    exponent = ns_lp.lp_exponent(rep.optimum, a.n, cfg.unit.per_nat)
    bound = ns_lp.converse_bound(exponents.ExponentQuery(w, t, r, exponents.TV, _grid(a), cfg.unit))
    margin = exponent - bound
    out = {"n": a.n, "k": k, "r": r, "assist": a.assist, "optimum": rep.optimum,
           "exponent_at_n": exponent, "converse_bound": bound, "margin": margin,
           "unit": cfg.unit.value, "status": rep.status, "residual": rep.residual,
           "variables": rep.variables}
    _emit(cfg, out, [out], ["n", "k", "r", "optimum", "exponent_at_n", "converse_bound", "margin"])
    if margin < -1e-9:
        print(f"converse violated: exponent {exponent} < bound {bound}", file=sys.stderr)
        return VIOLATION
    return OK


def cmd_simulate(cfg: RunConfig) -> int:
    a = cfg.args
    w, t = measures.load_channel(a.w), measures.load_channel(a.t)
    px = measures.load_distribution(a.p_x) if a.p_x else measures.Distribution.uniform(w.input_size)
    ps = measures.load_distribution(a.p_s) if a.p_s else measures.Distribution.uniform(t.input_size)
    r = _rate(a.r)
    if any(n < 1 for n in a.n):
        raise UsageError("--n values must be at least 1")
    reports = []
    for n in a.n:
        try:
            reports.append(protocol.run_pipeline(
                w, t, r, n, px, ps, seed=cfg.seed, mode=a.mode, unit=cfg.unit,
                slack_scale=a.slack_scale, trials=a.trials))
        except protocol.RateWindowError as e:
            print(f"infeasible at n={n}: rate window [{e.lower:.6g}, {e.upper:.6g}] {e.unit.value}",
                  file=sys.stderr)
            return INFEASIBLE
        except ValueError as e:
            if "cap c" not in str(e):
                raise
            print(f"infeasible at n={n}: {e}", file=sys.stderr)
            return INFEASIBLE
    rows = [{"n": rep.n, "eps_total": rep.eps_total, "eps_coding": rep.eps_coding,
             "eps_simulation": rep.eps_simulation, "eps_rounding": rep.eps_rounding,
             "M": rep.M, "R": rep.R} for rep in reports]
    payload = reports[0].to_json() if len(reports) == 1 else [rep.to_json() for rep in reports]
    _emit(cfg, payload, rows, SIMULATE_COLUMNS)
    if a.csv:
        with open(a.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SIMULATE_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return OK


def cmd_check(cfg: RunConfig) -> int:
    a = cfg.args
    names = list(checks.SUITES) if a.suite == "all" else [a.suite]
    results = [checks.run_suite(name, a.trials, cfg.seed, a.slack) for name in names]
    rows = [{"suite": r.suite, "trials": r.trials, "passed": r.passed,
             "violations": r.violations, "max_excess": r.max_excess} for r in results]
    _emit(cfg, [r.to_json() for r in results], rows,
          ["suite", "trials", "passed", "violations", "max_excess"])
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"{r.suite}: first violation {json.dumps(r.first_violation)}", file=sys.stderr)
    return VIOLATION if failed else OK


COMMANDS = {"measures": cmd_measures, "exponent": cmd_exponent, "sweep": cmd_sweep,
            "lp": cmd_lp, "simulate": cmd_simulate, "check": cmd_check}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--unit", choices=["bits", "nats"], default="bits")
    common.add_argument("--format", dest="fmt", choices=["json", "csv"], default="json")
    common.add_argument("--output", "-o", help="write here instead of stdout")
    common.add_argument("--seed", type=int, default=None)

    grid = _Parser(add_help=False)
    grid.add_argument("--grid-points", type=int, help="coarse grid size per axis")
    grid.add_argument("--refine-rounds", type=int, help="local refinement rounds")

    p = _Parser(prog="interconvert", description="Strong converse exponents for channel "
                "interconversion, finite-n LP checks and a small-n conversion protocol.",
                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    m = sub.add_parser("measures", parents=[common], help="divergences, informations, capacities")
    for name, meta in (("kl", ("P", "Q")), ("renyi", ("P", "Q")), ("tv", ("P", "Q")),
                       ("fidelity", ("P", "Q")), ("dmax", ("P", "Q")),
                       ("dmax-smooth", ("P", "Q")), ("mi", ("P", "W")),
                       ("sibson", ("P", "W")), ("augustin", ("P", "W"))):
        m.add_argument(f"--{name}", nargs=2, metavar=meta)
    m.add_argument("--capacity", metavar="W")
    m.add_argument("--renyi-capacity", metavar="W")
    m.add_argument("--variance", metavar="W", help="information variance at the capacity input")
    m.add_argument("--alpha", type=float, default=2.0, help="order for Rényi quantities")
    m.add_argument("--eps", type=float, default=0.1, help="smoothing for --dmax-smooth")

    e = sub.add_parser("exponent", parents=[common, grid], help="closed-form exponent")
    e.add_argument("--w", required=True)
    e.add_argument("--t", required=True)
    e.add_argument("--r", type=float, required=True)
    e.add_argument("--distance", default="tv", help="tv, pur or renyi:<order in (0,1)>")
    e.add_argument("--alpha-fixed", type=float, help="TV only: restrict to one alpha")
    e.add_argument("--variational", action="store_true", help="also brute-force the variational formula")
    e.add_argument("--A", default="0,1", help="alpha set for --variational: 'lo,hi' or one order")
    e.add_argument("--mesh", type=int, help="simplex mesh for --variational")

    s = sub.add_parser("sweep", parents=[common, grid], help="exponents over several rates")
    s.add_argument("--w", required=True)
    s.add_argument("--t", required=True)
    s.add_argument("--r", type=float, nargs="+", required=True)
    s.add_argument("--distance", nargs="+", default=["tv"])

    lp = sub.add_parser("lp", parents=[common, grid], help="exact finite-n success vs converse")
    lp.add_argument("--w", required=True)
    lp.add_argument("--t", required=True)
    lp.add_argument("--r", type=float, required=True)
    lp.add_argument("--n", type=int, required=True)
    lp.add_argument("--p-x", help="pin the single-letter input marginal")
    lp.add_argument("--assist", choices=["ns", "sr"], default="ns",
                    help="non-signaling or shared-randomness strategies")

    sim = sub.add_parser("simulate", parents=[common], help="run the conversion protocol")
    sim.add_argument("--w", required=True)
    sim.add_argument("--t", required=True)
    sim.add_argument("--r", type=float, required=True)
    sim.add_argument("--n", type=int, nargs="+", required=True)
    sim.add_argument("--mode", choices=["exact", "mc"], default="exact")
    sim.add_argument("--trials", type=int, default=2000, help="candidate lists in mc mode")
    sim.add_argument("--p-x")
    sim.add_argument("--p-s")
    sim.add_argument("--slack-scale", type=float, default=1.0,
                     help="multiplier on the second-order rate slacks")
    sim.add_argument("--csv", help="also write eps_total vs n here")

    c = sub.add_parser("check", parents=[common], help="randomised lemma suites")
    c.add_argument("--suite", choices=list(checks.SUITES) + ["all"], default="all")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--slack", type=float, default=checks.SLACK)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    cfg = RunConfig(args.subcommand, measures.LogUnit.parse(args.unit), args.fmt,
                    args.output, args.seed, args)
    try:
        return COMMANDS[args.subcommand](cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE
    except (ValidationError, FileNotFoundError, IsADirectoryError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return PARSE
    except protocol.RateWindowError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return INFEASIBLE
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
