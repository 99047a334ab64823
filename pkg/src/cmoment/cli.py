"""Command-line front end.

Subcommands: solve, export, random, acopf, stats.  Exit codes: 0 success,
1 usage error, 2 data error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import acopf as opf
from . import randgen, sdpa
from . import sparsity as sp
from .poly import CPOP
from .relax import RelaxOptions, assemble, complex_to_real
from .solver import SolverSettings, solve

_SPARSITY = ["dense", "cs", "ts", "cs-ts", "cs-ts-extra", "min"]
_EXT = {"max": "max", "md": "min-degree", "mf": "min-fill"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _parse_k(value: str):
    return "auto" if value == "auto" else int(value)


def _relax_options(args) -> RelaxOptions:
    mode = "min-initial" if args.sparsity == "min" else args.sparsity
    order = None
    if mode != "min-initial":
        if args.order in (None, "min"):
            raise ValueError("--order <int> is required for this sparsity mode")
        order = int(args.order)
    return RelaxOptions(
        order=order, k=_parse_k(args.k), sparsity=mode,
        corr_extension=_EXT[args.ext] if mode != "dense" else "min-fill",
        ts_extension=_EXT[args.ts_ext])


def _add_model_flags(p, with_order=True):
    if with_order:
        p.add_argument("--order", default=None, help="relaxation order (int), or 'min'")
    p.add_argument("--sparsity", choices=_SPARSITY, default="dense")
    p.add_argument("--k", default="1", help="sparse order (int) or 'auto'")
    p.add_argument("--ext", choices=sorted(_EXT), default="mf",
                   help="variable-graph chordal extension")
    p.add_argument("--ts-ext", choices=sorted(_EXT), default="max",
                   help="term-graph chordal extension")


def _summary(stats: dict, rep=None, gap: float | None = None,
             elapsed: float | None = None, extra: str = "") -> str:
    parts = [f"mb={stats['mb']}"]
    if rep is not None:
        parts.append(f"opt={rep.pobj:.6g}")
    if elapsed is not None:
        parts.append(f"time={elapsed:.2f}")
    if gap is not None:
        parts.append(f"gap={gap:.2f}%")
    if extra:
        parts.append(extra)
    return " ".join(parts)


def _write_json(path: str | None, payload: dict) -> None:
    if path:
        with open(path, "w") as f:
            json.dump(payload, f, indent=1, default=str)
            f.write("\n")


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="cmoment",
                     description="sparse complex moment relaxations")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="assemble and solve a CPOP relaxation")
    p_solve.add_argument("--input", required=True)
    _add_model_flags(p_solve)
    p_solve.add_argument("--tol", type=float, default=1e-8)
    p_solve.add_argument("--export", default=None)
    p_solve.add_argument("--json", default=None)

    p_exp = sub.add_parser("export", help="assemble and export a relaxation")
    p_exp.add_argument("--input", required=True)
    _add_model_flags(p_exp)
    p_exp.add_argument("--export", required=True)

    p_rand = sub.add_parser("random", help="generate a seeded multi-ball CPOP")
    p_rand.add_argument("--l", type=int, required=True, help="number of blocks")
    p_rand.add_argument("--seed", type=int, default=0)
    p_rand.add_argument("--output", required=True)

    p_opf = sub.add_parser("acopf", help="solve an AC-OPF relaxation")
    p_opf.add_argument("--case", required=True)
    p_opf.add_argument("--order", default="shor", help="shor | 15 | <int>")
    p_opf.add_argument("--k", default="1")
    p_opf.add_argument("--ext", choices=sorted(_EXT), default="mf")
    p_opf.add_argument("--ts-ext", choices=sorted(_EXT), default="max")
    p_opf.add_argument("--ac-table", default=None)
    p_opf.add_argument("--tol", type=float, default=1e-8)
    p_opf.add_argument("--json", default=None)

    p_stats = sub.add_parser("stats", help="report cliques and block sizes")
    p_stats.add_argument("--input", required=True)
    _add_model_flags(p_stats)
    p_stats.add_argument("--json", default=None)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "random":
            cpop = randgen.random_cpop(args.l, args.seed)
            cpop.save(args.output)
            print(f"n={cpop.n} m={len(cpop.ineqs)} terms={len(cpop.objective.terms)} "
                  f"seed={args.seed} rng={randgen.RNG_NAME} -> {args.output}")
            return 0

        if args.command in ("solve", "export", "stats"):
            cpop = CPOP.load(args.input)
            model = assemble(cpop, _relax_options(args))
            stats = model.statistics()
            if args.command == "stats":
                opts = _relax_options(args)
                if opts.sparsity in ("ts", "cs-ts", "cs-ts-extra", "min-initial"):
                    if opts.sparsity == "ts":
                        pattern = sp.dense_pattern(cpop)
                        orders = [opts.order]
                    elif opts.sparsity == "min-initial":
                        pattern = sp.min_initial_pattern(cpop, opts.corr_extension)
                        orders = sp.min_relaxation_orders(cpop, pattern)
                    else:
                        pattern = sp.correlative_pattern(cpop, opts.order, opts.corr_extension)
                        orders = [opts.order] * len(pattern.cliques)
                    tp = sp.term_pattern(cpop, pattern, orders, opts.k, opts.ts_extension)
                    payload = sp.pattern_report(tp)
                else:
                    payload = stats
                payload["model"] = stats
                _write_json(args.json, payload)
                print(_summary(stats))
                if not args.json:
                    print(json.dumps(payload, indent=1, default=str))
                return 0
            real = complex_to_real(model)
            if args.command == "export" or getattr(args, "export", None):
                sidecar = sdpa.export_sdpa(real, args.export)
                print(f"wrote {args.export} (+ {sidecar})")
                if args.command == "export":
                    return 0
            t0 = time.time()
            rep = solve(real, SolverSettings(gap_tol=args.tol, feas_tol=args.tol))
            elapsed = time.time() - t0
            print(_summary(stats, rep, None, elapsed))
            _write_json(args.json, {"stats": stats, "status": rep.status,
                                    "opt": rep.pobj, "bound": rep.dobj,
                                    "iterations": rep.iterations, "time": elapsed})
            if rep.status in ("numerical-failure", "infeasible-detected", "max-iterations"):
                print(f"solver: {rep.status}", file=sys.stderr)
                return 3
            return 0

        if args.command == "acopf":
            case = opf.load_case(args.case)
            ac = None
            if args.ac_table:
                ac = opf.read_ac_table(args.ac_table).get(case.name)
            report, rep, model = opf.relax_and_solve(
                case, order=args.order, corr_extension=_EXT[args.ext],
                ts_extension=_EXT[args.ts_ext], k=_parse_k(args.k), ac=ac,
                settings=SolverSettings(gap_tol=args.tol, feas_tol=args.tol))
            print(_summary(model.statistics(), rep, report.gap, report.time))
            _write_json(args.json, report.to_dict())
            if rep.status in ("numerical-failure", "infeasible-detected", "max-iterations"):
                print(f"solver: {rep.status}", file=sys.stderr)
                return 3
            return 0
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
