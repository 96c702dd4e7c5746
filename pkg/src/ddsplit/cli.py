"""Command line entry point: ``ddsplit {solve,sweep,verify}``."""

from __future__ import annotations

import argparse
import csv
import math
import re
import sys

import numpy as np

from .decomposition import DecompositionLayout, LayoutError, OperatorVariant
from .experiments import (
    ExactSolution,
    SweepKind,
    build_operators,
    emit_csv,
    error_epsilon,
    paper_sweep,
    run_sweep,
)
from .linalg_fem import Mesh1D, SingularMatrixError, interpolate, l2_project
from .schemes import DivergenceError, SchemeConfig, SchemeFamily, iter_scheme

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

_POW = re.compile(r"^\s*([0-9.]+)\s*\^\s*\(?\s*([+-]?[0-9.]+(?:/[0-9.]+)?)\s*\)?\s*$")


def parse_number(text: str) -> float:
    """Decimal or power notation such as ``2^-10`` or ``2^(-3/4)``."""
    m = _POW.match(text)
    try:
        if m:
            base, exp = m.groups()
            if "/" in exp:
                num, den = exp.split("/")
                e = float(num) / float(den)
            else:
                e = float(exp)
            return float(base) ** e
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_int(text: str) -> int:
    v = parse_number(text)
    if not math.isfinite(v) or v != round(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(round(v))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ddsplit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="single run on the model problem")
    s.add_argument("--scheme", choices=[f.value for f in SchemeFamily], default="factorized")
    s.add_argument("--sigma", type=parse_number, default=1.0)
    s.add_argument("--N", type=parse_int, default=1024)
    s.add_argument("--tau", type=parse_number, default=2.0**-10)
    s.add_argument("--T", type=parse_number, default=2.0**-4)
    s.add_argument("--H-inv", dest="H_inv", type=parse_int, default=2)
    s.add_argument("--q-cells", dest="q_cells", type=parse_int, default=1)
    s.add_argument("--variant", choices=[v.value for v in OperatorVariant], default="standard")
    s.add_argument("--projection", action="store_true",
                   help="L2-project the initial data instead of interpolating")
    s.add_argument("--monitor-csv", default="-", help="stability monitor series ('-' = stdout)")
    s.add_argument("--solution-csv", help="final-time nodal solution")

    w = sub.add_parser("sweep", help="one of the four parameter studies")
    w.add_argument("--kind", choices=[k.value for k in SweepKind], required=True)
    w.add_argument("--stride", type=parse_int, default=1, help="use every k-th gamma")
    w.add_argument("--output", default="-")

    sub.add_parser("verify", help="run the invariant self-checks")
    return p


def _open(path):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def cmd_solve(args) -> int:
    exact = ExactSolution(T=args.T)
    spec = exact.problem()
    mesh = Mesh1D(args.N)
    family = SchemeFamily(args.scheme)
    layout = None
    if family is not SchemeFamily.WEIGHTED:
        layout = DecompositionLayout(1.0 / args.H_inv, args.q_cells * mesh.h)
        layout.cells(mesh)
    ops = build_operators(mesh, spec, layout, OperatorVariant(args.variant))
    config = SchemeConfig.for_horizon(family, args.sigma, exact.T, args.tau)
    y0 = l2_project(mesh, spec.u0, ops.B) if args.projection else interpolate(mesh, spec.u0)

    out = _open(args.monitor_csv)
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["n", "t", "stability_lhs", "stability_rhs", "holds"])
    records = []
    try:
        for rec in iter_scheme(config, ops, y0):
            wr.writerow([rec.n, format(rec.t, ".17g"), format(rec.stability_lhs, ".17g"),
                         format(rec.stability_rhs, ".17g"), int(rec.estimate_holds)])
            records.append(rec)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.solution_csv:
        with open(args.solution_csv, "w", newline="") as fh:
            ws = csv.writer(fh, lineterminator="\n")
            ws.writerow(["x", "y", "exact"])
            last = records[-1]
            for x, y, u in zip(mesh.interior, last.y, interpolate(mesh, exact.u, last.t)):
                ws.writerow([format(x, ".17g"), format(y, ".17g"), format(u, ".17g")])

    eps = error_epsilon(records, exact, mesh, ops.B, y0)
    violations = sum(not r.estimate_holds for r in records)
    print(f"steps={config.steps} tau={config.tau:.6g} epsilon={eps:.6e} "
          f"estimate_violations={violations}", file=sys.stderr)
    guaranteed = (config.unconditionally_stable
                  and OperatorVariant(args.variant) is OperatorVariant.STANDARD)
    if violations and guaranteed:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = paper_sweep(args.kind)
    if args.stride > 1:
        spec = paper_sweep(args.kind, gammas=spec.gammas[::args.stride])
    result = run_sweep(spec)
    out = _open(args.output)
    try:
        emit_csv(result, out)
    finally:
        if out is not sys.stdout:
            out.close()
    for scheme in spec.schemes:
        parts = [f"{w}={result.slopes[scheme.id, w]:+.3f}" for w in ("first", "middle", "last")]
        print(f"slope {scheme.id:8s} " + " ".join(parts), file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks()
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_VERIFY


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}[args.command](args)
    except (LayoutError, ValueError) as exc:
        print(f"ddsplit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, SingularMatrixError) as exc:
        print(f"ddsplit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
