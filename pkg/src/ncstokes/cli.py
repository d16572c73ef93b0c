"""Command-line front end: ``ncstokes {infsup,converge,equivalence,spurious}``.

Exit codes are 0 on success, 2 for usage errors and 3 for numerical
failures (a JSON diagnostic is written to stderr in that case).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .analysis import (
    ConvergenceReport,
    ManufacturedCase,
    check_doublings,
    convergence_study,
    equivalence_report,
    infsup_constant,
    spurious_modes,
)
from .assembly import TabulatedForcing
from .solver import DSSY_P0, P1NC_P0TILDE, P1NCB_P0, Q1_P0TILDE, NumericalError, PairSpec, solve_stokes

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

PAIR_IDS = {
    "p1nc-p0t": P1NC_P0TILDE,
    "p1ncb-p0": P1NCB_P0,
    "q1-p0t": Q1_P0TILDE,
    "dssy-p0": DSSY_P0,
}
# spurious mode analysis works on velocity spaces paired with full P0
SPURIOUS_IDS = {
    "p1nc-p0": "P1NC",
    "p1ncb-p0": "P1NCB",
    "dssy-p0": "DSSY",
    "q1-p0": "Q1",
}


class UsageError(ValueError):
    pass


def parse_n_list(text: str) -> list[int]:
    """``"4..32"`` expands to doublings ``[4, 8, 16, 32]``; ``"4,8,12"`` is taken as is."""
    text = text.strip()
    if not text:
        raise UsageError("empty mesh list")
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split(".."))
            if lo < 1 or hi < lo:
                raise UsageError(f"invalid range {text!r}")
            out = [lo]
            while out[-1] < hi:
                out.append(2 * out[-1])
            if out[-1] != hi:
                raise UsageError(f"range {text!r} is not a chain of doublings")
            return out
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse mesh list {text!r}") from None
    if not out:
        raise UsageError("empty mesh list")
    if any(n < 1 for n in out):
        raise UsageError("mesh sizes must be positive")
    return out


def _parse_reference(text: str) -> int:
    kind, _, n = text.partition(":")
    if kind.lower() != "dssy" or not n.isdigit() or int(n) < 2:
        raise UsageError(f"reference must look like dssy:N, got {text!r}")
    return int(n)


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, str)):
        return str(v)
    return repr(float(v))


def _table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _table_pretty(columns, rows) -> str:
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    cells = [[cell(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _emit(fmt: str, columns, rows, meta: dict) -> str:
    if fmt == "csv":
        return _table_csv(columns, rows)
    if fmt == "json":
        return json.dumps({"schema": 1, **meta, "rows": rows}, indent=2) + "\n"
    return _table_pretty(columns, rows)


# --------------------------------------------------------------------------
# subcommands


def _forcing(args):
    if args.forcing_file:
        if args.forcing_n is None:
            raise UsageError("--forcing-file needs --forcing-n (the mesh size it is tabulated on)")
        try:
            return TabulatedForcing.from_csv(args.forcing_file, args.forcing_n, args.quad)
        except OSError as exc:
            raise UsageError(f"cannot read forcing file: {exc}") from None
    if args.f_case == "const":
        return _unit_x_forcing
    return ManufacturedCase(int(args.f_case), args.nu)


def _unit_x_forcing(x, y):
    return np.ones_like(x), np.zeros_like(x)


def cmd_infsup(args) -> tuple[str, bool]:
    pair = PAIR_IDS[args.pair]
    rows = []
    for n in args.n:
        res = infsup_constant(PairSpec(pair, n, args.nu, args.quad), seed=args.seed)
        rows.append(
            {"n": n, "h": 1.0 / n, "beta": res.beta, "order": None, "method": res.method, "residual": res.residual}
        )
    for prev, cur in zip(rows, rows[1:]):
        cur["order"] = math.log(prev["beta"] / cur["beta"]) / math.log(cur["n"] / prev["n"])
    ok = all(r["residual"] <= 1e-6 * max(1.0, r["beta"] ** 2) for r in rows)
    columns = ("n", "h", "beta", "order", "method", "residual")
    return _emit(args.format, columns, rows, {"command": "infsup", "pair": pair}), ok


def cmd_converge(args) -> tuple[str, bool]:
    pair = PAIR_IDS[args.pair]
    ns = check_doublings(args.n)
    if args.reference:
        n_ref = _parse_reference(args.reference)
        if any(n_ref % n for n in ns):
            raise UsageError(f"reference mesh {n_ref} must be a multiple of every level")
        f = _forcing(args)
        ref = solve_stokes(PairSpec(DSSY_P0, n_ref, args.nu, args.quad), f)
        report = convergence_study(pair, ns, nu=args.nu, points_per_axis=args.quad, forcing=f, reference=ref)
    else:
        if args.forcing_file or args.f_case == "const":
            raise UsageError("a forcing without a manufactured solution needs --reference dssy:N")
        report = convergence_study(pair, ns, int(args.f_case), args.nu, args.quad)
    return _emit_convergence(args.format, report), True


def _emit_convergence(fmt: str, report: ConvergenceReport) -> str:
    if fmt == "csv":
        return report.to_csv()
    if fmt == "json":
        return report.to_json() + "\n"
    return _table_pretty(list(report.rows()[0].keys()), report.rows())


def cmd_equivalence(args) -> tuple[str, bool]:
    f = _forcing(args)
    rows = []
    for n in args.n:
        rep = equivalence_report(f, n, args.nu, args.quad)
        rows.append(rep.to_dict())
        rows[-1].pop("schema")
    columns = (
        "n",
        "max_velocity_difference",
        "predicted_alpha",
        "observed_alpha",
        "projection_residual",
        "bubble_coefficient",
        "bubble_checkerboard_pairing",
        "passed",
    )
    ok = all(r["passed"] for r in rows)
    return _emit(args.format, columns, rows, {"command": "equivalence"}), ok


def cmd_spurious(args) -> tuple[str, bool]:
    velocity = SPURIOUS_IDS[args.pair]
    rows = []
    for n in args.n:
        rep = spurious_modes(velocity, n)
        rows.append({"n": n, "dimension": rep.dimension, "checkerboard_cosine": rep.checkerboard_cosine})
    columns = ("n", "dimension", "checkerboard_cosine")
    return _emit(args.format, columns, rows, {"command": "spurious", "velocity": velocity}), True


COMMANDS = {
    "infsup": cmd_infsup,
    "converge": cmd_converge,
    "equivalence": cmd_equivalence,
    "spurious": cmd_spurious,
}


# --------------------------------------------------------------------------
# parser


def _n_list(text):
    try:
        return parse_n_list(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser, default_n: str):
    p.add_argument("--n", type=_n_list, default=parse_n_list(default_n),
                   help=f"mesh sizes, 'a..b' for doublings or a comma list (default {default_n})")
    p.add_argument("--nu", type=float, default=1.0, help="viscosity (default 1)")
    p.add_argument("--quad", type=int, default=4, help="Gauss points per axis (default 4)")
    p.add_argument("--format", choices=("csv", "json", "pretty"), default="csv", help="output format (default csv)")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, default=0, help="random seed for iterative eigen-solves (default 0)")


def _forcing_flags(p: argparse.ArgumentParser, default="1"):
    p.add_argument("--f-case", choices=("1", "2", "const"), default=default,
                   help="manufactured case 1 or 2, or 'const' for f = (1, 0) (default %(default)s)")
    p.add_argument("--forcing-file", help="CSV with columns j,k,q,f_x,f_y tabulated at Gauss points")
    p.add_argument("--forcing-n", type=int, help="mesh size the forcing file is tabulated on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncstokes", description="Nonconforming Stokes element experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infsup", help="discrete inf-sup constants over a mesh list")
    p.add_argument("--pair", choices=sorted(PAIR_IDS), default="p1nc-p0t", help="element pair")
    _common(p, "4..32")

    p = sub.add_parser("converge", help="error table against the manufactured or a reference solution")
    p.add_argument("--pair", choices=sorted(PAIR_IDS), default="p1nc-p0t", help="element pair")
    _forcing_flags(p)
    p.add_argument("--reference", help="compare against a DSSY x P0 solution on a finer mesh, e.g. dssy:512")
    _common(p, "4..128")

    p = sub.add_parser("equivalence", help="compare the reduced-pressure and bubble-enriched P1NC pairs")
    _forcing_flags(p)
    _common(p, "4..16")

    p = sub.add_parser("spurious", help="spurious pressure modes of B within mean-zero P0")
    p.add_argument("--pair", choices=sorted(SPURIOUS_IDS), default="p1nc-p0", help="velocity space paired with P0")
    _common(p, "2..8")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, ok = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"ncstokes {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        diag = {"schema": 1, "command": args.command, "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERICAL
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        diag = {"schema": 1, "command": args.command, "error": "ToleranceCheckFailed",
                "message": "one or more internal tolerance checks failed"}
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
