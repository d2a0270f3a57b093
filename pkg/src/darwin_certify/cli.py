"""Command line: ``darwin-certify {certify,sweep,ssb,validate} --scenario FILE``.

Exit status: 0 EMERGED (or valid scenario), 1 NOT_CERTIFIED or no spectrum
broadcast form, 2 usage error, 3 MARGINAL, 4 scenario validation error,
5 solver did not converge.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import pipeline
from ._lmi import ConvergenceError
from .qmath import ValidationError
from .scenario import SWEEPABLE, load_scenario

EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_MARGINAL, EXIT_INVALID, EXIT_SOLVER = 0, 1, 3, 4, 5


def _u64(text: str) -> int:
    val = int(text)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="darwin-certify",
                                 description="Certify classical objectivity and noncontextuality of observer channels.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--scenario", required=True, help="scenario file (JSON)")
        if out:
            p.add_argument("--out", help="output path (report .json, table .csv)")
        p.add_argument("--seed", type=_u64, help="override the scenario seed")
        p.add_argument("--tol", type=float, help="override the solver tolerance")

    common(sub.add_parser("certify", help="run the certification pipeline"))
    p = sub.add_parser("sweep", help="sweep one dynamics parameter")
    common(p)
    p.add_argument("--param", required=True, choices=sorted(SWEEPABLE))
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    common(sub.add_parser("ssb", help="check spectrum broadcast form"))
    common(sub.add_parser("validate", help="parse and validate a scenario"), out=False)
    return ap


def _dump(obj, path):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(rows, path):
    if not rows:
        return
    cols = list(rows[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(_cell(r[c]) for c in cols) + "\n")


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _certify(args, scn):
    stem = pipeline.stem_of(args.out) if args.out else None
    rep = pipeline.certify(scn, out_stem=stem, tol=args.tol)
    _dump(rep, args.out)
    if args.out:
        _table(pipeline.report_rows(rep), stem + ".csv")
    print(f"{scn.name}: eta = {rep['eta']['value']:.9f}, P_hat = {rep['cutoff']['p_hat']:.9f}, "
          f"verdict {rep['verdict']}", file=sys.stderr)
    return pipeline.exit_status(rep["verdict"])


def _sweep(args, scn):
    if args.steps < 1:
        raise ValidationError("--steps must be at least 1")
    rows, cross = pipeline.sweep(scn, args.param, args.start, args.stop, args.steps, tol=args.tol)
    out = args.out or f"{scn.name}_{args.param}_sweep.csv"
    pipeline.write_table(rows, out)
    if cross is None:
        print(f"no crossing of eta and P_hat on [{args.start:g}, {args.stop:g}]")
    else:
        print(f"eta crosses P_hat between {args.param} = {cross[0]:.12g} and {cross[1]:.12g}")
    print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    return EXIT_OK


def _ssb(args, scn):
    stem = pipeline.stem_of(args.out) if args.out else None
    rep = pipeline.ssb(scn, out_stem=stem, tol=args.tol)
    _dump(rep, args.out)
    if not rep["ssb"]:
        for v in rep["violations"]:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_NOT_CERTIFIED
    return EXIT_OK if all(rep["checks"].values()) else EXIT_NOT_CERTIFIED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = load_scenario(args.scenario, seed=args.seed)
        if args.command == "validate":
            print(f"{args.scenario}: ok ({scn.name}, {scn.t} observer(s), d_A = {scn.d_A})")
            return EXIT_OK
        return {"certify": _certify, "sweep": _sweep, "ssb": _ssb}[args.command](args, scn)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
