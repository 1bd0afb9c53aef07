"""Command-line interface.

Subcommands run progressively more of the pipeline on a problem file:
``check`` (conditions), ``classify`` (slope family), ``synthesize``
(deformation), ``verify`` (deformed Euler-Lagrange residuals), ``report``
(everything including a trajectory pass), plus ``geodesic`` for raw
integration with CSV export.

Exit codes: 0 for DeformableRegular / DeformableSingular /
ConservativeAffineOnly, 1 for NotOfTheoremForm, 2 for Inconclusive,
3 for input errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .deformation import DeformedLagrangian
from .dynamics import IntegratorConfig, integrate_geodesic, trajectory_to_csv
from .expressions import ParseError
from .geometry import PhasePoint
from .pipeline import (
    ReportDocument,
    SchemaError,
    emit_report,
    load_problem,
    run_pipeline,
)

_VERDICT_EXIT = {
    "DeformableRegular": 0,
    "DeformableSingular": 0,
    "ConservativeAffineOnly": 0,
    "NotOfTheoremForm": 1,
    "Inconclusive": 2,
}

INPUT_ERROR = 3


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--problem", required=True, help="path to a problem JSON file")
    p.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    p.add_argument("--samples", type=int, default=None, help="override the sample count")
    p.add_argument("--tol", type=float, default=None, help="override the identity tolerance")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lagdeform",
        description="Decide whether forced Lagrange dynamics admit a scalar "
        "deformation with genuine Euler-Lagrange form, construct it, verify it.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check", "run the alignment/consistency condition checks"),
        ("classify", "check conditions and classify the slope family"),
        ("synthesize", "additionally synthesize the deformation"),
        ("verify", "additionally verify the deformed Euler-Lagrange equations"),
        ("report", "full pipeline including a trajectory pass"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
    g = sub.add_parser("geodesic", help="integrate a geodesic and export CSV")
    _add_common(g)
    g.add_argument("--x0", type=float, nargs="+", required=True, help="initial base point")
    g.add_argument("--y0", type=float, nargs="+", required=True, help="initial velocity")
    g.add_argument("--step", type=float, default=1e-3, help="integration step")
    g.add_argument("--horizon", type=float, default=1.0, help="integration horizon")
    g.add_argument("--csv", default=None, help="write the trajectory CSV here")
    return parser


def _load(args):
    spec = load_problem(args.problem)
    if args.seed is not None or args.samples is not None:
        spec = replace(
            spec,
            seed=args.seed if args.seed is not None else spec.seed,
            count=args.samples if args.samples is not None else spec.count,
        )
    if args.tol is not None:
        tolerances = dict(spec.tolerances)
        tolerances["identity"] = args.tol
        spec = replace(spec, tolerances=tolerances)
    return spec


def _write(args, payload: bytes):
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload.decode("utf-8"))


def _run_report(args, mode: str) -> int:
    spec = _load(args)
    doc = run_pipeline(spec, mode=mode)
    _write(args, emit_report(doc, args.format))
    return _VERDICT_EXIT[doc.verdict]


def _run_geodesic(args) -> int:
    spec = _load(args)
    if len(args.x0) != spec.n or len(args.y0) != spec.n:
        print(f"error: --x0/--y0 must have {spec.n} entries", file=sys.stderr)
        return INPUT_ERROR
    cfg = IntegratorConfig(
        step=args.step, horizon=args.horizon, initial=PhasePoint(args.x0, args.y0)
    )
    traj = integrate_geodesic(spec.spray, cfg, spec.params)
    doc = run_pipeline(spec, mode="synthesize")
    deformed = (
        DeformedLagrangian(spec.lagrangian, doc.deformation)
        if doc.deformation is not None
        else None
    )
    csv_text = trajectory_to_csv(traj, spec.lagrangian, deformed)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        summary = (
            f"geodesic: {len(traj.times) - 1} steps, h={traj.step:g}, "
            f"csv -> {args.csv}\n"
        )
        _write(args, summary.encode("utf-8"))
    else:
        _write(args, csv_text.encode("utf-8"))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "geodesic":
            return _run_geodesic(args)
        return _run_report(args, mode=args.command)
    except (SchemaError, ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
