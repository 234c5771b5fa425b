"""Command-line entry point: ``wornstones <subcommand> [options]``.

Subcommands
-----------
solve       torsion or eigenvalue solve with Pohozaev certification
measures    dump surface-area, cone-volume and first-variation measures
verify      inequality suite over a body corpus
flow        integrate the worn-stone flow and write its trace
logbm-rect  log-Brunn-Minkowski tables on rectangles

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 solver or flow
failure.  Options may also come from a JSON file given with ``--config``; keys
are option names with dashes replaced by underscores, and explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .bodies import load
from .errors import (
    AtomsPresent,
    BodyFileError,
    DimensionError,
    GeometryError,
    StepFailure,
    WornStonesError,
)
from .flow import SNAPSHOT_STRIDE, FlowConfig, run
from .geometry import DEFAULT_N_ANGLES, AngleGrid, ConvexPolygon, SupportFunction
from .inequalities import (
    DEFAULT_CORPUS,
    DEFAULT_MESH_TARGET,
    DEFAULT_RECT_ELLS,
    DEFAULT_RECT_LAMS,
    SUITE_CHECKS,
    InequalityReport,
    rectangle_logbm_table,
    run_suite,
)
from .measures import (
    cone_energy_measure,
    cone_volume_measure,
    constant_density_deficit,
    first_variation_measure,
    surface_area_measure,
)
from .mesh import mesh_body
from .pde import EIGENVALUE, FUNCTIONALS, TORSION, boundary_trace, solve

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

FLOW_DEFAULT_BODY = "ellipse:1.3:0.7692307692307692"


class InputError(Exception):
    """Bad flags or config file."""


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _outdir(path) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {p}: {exc.strerror}") from None
    return p


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _resolution(args, body) -> dict:
    n = body.n_angles if isinstance(body, SupportFunction) else None
    return {"n_angles": n, "mesh_target": args.mesh_target}


# --------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    body = load(args.body, args.n_angles)
    energy, u = solve(body, args.functional, args.mesh_target)
    trace = boundary_trace(u, body)
    report = {
        "body": args.body, "functional": args.functional, "energy": energy,
        "pohozaev_residual": trace.pohozaev_residual, "certified": trace.certified,
        "gradient_integral": trace.gradient_integral(), **u.report(), **_resolution(args, body),
    }
    text = _dump(report)
    print(text)
    out = _outdir(args.out)
    if out is not None:
        (out / "solve.json").write_text(text + "\n")
        if args.write_mesh:
            (out / "mesh.json").write_text(mesh_body(body, args.mesh_target).to_json() + "\n")
    return EXIT_OK


def cmd_measures(args) -> int:
    body = load(args.body, args.n_angles)
    energy, u = solve(body, args.functional, args.mesh_target)
    trace = boundary_trace(u, body)
    mu = first_variation_measure(trace)
    grid = body.grid if isinstance(body, SupportFunction) else AngleGrid(args.n_angles)
    measures = {
        "surface_area": surface_area_measure(body, grid),
        "cone_volume": cone_volume_measure(body, grid),
        "first_variation": mu,
        "cone_energy": cone_energy_measure(body, mu),
    }
    report = {
        "body": args.body, "functional": args.functional, "energy": energy,
        "pohozaev_residual": trace.pohozaev_residual, **_resolution(args, body),
        "total_variation": {k: m.total_variation for k, m in measures.items()},
    }
    try:
        report["deficit"] = constant_density_deficit(measures["cone_energy"])
    except AtomsPresent:
        report["deficit"] = None
        report["atoms"] = measures["cone_volume"].sidecar()["atoms"]
    print(_dump(report))
    out = _outdir(args.out)
    if out is not None:
        for name, m in measures.items():
            m.dump(out / name)
        (out / "measures.json").write_text(_dump(report) + "\n")
    return EXIT_OK


def _write_reports(rows: Sequence[InequalityReport], out: Optional[Path], stem: str,
                   extra_cols: Sequence[str] = ()) -> str:
    cols = ["name", "body", "lhs", "rhs", "margin", "tol", "pass", "near_equality", *extra_cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = {**r.row(), **r.meta}
        w.writerow([_cell(d.get(c)) for c in cols])
    text = buf.getvalue()
    if out is not None:
        (out / f"{stem}.csv").write_text(text)
        summary = {
            "n_checks": len(rows), "n_failed": sum(not r.passed for r in rows),
            "failed": [f"{r.name}@{r.body}" for r in rows if not r.passed],
            "rows": [r.to_dict() for r in rows],
        }
        (out / f"{stem}.json").write_text(_dump(summary) + "\n")
    return text


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def cmd_verify(args) -> int:
    labels = args.body or list(DEFAULT_CORPUS)
    corpus = [(label, load(label, args.n_angles)) for label in labels]
    rows = run_suite(corpus, args.mesh_target, args.only, args.tol_scale)
    if not rows:
        raise InputError("no checks selected")
    for r in rows:
        r.meta.setdefault("n_angles", args.n_angles)
    text = _write_reports(rows, _outdir(args.out), "verify",
                          extra_cols=("n_angles", "mesh_target", "pohozaev_residual"))
    if args.out is None:
        sys.stdout.write(text)
    failed = [r for r in rows if not r.passed]
    print(f"# {len(rows) - len(failed)}/{len(rows)} checks passed "
          f"(n_angles={args.n_angles}, mesh_target={args.mesh_target})", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_logbm_rect(args) -> int:
    rows = []
    for functional in args.functional:
        rows.extend(rectangle_logbm_table(args.ells, args.lams, functional))
    text = _write_reports(rows, _outdir(args.out), "logbm_rect",
                          extra_cols=("l1", "l2", "lambda", "l", "series_terms"))
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def cmd_flow(args) -> int:
    body = load(args.body, args.n_angles)
    if isinstance(body, ConvexPolygon):
        raise InputError("the flow needs a smooth body (support-function fixture or file)")
    cfg = FlowConfig(
        functional=args.functional, a=args.a, dt_init=args.dt_init, dt_min=args.dt_min,
        dt_max=args.dt_max, t_end=args.t_end, grid=body.grid, mesh_target=args.mesh_target,
        cutoff=args.cutoff,
    )
    out = _outdir(args.out)
    code = EXIT_OK
    try:
        trace = run(body, cfg)
    except StepFailure as exc:
        if exc.trace is None or not exc.trace.states:
            raise
        print(f"error: {exc}", file=sys.stderr)
        trace, code = exc.trace, EXIT_SOLVER
    trace.to_csv(out / "trace.csv")
    trace.write_bodies(out / "bodies", args.snapshot_stride)
    trace.to_svg(out / "strip.svg", args.snapshot_stride)
    last = trace.states[-1]
    summary = {
        "body": args.body, "config": cfg.to_dict(), "steps": len(trace.log),
        "rejections": sum(r.rejections for r in trace.log), "t_final": last.t,
        "F_tilde_drift": abs(last.F_tilde - trace.states[0].F_tilde) / trace.states[0].F_tilde,
        "max_pohozaev_residual": trace.max_residual, "final_deficit": last.deficit,
        "final_dist_to_disk": last.dist_to_disk,
        "fitted_log_F_slope": trace.fitted_exponent() if len(trace.states) > 2 else None,
        "expected_log_F_slope": -cfg.alpha * cfg.gamma, "completed": code == EXIT_OK,
    }
    (out / "flow.json").write_text(_dump(summary) + "\n")
    print(_dump(summary))
    return code


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, body_default: Optional[str] = "disk") -> None:
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--n-angles", type=int, default=DEFAULT_N_ANGLES,
                   help="angle grid size for support-function bodies (default %(default)s)")
    p.add_argument("--mesh-target", type=float, default=DEFAULT_MESH_TARGET,
                   help="mesh size (relative to mean(h) for the flow; default %(default)s)")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wornstones", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve on one body and report the energy")
    _common(p)
    p.add_argument("--body", default="disk", help="fixture string or body JSON file")
    p.add_argument("--functional", choices=FUNCTIONALS, default=TORSION)
    p.add_argument("--write-mesh", action="store_true", help="also write mesh.json to --out")
    p.set_defaults(func=cmd_solve, subparser=p)

    p = sub.add_parser("measures", help="dump the measures of one body")
    _common(p)
    p.add_argument("--body", default="disk")
    p.add_argument("--functional", choices=FUNCTIONALS, default=TORSION)
    p.set_defaults(func=cmd_measures, subparser=p)

    p = sub.add_parser("verify", help="run the inequality suite")
    _common(p)
    p.add_argument("--body", action="append",
                   help="body to include (repeatable; default: the built-in corpus)")
    p.add_argument("--only", action="append", choices=SUITE_CHECKS,
                   help="run only this check (repeatable)")
    p.add_argument("--tol-scale", type=float, default=1.0,
                   help="multiply every tolerance; a negative value demands a strict margin")
    p.set_defaults(func=cmd_verify, subparser=p)

    p = sub.add_parser("flow", help="integrate the worn-stone flow")
    _common(p)
    p.add_argument("--body", default=FLOW_DEFAULT_BODY)
    p.add_argument("--functional", choices=FUNCTIONALS, default=TORSION)
    p.add_argument("--a", type=float, default=1.0, help="wear constant")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--dt-init", type=float, default=1e-3)
    p.add_argument("--dt-min", type=float, default=1e-8)
    p.add_argument("--dt-max", type=float, default=1e-3)
    p.add_argument("--cutoff", type=int, default=None,
                   help="highest Fourier mode kept after each step (default n_angles/4, 0 = off)")
    p.add_argument("--snapshot-stride", type=int, default=SNAPSHOT_STRIDE,
                   help="write every k-th snapshot to bodies/ and the SVG strip")
    p.set_defaults(func=cmd_flow, subparser=p)

    p = sub.add_parser("logbm-rect", help="log-Brunn-Minkowski tables for rectangles")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--ells", type=_floats, default=list(DEFAULT_RECT_ELLS),
                   help="comma-separated side ratios (default %(default)s)")
    p.add_argument("--lams", type=_floats, default=list(DEFAULT_RECT_LAMS),
                   help="comma-separated weights in (0, 1) (default %(default)s)")
    p.add_argument("--functional", action="append", choices=(TORSION, EIGENVALUE),
                   help="table to compute (repeatable; default both)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_logbm_rect, subparser=p)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InputError(f"{args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise InputError(f"{args.config}: top level must be an object")
        unknown = set(doc) - (set(vars(args)) - {"func", "subparser", "command", "config"})
        if unknown:
            raise InputError(f"{args.config}: unknown options {sorted(unknown)}")
        args.subparser.set_defaults(**doc)
        args = parser.parse_args(argv)
    return args


def _validate(args) -> None:
    if getattr(args, "mesh_target", 1.0) <= 0:
        raise InputError("--mesh-target must be positive")
    if args.command == "logbm-rect":
        args.functional = args.functional or [EIGENVALUE, TORSION]
        if any(x <= 0 for x in args.ells):
            raise InputError("--ells must be positive")
        if any(not 0 < x < 1 for x in args.lams):
            raise InputError("--lams must lie in (0, 1)")
    if args.command == "flow" and args.out is None:
        raise InputError("flow needs --out")
    if args.command == "flow" and args.snapshot_stride < 1:
        raise InputError("--snapshot-stride must be at least 1")
    if args.command == "verify" and not np.isfinite(args.tol_scale):
        raise InputError("--tol-scale must be finite")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, list(sys.argv[1:] if argv is None else argv))
        _validate(args)
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    except (InputError, BodyFileError, GeometryError, DimensionError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WornStonesError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
