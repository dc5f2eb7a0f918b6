"""Command-line surface: analyze | bound | approximate | verify | animate.

Exit codes: 0 = PASS, 2 = verification FAIL, 3 = input error,
4 = resource/cap error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import (
    BoundInfeasibleError,
    CurveFileError,
    KnotCertError,
    RegularityError,
    ResourceLimitError,
    SelfIntersectionError,
)
from .fileio import (
    _fmt,
    certificate_dict,
    parse_curve_file,
    read_polyline_csv,
    write_certificate,
    write_polyline_csv,
    write_polyline_obj,
)
from .iteration_bounds import composite_bounds
from .isotopy_construct import build_isotopy_fields, sample_frames
from .pipeline import approximate, resolve_pipe, verify_external

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_INPUT = 3
EXIT_RESOURCE = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="knotcert",
        description="Certified knot-preserving PL approximation of Bezier curves",
    )
    parser.add_argument("--version", action="version", version=f"knotcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, radius=True):
        p.add_argument("curve_file", help="curve description file")
        if radius:
            p.add_argument("--radius", type=float, default=None,
                           help="explicit pipe radius override")
        p.add_argument("--radius-scale", type=float, default=1.0,
                       help="safety multiplier applied to the pipe radius")
        p.add_argument("--grid", type=int, default=257,
                       help="discs per sub-pair for uniqueness/correspondence; "
                            "containment sampling scales with it (default 257)")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="seed echoed into reports (all grids are fixed)")

    p = sub.add_parser("analyze", help="pipe radius and its ingredients")
    common(p)

    p = sub.add_parser("bound", help="a-priori subdivision iteration counts")
    common(p)

    p = sub.add_parser("approximate",
                       help="subdivide, verify, and emit polyline + certificate")
    common(p)
    p.add_argument("--iterations", type=int, default=None,
                   help="override the certified iteration count")
    p.add_argument("--retry-cap", type=int, default=3,
                   help="extra subdivisions allowed when verification fails")

    p = sub.add_parser("verify", help="verify an existing PL approximation")
    common(p)
    p.add_argument("polyline_file", help="CSV polyline (one x,y,z vertex per line)")

    p = sub.add_parser("animate", help="export deformation frames of the isotopy")
    common(p)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--retry-cap", type=int, default=3)
    p.add_argument("--steps", type=int, default=9, help="number of frames")
    p.add_argument("--samples", type=int, default=129,
                   help="curve samples per frame")
    return parser


def _load(args):
    curve, file_radius = parse_curve_file(args.curve_file)
    radius = args.radius if getattr(args, "radius", None) is not None else file_radius
    return curve, radius


def _stem(args):
    return Path(args.curve_file).stem


def _pipe_lines(pipe, source):
    return [
        f"pipe_radius = {_fmt(pipe.r)} ({source})",
        f"  1/kappa_max = {_fmt(float('inf') if pipe.kappa_max == 0 else 1.0 / pipe.kappa_max)}"
        f" (kappa_max = {_fmt(pipe.kappa_max)}, safety factor 1.02 applied)",
        f"  d_min = {_fmt(pipe.d_min)}",
        f"  r_end = {_fmt(pipe.r_end)}",
        f"  radius_scale = {_fmt(pipe.radius_scale)}",
    ]


def _cmd_analyze(args):
    curve, radius = _load(args)
    pipe, source = resolve_pipe(curve, radius=radius, radius_scale=args.radius_scale)
    lines = [f"knotcert {__version__} analysis", f"segments = {curve.num_segments}",
             f"degrees = {[s.degree for s in curve.segments]}"]
    lines += _pipe_lines(pipe, source)
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(args)
    (out / f"{stem}_analysis.txt").write_text(report, encoding="utf-8")
    payload = {
        "segments": curve.num_segments,
        "degrees": [s.degree for s in curve.segments],
        "pipe": {"r": pipe.r, "kappa_max": pipe.kappa_max, "d_min": pipe.d_min,
                 "r_end": pipe.r_end, "radius_scale": pipe.radius_scale,
                 "source": source},
    }
    (out / f"{stem}_analysis.json").write_text(
        json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    from .plotting import save_curve_figure

    save_curve_figure(out / f"{stem}_analysis.png", curve, title=f"{stem}: curve")
    return EXIT_PASS


def _cmd_bound(args):
    curve, radius = _load(args)
    pipe, source = resolve_pipe(curve, radius=radius, radius_scale=args.radius_scale)
    agg, per = composite_bounds(curve, pipe.r)
    lines = [f"knotcert {__version__} bounds", f"pipe_radius = {_fmt(pipe.r)} ({source})"]
    for label, rep in [("aggregate", agg)] + [(f"segment {i}", r)
                                              for i, r in enumerate(per)]:
        lines.append(f"[{label}]")
        lines.append(f"  degree = {rep.degree}")
        lines.append(f"  nu = {_fmt(rep.nu)}")
        lines.append(f"  angle_iterations = {rep.angle_iterations}")
        lines.append(f"  turning_iterations = {rep.turning_iterations}")
        lines.append(f"  containment_iterations = {rep.containment_iterations}")
        lines.append(f"  certified_iterations = {rep.certified_iterations}")
        lines.append(f"  prior_bound = {rep.prior_bound}")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(args)
    (out / f"{stem}_bounds.txt").write_text(report, encoding="utf-8")
    from .fileio import _bound_report_dict

    payload = {"pipe_radius": pipe.r, "source": source,
               "aggregate": _bound_report_dict(agg),
               "segments": [_bound_report_dict(r) for r in per]}
    (out / f"{stem}_bounds.json").write_text(
        json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return EXIT_PASS


def _containment_grid(grid):
    """Per-edge containment samples derived from the main disc grid."""
    return max(5, min(grid // 8, 33))


def _approximate_common(args):
    curve, radius = _load(args)
    pipe, source = resolve_pipe(curve, radius=radius, radius_scale=args.radius_scale)
    result, cert, agg = approximate(
        curve, pipe, radius_source=source,
        iterations=args.iterations,
        grid_size=_containment_grid(args.grid),
        uniqueness_grid=args.grid,
        retry_cap=args.retry_cap,
    )
    return curve, pipe, result, cert


def _cmd_approximate(args):
    curve, pipe, result, cert = _approximate_common(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(args)
    merged = result.merged_polyline()
    write_polyline_csv(out / f"{stem}_polyline.csv", merged)
    write_polyline_obj(out / f"{stem}_polyline.obj", merged)
    write_certificate(out / f"{stem}_certificate", cert)
    from .plotting import save_curve_figure

    save_curve_figure(out / f"{stem}_approximation.png", curve, merged,
                      title=f"{stem}: certified approximation ({cert.verdict})")
    clear, turn = cert.worst_margins()
    sys.stdout.write(
        f"{cert.verdict}: iterations={cert.iterations} vertices={len(merged)} "
        f"clearance={_fmt(clear)} turning_margin={_fmt(turn)}\n"
    )
    return EXIT_PASS if cert.passed else EXIT_FAIL


def _cmd_verify(args):
    curve, radius = _load(args)
    pipe, source = resolve_pipe(curve, radius=radius, radius_scale=args.radius_scale)
    polyline = read_polyline_csv(args.polyline_file)
    cert = verify_external(curve, polyline, pipe, radius_source=source,
                           grid_size=_containment_grid(args.grid),
                           uniqueness_grid=args.grid)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(args)
    write_certificate(out / f"{stem}_verify_certificate", cert)
    from .plotting import save_curve_figure

    save_curve_figure(out / f"{stem}_verify.png", curve, polyline,
                      title=f"{stem}: external polyline ({cert.verdict})")
    clear, turn = cert.worst_margins()
    sys.stdout.write(
        f"{cert.verdict}: clearance={_fmt(clear)} turning_margin={_fmt(turn)}\n"
    )
    return EXIT_PASS if cert.passed else EXIT_FAIL


def _cmd_animate(args):
    curve, pipe, result, cert = _approximate_common(args)
    if not cert.passed:
        sys.stderr.write("verification failed; no isotopy to animate\n")
        return EXIT_FAIL
    fields = build_isotopy_fields(result, cert)
    frames = sample_frames(fields, args.steps, args.samples)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(args)
    frame_dir = out / f"{stem}_frames"
    frame_dir.mkdir(exist_ok=True)
    for j, frame in enumerate(frames):
        write_polyline_csv(frame_dir / f"frame_{j:03d}.csv", frame)
        write_polyline_obj(frame_dir / f"frame_{j:03d}.obj", frame)
    from .plotting import save_frames_figure

    save_frames_figure(out / f"{stem}_frames.png", frames,
                       title=f"{stem}: isotopy frames")
    sys.stdout.write(f"PASS: wrote {len(frames)} frames to {frame_dir}\n")
    return EXIT_PASS


_COMMANDS = {
    "analyze": _cmd_analyze,
    "bound": _cmd_bound,
    "approximate": _cmd_approximate,
    "verify": _cmd_verify,
    "animate": _cmd_animate,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ResourceLimitError as exc:
        sys.stderr.write(f"resource error: {exc}\n")
        return EXIT_RESOURCE
    except (CurveFileError, RegularityError, SelfIntersectionError,
            BoundInfeasibleError, ValueError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except KnotCertError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
