"""Curve files, polyline CSV/OBJ export, and certificate serialisation.

Curve file grammar (line oriented, ``#`` starts a comment):

    version 1
    radius 0.75              # optional explicit pipe radius override
    segment degree=2
    0 0 0
    1 1 0
    2 0 0
    segment degree=1
    2 0 0
    3 0 0

Each segment lists degree+1 control points, one ``x y z`` row per line.
Floats are written with 17 significant digits so round-trips are exact.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .curve_core import BezierSegment, CompositeBezier, Polyline
from .errors import CurveFileError

FORMAT_VERSION = 1


def _fmt(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def parse_curve_text(text, name="<string>"):
    """Parse a curve document into (CompositeBezier, radius_override or None)."""
    version = None
    radius = None
    segments = []
    pending_degree = None
    pending_points = []
    pending_line = None

    def finish_segment(line_no):
        nonlocal pending_degree, pending_points, pending_line
        if pending_degree is None:
            return
        want = pending_degree + 1
        if len(pending_points) != want:
            raise CurveFileError(
                f"segment {len(segments)} declares degree {pending_degree} "
                f"but has {len(pending_points)} control points (need {want})",
                line=pending_line,
            )
        try:
            segments.append(BezierSegment(pending_points))
        except ValueError as exc:
            raise CurveFileError(f"segment {len(segments)}: {exc}", line=pending_line)
        pending_degree = None
        pending_points = []
        pending_line = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        key = fields[0].lower()
        if key == "version":
            if len(fields) != 2 or not fields[1].isdigit():
                raise CurveFileError("version needs one integer argument", line=line_no)
            version = int(fields[1])
            if version != FORMAT_VERSION:
                raise CurveFileError(f"unsupported format version {version}", line=line_no)
        elif key == "radius":
            if len(fields) != 2:
                raise CurveFileError("radius needs one numeric argument", line=line_no)
            try:
                radius = float(fields[1])
            except ValueError:
                raise CurveFileError(f"bad radius value {fields[1]!r}", line=line_no,
                                     column=len(fields[0]) + 2)
            if not (radius > 0.0 and math.isfinite(radius)):
                raise CurveFileError("radius must be a positive finite number",
                                     line=line_no)
        elif key == "segment":
            finish_segment(line_no)
            if len(fields) != 2 or not fields[1].startswith("degree="):
                raise CurveFileError("expected 'segment degree=<k>'", line=line_no)
            try:
                pending_degree = int(fields[1].split("=", 1)[1])
            except ValueError:
                raise CurveFileError(f"bad degree in {fields[1]!r}", line=line_no,
                                     column=len("segment ") + 1)
            if pending_degree < 1:
                raise CurveFileError("degree must be >= 1", line=line_no)
            pending_line = line_no
        else:
            if pending_degree is None:
                raise CurveFileError(f"unexpected token {fields[0]!r}", line=line_no,
                                     column=1)
            if len(fields) != 3:
                raise CurveFileError("control point rows need exactly 3 coordinates",
                                     line=line_no)
            try:
                pending_points.append([float(v) for v in fields])
            except ValueError:
                bad = next(v for v in fields if not _is_float(v))
                raise CurveFileError(f"bad coordinate {bad!r}", line=line_no,
                                     column=line.find(bad) + 1)

    finish_segment(None)
    if version is None:
        raise CurveFileError("missing 'version' line")
    if not segments:
        raise CurveFileError("curve file declares no segments")
    try:
        curve = CompositeBezier(segments)
    except ValueError as exc:
        raise CurveFileError(str(exc))
    return curve, radius


def _is_float(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def parse_curve_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CurveFileError(f"cannot read {path}: {exc}")
    return parse_curve_text(text, name=str(path))


def write_curve_file(path, curve, radius=None):
    lines = [f"version {FORMAT_VERSION}"]
    if radius is not None:
        lines.append(f"radius {_fmt(radius)}")
    for seg in curve.segments:
        lines.append(f"segment degree={seg.degree}")
        for p in seg.control_points:
            lines.append(" ".join(_fmt(v) for v in p))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_polyline_csv(path, polyline):
    """One 'x,y,z' vertex per line."""
    verts = getattr(polyline, "vertices", polyline)
    with open(path, "w", encoding="utf-8") as fh:
        for p in verts:
            fh.write(",".join(_fmt(v) for v in p) + "\n")


def read_polyline_csv(path, interval=(0.0, 1.0)):
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = [p for p in line.replace(",", " ").split() if p]
                if len(parts) != 3:
                    raise CurveFileError("polyline rows need 3 coordinates",
                                         line=line_no)
                try:
                    rows.append([float(v) for v in parts])
                except ValueError:
                    raise CurveFileError(f"bad coordinate in {line!r}", line=line_no)
    except OSError as exc:
        raise CurveFileError(f"cannot read {path}: {exc}")
    if len(rows) < 2:
        raise CurveFileError("polyline file needs at least 2 vertices")
    try:
        return Polyline(np.asarray(rows), interval)
    except ValueError as exc:
        raise CurveFileError(str(exc))


def write_polyline_obj(path, polyline):
    """Wavefront OBJ with a single polyline element."""
    verts = getattr(polyline, "vertices", polyline)
    with open(path, "w", encoding="utf-8") as fh:
        for p in verts:
            fh.write("v " + " ".join(_fmt(v) for v in p) + "\n")
        fh.write("l " + " ".join(str(i + 1) for i in range(len(verts))) + "\n")


# --- certificate serialisation -------------------------------------------

def _bound_report_dict(rep):
    if rep is None:
        return None
    return {
        "degree": rep.degree,
        "nu": rep.nu,
        "angle_log_floor": rep.angle_log_floor,
        "angle_iterations": rep.angle_iterations,
        "turning_iterations": rep.turning_iterations,
        "containment_iterations": rep.containment_iterations,
        "certified_iterations": rep.certified_iterations,
        "prior_bound": rep.prior_bound,
        "angle_dominates": rep.angle_dominates,
        "radius": rep.radius,
        "inputs": {
            "degree": rep.inputs.degree,
            "dist_const_hodo": rep.inputs.dist_const_hodo,
            "dist_const_curve": rep.inputs.dist_const_curve,
            "second_diff_hodo": rep.inputs.second_diff_hodo,
            "second_diff_curve": rep.inputs.second_diff_curve,
            "min_speed": rep.inputs.min_speed,
            "max_speed": rep.inputs.max_speed,
        },
    }


def certificate_dict(cert):
    """Deterministic dict form of a certificate (JSON-ready, no timestamps)."""
    clear, turn = cert.worst_margins()
    return {
        "tool": "knotcert",
        "version": cert.version,
        "verdict": cert.verdict,
        "iterations": cert.iterations,
        "grid_size": cert.grid_size,
        "curve_degrees": list(cert.curve_degrees),
        "pipe": {
            "r": cert.pipe.r,
            "kappa_max": cert.pipe.kappa_max,
            "d_min": cert.pipe.d_min,
            "r_end": cert.pipe.r_end,
            "radius_scale": cert.pipe.radius_scale,
            "source": cert.radius_source,
        },
        "bounds": _bound_report_dict(cert.bound_report),
        "segment_bounds": [_bound_report_dict(b) for b in cert.segment_bounds],
        "worst_containment_clearance": clear,
        "worst_turning_margin": turn,
        "pairs": [
            {
                "interval": list(p.interval),
                "containment_pass": p.containment_pass,
                "containment_clearance": p.containment_clearance,
                "worst_distance": p.worst_distance,
                "worst_residual": p.worst_residual,
                "turning_pass": p.turning_pass,
                "turning_value": p.turning_value,
                "total_turn": p.total_turn,
                "max_derivative_angle": p.max_derivative_angle,
                "turning_margin": p.turning_margin,
            }
            for p in cert.pair_reports
        ],
        "uniqueness": [
            {
                "interval": list(u.interval),
                "grid_size": u.grid_size,
                "polyline_ok": u.polyline_ok,
                "curve_ok": u.curve_ok,
                "violations": [list(v) for v in u.violations],
            }
            for u in cert.uniqueness_reports
        ],
        "correspondence_ok": cert.correspondence_ok,
        "notes": dict(cert.notes),
    }


def _emit_lines(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _emit_lines(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _emit_lines(f"{prefix}[{i}]", v, out)
    elif isinstance(value, float):
        out.append(f"{prefix} = {_fmt(value)}")
    elif value is None:
        out.append(f"{prefix} = none")
    else:
        out.append(f"{prefix} = {value}")


def certificate_text(cert):
    """Line-oriented key/value rendering with stable ordering."""
    out = []
    _emit_lines("", certificate_dict(cert), out)
    return "\n".join(out) + "\n"


def write_certificate(path_base, cert):
    """Write <base>.txt and <base>.json; returns both paths."""
    txt = str(path_base) + ".txt"
    jsn = str(path_base) + ".json"
    with open(txt, "w", encoding="utf-8") as fh:
        fh.write(certificate_text(cert))
    with open(jsn, "w", encoding="utf-8") as fh:
        json.dump(certificate_dict(cert), fh, indent=1)
        fh.write("\n")
    return txt, jsn
