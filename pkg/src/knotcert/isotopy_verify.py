"""Geometric verification of the two certification conditions per sub-pair.

Containment: every polyline point (except the shared endpoints) lies inside
the open pipe section of its sub-curve, established through the normal-disc
decomposition (distance below r plus an orthogonal projection residual).

Turning: total curvature of the polyline plus the worst derivative angle
stays below pi/2.

Passing pairs additionally get a disc-uniqueness sweep and an explicit
curve-to-polyline correspondence along normal discs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _pkg_version
from .curve_core import nearest_parameters
from .errors import DegenerateIncidenceError, InconsistencyError
from .geometry_analysis import PipeSpec, derivative_angle_profile, total_curvature

# Orthogonality residual allowance per query point: ORTHO_TOL * (1 + |q|).
ORTHO_TOL = 1e-7
# Margin subtracted from pi/2 in the turning comparison.
TURNING_MARGIN = 1e-9
# Coarse samples for nearest-parameter projection.
PROJECTION_COARSE = 256
# Relative tolerance deciding that an edge lies inside a cutting plane.
PLANE_TOL = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    """Pass/fail state and margins of both conditions for one sub-pair."""

    interval: tuple
    containment_pass: bool
    containment_clearance: float
    worst_distance: float
    worst_residual: float
    turning_pass: bool
    turning_value: float
    total_turn: float
    max_derivative_angle: float
    turning_margin: float

    @property
    def passed(self):
        return self.containment_pass and self.turning_pass


@dataclass(frozen=True)
class UniquenessReport:
    interval: tuple
    grid_size: int
    polyline_ok: bool
    curve_ok: bool
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return self.polyline_ok and self.curve_ok


class CorrespondenceTable:
    """Rows (t, C(t), image on the polyline) along shared normal discs.

    Image points must be strictly ordered along the polyline; violations
    raise InconsistencyError at construction.
    """

    __slots__ = ("params", "curve_points", "image_points", "arc_params")

    def __init__(self, params, curve_points, image_points, arc_params):
        arc = np.asarray(arc_params, dtype=float)
        diffs = np.diff(arc)
        if np.any(diffs <= 0.0):
            j = int(np.argmax(diffs <= 0.0))
            raise InconsistencyError(
                f"correspondence not strictly ordered along the polyline at "
                f"row {j + 1} (arc {arc[j]:.17g} -> {arc[j + 1]:.17g})"
            )
        self.params = np.asarray(params, dtype=float)
        self.curve_points = np.asarray(curve_points, dtype=float)
        self.image_points = np.asarray(image_points, dtype=float)
        self.arc_params = arc

    def __len__(self):
        return self.params.size


def check_containment(polyline, seg, r, grid_size=17):
    """Containment condition for one (polyline, sub-curve) pair.

    Samples all vertices plus grid_size interior points per edge, projects
    each onto the curve, and requires distance below r together with a
    near-orthogonal residual. The shared endpoints are exempt. Failures are
    reported, not raised.
    """
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError("containment check needs a positive finite radius")
    pts, endpoint = polyline.sample_points(grid_size)
    ts, dist = nearest_parameters(seg, pts, coarse=PROJECTION_COARSE)
    deriv = seg.derivatives_at(ts)
    speed = np.linalg.norm(deriv, axis=1)
    resid = np.abs(np.einsum("qd,qd->q", pts - seg.points_at(ts), deriv)) / speed
    allowance = ORTHO_TOL * (1.0 + np.linalg.norm(pts, axis=1))

    interior = ~endpoint
    worst_distance = float(dist[interior].max()) if np.any(interior) else 0.0
    worst_residual = float((resid[interior] - allowance[interior]).max()) \
        if np.any(interior) else -math.inf
    clearance = r - worst_distance
    ok = clearance > 0.0 and worst_residual <= 0.0
    return dict(
        containment_pass=bool(ok),
        containment_clearance=float(clearance),
        worst_distance=worst_distance,
        worst_residual=worst_residual,
    )


def check_turning(polyline, seg, grid_size=65):
    """Turning condition: total curvature + max derivative angle < pi/2."""
    total, _ = total_curvature(polyline)
    profile = derivative_angle_profile(seg, polyline, grid_size)
    value = total + profile.max_theta
    margin = math.pi / 2.0 - value
    return dict(
        turning_pass=bool(value < math.pi / 2.0 - TURNING_MARGIN),
        turning_value=float(value),
        total_turn=float(total),
        max_derivative_angle=float(profile.max_theta),
        turning_margin=float(margin),
    )


def evaluate_pair(polyline, seg, r, grid_size=33):
    c1 = check_containment(polyline, seg, r, grid_size=grid_size)
    c2 = check_turning(polyline, seg, grid_size=max(grid_size, 33))
    return ConditionReport(interval=seg.interval, **c1, **c2)


def _plane_edge_hits(center, normal, polyline, radius):
    """Intersections of the plane (center, normal) with polyline edges.

    Edges are half-open at their far vertex so a crossing through a shared
    vertex counts once; the final vertex belongs to the last edge. Returns
    (points, arc_params) for hits within ``radius`` of the center, in
    polyline order. An edge lying inside the plane raises.
    """
    v = polyline.vertices
    d = (v - center) @ normal
    scale = 1.0 + np.abs((v - center)).max()
    d = np.where(np.abs(d) <= PLANE_TOL * scale, 0.0, d)
    hits = []
    arcs = []
    m = v.shape[0] - 1
    for j in range(m):
        d0, d1 = d[j], d[j + 1]
        if d0 == 0.0 and d1 == 0.0:
            raise DegenerateIncidenceError(
                f"polyline edge {j} lies inside the cutting plane"
            )
        take = False
        if d0 == 0.0:
            s = 0.0
            take = True
        elif d0 * d1 < 0.0:
            s = d0 / (d0 - d1)
            take = True
        elif d1 == 0.0 and j == m - 1:
            s = 1.0
            take = True
        if take:
            x = v[j] + s * (v[j + 1] - v[j])
            if np.linalg.norm(x - center) <= radius:
                hits.append(x)
                arcs.append((j + s) / m)
    return hits, arcs


def disc_polyline_intersections(seg, t, r, polyline):
    """Points where the normal disc of seg at local t meets the polyline."""
    center = seg.point_at(t)
    deriv = seg.derivative_at(t)
    normal = deriv / np.linalg.norm(deriv)
    hits, _ = _plane_edge_hits(center, normal, polyline, r)
    return hits


def _count_polyline_hits(cpts, normals, polyline, r):
    """Hit counts of every disc plane against the polyline, vectorised.

    Rows indexed by disc; half-open edge convention as in _plane_edge_hits.
    Raises on an edge lying inside any plane.
    """
    v = polyline.vertices
    m = v.shape[0] - 1
    d = np.einsum("vd,td->tv", v, normals) - np.einsum("td,td->t", cpts, normals)[:, None]
    scale = 1.0 + np.abs(v).max() + np.abs(cpts).max()
    d = np.where(np.abs(d) <= PLANE_TOL * scale, 0.0, d)
    d0 = d[:, :-1]
    d1 = d[:, 1:]
    if np.any((d0 == 0.0) & (d1 == 0.0)):
        ti, ej = np.argwhere((d0 == 0.0) & (d1 == 0.0))[0]
        raise DegenerateIncidenceError(
            f"polyline edge {ej} lies inside the cutting plane of disc {ti}"
        )
    take = (d0 == 0.0) | (d0 * d1 < 0.0)
    take[:, -1] |= (d1[:, -1] == 0.0) & (d0[:, -1] != 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(d0 == 0.0, 0.0, d0 / (d0 - d1))
    s = np.where((d1 == 0.0) & (d0 != 0.0), 1.0, s)
    s = np.where(take, s, 0.0)
    x = v[None, :-1, :] + s[:, :, None] * (v[1:] - v[:-1])[None, :, :]
    within = np.linalg.norm(x - cpts[:, None, :], axis=2) <= r
    return (take & within).sum(axis=1)


def _count_curve_hits(seg, cpts, normals, r, s_count):
    """Per-disc count of curve/plane crossings landing inside the disc."""
    ss = np.linspace(0.0, 1.0, s_count)
    curve_pts = seg.points_at(ss)
    g = np.einsum("sd,td->ts", curve_pts, normals) - np.einsum(
        "td,td->t", cpts, normals)[:, None]
    gscale = 1.0 + np.abs(curve_pts).max()
    g = np.where(np.abs(g) <= PLANE_TOL * gscale, 0.0, g)

    t_count = cpts.shape[0]
    counts = np.zeros(t_count, dtype=int)

    # crossings landing exactly on sample nodes
    node_zero = g == 0.0
    node_dist = np.linalg.norm(curve_pts[None, :, :] - cpts[:, None, :], axis=2)
    counts += (node_zero & (node_dist <= r)).sum(axis=1)

    # strict sign changes, sharpened by vectorised bisection
    rows, cols = np.where(g[:, :-1] * g[:, 1:] < 0.0)
    if rows.size:
        lo = ss[cols].copy()
        hi = ss[cols + 1].copy()
        flo = g[rows, cols].copy()
        off = np.einsum("td,td->t", cpts, normals)[rows]
        nrm = normals[rows]
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            fm = np.einsum("kd,kd->k", seg.points_at(mid), nrm) - off
            neg = (flo < 0) == (fm < 0)
            lo = np.where(neg, mid, lo)
            flo = np.where(neg, fm, flo)
            hi = np.where(neg, hi, mid)
        mid = 0.5 * (lo + hi)
        dist = np.linalg.norm(seg.points_at(mid) - cpts[rows], axis=1)
        inside = dist <= r
        counts += np.bincount(rows[inside], minlength=t_count)
    return counts


def verify_unique_disc_intersections(seg, polyline, r, grid_size=257,
                                     curve_samples=None):
    """Check each normal disc on a parameter grid meets L once and C once.

    The curve side looks for sign changes of the signed plane distance along
    a dense parameter sample, sharpens each crossing by bisection, and keeps
    crossings landing inside the disc. Report-based: violations are listed,
    nothing is raised except for degenerate incidences.
    """
    ts = np.linspace(0.0, 1.0, grid_size)
    cpts = seg.points_at(ts)
    derivs = seg.derivatives_at(ts)
    normals = derivs / np.linalg.norm(derivs, axis=1, keepdims=True)

    poly_counts = _count_polyline_hits(cpts, normals, polyline, r)
    curve_counts = _count_curve_hits(seg, cpts, normals, r,
                                     curve_samples or max(grid_size, 129))

    violations = []
    for i in np.where(poly_counts != 1)[0]:
        violations.append((float(ts[i]), "polyline", int(poly_counts[i])))
    for i in np.where(curve_counts != 1)[0]:
        violations.append((float(ts[i]), "curve", int(curve_counts[i])))

    return UniquenessReport(
        interval=seg.interval,
        grid_size=grid_size,
        polyline_ok=bool(np.all(poly_counts == 1)),
        curve_ok=bool(np.all(curve_counts == 1)),
        violations=violations,
    )


def build_correspondence(seg, polyline, r, grid_size=257):
    """Correspondence table t -> unique disc/polyline intersection.

    Requires uniqueness to have been verified; a non-unique intersection
    raises InconsistencyError.
    """
    ts = np.linspace(0.0, 1.0, grid_size)
    cpts = seg.points_at(ts)
    derivs = seg.derivatives_at(ts)
    normals = derivs / np.linalg.norm(derivs, axis=1, keepdims=True)
    images = np.empty_like(cpts)
    arcs = np.empty(ts.size)
    for i, t in enumerate(ts):
        hits, hit_arcs = _plane_edge_hits(cpts[i], normals[i], polyline, r)
        if len(hits) != 1:
            raise InconsistencyError(
                f"expected a unique disc/polyline intersection at t={t:.17g}, "
                f"found {len(hits)}"
            )
        images[i] = hits[0]
        arcs[i] = hit_arcs[0]
    return CorrespondenceTable(ts, cpts, images, arcs)


@dataclass
class IsotopyCertificate:
    """Aggregated verification outcome with the provenance of every number."""

    version: str
    verdict: str
    iterations: int
    grid_size: int
    pipe: PipeSpec
    radius_source: str
    pair_reports: list
    uniqueness_reports: list
    correspondence_ok: bool
    bound_report: object = None
    segment_bounds: list = field(default_factory=list)
    curve_degrees: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "PASS"

    def worst_margins(self):
        clear = min((p.containment_clearance for p in self.pair_reports),
                    default=math.inf)
        turn = min((p.turning_margin for p in self.pair_reports), default=math.inf)
        return clear, turn


def _verify_pairs_generic(curve, result, pairs, pipe, grid_size, ugrid,
                          bound_report, segment_bounds, radius_source):
    pair_reports = []
    uniq_reports = []
    correspondence_ok = True
    for poly, sub in pairs:
        rep = evaluate_pair(poly, sub, pipe.r, grid_size=grid_size)
        pair_reports.append(rep)
        if rep.passed:
            uniq = verify_unique_disc_intersections(sub, poly, pipe.r,
                                                    grid_size=ugrid)
            uniq_reports.append(uniq)
            if uniq.passed:
                try:
                    build_correspondence(sub, poly, pipe.r, grid_size=ugrid)
                except InconsistencyError:
                    correspondence_ok = False
    all_pass = (all(p.passed for p in pair_reports)
                and all(u.passed for u in uniq_reports)
                and correspondence_ok)
    return IsotopyCertificate(
        version=_pkg_version,
        verdict="PASS" if all_pass else "FAIL",
        iterations=result.iterations,
        grid_size=grid_size,
        pipe=pipe,
        radius_source=radius_source,
        pair_reports=pair_reports,
        uniqueness_reports=uniq_reports,
        correspondence_ok=correspondence_ok,
        bound_report=bound_report,
        segment_bounds=segment_bounds or [],
        curve_degrees=[s.degree for s in getattr(curve, "segments", [curve])],
        notes=default_notes(getattr(pipe, "radius_scale", 1.0)),
    )


def default_notes(radius_scale=1.0):
    """Decision notes echoed into every certificate."""
    return {
        "curvature_safety_factor": 1.02,
        "radius_scale": radius_scale,
        "log_base": 2,
        "derivative_scale_standin": "max hodograph control-point norm",
        "turning_threshold": "half threshold (1 - cos = 1/2) in the direct branch",
        "sub_pipe_radius": "single global radius for all sub-sections",
        "orthogonality_tolerance": "1e-7 * (1 + |q|)",
        "turning_margin": TURNING_MARGIN,
        "projection": f"{PROJECTION_COARSE} coarse samples + golden section to 1e-12",
    }


def verify_composite(curve, result, pipe, grid_size=33, uniqueness_grid=None,
                     bound_report=None, segment_bounds=None, radius_source="computed"):
    """Run both conditions plus uniqueness and correspondence per sub-pair.

    Sub-pairs are processed in degree groups through vectorised kernels
    (identical arithmetic to the per-pair operations). Any sub-pair failure
    marks the certificate FAILED (margins are still recorded); callers may
    subdivide once more and retry.
    """
    from . import _batch
    from .curve_core import BezierSegment

    if not (pipe.r > 0.0 and math.isfinite(pipe.r)):
        raise ValueError("verification requires a finite positive pipe radius")
    ugrid = uniqueness_grid or max(grid_size, 65)
    pairs = list(result.pairs())

    if not all(isinstance(sub, BezierSegment) for _, sub in pairs):
        # generic evaluators (e.g. a whole composite curve): per-pair path
        return _verify_pairs_generic(curve, result, pairs, pipe, grid_size,
                                     ugrid, bound_report, segment_bounds,
                                     radius_source)

    by_degree = {}
    for i, (poly, sub) in enumerate(pairs):
        by_degree.setdefault(sub.degree, []).append(i)

    pair_reports = [None] * len(pairs)
    turning_grid = max(grid_size, 33)
    for degree, idxs in sorted(by_degree.items()):
        nets = np.stack([pairs[i][1].control_points for i in idxs])
        verts = np.stack([pairs[i][0].vertices for i in idxs])
        clearance, worst_d, worst_res = _batch.containment_batch(
            nets, verts, pipe.r, per_edge=grid_size, ortho_tol=ORTHO_TOL,
            coarse=PROJECTION_COARSE)
        total, max_theta = _batch.turning_batch(nets, verts, turning_grid)
        for j, i in enumerate(idxs):
            value = float(total[j] + max_theta[j])
            pair_reports[i] = ConditionReport(
                interval=pairs[i][1].interval,
                containment_pass=bool(clearance[j] > 0.0 and worst_res[j] <= 0.0),
                containment_clearance=float(clearance[j]),
                worst_distance=float(worst_d[j]),
                worst_residual=float(worst_res[j]),
                turning_pass=bool(value < math.pi / 2.0 - TURNING_MARGIN),
                turning_value=value,
                total_turn=float(total[j]),
                max_derivative_angle=float(max_theta[j]),
                turning_margin=float(math.pi / 2.0 - value),
            )

    uniq_reports = []
    correspondence_ok = True
    ts_grid = np.linspace(0.0, 1.0, ugrid)
    for degree, idxs in sorted(by_degree.items()):
        passed = [i for i in idxs if pair_reports[i].passed]
        if not passed:
            continue
        nets = np.stack([pairs[i][1].control_points for i in passed])
        verts = np.stack([pairs[i][0].vertices for i in passed])
        poly_counts, curve_counts, degenerate = _batch.disc_hits_batch(
            nets, verts, pipe.r, ugrid, max(ugrid, 129), PLANE_TOL)
        if degenerate:
            pi, gi, ei = degenerate[0]
            raise DegenerateIncidenceError(
                f"polyline edge {ei} lies inside the cutting plane of disc {gi} "
                f"(pair interval {pairs[passed[pi]][1].interval})"
            )
        _, arcs, ccounts, _ = _batch.correspondence_batch(
            nets, verts, pipe.r, ugrid, PLANE_TOL)
        for j, i in enumerate(passed):
            violations = []
            for gi in np.where(poly_counts[j] != 1)[0]:
                violations.append((float(ts_grid[gi]), "polyline",
                                   int(poly_counts[j][gi])))
            for gi in np.where(curve_counts[j] != 1)[0]:
                violations.append((float(ts_grid[gi]), "curve",
                                   int(curve_counts[j][gi])))
            uniq = UniquenessReport(
                interval=pairs[i][1].interval,
                grid_size=ugrid,
                polyline_ok=bool(np.all(poly_counts[j] == 1)),
                curve_ok=bool(np.all(curve_counts[j] == 1)),
                violations=violations,
            )
            uniq_reports.append(uniq)
            if uniq.passed and np.any(np.diff(arcs[j]) <= 0.0):
                correspondence_ok = False

    all_pass = (all(p.passed for p in pair_reports)
                and all(u.passed for u in uniq_reports)
                and correspondence_ok)
    return IsotopyCertificate(
        version=_pkg_version,
        verdict="PASS" if all_pass else "FAIL",
        iterations=result.iterations,
        grid_size=grid_size,
        pipe=pipe,
        radius_source=radius_source,
        pair_reports=pair_reports,
        uniqueness_reports=uniq_reports,
        correspondence_ok=correspondence_ok,
        bound_report=bound_report,
        segment_bounds=segment_bounds or [],
        curve_degrees=[s.degree for s in getattr(curve, "segments", [curve])],
        notes=default_notes(getattr(pipe, "radius_scale", 1.0)),
    )
