"""Differential and global geometric quantities of curves and polylines.

Everything here feeds the pipe radius r = min(1/kappa_max, d_min, r_end)
and the turning-condition ingredients: total curvature of a polyline and
the angle profile between a curve derivative and a polyline derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .curve_core import BezierSegment, CompositeBezier
from .errors import RegularityError, SelfIntersectionError

# Sampled maximisation of curvature is not a certified global optimiser;
# the result is inflated by this factor before entering the pipe radius.
KAPPA_SAFETY = 1.02

_TINY = 1e-300


def angle_between(u, v):
    """Angle between two nonzero vectors, in [0, pi].

    Uses atan2(|u x v|, u.v), which stays accurate near 0 and pi.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("angle undefined for zero vector")
    cross = np.cross(u, v)
    return float(np.arctan2(np.linalg.norm(cross), float(u @ v)))


def angles_between(U, V):
    """Vectorised angle_between over matching rows of (m, 3) arrays."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    nu = np.linalg.norm(U, axis=1)
    nv = np.linalg.norm(V, axis=1)
    if np.any(nu == 0.0) or np.any(nv == 0.0):
        raise ValueError("angle undefined for zero vector")
    cross = np.linalg.norm(np.cross(U, V), axis=1)
    dot = np.einsum("md,md->m", U, V)
    return np.arctan2(cross, dot)


def total_curvature(polyline_or_vertices):
    """Total curvature of a polyline: the sum of its exterior angles.

    Returns (total, exterior_angles). A 2-vertex polyline has total 0.
    """
    verts = getattr(polyline_or_vertices, "vertices", polyline_or_vertices)
    verts = np.asarray(verts, dtype=float)
    if verts.ndim != 2 or verts.shape[0] < 2:
        raise ValueError("polyline needs at least 2 vertices")
    edges = np.diff(verts, axis=0)
    if np.any(np.linalg.norm(edges, axis=1) == 0.0):
        raise ValueError("repeated consecutive vertices")
    if edges.shape[0] < 2:
        return 0.0, np.zeros(0)
    ang = angles_between(edges[:-1], edges[1:])
    return float(ang.sum()), ang


def angle_chain_slack(vectors):
    """Sum of consecutive angles minus the end-to-end angle of a vector chain.

    Nonnegative for every chain of nonzero vectors (up to roundoff); used as
    an inequality certificate by the test suite.
    """
    vecs = np.asarray(vectors, dtype=float)
    if vecs.shape[0] < 3:
        raise ValueError("chain needs at least 3 vectors")
    consecutive = angles_between(vecs[:-1], vecs[1:]).sum()
    return float(consecutive - angle_between(vecs[0], vecs[-1]))


@dataclass(frozen=True)
class AngleProfile:
    """Sampled angle between curve derivative and polyline derivative."""

    params: np.ndarray
    angles: np.ndarray
    max_theta: float

    @property
    def samples(self):
        return np.column_stack([self.params, self.angles])


@dataclass(frozen=True)
class CurvatureReport:
    kappa_max: float
    argmax_t: float
    total_curvature_polyline: float
    exterior_angles: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class PipeSpec:
    """Radius of a nonsingular pipe around a curve, with its ingredients.

    r = radius_scale * min(1/kappa_max, d_min, r_end), where kappa_max is
    already inflated by KAPPA_SAFETY. Unbounded ingredients are +inf; an
    entirely straight curve yields r = +inf and downstream verification then
    requires an explicit user radius.
    """

    r: float
    kappa_max: float
    d_min: float
    r_end: float
    radius_scale: float = 1.0

    @property
    def bounded(self):
        return math.isfinite(self.r)


def derivative_angle_profile(curve, polyline, grid_size=65):
    """Angle profile theta(t) between curve and polyline derivatives.

    The polyline derivative is the piecewise-constant derivative of its
    uniform parameterisation. Samples cover a uniform grid plus both
    one-sided values at every polyline breakpoint (the larger is kept).
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    m = len(polyline) - 1
    ts = np.linspace(0.0, 1.0, grid_size)
    deriv = _derivatives(curve, ts)
    _require_regular(deriv)
    edge_idx = np.clip(np.floor(ts * m).astype(int), 0, m - 1)
    edges = polyline.edge_vectors
    theta = angles_between(deriv, edges[edge_idx])

    if m >= 2:
        bts = np.arange(1, m) / m
        bderiv = _derivatives(curve, bts)
        _require_regular(bderiv)
        left = angles_between(bderiv, edges[: m - 1])
        right = angles_between(bderiv, edges[1:])
        btheta = np.maximum(left, right)
        ts = np.concatenate([ts, bts])
        theta = np.concatenate([theta, btheta])
        order = np.argsort(ts, kind="stable")
        ts = ts[order]
        theta = theta[order]

    return AngleProfile(params=ts, angles=theta, max_theta=float(theta.max()))


def _derivatives(curve, ts):
    if hasattr(curve, "derivatives_at"):
        return curve.derivatives_at(np.asarray(ts, dtype=float))
    return np.stack([curve.derivative_at(float(t)) for t in np.atleast_1d(ts)])


def _require_regular(deriv, tol=1e-12):
    norms = np.linalg.norm(deriv, axis=1)
    if np.any(norms <= tol):
        raise RegularityError("curve derivative vanishes at a sample parameter")


def _segment_curvatures(seg, ts):
    hodo = seg.hodograph()
    hodo2 = hodo.hodograph()
    d1 = hodo.points_at(ts)
    d2 = hodo2.points_at(ts)
    speed = np.linalg.norm(d1, axis=1)
    if np.any(speed <= 1e-12):
        raise RegularityError("vanishing first derivative while sampling curvature")
    return np.linalg.norm(np.cross(d1, d2), axis=1) / speed ** 3


def max_curvature(curve, samples=1024, tol=1e-10):
    """Maximum curvature and its parameter, by sampling plus refinement.

    For a composite the returned parameter is global; for a single segment
    it is the segment-local parameter. The value is the raw sampled maximum
    (callers building a PipeSpec apply KAPPA_SAFETY).
    """
    if isinstance(curve, CompositeBezier):
        best = (0.0, 0.0)
        for seg in curve.segments:
            k, t_loc = max_curvature(seg, samples=samples, tol=tol)
            if k > best[0]:
                best = (k, seg.to_global(t_loc))
        return best

    if curve.degree < 2:
        return 0.0, 0.5
    ts = np.linspace(0.0, 1.0, samples)
    kappa = _segment_curvatures(curve, ts)
    best_k = float(kappa.max())
    best_t = float(ts[int(kappa.argmax())])
    # Refine every sampled local maximum by golden section.
    interior = np.where((kappa[1:-1] >= kappa[:-2]) & (kappa[1:-1] >= kappa[2:]))[0] + 1
    candidates = set(interior.tolist()) | {0, samples - 1, int(kappa.argmax())}
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    for j in candidates:
        lo = ts[max(j - 1, 0)]
        hi = ts[min(j + 1, samples - 1)]
        while hi - lo > tol:
            x1 = hi - inv_phi * (hi - lo)
            x2 = lo + inv_phi * (hi - lo)
            k1 = float(_segment_curvatures(curve, np.asarray([x1]))[0])
            k2 = float(_segment_curvatures(curve, np.asarray([x2]))[0])
            if k1 > k2:
                hi = x2
            else:
                lo = x1
        t_ref = 0.5 * (lo + hi)
        k_ref = float(_segment_curvatures(curve, np.asarray([t_ref]))[0])
        if k_ref > best_k:
            best_k, best_t = k_ref, t_ref
    return best_k, best_t


def min_derivative_norm(seg, max_depth=12, rel_tol=1e-6):
    """Certified lower bound on min_t ||C'(t)|| for one segment.

    The derivative curve lies inside the convex hull of its control points,
    so the distance from the origin to that hull bounds the minimum speed
    from below. The hull is refined by midpoint subdivision until the bound
    stabilises; the bound is monotone nondecreasing in depth.
    """
    if not isinstance(seg, BezierSegment):
        raise TypeError("min_derivative_norm expects a single BezierSegment")
    hodo_pts = seg.degree * (seg.control_points[1:] - seg.control_points[:-1])
    pieces = hodo_pts[None, :, :]
    prev = None
    for depth in range(max_depth + 1):
        dist = float(_hull_distances(pieces).min())
        if prev is not None and dist > 0.0 and abs(dist - prev) <= rel_tol * dist:
            return dist
        prev = dist
        if depth < max_depth:
            pieces = _split_pieces(pieces)
    if dist <= 1e-12 * (1.0 + float(np.abs(hodo_pts).max())):
        raise RegularityError(
            "derivative convex hull still contains the origin at maximum depth; "
            "the segment may not be regular"
        )
    return dist


def _split_pieces(pieces):
    """Midpoint de Casteljau split applied to a batch of control nets."""
    p, m, _ = pieces.shape
    if m == 1:
        return np.repeat(pieces, 2, axis=0)
    b = pieces.copy()
    left = np.empty_like(b)
    right = np.empty_like(b)
    n = m - 1
    left[:, 0] = b[:, 0]
    right[:, n] = b[:, n]
    for r in range(1, n + 1):
        b[:, : n - r + 1] = 0.5 * (b[:, : n - r + 1] + b[:, 1 : n - r + 2])
        left[:, r] = b[:, 0]
        right[:, n - r] = b[:, n - r]
    out = np.empty((2 * p, m, 3))
    out[0::2] = left
    out[1::2] = right
    return out


def _hull_distances(pieces):
    """Distance from the origin to the convex hull of each control net.

    Enumerates candidate carrier subsets of size <= 4 (Caratheodory in 3D);
    a candidate is valid when the affine projection of the origin has
    nonnegative barycentric coordinates. Degenerate subsets are skipped:
    their projections are covered by smaller subsets.
    """
    p, m, _ = pieces.shape
    best = np.full(p, np.inf)
    np.minimum(best, np.linalg.norm(pieces, axis=2).min(axis=1), out=best)
    for k in range(2, min(4, m) + 1):
        for idx in combinations(range(m), k):
            s = pieces[:, idx, :]
            q1 = s[:, 0, :]
            vv = s[:, 1:, :] - q1[:, None, :]
            gram = np.einsum("pid,pjd->pij", vv, vv)
            rhs = -np.einsum("pid,pd->pi", vv, q1)
            det = np.linalg.det(gram)
            scale = np.einsum("pii->p", gram) / (k - 1)
            ok = det > 1e-12 * np.maximum(scale, _TINY) ** (k - 1)
            if not np.any(ok):
                continue
            safe = np.where(ok[:, None, None], gram, np.eye(k - 1)[None, :, :])
            y = np.linalg.solve(safe, rhs[:, :, None])[:, :, 0]
            lam0 = 1.0 - y.sum(axis=1)
            valid = ok & (lam0 >= -1e-12) & np.all(y >= -1e-12, axis=1)
            if not np.any(valid):
                continue
            x = q1 + np.einsum("pi,pid->pd", y, vv)
            d = np.linalg.norm(x, axis=1)
            np.minimum(best, np.where(valid, d, np.inf), out=best)
    return best


def min_separation_distance(curve, grid=256):
    """Minimum distance between genuinely non-adjacent parts of a curve.

    Candidate pairs are grid-local minima of the pairwise distance surface
    outside an adjacency band (arc-length gap below 4x the coarsest sampling
    step). Each candidate is refined by bounded coordinate descent; a
    candidate that slides into the band or onto the parameter boundary is a
    diagonal artefact and is discarded (endpoint re-entry is covered by
    end_radius). Returns +inf when no candidate survives.
    """
    curve = _as_composite(curve)
    ts = np.linspace(0.0, 1.0, grid + 1)
    pts = curve.points_at(ts)
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(steps)])
    band = 4.0 * float(steps.max())

    dmat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    gap = np.abs(arc[:, None] - arc[None, :])
    masked = np.where(gap >= band, dmat, np.inf)

    cand = _grid_local_minima(masked, max_candidates=32, min_cell_gap=6)
    best = math.inf
    arc_interp = lambda t: float(np.interp(t, ts, arc))
    h = 1.0 / grid
    for i, j in cand:
        s, t, d = _refine_pair(curve, ts[i], ts[j], h)
        if s <= 1e-9 or s >= 1.0 - 1e-9 or t <= 1e-9 or t >= 1.0 - 1e-9:
            continue
        if abs(arc_interp(s) - arc_interp(t)) < band:
            continue
        best = min(best, d)
    if best < 1e-9:
        raise SelfIntersectionError(
            f"non-adjacent curve points at distance {best:.3e}; curve is not simple"
        )
    return best


def _grid_local_minima(masked, max_candidates=32, min_cell_gap=6):
    """Local minima of the masked surface, deduplicated and capped.

    Cells touching the masked adjacency band are skipped: a minimum there is
    a diagonal-sliding artefact, not a critical pair. Plateaus (flat
    regions) produce blocks of equal-valued minima; greedy selection by
    value with a Chebyshev cell gap keeps a few representatives per basin.
    Only the upper triangle (i < j) is reported.
    """
    m = masked.shape[0]
    big = np.full((m + 2, m + 2), np.inf)
    big[1:-1, 1:-1] = masked
    center = big[1:-1, 1:-1]
    is_min = np.isfinite(center)
    all_finite_neighbours = np.ones((m, m), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neigh = big[1 + di : m + 1 + di, 1 + dj : m + 1 + dj]
            is_min &= center <= neigh
            inner = np.zeros((m, m), dtype=bool)
            inner[max(0, -di) : m - max(0, di), max(0, -dj) : m - max(0, dj)] = True
            all_finite_neighbours &= np.where(inner, np.isfinite(neigh), True)
    is_min &= all_finite_neighbours
    ii, jj = np.where(is_min & (np.arange(m)[:, None] < np.arange(m)[None, :]))
    if ii.size == 0:
        return []
    order = np.argsort(masked[ii, jj], kind="stable")
    kept = []
    for k in order:
        i, j = int(ii[k]), int(jj[k])
        if all(max(abs(i - a), abs(j - b)) >= min_cell_gap for a, b in kept):
            kept.append((i, j))
            if len(kept) >= max_candidates:
                break
    return kept


def _refine_pair(curve, s0, t0, h, rounds=6, iters=20):
    """Bounded alternating golden-section descent on ||C(s) - C(t)||."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    s, t = float(s0), float(t0)
    width = h
    for _ in range(rounds):
        for which in (0, 1):
            x = s if which == 0 else t
            other_pt = curve.point_at(t if which == 0 else s)
            lo = max(x - width, 0.0)
            hi = min(x + width, 1.0)
            for _ in range(iters):
                x1 = hi - inv_phi * (hi - lo)
                x2 = lo + inv_phi * (hi - lo)
                probe = curve.points_at(np.asarray([x1, x2]))
                d1, d2 = np.linalg.norm(probe - other_pt, axis=1)
                if d1 < d2:
                    hi = x2
                else:
                    lo = x1
            if which == 0:
                s = 0.5 * (lo + hi)
            else:
                t = 0.5 * (lo + hi)
        width *= 0.5
    d = float(np.linalg.norm(curve.point_at(s) - curve.point_at(t)))
    return s, t, d


def end_radius(curve, samples=1024):
    """Largest ball radius around each endpoint free of curve re-entry.

    For an endpoint e, distances along the parameter first rise to a local
    maximum; any later dip below that level is a re-entry. The radius is the
    minimum distance beyond the first local maximum (+inf when the distance
    is monotone). The smaller of the two endpoint radii is returned.
    """
    curve = _as_composite(curve)
    ts = np.linspace(0.0, 1.0, samples)
    pts = curve.points_at(ts)
    out = math.inf
    for endpoint, reverse in ((curve.start_point(), False), (curve.end_point(), True)):
        # In x-space the curve is walked away from the endpoint: x = t for
        # the start point and x = 1 - t for the end point.
        if reverse:
            g = lambda x: np.linalg.norm(curve.points_at(1.0 - np.asarray(x)) - endpoint, axis=1)
            d = np.linalg.norm(pts[::-1] - endpoint, axis=1)
        else:
            g = lambda x: np.linalg.norm(curve.points_at(np.asarray(x)) - endpoint, axis=1)
            d = np.linalg.norm(pts - endpoint, axis=1)
        peak = None
        for j in range(1, samples - 1):
            if d[j] > d[j - 1] and d[j] >= d[j + 1]:
                peak = j
                break
        if peak is None:
            continue
        j = peak + int(d[peak:].argmin())
        lo = ts[max(j - 1, 0)]
        hi = ts[min(j + 1, samples - 1)]
        out = min(out, _golden_min(g, lo, hi))
    return out


def _golden_min(fvec, lo, hi, tol=1e-10, max_iter=80):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    it = 0
    while hi - lo > tol and it < max_iter:
        x1 = hi - inv_phi * (hi - lo)
        x2 = lo + inv_phi * (hi - lo)
        if float(fvec(np.asarray([x1]))[0]) < float(fvec(np.asarray([x2]))[0]):
            hi = x2
        else:
            lo = x1
        it += 1
    mid = 0.5 * (lo + hi)
    return float(fvec(np.asarray([mid]))[0])


def pipe_radius(curve, radius_scale=1.0, grid=256, curvature_samples=1024):
    """Pipe radius r = radius_scale * min(1/kappa_max, d_min, r_end).

    kappa_max is inflated by KAPPA_SAFETY before entering the minimum, which
    biases r downward (conservative).
    """
    curve = _as_composite(curve)
    kappa_raw, _ = max_curvature(curve, samples=curvature_samples)
    kappa = kappa_raw * KAPPA_SAFETY
    d_min = min_separation_distance(curve, grid=grid)
    r_end = end_radius(curve)
    inv_kappa = math.inf if kappa == 0.0 else 1.0 / kappa
    r = radius_scale * min(inv_kappa, d_min, r_end)
    if r <= 0.0:
        raise SelfIntersectionError("pipe radius is not positive")
    return PipeSpec(r=r, kappa_max=kappa, d_min=d_min, r_end=r_end,
                    radius_scale=radius_scale)


def _as_composite(curve):
    if isinstance(curve, CompositeBezier):
        return curve
    if isinstance(curve, BezierSegment):
        return CompositeBezier([BezierSegment(curve.control_points)])
    raise TypeError(f"expected a curve, got {type(curve).__name__}")
