"""Bezier segments, composite curves, polylines and midpoint subdivision.

Points are numpy arrays of shape (3,), float64. All objects are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import numpy as np

from .errors import RegularityError, ResourceLimitError

MAX_SUBDIVISION_SEGMENTS = 2 ** 22

# C1 junction tolerance for composite curves, in radians.
JUNCTION_ANGLE_TOL = 1e-6


def as_points(points, min_count=1, name="points"):
    """Validate and copy an (m, 3) array of finite coordinates."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (m, 3), got {arr.shape}")
    if arr.shape[0] < min_count:
        raise ValueError(f"{name} needs at least {min_count} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _check_unit_params(ts):
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0.0) or np.any(ts > 1.0):
        raise ValueError("parameter outside [0, 1]")
    return ts


class BezierSegment:
    """A single polynomial Bezier segment of degree >= 1.

    ``interval`` records the segment's place inside the original curve's
    global [0, 1] parameter range; evaluation always uses the local
    parameter in [0, 1].
    """

    __slots__ = ("_points", "_interval")

    def __init__(self, control_points, interval=(0.0, 1.0)):
        pts = as_points(control_points, min_count=2, name="control_points")
        a, b = float(interval[0]), float(interval[1])
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ValueError(f"invalid parameter interval {interval!r}")
        self._points = pts
        self._interval = (a, b)

    @property
    def degree(self):
        return self._points.shape[0] - 1

    @property
    def control_points(self):
        return self._points

    @property
    def interval(self):
        return self._interval

    def to_local(self, t_global):
        a, b = self._interval
        return (t_global - a) / (b - a)

    def to_global(self, t_local):
        a, b = self._interval
        return a + (b - a) * t_local

    def point_at(self, t):
        """de Casteljau evaluation at local parameter t in [0, 1]."""
        t = float(t)
        _check_unit_params(t)
        b = self._points.copy()
        n = self.degree
        for r in range(n):
            b[: n - r] = (1.0 - t) * b[: n - r] + t * b[1 : n - r + 1]
        return b[0]

    def points_at(self, ts):
        """Vectorised de Casteljau; same left-to-right reduction per row."""
        ts = _check_unit_params(ts)
        w = ts.reshape(-1, 1, 1)
        b = np.repeat(self._points[None, :, :], w.shape[0], axis=0)
        n = self.degree
        for r in range(n):
            b[:, : n - r] = (1.0 - w[:, 0:1]) * b[:, : n - r] + w[:, 0:1] * b[:, 1 : n - r + 1]
        return b[:, 0]

    def hodograph(self):
        """Derivative curve: degree n-1 with control points n*(P[j+1]-P[j]).

        For a degree-1 segment the result is a single constant control point,
        represented as a degenerate degree-0 evaluator.
        """
        n = self.degree
        diff = n * (self._points[1:] - self._points[:-1])
        if n == 1:
            return _ConstantCurve(diff[0], self._interval)
        return BezierSegment(diff, self._interval)

    def derivative_at(self, t):
        """First derivative with respect to the local parameter."""
        return self.hodograph().point_at(t)

    def derivatives_at(self, ts):
        return self.hodograph().points_at(ts)

    def split(self):
        """Midpoint de Casteljau split into (left, right).

        The shared midpoint control point is bitwise identical in both
        children, as are the shared parent endpoints.
        """
        n = self.degree
        b = self._points.copy()
        left = np.empty_like(b)
        right = np.empty_like(b)
        left[0] = b[0]
        right[n] = b[n]
        for r in range(1, n + 1):
            b[: n - r + 1] = 0.5 * (b[: n - r + 1] + b[1 : n - r + 2])
            left[r] = b[0]
            right[n - r] = b[n - r]
        a, c = self._interval
        mid = 0.5 * (a + c)
        return (
            BezierSegment(left, (a, mid)),
            BezierSegment(right, (mid, c)),
        )

    def subdivide(self, iterations, cap=MAX_SUBDIVISION_SEGMENTS):
        """Perform ``iterations`` rounds of midpoint subdivision.

        Returns a SubdivisionResult with 2**iterations sub-segments in
        parameter order together with their control polygons.
        """
        if iterations < 0:
            raise ValueError("iterations must be >= 0")
        if 2 ** iterations > cap:
            raise ResourceLimitError(
                f"2^{iterations} sub-segments would exceed the configured cap of {cap}"
            )
        segs = [self]
        for _ in range(iterations):
            nxt = []
            for s in segs:
                lo, hi = s.split()
                nxt.append(lo)
                nxt.append(hi)
            segs = nxt
        polys = [s.control_polygon() for s in segs]
        return SubdivisionResult(segs, polys, iterations)

    def control_polygon(self):
        return Polyline(self._points, self._interval)

    def __repr__(self):
        a, b = self._interval
        return f"BezierSegment(degree={self.degree}, interval=({a:g}, {b:g}))"


class _ConstantCurve:
    """Degenerate degree-0 evaluator used for hodographs of lines."""

    __slots__ = ("_value", "_interval")

    def __init__(self, value, interval):
        v = np.asarray(value, dtype=float).copy()
        v.flags.writeable = False
        self._value = v
        self._interval = interval

    @property
    def degree(self):
        return 0

    @property
    def control_points(self):
        return self._value.reshape(1, 3)

    @property
    def interval(self):
        return self._interval

    def point_at(self, t):
        _check_unit_params(float(t))
        return self._value

    def points_at(self, ts):
        ts = _check_unit_params(ts)
        return np.repeat(self._value[None, :], np.size(ts), axis=0)


class Polyline:
    """A piecewise-linear curve with uniformly spaced vertex parameters.

    Vertex j sits at global parameter a + (b-a)*j/(m-1); local-parameter
    evaluation mirrors BezierSegment.
    """

    __slots__ = ("_vertices", "_interval")

    def __init__(self, vertices, interval=(0.0, 1.0)):
        verts = as_points(vertices, min_count=2, name="vertices")
        gaps = np.linalg.norm(np.diff(verts, axis=0), axis=1)
        if np.any(gaps == 0.0):
            raise ValueError("consecutive polyline vertices must be distinct")
        a, b = float(interval[0]), float(interval[1])
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ValueError(f"invalid parameter interval {interval!r}")
        self._vertices = verts
        self._interval = (a, b)

    @property
    def vertices(self):
        return self._vertices

    @property
    def interval(self):
        return self._interval

    def __len__(self):
        return self._vertices.shape[0]

    @property
    def edge_vectors(self):
        return self._vertices[1:] - self._vertices[:-1]

    @property
    def edge_lengths(self):
        return np.linalg.norm(self.edge_vectors, axis=1)

    def total_length(self):
        return float(self.edge_lengths.sum())

    def to_local(self, t_global):
        a, b = self._interval
        return (t_global - a) / (b - a)

    def point_at(self, t):
        return self.points_at(np.asarray([t], dtype=float))[0]

    def points_at(self, ts):
        ts = _check_unit_params(ts)
        m = len(self) - 1
        s = ts * m
        j = np.clip(np.floor(s).astype(int), 0, m - 1)
        frac = (s - j).reshape(-1, 1)
        v = self._vertices
        return (1.0 - frac) * v[j] + frac * v[j + 1]

    def edge_index_at(self, t):
        """Index of the edge containing local parameter t (right-continuous)."""
        m = len(self) - 1
        return int(np.clip(np.floor(float(t) * m), 0, m - 1))

    def derivative_at(self, t):
        """Piecewise-constant derivative (m-1)*(V[j+1]-V[j]) at local t."""
        j = self.edge_index_at(t)
        return (len(self) - 1) * self.edge_vectors[j]

    def sample_points(self, per_edge):
        """All vertices plus ``per_edge`` interior points on every edge.

        Returns (points, is_vertex_endpoint) where the mask flags the first
        and last polyline vertices.
        """
        v = self._vertices
        pts = [v]
        if per_edge > 0:
            fr = (np.arange(1, per_edge + 1) / (per_edge + 1)).reshape(1, -1, 1)
            inner = v[:-1, None, :] * (1.0 - fr) + v[1:, None, :] * fr
            pts.append(inner.reshape(-1, 3))
        allpts = np.concatenate(pts, axis=0)
        endpoint = np.zeros(allpts.shape[0], dtype=bool)
        endpoint[0] = True
        endpoint[len(v) - 1] = True
        return allpts, endpoint

    def is_simple(self, tol=1e-12):
        """True when no two non-adjacent edges come within ``tol``."""
        v = self._vertices
        ecount = len(self) - 1
        for i in range(ecount):
            for j in range(i + 2, ecount):
                if i == 0 and j == ecount - 1 and np.array_equal(v[0], v[-1]):
                    continue
                d = _segment_segment_distance(v[i], v[i + 1], v[j], v[j + 1])
                if d <= tol:
                    return False
        return True

    def __repr__(self):
        a, b = self._interval
        return f"Polyline(n_vertices={len(self)}, interval=({a:g}, {b:g}))"


class SubdivisionResult:
    """Sub-segments tiling a parent interval plus their control polygons."""

    __slots__ = ("sub_segments", "sub_polygons", "iterations")

    def __init__(self, sub_segments, sub_polygons, iterations):
        if len(sub_segments) != len(sub_polygons):
            raise ValueError("segment/polygon count mismatch")
        self.sub_segments = list(sub_segments)
        self.sub_polygons = list(sub_polygons)
        self.iterations = int(iterations)

    def pairs(self):
        return zip(self.sub_polygons, self.sub_segments)

    def merged_polyline(self):
        """Concatenate the sub-polygons into one refined control polygon."""
        chunks = [self.sub_polygons[0].vertices]
        for poly in self.sub_polygons[1:]:
            chunks.append(poly.vertices[1:])
        lo = self.sub_segments[0].interval[0]
        hi = self.sub_segments[-1].interval[1]
        return Polyline(np.concatenate(chunks, axis=0), (lo, hi))


class CompositeBezier:
    """An ordered chain of Bezier segments joined with matching tangents.

    Consecutive segments must share an endpoint, and their junction tangent
    directions must agree within JUNCTION_ANGLE_TOL radians. Segments are
    assigned equal shares of the global [0, 1] parameter range unless their
    stored intervals already tile it.
    """

    __slots__ = ("_segments", "_breaks")

    def __init__(self, segments):
        segments = list(segments)
        if not segments:
            raise ValueError("composite curve needs at least one segment")
        if not _intervals_tile_unit(segments):
            k = len(segments)
            segments = [
                BezierSegment(s.control_points, (i / k, (i + 1) / k))
                for i, s in enumerate(segments)
            ]
        _check_junctions(segments)
        self._segments = segments
        self._breaks = np.asarray([s.interval[0] for s in segments] + [1.0])

    @property
    def segments(self):
        return self._segments

    @property
    def num_segments(self):
        return len(self._segments)

    def start_point(self):
        return self._segments[0].control_points[0]

    def end_point(self):
        return self._segments[-1].control_points[-1]

    def segment_index_at(self, t):
        idx = int(np.searchsorted(self._breaks, float(t), side="right") - 1)
        return min(max(idx, 0), len(self._segments) - 1)

    def point_at(self, t):
        _check_unit_params(float(t))
        seg = self._segments[self.segment_index_at(t)]
        return seg.point_at(np.clip(seg.to_local(t), 0.0, 1.0))

    def points_at(self, ts):
        ts = _check_unit_params(np.asarray(ts, dtype=float))
        out = np.empty((ts.size, 3))
        idx = np.clip(
            np.searchsorted(self._breaks, ts, side="right") - 1, 0, len(self._segments) - 1
        )
        for k, seg in enumerate(self._segments):
            mask = idx == k
            if np.any(mask):
                local = np.clip(seg.to_local(ts[mask]), 0.0, 1.0)
                out[mask] = seg.points_at(local)
        return out

    def derivative_at(self, t):
        """Derivative with respect to the global parameter."""
        seg = self._segments[self.segment_index_at(t)]
        a, b = seg.interval
        return seg.derivative_at(np.clip(seg.to_local(t), 0.0, 1.0)) / (b - a)

    def derivatives_at(self, ts):
        ts = _check_unit_params(np.asarray(ts, dtype=float))
        out = np.empty((ts.size, 3))
        idx = np.clip(
            np.searchsorted(self._breaks, ts, side="right") - 1, 0, len(self._segments) - 1
        )
        for k, seg in enumerate(self._segments):
            mask = idx == k
            if np.any(mask):
                a, b = seg.interval
                local = np.clip(seg.to_local(ts[mask]), 0.0, 1.0)
                out[mask] = seg.derivatives_at(local) / (b - a)
        return out

    def subdivide(self, iterations, cap=MAX_SUBDIVISION_SEGMENTS):
        """Subdivide every segment; sub-segments keep global intervals."""
        if 2 ** iterations * self.num_segments > cap:
            raise ResourceLimitError(
                f"{self.num_segments} * 2^{iterations} sub-segments would exceed "
                f"the configured cap of {cap}"
            )
        segs = []
        polys = []
        for s in self._segments:
            r = s.subdivide(iterations, cap=cap)
            segs.extend(r.sub_segments)
            polys.extend(r.sub_polygons)
        return SubdivisionResult(segs, polys, iterations)

    def __repr__(self):
        degs = [s.degree for s in self._segments]
        return f"CompositeBezier(degrees={degs})"


def _intervals_tile_unit(segments, tol=1e-12):
    if abs(segments[0].interval[0]) > tol or abs(segments[-1].interval[1] - 1.0) > tol:
        return False
    for prev, cur in zip(segments, segments[1:]):
        if abs(prev.interval[1] - cur.interval[0]) > tol:
            return False
    return True


def _check_junctions(segments):
    from .geometry_analysis import angle_between  # cycle-free at call time

    for k, (prev, cur) in enumerate(zip(segments, segments[1:])):
        p_end = prev.control_points[-1]
        c_start = cur.control_points[0]
        scale = 1.0 + np.linalg.norm(p_end)
        if np.linalg.norm(p_end - c_start) > 1e-9 * scale:
            raise ValueError(f"segments {k} and {k + 1} do not share an endpoint")
        t_out = prev.control_points[-1] - prev.control_points[-2]
        t_in = cur.control_points[1] - cur.control_points[0]
        if np.linalg.norm(t_out) == 0.0 or np.linalg.norm(t_in) == 0.0:
            raise RegularityError(f"zero tangent at junction {k}")
        if angle_between(t_out, t_in) > JUNCTION_ANGLE_TOL:
            raise ValueError(
                f"tangent directions disagree at junction {k} "
                f"(angle {angle_between(t_out, t_in):.3e} rad)"
            )


def second_difference_norm(points):
    """Max Euclidean norm of P[j+2] - 2 P[j+1] + P[j] over the point list."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("second differences need at least 3 points")
    d2 = pts[2:] - 2.0 * pts[1:-1] + pts[:-2]
    return float(np.max(np.linalg.norm(d2, axis=1)))


def _segment_segment_distance(a0, a1, b0, b1):
    """Minimal distance between 3D segments [a0,a1] and [b0,b1]."""
    u = a1 - a0
    v = b1 - b0
    w0 = a0 - b0
    a = u @ u
    b = u @ v
    c = v @ v
    d = u @ w0
    e = v @ w0
    den = a * c - b * b
    if den > 1e-14 * max(a * c, 1e-300):
        s = np.clip((b * e - c * d) / den, 0.0, 1.0)
    else:
        s = 0.0
    t = (b * s + e) / c if c > 0 else 0.0
    t = np.clip(t, 0.0, 1.0)
    s = np.clip((b * t - d) / a, 0.0, 1.0) if a > 0 else 0.0
    return float(np.linalg.norm((a0 + s * u) - (b0 + t * v)))


def point_polyline_distances(points, polyline):
    """Exact distance from each query point to the nearest polyline edge."""
    q = np.asarray(points, dtype=float).reshape(-1, 3)
    v = polyline.vertices
    a = v[:-1]
    e = polyline.edge_vectors
    ee = np.einsum("ed,ed->e", e, e)
    diff = q[:, None, :] - a[None, :, :]
    tt = np.clip(np.einsum("qed,ed->qe", diff, e) / ee, 0.0, 1.0)
    foot = a[None, :, :] + tt[:, :, None] * e[None, :, :]
    d = np.linalg.norm(q[:, None, :] - foot, axis=2)
    return d.min(axis=1)


def nearest_parameters(curve, points, coarse=256, tol=1e-12):
    """Project points onto a curve: per point the nearest local parameter.

    Coarse sampling on a shared grid followed by vectorised golden-section
    refinement of the bracketing interval, down to ``tol`` in the parameter.
    Returns (params, distances).
    """
    q = np.asarray(points, dtype=float).reshape(-1, 3)
    ts = np.linspace(0.0, 1.0, coarse + 1)
    cpts = curve.points_at(ts)
    d2 = ((q[:, None, :] - cpts[None, :, :]) ** 2).sum(axis=2)
    best = d2.argmin(axis=1)
    lo = ts[np.maximum(best - 1, 0)]
    hi = ts[np.minimum(best + 1, coarse)]

    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = ((curve.points_at(x1) - q) ** 2).sum(axis=1)
    f2 = ((curve.points_at(x2) - q) ** 2).sum(axis=1)
    span = hi - lo
    it = 0
    while np.max(span) > tol and it < 120:
        m1 = f1 < f2
        hi = np.where(m1, x2, hi)
        lo = np.where(m1, lo, x1)
        x2n = np.where(m1, x1, lo + inv_phi * (hi - lo))
        x1n = np.where(m1, hi - inv_phi * (hi - lo), x2)
        fx = ((curve.points_at(np.where(m1, x1n, x2n)) - q) ** 2).sum(axis=1)
        f2, f1 = np.where(m1, f1, fx), np.where(m1, fx, f2)
        x1, x2 = x1n, x2n
        span = hi - lo
        it += 1
    tstar = 0.5 * (lo + hi)
    dist = np.linalg.norm(curve.points_at(tstar) - q, axis=1)
    return tstar, dist


def nearest_parameter(curve, point, coarse=256, tol=1e-12):
    t, d = nearest_parameters(curve, np.asarray(point, dtype=float).reshape(1, 3),
                              coarse=coarse, tol=tol)
    return float(t[0]), float(d[0])


def hausdorff_estimate(polyline, curve, samples=512):
    """Symmetric sampled Hausdorff distance between a polyline and a curve.

    Curve-to-polyline uses exact point/segment distances on a dense curve
    sample with golden-section sharpening of the worst gap; polyline-to-curve
    projects dense polyline samples onto the curve.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    ts = np.linspace(0.0, 1.0, samples)
    cpts = curve.points_at(ts)
    d_cp = point_polyline_distances(cpts, polyline)
    k = int(np.argmax(d_cp))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, samples - 1)]
    worst_cp = _golden_max(
        lambda t: point_polyline_distances(curve.points_at(t), polyline), lo, hi
    )

    per_edge = max(2, samples // max(len(polyline) - 1, 1))
    ppts, _ = polyline.sample_points(per_edge)
    _, d_pc = nearest_parameters(curve, ppts, coarse=max(samples, 64))
    worst_pc = float(np.max(d_pc))
    return max(float(worst_cp), worst_pc)


def _golden_max(fvec, lo, hi, tol=1e-10, max_iter=80):
    """Scalar golden-section maximisation of a vectorised function."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = float(fvec(np.asarray([x1]))[0])
    f2 = float(fvec(np.asarray([x2]))[0])
    it = 0
    while hi - lo > tol and it < max_iter:
        if f1 > f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = float(fvec(np.asarray([x1]))[0])
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = float(fvec(np.asarray([x2]))[0])
        it += 1
    return max(f1, f2)
