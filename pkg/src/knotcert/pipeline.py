"""End-to-end flows shared by the command-line surface and the test suite."""

from __future__ import annotations

import math

from .geometry_analysis import PipeSpec, pipe_radius
from .iteration_bounds import composite_bounds
from .isotopy_verify import verify_composite


def resolve_pipe(curve, radius=None, radius_scale=1.0, grid=256):
    """PipeSpec for a curve, honouring an explicit radius override.

    With an explicit radius the geometric ingredients are still computed and
    reported, but r is taken verbatim (scaled by radius_scale) and the
    certificate records the override.
    """
    spec = pipe_radius(curve, radius_scale=radius_scale, grid=grid)
    if radius is None:
        if not spec.bounded:
            raise ValueError(
                "pipe radius is unbounded (straight curve); supply an explicit "
                "radius"
            )
        return spec, "computed"
    r = radius * radius_scale
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError("explicit radius must be positive and finite")
    return (
        PipeSpec(r=r, kappa_max=spec.kappa_max, d_min=spec.d_min,
                 r_end=spec.r_end, radius_scale=radius_scale),
        "user",
    )


def approximate(curve, pipe, radius_source="computed", iterations=None,
                grid_size=33, uniqueness_grid=None, retry_cap=3):
    """Subdivide to the certified count, verify, and retry on failure.

    Returns (result, certificate, bound_aggregate). ``iterations`` overrides
    the a-priori count; each retry adds one subdivision, up to retry_cap.
    """
    agg, per = composite_bounds(curve, pipe.r)
    start = agg.certified_iterations if iterations is None else int(iterations)
    attempt = 0
    while True:
        result = curve.subdivide(start + attempt)
        cert = verify_composite(
            curve, result, pipe,
            grid_size=grid_size,
            uniqueness_grid=uniqueness_grid,
            bound_report=agg,
            segment_bounds=per,
            radius_source=radius_source,
        )
        if cert.passed or attempt >= retry_cap:
            return result, cert, agg
        attempt += 1


def verify_external(curve, polyline, pipe, radius_source="user", grid_size=65,
                    uniqueness_grid=None):
    """Certificate for an externally supplied PL approximation.

    The polyline is checked against the whole curve as a single pair; its
    endpoints must coincide with the curve endpoints.
    """
    import numpy as np

    from .curve_core import SubdivisionResult
    from .isotopy_verify import verify_composite as _verify

    tol = 1e-9 * (1.0 + float(np.linalg.norm(curve.start_point())))
    if np.linalg.norm(polyline.vertices[0] - curve.start_point()) > tol or \
            np.linalg.norm(polyline.vertices[-1] - curve.end_point()) > tol:
        raise ValueError("polyline endpoints must coincide with the curve endpoints")

    result = SubdivisionResult([_WholeCurve(curve)], [polyline], 0)
    return _verify(curve, result, pipe, grid_size=grid_size,
                   uniqueness_grid=uniqueness_grid, radius_source=radius_source)


class _WholeCurve:
    """Adapter presenting a composite curve with the sub-segment interface."""

    __slots__ = ("_curve",)

    def __init__(self, curve):
        self._curve = curve

    @property
    def interval(self):
        return (0.0, 1.0)

    @property
    def degree(self):
        return max(s.degree for s in self._curve.segments)

    @property
    def control_points(self):
        import numpy as np

        chunks = [self._curve.segments[0].control_points]
        for seg in self._curve.segments[1:]:
            chunks.append(seg.control_points[1:])
        return np.concatenate(chunks, axis=0)

    def to_local(self, t):
        return t

    def to_global(self, t):
        return t

    def point_at(self, t):
        return self._curve.point_at(t)

    def points_at(self, ts):
        return self._curve.points_at(ts)

    def derivative_at(self, t):
        return self._curve.derivative_at(t)

    def derivatives_at(self, ts):
        return self._curve.derivatives_at(ts)
