"""A-priori subdivision-iteration counts for the two certification conditions.

All logarithms are base 2: midpoint subdivision doubles the segment count
and shrinks second differences by 4, so only base 2 balances the formulas.
The counts are starting points for geometric verification, never a
substitute for it; verification may increment them but never decrement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .curve_core import BezierSegment, CompositeBezier, second_difference_norm
from .errors import BoundInfeasibleError
from .geometry_analysis import min_derivative_norm

# Guard against representation noise in exactly-integer logs, e.g.
# log2(4) computed as 2.0000000000000004: ceil would inflate the count.
_CEIL_GUARD = 1e-9


def _ceil_count(x):
    return max(0, math.ceil(x - _CEIL_GUARD))


def polygon_distance_constant(degree):
    """Sharp constant in the control-polygon distance bound for a degree.

    floor(k/2) * ceil(k/2) / (2k); equals 0 for degree 1, where the polygon
    coincides with the curve.
    """
    k = int(degree)
    if k < 1:
        raise ValueError("degree must be >= 1")
    return (k // 2) * ((k + 1) // 2) / (2.0 * k)


@dataclass(frozen=True)
class BoundInputs:
    """Per-segment scalars feeding the iteration-count formulas.

    min_speed is a certified lower bound on ||C'||; max_speed is an upper
    bound (the largest hodograph control-point norm), standing in for the
    derivative scale in the angle formula. Conservative in both directions.
    """

    degree: int
    dist_const_hodo: float
    dist_const_curve: float
    second_diff_hodo: float
    second_diff_curve: float
    min_speed: float
    max_speed: float

    def __post_init__(self):
        for name in ("dist_const_hodo", "dist_const_curve", "second_diff_hodo",
                     "second_diff_curve", "min_speed", "max_speed"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.min_speed <= 0.0:
            raise ValueError("min_speed must be positive")

    @classmethod
    def from_segment(cls, seg: BezierSegment):
        n = seg.degree
        hodo_pts = n * (seg.control_points[1:] - seg.control_points[:-1])
        d2_hodo = second_difference_norm(hodo_pts) if hodo_pts.shape[0] >= 3 else 0.0
        d2_curve = (second_difference_norm(seg.control_points)
                    if seg.control_points.shape[0] >= 3 else 0.0)
        return cls(
            degree=n,
            dist_const_hodo=polygon_distance_constant(n - 1) if n >= 2 else 0.0,
            dist_const_curve=polygon_distance_constant(n),
            second_diff_hodo=d2_hodo,
            second_diff_curve=d2_curve,
            min_speed=min_derivative_norm(seg),
            max_speed=float(np.linalg.norm(hodo_pts, axis=1).max()),
        )


@dataclass(frozen=True)
class BoundReport:
    """All iteration counts for one segment, with their ingredients echoed."""

    degree: int
    nu: float
    angle_log_floor: float
    angle_iterations: int
    turning_iterations: int
    containment_iterations: int
    certified_iterations: int
    prior_bound: int
    angle_dominates: bool
    radius: float
    inputs: BoundInputs


def hodograph_gap(iterations, inputs):
    """Derivative-polygon gap bound after ``iterations`` subdivisions.

    (1/4^i) * dist_const_hodo * (n-1) * second_diff_hodo; the second
    differences of refined control nets shrink fourfold per round.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    return (0.25 ** iterations) * inputs.dist_const_hodo * (inputs.degree - 1) \
        * inputs.second_diff_hodo


def _angle_log_floor(inputs):
    k = inputs.dist_const_hodo * (inputs.degree - 1) * inputs.second_diff_hodo
    if k == 0.0:
        return -math.inf
    return 0.5 * math.log2(k / inputs.min_speed)


def iterations_for_angle(nu, inputs):
    """Iterations after which every exterior angle is below ``nu`` radians.

    Valid for nu in (0, pi/2]; the upper endpoint is needed for quadratics,
    whose refined polygons have a single exterior angle.
    """
    if not (0.0 < nu <= math.pi / 2.0):
        raise ValueError("nu must lie in (0, pi/2]")
    floor = _angle_log_floor(inputs)
    gap_at_floor = hodograph_gap(max(0, math.ceil(floor)) if math.isfinite(floor) else 0,
                                 inputs)
    denom = (1.0 - math.cos(nu)) * (inputs.min_speed - gap_at_floor)
    if denom <= 0.0:
        raise BoundInfeasibleError(
            f"angle-count denominator is not positive: min_speed={inputs.min_speed:.6g}, "
            f"derivative gap at the log floor={gap_at_floor:.6g}"
        )
    f_nu = 2.0 * inputs.max_speed / denom
    candidate = max(floor, math.log2(f_nu))
    return _ceil_count(candidate)


def iterations_for_turning(inputs):
    """Iterations guaranteeing total curvature plus derivative angle < pi/2.

    One more than the exterior-angle count at nu = pi/(2(n-1)), and at least
    the direct derivative-angle requirement; the larger wins.
    """
    n = inputs.degree
    if n == 1:
        return 0
    nu = math.pi / (2.0 * (n - 1))
    base = iterations_for_angle(min(nu, math.pi / 2.0), inputs) + 1
    floor = _angle_log_floor(inputs)
    direct = 0 if not math.isfinite(floor) else _ceil_count(floor + 1.0)
    return max(base, direct)


def iterations_for_containment(r, inputs):
    """Iterations after which refined polygons sit within r/2 of their curve.

    Smallest i with (1/4^i) * dist_const_curve * second_diff_curve <= r/2;
    the halved radius leaves margin for each sub-polygon to sit inside its
    own pipe section. Geometric verification always follows.
    """
    if not (r > 0.0):
        raise ValueError("radius must be positive")
    k = inputs.dist_const_curve * inputs.second_diff_curve
    if k == 0.0 or not math.isfinite(r):
        return 0
    return _ceil_count(0.5 * math.log2(2.0 * k / r))


def certified_iterations(r, inputs):
    """Combined certified count and the prior bound it improves on."""
    n = inputs.degree
    containment = iterations_for_containment(r, inputs)
    if n == 1:
        angle = 0
        turning = 0
        nu = math.inf
        floor = -math.inf
    else:
        nu = min(math.pi / (2.0 * (n - 1)), math.pi / 2.0)
        angle = iterations_for_angle(nu, inputs)
        turning = iterations_for_turning(inputs)
        floor = _angle_log_floor(inputs)
    certified = max(turning, containment)
    prior = max(angle, containment) + 2
    if certified > prior:
        raise AssertionError("certified count exceeded the prior bound")
    return BoundReport(
        degree=n,
        nu=nu,
        angle_log_floor=floor,
        angle_iterations=angle,
        turning_iterations=turning,
        containment_iterations=containment,
        certified_iterations=certified,
        prior_bound=prior,
        angle_dominates=angle >= containment,
        radius=float(r),
        inputs=inputs,
    )


def composite_bounds(curve, r):
    """Per-segment BoundReports plus the aggregate over a composite curve.

    The aggregate takes the maximum of each count; its angle_dominates flag
    is True only when the angle branch dominates in every segment, which is
    exactly when the aggregate certified count equals the aggregate prior
    bound minus one.
    """
    if isinstance(curve, BezierSegment):
        curve = CompositeBezier([BezierSegment(curve.control_points)])
    reports = [certified_iterations(r, BoundInputs.from_segment(s))
               for s in curve.segments]
    agg = max(reports, key=lambda rep: rep.certified_iterations)
    merged = replace(
        agg,
        angle_iterations=max(rep.angle_iterations for rep in reports),
        turning_iterations=max(rep.turning_iterations for rep in reports),
        containment_iterations=max(rep.containment_iterations for rep in reports),
        certified_iterations=max(rep.certified_iterations for rep in reports),
        prior_bound=max(rep.prior_bound for rep in reports),
        angle_dominates=all(rep.angle_dominates for rep in reports),
    )
    return merged, reports
