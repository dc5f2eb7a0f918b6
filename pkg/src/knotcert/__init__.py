"""Certified knot-preserving PL approximation of 3D Bezier curves."""

__version__ = "0.1.0"

from .curve_core import (
    BezierSegment,
    CompositeBezier,
    Polyline,
    SubdivisionResult,
    hausdorff_estimate,
    nearest_parameter,
    nearest_parameters,
    second_difference_norm,
)
from .geometry_analysis import (
    AngleProfile,
    CurvatureReport,
    PipeSpec,
    angle_between,
    angle_chain_slack,
    derivative_angle_profile,
    end_radius,
    max_curvature,
    min_derivative_norm,
    min_separation_distance,
    pipe_radius,
    total_curvature,
)
from .iteration_bounds import (
    BoundInputs,
    BoundReport,
    certified_iterations,
    composite_bounds,
    hodograph_gap,
    iterations_for_angle,
    iterations_for_containment,
    iterations_for_turning,
    polygon_distance_constant,
)
from .isotopy_verify import (
    ConditionReport,
    CorrespondenceTable,
    IsotopyCertificate,
    UniquenessReport,
    build_correspondence,
    check_containment,
    check_turning,
    disc_polyline_intersections,
    verify_composite,
    verify_unique_disc_intersections,
)
from .isotopy_construct import (
    IsotopyField,
    ambient_map,
    build_isotopy_fields,
    compose_isotopy,
    disc_isotopy,
    push_map,
    sample_frames,
)
from .pipeline import approximate, resolve_pipe, verify_external
