"""Shared fixtures: reference curves and the random verification corpus.

Corpus construction. Control nets are built by a random walk with slowly
drifting direction, which yields regular, simple, snake-like curves at
every degree. Draws are rejected when a segment's certified minimum speed
falls below a floor (regularity margin), when the pipe radius degenerates,
or when the certified subdivision count would exceed the runtime budget of
the acceptance suite (the whole suite must stay around five minutes).
Uniform cube-corner control nets are deliberately not used here: they can
produce nearly-linear hodographs whose second differences vanish while the
derivative still turns, starving the derivative-angle bound.
"""

import numpy as np
import pytest

from knotcert.curve_core import BezierSegment, CompositeBezier
from knotcert.errors import KnotCertError
from knotcert.geometry_analysis import min_derivative_norm, pipe_radius
from knotcert.iteration_bounds import composite_bounds

CORPUS_SEED = 20260810
CORPUS_SIZE = 50
MIN_SPEED_FLOOR = 0.35
MIN_PIPE_RADIUS = 0.02
MAX_TOTAL_PAIRS = 768


def walk_points(degree, rng, start, direction, step=0.5):
    pts = [np.asarray(start, float)]
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    for _ in range(degree):
        pts.append(pts[-1] + step * d * (0.75 + 0.5 * rng.random()))
        d = d + 0.45 * rng.standard_normal(3)
        d = d / np.linalg.norm(d)
    return np.array(pts)


def random_composite(rng, degree, n_segments, step=0.5):
    segs = []
    start = rng.uniform(-1.0, 1.0, 3)
    direction = rng.standard_normal(3)
    for _ in range(n_segments):
        pts = walk_points(degree, rng, start, direction, step)
        segs.append(BezierSegment(pts))
        start = pts[-1]
        direction = pts[-1] - pts[-2]
    return CompositeBezier(segs)


def draw_corpus_instance(rng, degree, max_tries=80):
    """One accepted (curve, pipe, aggregate_bounds, segment_bounds) draw."""
    for _ in range(max_tries):
        n_segments = int(rng.integers(1, 4))
        try:
            curve = random_composite(rng, degree, n_segments)
            for seg in curve.segments:
                if min_derivative_norm(seg) < MIN_SPEED_FLOOR:
                    raise KnotCertError("regularity margin too small")
            pipe = pipe_radius(curve)
            if not (pipe.bounded and pipe.r > MIN_PIPE_RADIUS):
                raise KnotCertError("pipe radius too small")
            agg, per = composite_bounds(curve, pipe.r)
            if n_segments * 2 ** agg.certified_iterations > MAX_TOTAL_PAIRS:
                raise KnotCertError("over the runtime budget")
            return curve, pipe, agg, per
        except (KnotCertError, ValueError):
            continue
    raise RuntimeError(f"could not draw a corpus instance of degree {degree}")


@pytest.fixture(scope="session")
def corpus():
    """50 random simple regular composite curves, degrees 3..8 stratified."""
    rng = np.random.default_rng(CORPUS_SEED)
    out = []
    for k in range(CORPUS_SIZE):
        degree = 3 + k % 6
        out.append(draw_corpus_instance(rng, degree))
    return out


@pytest.fixture(scope="session")
def verified_corpus(corpus):
    """Certificates at the certified iteration count, retrying at most +3.

    Yields tuples (curve, pipe, agg, per, result, certificate, extra) where
    ``extra`` counts retries beyond the certified count.
    """
    from knotcert.isotopy_verify import verify_composite

    out = []
    for curve, pipe, agg, per in corpus:
        extra = 0
        while True:
            result = curve.subdivide(agg.certified_iterations + extra)
            cert = verify_composite(curve, result, pipe, grid_size=7,
                                    uniqueness_grid=257)
            if cert.passed or extra >= 3:
                break
            extra += 1
        out.append((curve, pipe, agg, per, result, cert, extra))
    return out


@pytest.fixture
def quadratic():
    """The planar parabola arc used throughout the worked examples."""
    return BezierSegment([(0, 0, 0), (1, 1, 0), (2, 0, 0)])


@pytest.fixture
def straight():
    return BezierSegment([(0, 0, 0), (2, 0, 0)])


def make_ushape(gap=1.0, height=2.0, pull=0.6):
    """Two parallel legs ``gap`` apart joined by a cubic bend, C1 throughout."""
    leg1 = BezierSegment([(0, height, 0), (0, 0, 0)])
    bend = BezierSegment([(0, 0, 0), (0, -pull, 0), (gap, -pull, 0), (gap, 0, 0)])
    leg2 = BezierSegment([(gap, 0, 0), (gap, height, 0)])
    return CompositeBezier([leg1, bend, leg2])


def make_hook():
    """Cubic leaving the origin and returning to distance 0.2 from it."""
    return BezierSegment([(0, 0, 0), (2, 0, 0), (2, 2, 0), (0, 0.2, 0)])
