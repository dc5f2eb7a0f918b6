"""Segment evaluation, subdivision, hodographs, polylines, Hausdorff."""

import math

import numpy as np
import pytest

from knotcert.curve_core import (
    BezierSegment,
    CompositeBezier,
    Polyline,
    hausdorff_estimate,
    nearest_parameter,
    second_difference_norm,
)
from knotcert.errors import ResourceLimitError


def bernstein_eval(points, t):
    """Independent oracle: direct Bernstein-basis summation."""
    pts = np.asarray(points, float)
    n = len(pts) - 1
    out = np.zeros(3)
    for j, p in enumerate(pts):
        out += math.comb(n, j) * t ** j * (1 - t) ** (n - j) * p
    return out


class TestEval:
    def test_endpoint_interpolation(self, quadratic):
        assert np.array_equal(quadratic.point_at(0.0), [0, 0, 0])
        assert np.array_equal(quadratic.point_at(1.0), [2, 0, 0])

    def test_midpoint_matches_bernstein_oracle(self, quadratic):
        # oracle value: (1, 0.5, 0)
        expected = bernstein_eval(quadratic.control_points, 0.5)
        np.testing.assert_allclose(expected, [1.0, 0.5, 0.0], atol=1e-15)
        np.testing.assert_allclose(quadratic.point_at(0.5), expected, atol=1e-15)

    def test_linear_interpolation(self, straight):
        np.testing.assert_allclose(straight.point_at(0.25), [0.5, 0, 0], atol=1e-15)

    def test_random_parameters_match_oracle(self):
        rng = np.random.default_rng(3)
        seg = BezierSegment(rng.uniform(-1, 1, (6, 3)))
        for t in rng.random(20):
            np.testing.assert_allclose(
                seg.point_at(t), bernstein_eval(seg.control_points, t), atol=1e-12)

    def test_domain_error(self, quadratic):
        with pytest.raises(ValueError):
            quadratic.point_at(-0.01)
        with pytest.raises(ValueError):
            quadratic.points_at(np.array([0.5, 1.2]))

    def test_vectorised_matches_scalar_bitwise(self, quadratic):
        ts = np.linspace(0, 1, 17)
        many = quadratic.points_at(ts)
        for t, row in zip(ts, many):
            assert np.array_equal(quadratic.point_at(float(t)), row)

    def test_invariants(self):
        with pytest.raises(ValueError):
            BezierSegment([(0, 0, 0)])
        with pytest.raises(ValueError):
            BezierSegment([(0, 0, 0), (np.nan, 0, 0)])
        with pytest.raises(ValueError):
            BezierSegment([(0, 0, 0), (1, 0, 0)], interval=(0.5, 0.5))


class TestSubdivision:
    def test_split_hand_triangle(self, quadratic):
        # de Casteljau triangle at 1/2: (0,0,0) (.5,.5,0) (1,.5,0)
        left, right = quadratic.split()
        np.testing.assert_array_equal(
            left.control_points, [[0, 0, 0], [0.5, 0.5, 0], [1, 0.5, 0]])
        np.testing.assert_array_equal(
            right.control_points, [[1, 0.5, 0], [1.5, 0.5, 0], [2, 0, 0]])
        assert left.interval == (0.0, 0.5)
        assert right.interval == (0.5, 1.0)

    def test_degree1_midpoint_insertion(self, straight):
        left, right = straight.split()
        np.testing.assert_array_equal(left.control_points, [[0, 0, 0], [1, 0, 0]])
        np.testing.assert_array_equal(right.control_points, [[1, 0, 0], [2, 0, 0]])

    def test_double_subdivision_matches_parent(self, quadratic):
        left, _ = quadratic.split()
        ll, lr = left.split()
        for sub in (ll, lr):
            for t_local in (0.0, 0.5, 1.0):
                t_parent = sub.to_global(t_local)
                assert abs(t_parent * 1.0) <= 0.5
                np.testing.assert_allclose(
                    sub.point_at(t_local), quadratic.point_at(t_parent), atol=1e-12)

    def test_iteration_counts_and_tiling(self, quadratic):
        r0 = quadratic.subdivide(0)
        assert len(r0.sub_segments) == 1 and len(r0.sub_polygons) == 1
        r2 = quadratic.subdivide(2)
        assert len(r2.sub_segments) == 4
        breaks = [s.interval for s in r2.sub_segments]
        assert breaks == [(0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]

    def test_cap_exceeded(self, quadratic):
        with pytest.raises(ResourceLimitError, match="cap"):
            quadratic.subdivide(23)

    def test_tiling_identity_deep(self):
        rng = np.random.default_rng(11)
        seg = BezierSegment(rng.uniform(-1, 1, (4, 3)))
        for i in (1, 3, 6):
            res = seg.subdivide(i)
            for sub in res.sub_segments:
                ts = np.linspace(0.1, 0.9, 9)
                mapped = sub.to_global(ts)
                np.testing.assert_allclose(
                    sub.points_at(ts), seg.points_at(mapped), atol=1e-12)

    def test_endpoint_sharing_bitwise(self, quadratic):
        res = quadratic.subdivide(3)
        for a, b in zip(res.sub_polygons, res.sub_polygons[1:]):
            assert np.array_equal(a.vertices[-1], b.vertices[0])

    def test_merged_polyline(self, quadratic):
        res = quadratic.subdivide(2)
        merged = res.merged_polyline()
        assert len(merged) == 4 * 2 + 1
        assert np.array_equal(merged.vertices[0], quadratic.control_points[0])
        assert np.array_equal(merged.vertices[-1], quadratic.control_points[-1])


class TestHodograph:
    def test_quadratic_formula(self, quadratic):
        hodo = quadratic.hodograph()
        np.testing.assert_array_equal(hodo.control_points, [[2, 2, 0], [2, -2, 0]])

    def test_degree1_constant(self, straight):
        hodo = straight.hodograph()
        np.testing.assert_array_equal(hodo.point_at(0.7), [2, 0, 0])

    def test_finite_difference_oracle(self, quadratic):
        h = 1e-5
        t = 0.3
        fd = (quadratic.point_at(t + h) - quadratic.point_at(t - h)) / (2 * h)
        np.testing.assert_allclose(quadratic.derivative_at(t), fd, atol=1e-7)

    def test_exactness_at_33_samples(self):
        rng = np.random.default_rng(5)
        seg = BezierSegment(rng.uniform(-1, 1, (5, 3)))
        h = 1e-5
        for t in np.linspace(0.01, 0.99, 33):
            fd = (seg.point_at(t + h) - seg.point_at(t - h)) / (2 * h)
            np.testing.assert_allclose(seg.derivative_at(t), fd, atol=1e-7)


class TestSecondDifference:
    def test_collinear_zero(self):
        pts = np.outer(np.arange(5), [1.0, 2.0, -1.0])
        assert second_difference_norm(pts) == 0.0

    def test_hand_value(self, quadratic):
        assert second_difference_norm(quadratic.control_points) == 2.0

    def test_translation_invariant(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(-1, 1, (6, 3))
        shifted = pts + np.array([3.0, -2.0, 7.0])
        assert second_difference_norm(pts) == pytest.approx(
            second_difference_norm(shifted), abs=1e-12)

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            second_difference_norm([(0, 0, 0), (1, 0, 0)])


class TestHausdorff:
    def test_degree1_coincident(self, straight):
        poly = straight.control_polygon()
        assert hausdorff_estimate(poly, straight, samples=128) <= 1e-12

    def test_quadratic_apex_gap(self, quadratic):
        # analytic: the polygon apex (1,1,0) is 0.5 from the curve point (1,.5,0)
        poly = quadratic.control_polygon()
        assert hausdorff_estimate(poly, quadratic, samples=512) == pytest.approx(
            0.5, abs=0.01)

    def test_monotone_decrease_under_subdivision(self, quadratic):
        values = []
        for i in range(0, 5):
            merged = quadratic.subdivide(i).merged_polyline()
            values.append(hausdorff_estimate(merged, quadratic, samples=512))
        assert all(a > b for a, b in zip(values, values[1:]))


class TestPolyline:
    def test_uniform_parameterisation(self):
        poly = Polyline([(0, 0, 0), (1, 0, 0), (1, 1, 0)], (0.0, 1.0))
        np.testing.assert_allclose(poly.point_at(0.5), [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(poly.point_at(0.25), [0.5, 0, 0], atol=1e-15)

    def test_edge_derivative(self):
        poly = Polyline([(0, 0, 0), (1, 0, 0), (1, 1, 0)], (0.0, 1.0))
        np.testing.assert_array_equal(poly.derivative_at(0.1), [2, 0, 0])
        np.testing.assert_array_equal(poly.derivative_at(0.9), [0, 2, 0])

    def test_repeated_vertices_rejected(self):
        with pytest.raises(ValueError):
            Polyline([(0, 0, 0), (0, 0, 0), (1, 0, 0)])

    def test_sample_points_mask(self):
        poly = Polyline([(0, 0, 0), (1, 0, 0), (1, 1, 0)], (0.0, 1.0))
        pts, endpoint = poly.sample_points(3)
        assert pts.shape == (3 + 2 * 3, 3)
        assert endpoint[0] and endpoint[2] and endpoint.sum() == 2

    def test_is_simple(self):
        assert Polyline([(0, 0, 0), (1, 0, 0), (1, 1, 0)]).is_simple()
        crossing = Polyline([(0, 0, 0), (2, 0, 0), (2, 1, 0), (-1, 1, 0),
                             (-1, -1, 0), (1, 0.0, 1e-16)])
        assert not crossing.is_simple(tol=1e-9)


class TestComposite:
    def test_junction_gap_rejected(self):
        a = BezierSegment([(0, 0, 0), (1, 0, 0)])
        b = BezierSegment([(2, 0, 0), (3, 0, 0)])
        with pytest.raises(ValueError, match="share an endpoint"):
            CompositeBezier([a, b])

    def test_tangent_break_rejected(self):
        a = BezierSegment([(0, 0, 0), (1, 0, 0)])
        b = BezierSegment([(1, 0, 0), (1, 1, 0)])
        with pytest.raises(ValueError, match="tangent"):
            CompositeBezier([a, b])

    def test_global_evaluation(self):
        a = BezierSegment([(0, 0, 0), (1, 0, 0)])
        b = BezierSegment([(1, 0, 0), (2, 0, 0)])
        c = CompositeBezier([a, b])
        np.testing.assert_allclose(c.point_at(0.25), [0.5, 0, 0], atol=1e-15)
        np.testing.assert_allclose(c.point_at(0.75), [1.5, 0, 0], atol=1e-15)
        ts = np.linspace(0, 1, 9)
        np.testing.assert_allclose(c.points_at(ts)[:, 0], 2 * ts, atol=1e-14)

    def test_subdivide_counts(self):
        a = BezierSegment([(0, 0, 0), (1, 0, 0)])
        b = BezierSegment([(1, 0, 0), (2, 0, 0)])
        res = CompositeBezier([a, b]).subdivide(2)
        assert len(res.sub_segments) == 8


class TestNearestParameter:
    def test_on_curve_points(self, quadratic):
        for t in (0.0, 0.3, 0.77, 1.0):
            tstar, dist = nearest_parameter(quadratic, quadratic.point_at(t))
            assert dist <= 1e-9
            assert tstar == pytest.approx(t, abs=1e-6)

    def test_offset_point(self, straight):
        # t carries the sqrt(eps) floor of derivative-free minimisation;
        # the distance value itself is exact to machine precision.
        tstar, dist = nearest_parameter(straight, (1.0, 0.5, 0.0))
        assert tstar == pytest.approx(0.5, abs=1e-6)
        assert dist == pytest.approx(0.5, abs=1e-12)
