"""Curve file grammar, CSV/OBJ export, certificate serialisation."""

import numpy as np
import pytest

from knotcert.curve_core import BezierSegment, CompositeBezier
from knotcert.errors import CurveFileError
from knotcert.fileio import (
    certificate_dict,
    certificate_text,
    parse_curve_text,
    read_polyline_csv,
    write_curve_file,
    write_polyline_csv,
    write_polyline_obj,
)

GOOD = """\
# toy file
version 1
segment degree=2
0 0 0
1 1 0
2 0 0
"""


class TestParse:
    def test_single_segment(self):
        curve, radius = parse_curve_text(GOOD)
        assert radius is None
        assert curve.num_segments == 1
        assert curve.segments[0].degree == 2

    def test_degree1_file(self):
        curve, _ = parse_curve_text("version 1\nsegment degree=1\n0 0 0\n3 0 0\n")
        assert curve.segments[0].degree == 1
        np.testing.assert_array_equal(curve.end_point(), [3, 0, 0])

    def test_radius_override(self):
        curve, radius = parse_curve_text("version 1\nradius 0.75\n" + GOOD[11:])
        assert radius == 0.75

    def test_arity_error_names_segment(self):
        text = "version 1\nsegment degree=3\n0 0 0\n1 0 0\n2 0 0\n"
        with pytest.raises(CurveFileError, match="segment 0.*degree 3.*3 control"):
            parse_curve_text(text)

    def test_syntax_error_reports_line(self):
        text = "version 1\nsegment degree=1\n0 0 zero\n1 0 0\n"
        with pytest.raises(CurveFileError, match="line 3"):
            parse_curve_text(text)

    def test_missing_version(self):
        with pytest.raises(CurveFileError, match="version"):
            parse_curve_text("segment degree=1\n0 0 0\n1 0 0\n")

    def test_unsupported_version(self):
        with pytest.raises(CurveFileError, match="version 9"):
            parse_curve_text("version 9\n")

    def test_stray_token(self):
        with pytest.raises(CurveFileError, match="line 2"):
            parse_curve_text("version 1\nbogus 1 2\n")

    def test_junction_validation_applies(self):
        text = ("version 1\n"
                "segment degree=1\n0 0 0\n1 0 0\n"
                "segment degree=1\n1 0 0\n1 1 0\n")
        with pytest.raises(CurveFileError, match="tangent"):
            parse_curve_text(text)


class TestRoundTrip:
    def test_curve_file_bit_exact(self, tmp_path):
        rng = np.random.default_rng(77)
        segs = []
        start = rng.uniform(-1, 1, 3)
        d = np.array([1.0, 0.3, -0.2])
        for _ in range(2):
            pts = [start]
            for _ in range(3):
                pts.append(pts[-1] + d * rng.uniform(0.5, 1.0))
                d = d + 0.1 * rng.standard_normal(3)
            segs.append(BezierSegment(np.array(pts)))
            start = pts[-1]
            d = pts[-1] - pts[-2]
        curve = CompositeBezier(segs)
        path = tmp_path / "round.curve"
        write_curve_file(path, curve, radius=1.0 / 3.0)
        back, radius = parse_curve_text(path.read_text())
        assert radius == 1.0 / 3.0
        for a, b in zip(curve.segments, back.segments):
            assert np.array_equal(a.control_points, b.control_points)

    def test_polyline_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        verts = np.cumsum(rng.uniform(0.1, 1, (7, 3)), axis=0)
        from knotcert.curve_core import Polyline

        path = tmp_path / "poly.csv"
        write_polyline_csv(path, Polyline(verts))
        back = read_polyline_csv(path)
        assert np.array_equal(back.vertices, verts)

    def test_obj_output(self, tmp_path):
        from knotcert.curve_core import Polyline

        path = tmp_path / "poly.obj"
        write_polyline_obj(path, Polyline([(0, 0, 0), (1, 0, 0), (1, 1, 0)]))
        lines = path.read_text().splitlines()
        assert lines[0].startswith("v ")
        assert lines[-1] == "l 1 2 3"

    def test_csv_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,4\n")
        with pytest.raises(CurveFileError, match="3 coordinates"):
            read_polyline_csv(path)


@pytest.fixture(scope="module")
def cert():
    from knotcert.geometry_analysis import pipe_radius
    from knotcert.iteration_bounds import composite_bounds
    from knotcert.isotopy_verify import verify_composite

    quad = BezierSegment([(0, 0, 0), (1, 1, 0), (2, 0, 0)])
    curve = CompositeBezier([quad])
    pipe = pipe_radius(curve)
    agg, per = composite_bounds(curve, pipe.r)
    return verify_composite(curve, curve.subdivide(2), pipe, grid_size=17,
                            uniqueness_grid=65, bound_report=agg,
                            segment_bounds=per)


class TestCertificateSerialisation:
    def test_deterministic_text(self, cert):
        assert certificate_text(cert) == certificate_text(cert)

    def test_no_timestamps(self, cert):
        text = certificate_text(cert)
        assert "time" not in text.lower().replace("iterations", "")
        assert "date" not in text.lower()

    def test_structure(self, cert):
        d = certificate_dict(cert)
        assert d["verdict"] == "PASS"
        assert d["iterations"] == 2
        assert len(d["pairs"]) == 4
        assert d["bounds"]["certified_iterations"] >= 0
        assert d["notes"]["log_base"] == 2

    def test_verdict_line_present(self, cert):
        assert "verdict = PASS" in certificate_text(cert)

    def test_floats_round_trip(self, cert):
        text = certificate_text(cert)
        line = next(l for l in text.splitlines()
                    if l.startswith("pipe.r = "))
        value = float(line.split(" = ")[1])
        assert value == cert.pipe.r
