"""Explicit ambient isotopy: per-disc linear pushes and their extensions.

Each verified sub-pair contributes a field supported on its pipe section;
inside a normal disc the curve point p is pushed to the polyline image q by
mapping each ray segment [p, b] (b on the disc rim) linearly onto [q, b].
Outside every support the maps are the identity, so the composition over
sub-pairs is order-independent.
"""

from __future__ import annotations

import math

import numpy as np

from .curve_core import nearest_parameter
from .errors import AmbiguousProjectionError, DisjointSupportError
from .isotopy_verify import _plane_edge_hits

# Residual allowance deciding membership of the pipe section, matching the
# containment check.
ORTHO_TOL = 1e-7
# Two projection parameters closer than this in distance are ambiguous.
AMBIGUITY_TOL = 1e-9
# Minimal parameter separation for two minima to count as distinct.
AMBIGUITY_PARAM_SEP = 1e-6


def _ray_boundary_intersection(p, v, center, r):
    """Rim point b of the ray from p through v inside the disc of radius r.

    Solves ||p - center + mu (v - p)|| = r for the positive root; the
    discriminant is nonnegative whenever p is interior (tolerance 1e-12).
    """
    w = v - p
    pc = p - center
    a = float(w @ w)
    b = 2.0 * float(pc @ w)
    c = float(pc @ pc) - r * r
    disc = b * b - 4.0 * a * c
    if disc < -1e-12 * max(r * r, 1.0):
        raise ValueError("ray does not reach the disc boundary")
    disc = max(disc, 0.0)
    mu = (-b + math.sqrt(disc)) / (2.0 * a)
    return p + mu * w, mu


def push_map(p, q, center, normal, r, v):
    """Disc homeomorphism sending p to q and fixing the rim pointwise.

    All of p, q, v must lie in the closed disc (center, normal, r); p and q
    must be interior. v = p maps to q; otherwise v = (1-lam) p + lam b for
    the rim point b hit by the ray p -> v, and the image is (1-lam) q + lam b.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    center = np.asarray(center, dtype=float)
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    scale = 1.0 + np.linalg.norm(center)
    for name, pt in (("p", p), ("q", q), ("v", v)):
        if abs(float((pt - center) @ normal)) > 1e-9 * scale:
            raise ValueError(f"{name} does not lie in the disc plane")
    if np.linalg.norm(v - center) > r * (1.0 + 1e-12):
        raise ValueError("v lies outside the disc")
    for name, pt in (("p", p), ("q", q)):
        if np.linalg.norm(pt - center) >= r * (1.0 - 1e-12):
            raise ValueError(f"{name} must be interior to the disc")
    if np.array_equal(v, p):
        return q.copy()
    b, mu = _ray_boundary_intersection(p, v, center, r)
    lam = 1.0 / mu
    return (1.0 - lam) * q + lam * b


def disc_isotopy(p, q, center, normal, r, v, s):
    """Time-s stage of the push: target moves linearly from p to q."""
    if not (0.0 <= s <= 1.0):
        raise ValueError("isotopy time must lie in [0, 1]")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    target = (1.0 - s) * p + s * q
    if np.array_equal(np.asarray(v, dtype=float), p):
        return target
    return push_map(p, target, center, normal, r, v)


class IsotopyField:
    """Push field of one verified sub-pair, supported on its pipe section."""

    __slots__ = ("seg", "polyline", "r", "table", "_coarse", "_slack")

    def __init__(self, seg, polyline, r, table=None, coarse=33):
        self.seg = seg
        self.polyline = polyline
        self.r = float(r)
        self.table = table
        self._coarse = seg.points_at(np.linspace(0.0, 1.0, coarse))
        hodo_pts = seg.degree * (seg.control_points[1:] - seg.control_points[:-1])
        # Between coarse samples the curve moves at most max speed / (2 gaps).
        self._slack = float(np.linalg.norm(hodo_pts, axis=1).max()) / (2.0 * (coarse - 1))

    @property
    def interval(self):
        return self.seg.interval

    def coarse_min_distance(self, v):
        """Lower bound on the distance from v to the sub-curve."""
        d = float(np.linalg.norm(self._coarse - np.asarray(v, float), axis=1).min())
        return max(d - self._slack, 0.0)

    def locate(self, v):
        """Nearest local parameter on the sub-curve, with ambiguity guard.

        Returns (t, dist). When the distance is below r, other coarse local
        minima are refined; a distinct parameter within AMBIGUITY_TOL of the
        same distance raises AmbiguousProjectionError.
        """
        v = np.asarray(v, dtype=float)
        t_best, d_best = nearest_parameter(self.seg, v)
        if d_best < self.r:
            ts = np.linspace(0.0, 1.0, 65)
            d = np.linalg.norm(self.seg.points_at(ts) - v, axis=1)
            interior = np.where((d[1:-1] <= d[:-2]) & (d[1:-1] <= d[2:]))[0] + 1
            for j in interior:
                if abs(ts[j] - t_best) <= 2.0 / 64:
                    continue
                t2, d2 = _refine_local(self.seg, v, ts[j - 1], ts[j + 1])
                if abs(d2 - d_best) <= AMBIGUITY_TOL and \
                        abs(t2 - t_best) > AMBIGUITY_PARAM_SEP:
                    raise AmbiguousProjectionError(
                        f"parameters {t_best:.12g} and {t2:.12g} both at "
                        f"distance {d_best:.12g}"
                    )
        return float(t_best), float(d_best)

    def contains(self, v, t=None, dist=None):
        """Membership in the open pipe section, matching the containment check."""
        v = np.asarray(v, dtype=float)
        if t is None or dist is None:
            t, dist = self.locate(v)
        if dist >= self.r:
            return False, t, dist
        deriv = self.seg.derivative_at(t)
        speed = np.linalg.norm(deriv)
        resid = abs(float((v - self.seg.point_at(t)) @ deriv)) / speed
        inside = resid <= ORTHO_TOL * (1.0 + np.linalg.norm(v))
        return bool(inside), t, dist

    def disc_image(self, t):
        """Disc data (center, normal) and the polyline image q at local t."""
        center = self.seg.point_at(t)
        deriv = self.seg.derivative_at(t)
        normal = deriv / np.linalg.norm(deriv)
        hits, _ = _plane_edge_hits(center, normal, self.polyline, self.r)
        if len(hits) != 1:
            raise DisjointSupportError(
                f"disc at t={t:.12g} meets the polyline {len(hits)} times"
            )
        return center, normal, hits[0]

    def map_point(self, v, s, t_hint=None):
        """Time-s image of v; identity outside the support and at s = 0.

        ``t_hint`` skips the projection search when the caller already knows
        the nearest parameter (e.g. v lies on the curve); the membership
        residual is still enforced.
        """
        v = np.asarray(v, dtype=float)
        if s == 0.0:
            return v.copy()
        if t_hint is not None:
            dist = float(np.linalg.norm(v - self.seg.point_at(t_hint)))
            inside, t, dist = self.contains(v, t=float(t_hint), dist=dist)
        else:
            inside, t, dist = self.contains(v)
        if not inside:
            return v.copy()
        center, normal, q = self.disc_image(t)
        if np.linalg.norm(q - center) >= self.r * (1.0 - 1e-12):
            raise DisjointSupportError(
                f"polyline image at t={t:.12g} touches the disc rim"
            )
        if np.array_equal(v, center):
            return (1.0 - s) * center + s * q
        return disc_isotopy(center, q, center, normal, self.r, v, s)


def build_isotopy_fields(result, certificate):
    """Fields for every sub-pair of a PASSED certificate."""
    if not certificate.passed:
        raise ValueError("isotopy fields require a PASSED certificate")
    r = certificate.pipe.r
    return [IsotopyField(sub, poly, r) for poly, sub in result.pairs()]


def ambient_map(field, v, s):
    """Ambient extension of one field: the push inside, identity outside."""
    if not (0.0 <= s <= 1.0):
        raise ValueError("isotopy time must lie in [0, 1]")
    return field.map_point(v, s)


def compose_isotopy(fields, v, s):
    """Apply the composition of all per-pair fields to one point.

    Supports are disjoint except for shared junction discs, where both
    neighbouring fields act trivially (p = q there); the point is therefore
    handled by the field with the smallest distance, and any other claiming
    field must agree with it. Disagreement raises DisjointSupportError.
    """
    if not (0.0 <= s <= 1.0):
        raise ValueError("isotopy time must lie in [0, 1]")
    v = np.asarray(v, dtype=float)
    if s == 0.0:
        return v.copy()
    claims = []
    for k, f in enumerate(fields):
        if f.coarse_min_distance(v) >= f.r:
            continue
        inside, t, dist = f.contains(v)
        if inside:
            claims.append((dist, k, t))
    if not claims:
        return v.copy()
    claims.sort()
    _, kbest, _ = claims[0]
    out = fields[kbest].map_point(v, s)
    tol = 1e-7 * (1.0 + np.linalg.norm(v))
    for _, k, _ in claims[1:]:
        other = fields[k].map_point(v, s)
        if np.linalg.norm(other - out) > tol:
            raise DisjointSupportError(
                f"point claimed by fields {kbest} and {k} with conflicting images"
            )
    return out


def _refine_local(seg, v, lo, hi, iters=80):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(iters):
        if hi - lo <= 1e-12:
            break
        x1 = hi - inv_phi * (hi - lo)
        x2 = lo + inv_phi * (hi - lo)
        d1 = np.linalg.norm(seg.point_at(x1) - v)
        d2 = np.linalg.norm(seg.point_at(x2) - v)
        if d1 < d2:
            hi = x2
        else:
            lo = x1
    t = 0.5 * (lo + hi)
    return t, float(np.linalg.norm(seg.point_at(t) - v))


def sample_frames(fields, steps, curve_samples):
    """Deformation snapshots: the curve is carried onto the polyline.

    Frame j evaluates the composed isotopy at time j/(steps-1) on a uniform
    curve sample; frame 0 is the sampled curve, the last frame its polyline
    image. Returns a list of Polyline objects.
    """
    from .curve_core import Polyline

    if steps < 2:
        raise ValueError("steps must be >= 2")
    if curve_samples < 2:
        raise ValueError("curve_samples must be >= 2")
    intervals = [f.interval for f in fields]
    lo = min(iv[0] for iv in intervals)
    hi = max(iv[1] for iv in intervals)
    ts = np.linspace(lo, hi, curve_samples)

    # Each sample parameter belongs to a known field: no global search needed.
    breaks = np.asarray([iv[0] for iv in intervals] + [hi])
    idx = np.clip(np.searchsorted(breaks, ts, side="right") - 1, 0, len(fields) - 1)

    frames = []
    for j in range(steps):
        s = j / (steps - 1)
        verts = np.empty((curve_samples, 3))
        for i, t in enumerate(ts):
            f = fields[idx[i]]
            local = float(np.clip(f.seg.to_local(t), 0.0, 1.0))
            p = f.seg.point_at(local)
            verts[i] = f.map_point(p, s, t_hint=local)
        frames.append(Polyline(verts, (lo, hi)))
    return frames
