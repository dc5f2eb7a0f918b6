"""Vectorised kernels running verification across many sub-pairs at once.

All sub-pairs of one subdivision level share a degree, so control nets
stack into (P, m, 3) arrays and every evaluation, projection and disc check
runs as a handful of numpy passes instead of per-pair Python loops. Results
are numerically identical to the per-pair code paths: the same reduction
order, the same golden-section schedule.
"""

from __future__ import annotations

import numpy as np

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def eval_nets(nets, ts):
    """de Casteljau on per-row nets: nets (K, m, 3), ts (K,) -> (K, 3)."""
    b = np.array(nets, dtype=float, copy=True)
    w = np.asarray(ts, dtype=float)[:, None, None]
    m = b.shape[1]
    for r in range(m - 1):
        b[:, : m - 1 - r] = (1.0 - w) * b[:, : m - 1 - r] + w * b[:, 1 : m - r]
    return b[:, 0]


def eval_nets_grid(nets, ts):
    """Evaluate every net on a shared grid: nets (P, m, 3), ts (G,) -> (P, G, 3)."""
    p, m, _ = nets.shape
    g = ts.size
    b = np.broadcast_to(nets[:, None, :, :], (p, g, m, 3)).copy()
    w = np.asarray(ts, dtype=float)[None, :, None, None]
    for r in range(m - 1):
        b[:, :, : m - 1 - r] = (1.0 - w) * b[:, :, : m - 1 - r] + w * b[:, :, 1 : m - r]
    return b[:, :, 0]


def hodograph_nets(nets):
    """Derivative nets: n * (P[j+1] - P[j]) per row, degree >= 1."""
    m = nets.shape[1]
    return (m - 1) * (nets[:, 1:] - nets[:, :-1])


def project_batch(nets, queries, pair_idx, coarse=256, tol=1e-12, chunk=32):
    """Nearest parameters of queries on their pair's curve, batched.

    nets (P, m, 3); queries (K, 3); pair_idx (K,) selecting the net per
    query. Identical schedule to curve_core.nearest_parameters: shared
    coarse grid then golden-section refinement of the bracket.
    Returns (params (K,), distances (K,)).
    """
    p = nets.shape[0]
    k = queries.shape[0]
    ts = np.linspace(0.0, 1.0, coarse + 1)
    coarse_pts = eval_nets_grid(nets, ts)

    best = np.empty(k, dtype=int)
    for lo_p in range(0, p, chunk):
        sel = (pair_idx >= lo_p) & (pair_idx < lo_p + chunk)
        if not np.any(sel):
            continue
        q = queries[sel]
        cp = coarse_pts[pair_idx[sel]]
        d2 = ((q[:, None, :] - cp) ** 2).sum(axis=2)
        best[sel] = d2.argmin(axis=1)

    lo = ts[np.maximum(best - 1, 0)]
    hi = ts[np.minimum(best + 1, coarse)]
    qnets = nets[pair_idx]

    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1 = ((eval_nets(qnets, x1) - queries) ** 2).sum(axis=1)
    f2 = ((eval_nets(qnets, x2) - queries) ** 2).sum(axis=1)
    span = hi - lo
    it = 0
    while np.max(span) > tol and it < 120:
        m1 = f1 < f2
        hi = np.where(m1, x2, hi)
        lo = np.where(m1, lo, x1)
        x2n = np.where(m1, x1, lo + _INV_PHI * (hi - lo))
        x1n = np.where(m1, hi - _INV_PHI * (hi - lo), x2)
        fx = ((eval_nets(qnets, np.where(m1, x1n, x2n)) - queries) ** 2).sum(axis=1)
        f2, f1 = np.where(m1, f1, fx), np.where(m1, fx, f2)
        x1, x2 = x1n, x2n
        span = hi - lo
        it += 1
    tstar = 0.5 * (lo + hi)
    dist = np.linalg.norm(eval_nets(qnets, tstar) - queries, axis=1)
    return tstar, dist


def containment_batch(nets, vertex_stacks, r, per_edge, ortho_tol,
                      coarse=256):
    """Containment condition for all pairs of equal degree at once.

    vertex_stacks (P, V, 3) are the control polygons. Returns per-pair
    (clearance, worst_distance, worst_residual) arrays; residuals already
    have their allowance subtracted.
    """
    p, v_count, _ = vertex_stacks.shape
    verts = vertex_stacks
    samples = [verts]
    if per_edge > 0:
        fr = (np.arange(1, per_edge + 1) / (per_edge + 1))[None, None, :, None]
        inner = verts[:, :-1, None, :] * (1.0 - fr) + verts[:, 1:, None, :] * fr
        samples.append(inner.reshape(p, -1, 3))
    pts = np.concatenate(samples, axis=1)
    nq = pts.shape[1]
    interior = np.ones(nq, dtype=bool)
    interior[0] = False
    interior[v_count - 1] = False

    queries = pts.reshape(-1, 3)
    pair_idx = np.repeat(np.arange(p), nq)
    tstar, dist = project_batch(nets, queries, pair_idx, coarse=coarse)

    hodo = hodograph_nets(nets)
    deriv = eval_nets(hodo[pair_idx], tstar)
    speed = np.linalg.norm(deriv, axis=1)
    foot = eval_nets(nets[pair_idx], tstar)
    resid = np.abs(np.einsum("kd,kd->k", queries - foot, deriv)) / speed
    allowance = ortho_tol * (1.0 + np.linalg.norm(queries, axis=1))

    dist = dist.reshape(p, nq)
    over = (resid - allowance).reshape(p, nq)
    worst_distance = dist[:, interior].max(axis=1)
    worst_residual = over[:, interior].max(axis=1)
    return r - worst_distance, worst_distance, worst_residual


def turning_batch(nets, vertex_stacks, grid_size):
    """Turning condition ingredients for all pairs of equal degree at once.

    Returns (total_turn (P,), max_theta (P,)). The angle profile uses the
    shared grid plus both one-sided angles at every breakpoint.
    """
    p, v_count, _ = vertex_stacks.shape
    m = v_count - 1
    edges = vertex_stacks[:, 1:] - vertex_stacks[:, :-1]

    if m >= 2:
        a = edges[:, :-1]
        b = edges[:, 1:]
        cross = np.linalg.norm(np.cross(a, b), axis=2)
        dot = np.einsum("pmd,pmd->pm", a, b)
        total = np.arctan2(cross, dot).sum(axis=1)
    else:
        total = np.zeros(p)

    hodo = hodograph_nets(nets)
    ts = np.linspace(0.0, 1.0, grid_size)
    deriv = eval_nets_grid(hodo, ts)
    if np.any(np.linalg.norm(deriv, axis=2) <= 1e-12):
        from .errors import RegularityError

        raise RegularityError("curve derivative vanishes at a sample parameter")
    edge_idx = np.clip(np.floor(ts * m).astype(int), 0, m - 1)
    ed = edges[:, edge_idx]
    theta = np.arctan2(np.linalg.norm(np.cross(deriv, ed), axis=2),
                       np.einsum("pgd,pgd->pg", deriv, ed))
    max_theta = theta.max(axis=1)

    if m >= 2:
        bts = np.arange(1, m) / m
        bderiv = eval_nets_grid(hodo, bts)
        left = np.arctan2(np.linalg.norm(np.cross(bderiv, edges[:, :-1]), axis=2),
                          np.einsum("pgd,pgd->pg", bderiv, edges[:, :-1]))
        right = np.arctan2(np.linalg.norm(np.cross(bderiv, edges[:, 1:]), axis=2),
                           np.einsum("pgd,pgd->pg", bderiv, edges[:, 1:]))
        max_theta = np.maximum(max_theta,
                               np.maximum(left, right).max(axis=1))
    return total, max_theta


def disc_hits_batch(nets, vertex_stacks, r, grid_size, curve_samples,
                    plane_tol, chunk=24):
    """Disc/polyline and disc/curve hit counts for all pairs at once.

    Returns (poly_counts (P, G), curve_counts (P, G), degenerate) where
    ``degenerate`` lists (pair, disc, edge) for edges inside a plane.
    """
    p = nets.shape[0]
    g = grid_size
    ts = np.linspace(0.0, 1.0, g)
    ss = np.linspace(0.0, 1.0, curve_samples)

    cpts = eval_nets_grid(nets, ts)
    hodo = hodograph_nets(nets)
    derivs = eval_nets_grid(hodo, ts)
    normals = derivs / np.linalg.norm(derivs, axis=2, keepdims=True)
    offsets = np.einsum("pgd,pgd->pg", cpts, normals)

    poly_counts = np.empty((p, g), dtype=int)
    curve_counts = np.empty((p, g), dtype=int)
    degenerate = []

    for lo_p in range(0, p, chunk):
        hi_p = min(lo_p + chunk, p)
        sl = slice(lo_p, hi_p)
        v = vertex_stacks[sl]
        nrm = normals[sl]
        off = offsets[sl]
        cp = cpts[sl]

        # polyline side: signed vertex distances per disc
        d = np.einsum("pvd,pgd->pgv", v, nrm) - off[:, :, None]
        scale = 1.0 + np.abs(v).max() + np.abs(cp).max()
        d = np.where(np.abs(d) <= plane_tol * scale, 0.0, d)
        d0 = d[:, :, :-1]
        d1 = d[:, :, 1:]
        deg = (d0 == 0.0) & (d1 == 0.0)
        if np.any(deg):
            for pi, gi, ei in np.argwhere(deg):
                degenerate.append((lo_p + int(pi), int(gi), int(ei)))
        take = (d0 == 0.0) | (d0 * d1 < 0.0)
        take[:, :, -1] |= (d1[:, :, -1] == 0.0) & (d0[:, :, -1] != 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(d0 == 0.0, 0.0, d0 / (d0 - d1))
        s = np.where((d1 == 0.0) & (d0 != 0.0), 1.0, s)
        s = np.where(take, s, 0.0)
        x = v[:, None, :-1, :] + s[:, :, :, None] * (v[:, 1:] - v[:, :-1])[:, None, :, :]
        within = np.linalg.norm(x - cp[:, :, None, :], axis=3) <= r
        poly_counts[sl] = (take & within).sum(axis=2)

        # curve side: signed sample distances per disc
        spts = eval_nets_grid(nets[sl], ss)
        gmat = np.einsum("psd,pgd->pgs", spts, nrm) - off[:, :, None]
        gscale = 1.0 + np.abs(spts).max()
        gmat = np.where(np.abs(gmat) <= plane_tol * gscale, 0.0, gmat)

        # exact zeros are rare after snapping: gather their distances sparsely
        curve_counts[sl] = 0
        zp, zg, zs = np.where(gmat == 0.0)
        if zp.size:
            zdist = np.linalg.norm(spts[zp, zs] - cp[zp, zg], axis=1)
            zin = zdist <= r
            np.add.at(curve_counts[sl], (zp[zin], zg[zin]), 1)

        pc, gc, sc = np.where(gmat[:, :, :-1] * gmat[:, :, 1:] < 0.0)
        if pc.size:
            lo = ss[sc].copy()
            hi = ss[sc + 1].copy()
            flo = gmat[pc, gc, sc].copy()
            knets = nets[sl][pc]
            knrm = nrm[pc, gc]
            koff = off[pc, gc]
            # 18 halvings resolve the crossing to ~1e-8 of the parameter
            # span, far below the disc-membership margins being decided.
            for _ in range(18):
                mid = 0.5 * (lo + hi)
                fm = np.einsum("kd,kd->k", eval_nets(knets, mid), knrm) - koff
                neg = (flo < 0) == (fm < 0)
                lo = np.where(neg, mid, lo)
                flo = np.where(neg, fm, flo)
                hi = np.where(neg, hi, mid)
            mid = 0.5 * (lo + hi)
            dist = np.linalg.norm(eval_nets(knets, mid) - cp[pc, gc], axis=1)
            inside = dist <= r
            np.add.at(curve_counts[sl], (pc[inside], gc[inside]), 1)
    return poly_counts, curve_counts, degenerate


def correspondence_batch(nets, vertex_stacks, r, grid_size, plane_tol, chunk=24):
    """Unique disc/polyline hits per grid parameter for all pairs.

    Returns (images (P, G, 3), arcs (P, G), counts (P, G), curve_points).
    Callers must check counts == 1 before trusting a row.
    """
    p = nets.shape[0]
    g = grid_size
    ts = np.linspace(0.0, 1.0, g)
    cpts = eval_nets_grid(nets, ts)
    hodo = hodograph_nets(nets)
    derivs = eval_nets_grid(hodo, ts)
    normals = derivs / np.linalg.norm(derivs, axis=2, keepdims=True)
    offsets = np.einsum("pgd,pgd->pg", cpts, normals)

    images = np.full((p, g, 3), np.nan)
    arcs = np.full((p, g), np.nan)
    counts = np.zeros((p, g), dtype=int)

    m = vertex_stacks.shape[1] - 1
    for lo_p in range(0, p, chunk):
        hi_p = min(lo_p + chunk, p)
        sl = slice(lo_p, hi_p)
        v = vertex_stacks[sl]
        nrm = normals[sl]
        off = offsets[sl]
        cp = cpts[sl]
        d = np.einsum("pvd,pgd->pgv", v, nrm) - off[:, :, None]
        scale = 1.0 + np.abs(v).max() + np.abs(cp).max()
        d = np.where(np.abs(d) <= plane_tol * scale, 0.0, d)
        d0 = d[:, :, :-1]
        d1 = d[:, :, 1:]
        take = (d0 == 0.0) | (d0 * d1 < 0.0)
        take[:, :, -1] |= (d1[:, :, -1] == 0.0) & (d0[:, :, -1] != 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(d0 == 0.0, 0.0, d0 / (d0 - d1))
        s = np.where((d1 == 0.0) & (d0 != 0.0), 1.0, s)
        s = np.where(take, s, 0.0)
        x = v[:, None, :-1, :] + s[:, :, :, None] * (v[:, 1:] - v[:, :-1])[:, None, :, :]
        within = np.linalg.norm(x - cp[:, :, None, :], axis=3) <= r
        hit = take & within
        counts[sl] = hit.sum(axis=2)
        # keep the first (and ideally only) hit per row
        first = np.argmax(hit, axis=2)
        pi, gi = np.meshgrid(np.arange(hi_p - lo_p), np.arange(g), indexing="ij")
        images[sl] = x[pi, gi, first]
        arcs[sl] = (first + s[pi, gi, first]) / m
    return images, arcs, counts, cpts
