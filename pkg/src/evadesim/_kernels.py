"""Hot numeric kernels with numba acceleration and a pure-numpy fallback.

Set ``EVADESIM_NO_NUMBA=1`` to force the numpy path (or when numba is not
importable).  Both paths are exercised by the test suite and compared by
``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("EVADESIM_NO_NUMBA", "") not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        import numba
    except ImportError:
        USE_NUMBA = False


def _pairwise_accel_numpy(pos, vel, alpha, beta, cr, ca, lr, la, cutoff):
    """Self-propulsion plus localized Morse interaction accelerations."""
    n = pos.shape[0]
    speed2 = np.sum(vel * vel, axis=1)
    acc = (alpha - beta * speed2)[:, None] * vel
    if n > 1:
        diff = pos[:, None, :] - pos[None, :, :]      # x_k - x_m
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        np.fill_diagonal(dist, np.inf)
        mag = (cr / lr) * np.exp(-dist / lr) - (ca / la) * np.exp(-dist / la)
        mag = np.where(dist < cutoff, mag / dist, 0.0)
        acc += np.sum(mag[:, :, None] * diff, axis=1)
    return acc


COLLINEAR_RTOL = 1e-12


def _alpha_filter_numpy(pts, tris, edges, r):
    """Keep masks for candidate triangles and edges of an alpha complex.

    A simplex survives when its circumradius is at most r and no point of
    ``pts`` lies strictly inside its circumball.  Returns
    (tri_keep, edge_keep, degenerate); degenerate=True flags a collinear
    triangle, in which case the masks are meaningless and the caller should
    jitter and retry.
    """
    tri_keep = np.zeros(tris.shape[0], dtype=np.bool_)
    edge_keep = np.zeros(edges.shape[0], dtype=np.bool_)
    if tris.shape[0]:
        a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
        ab, ac = b - a, c - a
        cross = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
        scale = np.sqrt((ab * ab).sum(1) * (ac * ac).sum(1))
        if np.any(np.abs(cross) <= COLLINEAR_RTOL * scale):
            return tri_keep, edge_keep, True
        d = 2.0 * cross
        ab2, ac2 = (ab * ab).sum(1), (ac * ac).sum(1)
        ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / d
        uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / d
        radii2 = ux * ux + uy * uy
        tri_keep = radii2 <= r * r
        idx = np.nonzero(tri_keep)[0]
        if idx.size:
            cc = a[idx] + np.stack([ux[idx], uy[idx]], axis=1)
            d2 = ((pts[None, :, :] - cc[:, None, :]) ** 2).sum(2)
            inside = d2 < radii2[idx, None]
            rows = np.arange(idx.size)
            for col in range(3):
                inside[rows, tris[idx, col]] = False
            tri_keep[idx] = ~inside.any(1)
    if edges.shape[0]:
        p, q = pts[edges[:, 0]], pts[edges[:, 1]]
        mid = 0.5 * (p + q)
        radii2 = 0.25 * ((q - p) ** 2).sum(1)
        edge_keep = radii2 <= r * r
        idx = np.nonzero(edge_keep)[0]
        if idx.size:
            d2 = ((pts[None, :, :] - mid[idx][:, None, :]) ** 2).sum(2)
            inside = d2 < radii2[idx, None]
            rows = np.arange(idx.size)
            for col in range(2):
                inside[rows, edges[idx, col]] = False
            edge_keep[idx] = ~inside.any(1)
    return tri_keep, edge_keep, False


def _local_complex_numpy(pts, r):
    """Alpha complex simplices from 2r-local candidate generation.

    Candidate edges are pairs at distance <= 2r and candidate triangles are
    triples pairwise within 2r; a Gabriel simplex has an empty circumball and
    is therefore Delaunay, so filtering these candidates by the short-and-
    Gabriel criterion gives exactly the alpha complex.  Returns kept
    (edges, triangles) as sorted index arrays, with triangle edges included
    (face closure).
    """
    n = pts.shape[0]
    edges_out = np.empty((0, 2), dtype=np.int64)
    tris_out = np.empty((0, 3), dtype=np.int64)
    if n < 2:
        return edges_out, tris_out
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = (diff * diff).sum(2)
    adj = d2 <= 4.0 * r * r
    np.fill_diagonal(adj, False)
    cand = np.column_stack(np.nonzero(np.triu(adj, 1))).astype(np.int64)
    tri_rows = []
    for i, j in cand:
        ks = np.nonzero(adj[i] & adj[j])[0]
        ks = ks[ks > j]
        if ks.size:
            tri_rows.append(np.column_stack(
                [np.full(ks.size, i), np.full(ks.size, j), ks]))
    tris = (np.concatenate(tri_rows).astype(np.int64)
            if tri_rows else np.empty((0, 3), dtype=np.int64))

    # edges: length <= 2r already; Gabriel against the diametral disk
    edge_keep = np.zeros(cand.shape[0], dtype=np.bool_)
    if cand.shape[0]:
        p, q = pts[cand[:, 0]], pts[cand[:, 1]]
        mid = 0.5 * (p + q)
        rad2 = 0.25 * ((q - p) ** 2).sum(1)
        dd = ((pts[None, :, :] - mid[:, None, :]) ** 2).sum(2)
        inside = dd < rad2[:, None]
        rows = np.arange(cand.shape[0])
        inside[rows, cand[:, 0]] = False
        inside[rows, cand[:, 1]] = False
        edge_keep = ~inside.any(1)

    # triangles: R^2 = a2 b2 c2 / (16 K^2); collinear triples have K = 0 and
    # are simply long, not an error, in this candidate scheme
    tri_keep = np.zeros(tris.shape[0], dtype=np.bool_)
    if tris.shape[0]:
        a2 = d2[tris[:, 0], tris[:, 1]]
        b2 = d2[tris[:, 0], tris[:, 2]]
        c2 = d2[tris[:, 1], tris[:, 2]]
        s16 = 2.0 * (a2 * b2 + b2 * c2 + c2 * a2) - a2 * a2 - b2 * b2 - c2 * c2
        short = (s16 > 0.0) & (a2 * b2 * c2 <= r * r * s16)
        idx = np.nonzero(short)[0]
        if idx.size:
            t = tris[idx]
            a, b, c = pts[t[:, 0]], pts[t[:, 1]], pts[t[:, 2]]
            ab, ac = b - a, c - a
            d = 2.0 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
            ab2, ac2 = (ab * ab).sum(1), (ac * ac).sum(1)
            ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / d
            uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / d
            cc = a + np.stack([ux, uy], axis=1)
            rad2 = ux * ux + uy * uy
            dd = ((pts[None, :, :] - cc[:, None, :]) ** 2).sum(2)
            inside = dd < rad2[:, None]
            rows = np.arange(idx.size)
            for col in range(3):
                inside[rows, t[:, col]] = False
            tri_keep[idx] = ~inside.any(1)
    kept_tris = tris[tri_keep]
    keep_set = {(int(a), int(b)) for a, b in cand[edge_keep]}
    for i, j, k in kept_tris:
        keep_set.update([(int(i), int(j)), (int(i), int(k)), (int(j), int(k))])
    if keep_set:
        edges_out = np.array(sorted(keep_set), dtype=np.int64)
    return edges_out, kept_tris


def _coverage_mask_numpy(centers, sensors, r):
    """Boolean flat mask: grid centers within r of at least one sensor."""
    if sensors.shape[0] == 0:
        return np.zeros(centers.shape[0], dtype=np.bool_)
    d2 = ((centers[:, None, :] - sensors[None, :, :]) ** 2).sum(axis=2)
    return (d2 <= r * r).any(axis=1)


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _pairwise_accel_numba(pos, vel, alpha, beta, cr, ca, lr, la, cutoff):
        n = pos.shape[0]
        acc = np.empty((n, 2))
        for k in range(n):
            s2 = vel[k, 0] * vel[k, 0] + vel[k, 1] * vel[k, 1]
            f = alpha - beta * s2
            acc[k, 0] = f * vel[k, 0]
            acc[k, 1] = f * vel[k, 1]
        for k in range(n):
            for m in range(k + 1, n):
                dx = pos[k, 0] - pos[m, 0]
                dy = pos[k, 1] - pos[m, 1]
                d = np.sqrt(dx * dx + dy * dy)
                if d >= cutoff or d == 0.0:
                    continue
                mag = ((cr / lr) * np.exp(-d / lr)
                       - (ca / la) * np.exp(-d / la)) / d
                acc[k, 0] += mag * dx
                acc[k, 1] += mag * dy
                acc[m, 0] -= mag * dx
                acc[m, 1] -= mag * dy
        return acc

    @njit(cache=True)
    def _alpha_filter_numba(pts, tris, edges, r):
        n = pts.shape[0]
        nt = tris.shape[0]
        ne = edges.shape[0]
        tri_keep = np.zeros(nt, dtype=np.bool_)
        edge_keep = np.zeros(ne, dtype=np.bool_)
        r2 = r * r
        for t in range(nt):
            i, j, k = tris[t, 0], tris[t, 1], tris[t, 2]
            abx = pts[j, 0] - pts[i, 0]
            aby = pts[j, 1] - pts[i, 1]
            acx = pts[k, 0] - pts[i, 0]
            acy = pts[k, 1] - pts[i, 1]
            cross = abx * acy - aby * acx
            scale = np.sqrt((abx * abx + aby * aby) * (acx * acx + acy * acy))
            if abs(cross) <= COLLINEAR_RTOL * scale:
                return tri_keep, edge_keep, True
            d = 2.0 * cross
            ab2 = abx * abx + aby * aby
            ac2 = acx * acx + acy * acy
            ux = (acy * ab2 - aby * ac2) / d
            uy = (abx * ac2 - acx * ab2) / d
            rad2 = ux * ux + uy * uy
            if rad2 > r2:
                continue
            cx = pts[i, 0] + ux
            cy = pts[i, 1] + uy
            ok = True
            for p in range(n):
                if p == i or p == j or p == k:
                    continue
                dx = pts[p, 0] - cx
                dy = pts[p, 1] - cy
                if dx * dx + dy * dy < rad2:
                    ok = False
                    break
            tri_keep[t] = ok
        for e in range(ne):
            i, j = edges[e, 0], edges[e, 1]
            cx = 0.5 * (pts[i, 0] + pts[j, 0])
            cy = 0.5 * (pts[i, 1] + pts[j, 1])
            dx = pts[j, 0] - pts[i, 0]
            dy = pts[j, 1] - pts[i, 1]
            rad2 = 0.25 * (dx * dx + dy * dy)
            if rad2 > r2:
                continue
            ok = True
            for p in range(n):
                if p == i or p == j:
                    continue
                ddx = pts[p, 0] - cx
                ddy = pts[p, 1] - cy
                if ddx * ddx + ddy * ddy < rad2:
                    ok = False
                    break
            edge_keep[e] = ok
        return tri_keep, edge_keep, False

    @njit(cache=True)
    def _local_complex_numba(pts, r):
        n = pts.shape[0]
        r2 = r * r
        d2 = np.zeros((n, n))
        adj = np.zeros((n, n), dtype=np.bool_)
        for i in range(n):
            for j in range(i + 1, n):
                dx = pts[i, 0] - pts[j, 0]
                dy = pts[i, 1] - pts[j, 1]
                v = dx * dx + dy * dy
                d2[i, j] = v
                d2[j, i] = v
                if v <= 4.0 * r2:
                    adj[i, j] = True
                    adj[j, i] = True
        keep = np.zeros((n, n), dtype=np.bool_)
        for i in range(n):
            for j in range(i + 1, n):
                if not adj[i, j]:
                    continue
                cx = 0.5 * (pts[i, 0] + pts[j, 0])
                cy = 0.5 * (pts[i, 1] + pts[j, 1])
                rad2 = 0.25 * d2[i, j]
                ok = True
                for p in range(n):
                    if p == i or p == j:
                        continue
                    dx = pts[p, 0] - cx
                    dy = pts[p, 1] - cy
                    if dx * dx + dy * dy < rad2:
                        ok = False
                        break
                keep[i, j] = ok
        # kept triangles are alpha simplices, so planarity bounds them by 2n
        tri_buf = np.empty((8 * n + 8, 3), dtype=np.int64)
        ntri = 0
        for i in range(n):
            for j in range(i + 1, n):
                if not adj[i, j]:
                    continue
                for k in range(j + 1, n):
                    if not (adj[i, k] and adj[j, k]):
                        continue
                    a2 = d2[i, j]
                    b2 = d2[i, k]
                    c2 = d2[j, k]
                    s16 = (2.0 * (a2 * b2 + b2 * c2 + c2 * a2)
                           - a2 * a2 - b2 * b2 - c2 * c2)
                    if s16 <= 0.0 or a2 * b2 * c2 > r2 * s16:
                        continue
                    abx = pts[j, 0] - pts[i, 0]
                    aby = pts[j, 1] - pts[i, 1]
                    acx = pts[k, 0] - pts[i, 0]
                    acy = pts[k, 1] - pts[i, 1]
                    d = 2.0 * (abx * acy - aby * acx)
                    ux = (acy * a2 - aby * b2) / d
                    uy = (abx * b2 - acx * a2) / d
                    rad2 = ux * ux + uy * uy
                    ccx = pts[i, 0] + ux
                    ccy = pts[i, 1] + uy
                    ok = True
                    for p in range(n):
                        if p == i or p == j or p == k:
                            continue
                        dx = pts[p, 0] - ccx
                        dy = pts[p, 1] - ccy
                        if dx * dx + dy * dy < rad2:
                            ok = False
                            break
                    if ok and ntri < tri_buf.shape[0]:
                        tri_buf[ntri, 0] = i
                        tri_buf[ntri, 1] = j
                        tri_buf[ntri, 2] = k
                        ntri += 1
                        keep[i, j] = True
                        keep[i, k] = True
                        keep[j, k] = True
        ne = 0
        for i in range(n):
            for j in range(i + 1, n):
                if keep[i, j]:
                    ne += 1
        edges = np.empty((ne, 2), dtype=np.int64)
        e = 0
        for i in range(n):
            for j in range(i + 1, n):
                if keep[i, j]:
                    edges[e, 0] = i
                    edges[e, 1] = j
                    e += 1
        return edges, tri_buf[:ntri].copy()

    @njit(cache=True)
    def _fat_cycles_numba(pts, edges, n):
        """Rotation system and boundary cycles of an embedded planar graph.

        Returns (off, nbr, tails, cyc_flat, cyc_off, areas): CCW-sorted
        neighbor slices per vertex (ties by ascending index), dart tails,
        phi-orbit darts as positions into nbr/tails (each orbit starting at
        its lexicographically smallest dart), orbit offsets, and signed
        areas.
        """
        m = edges.shape[0]
        nd = 2 * m
        off = np.zeros(n + 1, dtype=np.int64)
        for e in range(m):
            off[edges[e, 0] + 1] += 1
            off[edges[e, 1] + 1] += 1
        for v in range(n):
            off[v + 1] += off[v]
        nbr = np.empty(nd, dtype=np.int64)
        tails = np.empty(nd, dtype=np.int64)
        ang = np.empty(nd)
        cur = off[:-1].copy()
        for e in range(m):
            i, j = edges[e, 0], edges[e, 1]
            dx = pts[j, 0] - pts[i, 0]
            dy = pts[j, 1] - pts[i, 1]
            a = np.arctan2(dy, dx)
            nbr[cur[i]] = j
            tails[cur[i]] = i
            ang[cur[i]] = a
            cur[i] += 1
            b = np.arctan2(-dy, -dx)
            nbr[cur[j]] = i
            tails[cur[j]] = j
            ang[cur[j]] = b
            cur[j] += 1
        for v in range(n):
            lo, hi = off[v], off[v + 1]
            for p in range(lo + 1, hi):
                ka, kn = ang[p], nbr[p]
                q = p - 1
                while q >= lo and (ang[q] > ka or (ang[q] == ka and nbr[q] > kn)):
                    ang[q + 1] = ang[q]
                    nbr[q + 1] = nbr[q]
                    q -= 1
                ang[q + 1] = ka
                nbr[q + 1] = kn
        pos = np.full(n * n, -1, dtype=np.int64)
        for p in range(nd):
            pos[tails[p] * n + nbr[p]] = p
        phi = np.empty(nd, dtype=np.int64)
        for p in range(nd):
            w = nbr[p]
            q = pos[w * n + tails[p]]
            q += 1
            if q >= off[w + 1]:
                q = off[w]
            phi[p] = q
        visited = np.zeros(nd, dtype=np.bool_)
        cyc_flat = np.empty(nd, dtype=np.int64)
        cyc_off = np.empty(nd + 1, dtype=np.int64)
        areas = np.empty(nd)
        c = 0
        w = 0
        cyc_off[0] = 0
        for t in range(n):
            base = t * n
            for h in range(n):
                p = pos[base + h]
                if p < 0 or visited[p]:
                    continue
                start = p
                area = 0.0
                while True:
                    visited[p] = True
                    cyc_flat[w] = p
                    w += 1
                    tv, hv = tails[p], nbr[p]
                    area += pts[tv, 0] * pts[hv, 1] - pts[hv, 0] * pts[tv, 1]
                    p = phi[p]
                    if p == start:
                        break
                areas[c] = 0.5 * area
                c += 1
                cyc_off[c] = w
        return off, nbr, tails, cyc_flat, cyc_off[:c + 1].copy(), areas[:c].copy()

    @njit(cache=True)
    def _coverage_mask_numba(centers, sensors, r):
        n = centers.shape[0]
        m = sensors.shape[0]
        out = np.zeros(n, dtype=np.bool_)
        r2 = r * r
        for i in range(n):
            for j in range(m):
                dx = centers[i, 0] - sensors[j, 0]
                dy = centers[i, 1] - sensors[j, 1]
                if dx * dx + dy * dy <= r2:
                    out[i] = True
                    break
        return out

    pairwise_accel = _pairwise_accel_numba
    coverage_mask = _coverage_mask_numba
    alpha_filter = _alpha_filter_numba
    local_complex = _local_complex_numba
    fat_cycles = _fat_cycles_numba
else:
    pairwise_accel = _pairwise_accel_numpy
    coverage_mask = _coverage_mask_numpy
    alpha_filter = _alpha_filter_numpy
    local_complex = _local_complex_numpy
    fat_cycles = None  # numpy path extracts cycles in plain python
