"""Pure-Python reference implementation of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same floating-point operation order, so both backends agree to
rounding.
"""

from __future__ import annotations

import math

import numpy as np

_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


def _dot(a, b):
    s = 0.0
    for k in range(len(a)):
        s += a[k] * b[k]
    return s


def _on_interior(e, p, r, rr, lr, eps):
    """Parameter of ``e`` on segment ``p + t r`` if it lies in the open interior."""
    d = len(p)
    tau = 0.0
    for k in range(d):
        tau += (e[k] - p[k]) * r[k]
    tau /= rr
    if tau * lr <= eps or (1.0 - tau) * lr <= eps:
        return -1.0
    dist2 = 0.0
    for k in range(d):
        diff = e[k] - (p[k] + tau * r[k])
        dist2 += diff * diff
    if dist2 <= eps * eps:
        return tau
    return -1.0


def segment_splits(starts, ends, eps):
    """Split parameters induced by all pairwise segment interactions.

    Returns ``(idx, t)``: segment ``idx[k]`` must be cut at parameter ``t[k]``
    (``0 < t < 1``).  Three interactions produce cuts: an endpoint of one
    segment lying on the interior of another (T-junctions and collinear
    overlaps), and transversal interior crossings.
    """
    starts = np.ascontiguousarray(starts, dtype=np.float64)
    ends = np.ascontiguousarray(ends, dtype=np.float64)
    n, d = starts.shape
    P = starts.tolist()
    R = (ends - starts).tolist()
    Q = ends.tolist()
    rr_all = [_dot(r, r) for r in R]
    lr_all = [math.sqrt(v) for v in rr_all]
    out_i: list[int] = []
    out_t: list[float] = []
    for i in range(n):
        p, r, rr, lr = P[i], R[i], rr_all[i], lr_all[i]
        if rr == 0.0:
            continue
        for j in range(i + 1, n):
            q, s, ss, ls = P[j], R[j], rr_all[j], lr_all[j]
            if ss == 0.0:
                continue
            for e in (q, Q[j]):
                tau = _on_interior(e, p, r, rr, lr, eps)
                if tau > 0.0:
                    out_i.append(i)
                    out_t.append(tau)
            for e in (p, Q[i]):
                tau = _on_interior(e, q, s, ss, ls, eps)
                if tau > 0.0:
                    out_i.append(j)
                    out_t.append(tau)
            rs = 0.0
            d1 = 0.0
            e1 = 0.0
            for k in range(d):
                w = p[k] - q[k]
                rs += r[k] * s[k]
                d1 += r[k] * w
                e1 += s[k] * w
            denom = rr * ss - rs * rs
            if denom <= 1e-20 * rr * ss:
                continue
            tau = (rs * e1 - ss * d1) / denom
            sig = (rr * e1 - rs * d1) / denom
            if tau * lr <= eps or (1.0 - tau) * lr <= eps:
                continue
            if sig * ls <= eps or (1.0 - sig) * ls <= eps:
                continue
            dist2 = 0.0
            for k in range(d):
                diff = (p[k] + tau * r[k]) - (q[k] + sig * s[k])
                dist2 += diff * diff
            if dist2 <= eps * eps:
                out_i.append(i)
                out_t.append(tau)
                out_i.append(j)
                out_t.append(sig)
    return np.asarray(out_i, dtype=np.int64), np.asarray(out_t, dtype=np.float64)


def _edge_len(X, u, v):
    s = 0.0
    for k in range(len(X[u])):
        diff = X[u][k] - X[v][k]
        s += diff * diff
    return math.sqrt(s)


def tree_cost(coords, eu, ev, cw):
    """Weighted length ``sum_k cw[k] * |coords[eu[k]] - coords[ev[k]]|``."""
    X = np.asarray(coords, dtype=np.float64).tolist()
    total = 0.0
    for k in range(len(eu)):
        total += float(cw[k]) * _edge_len(X, int(eu[k]), int(ev[k]))
    return total


def _local_cost(X, node, eu, ev, cw):
    total = 0.0
    for k in range(len(eu)):
        if eu[k] == node or ev[k] == node:
            total += cw[k] * _edge_len(X, eu[k], ev[k])
    return total


def golden_descent(coords, free, eu, ev, cw, lo, hi, tol=1e-10, max_iter=200):
    """Coordinate-wise golden-section descent on the free node coordinates.

    Each coordinate is minimized exactly (the objective is convex along
    coordinate lines) over the box ``[lo, hi]``.  Stops when the largest
    accepted move of a sweep is below ``tol`` or after ``max_iter`` sweeps.
    Returns ``(coords, cost, sweeps)``.
    """
    X = np.array(coords, dtype=np.float64).tolist()
    eu = [int(v) for v in eu]
    ev = [int(v) for v in ev]
    cw = [float(v) for v in cw]
    lo = [float(v) for v in lo]
    hi = [float(v) for v in hi]
    n, d = len(X), len(X[0]) if X else 0
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        max_move = 0.0
        for node in range(n):
            if not free[node]:
                continue
            for c in range(d):
                x0 = X[node][c]
                f0 = _local_cost(X, node, eu, ev, cw)
                a, b = lo[c], hi[c]
                x1 = b - _GOLD * (b - a)
                x2 = a + _GOLD * (b - a)
                X[node][c] = x1
                f1 = _local_cost(X, node, eu, ev, cw)
                X[node][c] = x2
                f2 = _local_cost(X, node, eu, ev, cw)
                while b - a > tol:
                    if f1 <= f2:
                        b, x2, f2 = x2, x1, f1
                        x1 = b - _GOLD * (b - a)
                        X[node][c] = x1
                        f1 = _local_cost(X, node, eu, ev, cw)
                    else:
                        a, x1, f1 = x1, x2, f2
                        x2 = a + _GOLD * (b - a)
                        X[node][c] = x2
                        f2 = _local_cost(X, node, eu, ev, cw)
                xb, fb = (x1, f1) if f1 <= f2 else (x2, f2)
                if fb < f0:
                    X[node][c] = xb
                    move = abs(xb - x0)
                    if move > max_move:
                        max_move = move
                else:
                    X[node][c] = x0
        if max_move < tol:
            break
    out = np.asarray(X, dtype=np.float64)
    return out, tree_cost(out, eu, ev, cw), sweeps


def _weber_point(X, node, nbrs, wts, tol, max_inner):
    """Minimize sum_j wts[j] |z - X[nbrs[j]]| over z (one Weber problem)."""
    d = len(X[node])
    pts = [X[j] for j in nbrs]
    # optimality test at each anchor (Kuhn's criterion)
    for a in range(len(pts)):
        ca = 0.0
        g = [0.0] * d
        for j in range(len(pts)):
            dist = 0.0
            for k in range(d):
                diff = pts[a][k] - pts[j][k]
                dist += diff * diff
            dist = math.sqrt(dist)
            if dist <= 1e-15:
                ca += wts[j]
            else:
                for k in range(d):
                    g[k] += wts[j] * (pts[a][k] - pts[j][k]) / dist
        gn = math.sqrt(sum(v * v for v in g))
        if gn <= ca:
            return list(pts[a])
    z = list(X[node])
    for _ in range(max_inner):
        num = [0.0] * d
        den = 0.0
        hit = False
        for j in range(len(pts)):
            dist = 0.0
            for k in range(d):
                diff = z[k] - pts[j][k]
                dist += diff * diff
            dist = math.sqrt(dist)
            if dist <= 1e-15:
                hit = True
                break
            den += wts[j] / dist
            for k in range(d):
                num[k] += wts[j] * pts[j][k] / dist
        if hit:
            # nudge off the anchor toward the weighted centroid
            tw = sum(wts)
            for k in range(d):
                cen = sum(wts[j] * pts[j][k] for j in range(len(pts))) / tw
                z[k] = z[k] + 1e-6 * (cen - z[k]) + 1e-9
            continue
        move = 0.0
        for k in range(d):
            nz = num[k] / den
            move += (nz - z[k]) * (nz - z[k])
            z[k] = nz
        if math.sqrt(move) < tol:
            break
    return z


def weber_sweeps(coords, free, eu, ev, cw, n_sweeps=100, tol=1e-12):
    """Block coordinate descent: each free node jumps to its local Weber point."""
    X = np.array(coords, dtype=np.float64).tolist()
    eu = [int(v) for v in eu]
    ev = [int(v) for v in ev]
    cw = [float(v) for v in cw]
    n = len(X)
    for _ in range(n_sweeps):
        total_move = 0.0
        for node in range(n):
            if not free[node]:
                continue
            nbrs, wts = [], []
            for k in range(len(eu)):
                if cw[k] <= 0.0:
                    continue
                if eu[k] == node:
                    nbrs.append(ev[k])
                    wts.append(cw[k])
                elif ev[k] == node:
                    nbrs.append(eu[k])
                    wts.append(cw[k])
            if not nbrs:
                continue
            z = _weber_point(X, node, nbrs, wts, tol, 500)
            total_move += math.sqrt(sum((z[k] - X[node][k]) ** 2 for k in range(len(z))))
            X[node] = z
        if total_move < tol:
            break
    return np.asarray(X, dtype=np.float64)
