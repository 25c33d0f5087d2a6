# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; mirrors ``_pykernels`` operation for operation."""

import numpy as np
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free as cfree

cdef double _GOLD = 0.5 * (sqrt(5.0) - 1.0)


cdef inline double _on_interior(const double[:, ::1] E, Py_ssize_t ei,
                                const double[:, ::1] P, const double[:, ::1] R,
                                Py_ssize_t i, double rr, double lr, double eps) nogil:
    cdef Py_ssize_t k, d = P.shape[1]
    cdef double tau = 0.0, dist2 = 0.0, diff
    for k in range(d):
        tau += (E[ei, k] - P[i, k]) * R[i, k]
    tau /= rr
    if tau * lr <= eps or (1.0 - tau) * lr <= eps:
        return -1.0
    for k in range(d):
        diff = E[ei, k] - (P[i, k] + tau * R[i, k])
        dist2 += diff * diff
    if dist2 <= eps * eps:
        return tau
    return -1.0


def segment_splits(starts, ends, double eps):
    cdef double[:, ::1] P = np.ascontiguousarray(starts, dtype=np.float64)
    cdef double[:, ::1] Q = np.ascontiguousarray(ends, dtype=np.float64)
    cdef double[:, ::1] R = np.ascontiguousarray(np.asarray(Q) - np.asarray(P))
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1]
    cdef double[::1] rr_all = np.empty(n)
    cdef double[::1] lr_all = np.empty(n)
    cdef Py_ssize_t i, j, k
    cdef double rr, lr, ss, ls, tau, sig, rs, d1, e1, w, denom, dist2, diff
    for i in range(n):
        rr = 0.0
        for k in range(d):
            rr += R[i, k] * R[i, k]
        rr_all[i] = rr
        lr_all[i] = sqrt(rr)
    out_i = []
    out_t = []
    for i in range(n):
        rr = rr_all[i]
        lr = lr_all[i]
        if rr == 0.0:
            continue
        for j in range(i + 1, n):
            ss = rr_all[j]
            ls = lr_all[j]
            if ss == 0.0:
                continue
            tau = _on_interior(P, j, P, R, i, rr, lr, eps)
            if tau > 0.0:
                out_i.append(i); out_t.append(tau)
            tau = _on_interior(Q, j, P, R, i, rr, lr, eps)
            if tau > 0.0:
                out_i.append(i); out_t.append(tau)
            tau = _on_interior(P, i, P, R, j, ss, ls, eps)
            if tau > 0.0:
                out_i.append(j); out_t.append(tau)
            tau = _on_interior(Q, i, P, R, j, ss, ls, eps)
            if tau > 0.0:
                out_i.append(j); out_t.append(tau)
            rs = 0.0
            d1 = 0.0
            e1 = 0.0
            for k in range(d):
                w = P[i, k] - P[j, k]
                rs += R[i, k] * R[j, k]
                d1 += R[i, k] * w
                e1 += R[j, k] * w
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
                diff = (P[i, k] + tau * R[i, k]) - (P[j, k] + sig * R[j, k])
                dist2 += diff * diff
            if dist2 <= eps * eps:
                out_i.append(i); out_t.append(tau)
                out_i.append(j); out_t.append(sig)
    return np.asarray(out_i, dtype=np.int64), np.asarray(out_t, dtype=np.float64)


cdef inline double _edge_len(double[:, ::1] X, Py_ssize_t u, Py_ssize_t v) nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0, diff
    for k in range(X.shape[1]):
        diff = X[u, k] - X[v, k]
        s += diff * diff
    return sqrt(s)


cdef double _tree_cost(double[:, ::1] X, const long long[::1] eu,
                       const long long[::1] ev, const double[::1] cw) nogil:
    cdef Py_ssize_t k
    cdef double total = 0.0
    for k in range(eu.shape[0]):
        total += cw[k] * _edge_len(X, eu[k], ev[k])
    return total


def tree_cost(coords, eu, ev, cw):
    cdef double[:, ::1] X = np.array(coords, dtype=np.float64)
    cdef long long[::1] u = np.ascontiguousarray(eu, dtype=np.int64)
    cdef long long[::1] v = np.ascontiguousarray(ev, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(cw, dtype=np.float64)
    return _tree_cost(X, u, v, w)


cdef inline double _local_cost(double[:, ::1] X, Py_ssize_t node,
                               const long long[::1] eu, const long long[::1] ev,
                               const double[::1] cw) nogil:
    cdef Py_ssize_t k
    cdef double total = 0.0
    for k in range(eu.shape[0]):
        if eu[k] == node or ev[k] == node:
            total += cw[k] * _edge_len(X, eu[k], ev[k])
    return total


def golden_descent(coords, free, eu, ev, cw, lo, hi, double tol=1e-10, int max_iter=200):
    cdef double[:, ::1] X = np.array(coords, dtype=np.float64)
    cdef unsigned char[::1] fr = np.ascontiguousarray(free, dtype=np.uint8)
    cdef long long[::1] u = np.ascontiguousarray(eu, dtype=np.int64)
    cdef long long[::1] v = np.ascontiguousarray(ev, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(cw, dtype=np.float64)
    cdef double[::1] blo = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] bhi = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], node, c
    cdef int sweeps = 0, it
    cdef double max_move, x0, f0, a, b, x1, x2, f1, f2, xb, fb, move
    with nogil:
        for it in range(1, max_iter + 1):
            sweeps = it
            max_move = 0.0
            for node in range(n):
                if not fr[node]:
                    continue
                for c in range(d):
                    x0 = X[node, c]
                    f0 = _local_cost(X, node, u, v, w)
                    a = blo[c]
                    b = bhi[c]
                    x1 = b - _GOLD * (b - a)
                    x2 = a + _GOLD * (b - a)
                    X[node, c] = x1
                    f1 = _local_cost(X, node, u, v, w)
                    X[node, c] = x2
                    f2 = _local_cost(X, node, u, v, w)
                    while b - a > tol:
                        if f1 <= f2:
                            b = x2; x2 = x1; f2 = f1
                            x1 = b - _GOLD * (b - a)
                            X[node, c] = x1
                            f1 = _local_cost(X, node, u, v, w)
                        else:
                            a = x1; x1 = x2; f1 = f2
                            x2 = a + _GOLD * (b - a)
                            X[node, c] = x2
                            f2 = _local_cost(X, node, u, v, w)
                    if f1 <= f2:
                        xb = x1; fb = f1
                    else:
                        xb = x2; fb = f2
                    if fb < f0:
                        X[node, c] = xb
                        move = fabs(xb - x0)
                        if move > max_move:
                            max_move = move
                    else:
                        X[node, c] = x0
            if max_move < tol:
                break
    out = np.asarray(X)
    return out, _tree_cost(X, u, v, w), sweeps


cdef void _weber_point(double[:, ::1] X, Py_ssize_t node, long long* nbrs,
                       double* wts, Py_ssize_t m, double tol, int max_inner,
                       double* z) nogil:
    cdef Py_ssize_t d = X.shape[1], a, j, k
    cdef double ca, dist, diff, gn, den, tw, cen, mv, nz
    cdef double g[16]
    cdef double num[16]
    cdef bint hit
    cdef int it
    for a in range(m):
        ca = 0.0
        for k in range(d):
            g[k] = 0.0
        for j in range(m):
            dist = 0.0
            for k in range(d):
                diff = X[nbrs[a], k] - X[nbrs[j], k]
                dist += diff * diff
            dist = sqrt(dist)
            if dist <= 1e-15:
                ca += wts[j]
            else:
                for k in range(d):
                    g[k] += wts[j] * (X[nbrs[a], k] - X[nbrs[j], k]) / dist
        gn = 0.0
        for k in range(d):
            gn += g[k] * g[k]
        gn = sqrt(gn)
        if gn <= ca:
            for k in range(d):
                z[k] = X[nbrs[a], k]
            return
    for k in range(d):
        z[k] = X[node, k]
    for it in range(max_inner):
        for k in range(d):
            num[k] = 0.0
        den = 0.0
        hit = False
        for j in range(m):
            dist = 0.0
            for k in range(d):
                diff = z[k] - X[nbrs[j], k]
                dist += diff * diff
            dist = sqrt(dist)
            if dist <= 1e-15:
                hit = True
                break
            den += wts[j] / dist
            for k in range(d):
                num[k] += wts[j] * X[nbrs[j], k] / dist
        if hit:
            tw = 0.0
            for j in range(m):
                tw += wts[j]
            for k in range(d):
                cen = 0.0
                for j in range(m):
                    cen += wts[j] * X[nbrs[j], k]
                cen /= tw
                z[k] = z[k] + 1e-6 * (cen - z[k]) + 1e-9
            continue
        mv = 0.0
        for k in range(d):
            nz = num[k] / den
            mv += (nz - z[k]) * (nz - z[k])
            z[k] = nz
        if sqrt(mv) < tol:
            break


def weber_sweeps(coords, free, eu, ev, cw, int n_sweeps=100, double tol=1e-12):
    cdef double[:, ::1] X = np.array(coords, dtype=np.float64)
    cdef unsigned char[::1] fr = np.ascontiguousarray(free, dtype=np.uint8)
    cdef long long[::1] u = np.ascontiguousarray(eu, dtype=np.int64)
    cdef long long[::1] v = np.ascontiguousarray(ev, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(cw, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], ne = u.shape[0]
    cdef Py_ssize_t node, k, m
    cdef double total, mv, diff
    cdef double z[16]
    if d > 16:
        raise ValueError("compiled weber_sweeps supports d <= 16")
    cdef long long* nbrs = <long long*> malloc(max(ne, 1) * sizeof(long long))
    cdef double* wts = <double*> malloc(max(ne, 1) * sizeof(double))
    try:
        with nogil:
            for _ in range(n_sweeps):
                total = 0.0
                for node in range(n):
                    if not fr[node]:
                        continue
                    m = 0
                    for k in range(ne):
                        if w[k] <= 0.0:
                            continue
                        if u[k] == node:
                            nbrs[m] = v[k]; wts[m] = w[k]; m += 1
                        elif v[k] == node:
                            nbrs[m] = u[k]; wts[m] = w[k]; m += 1
                    if m == 0:
                        continue
                    _weber_point(X, node, nbrs, wts, m, tol, 500, z)
                    mv = 0.0
                    for k in range(d):
                        diff = z[k] - X[node, k]
                        mv += diff * diff
                        X[node, k] = z[k]
                    total += sqrt(mv)
                if total < tol:
                    break
    finally:
        cfree(nbrs)
        cfree(wts)
    return np.asarray(X)
