"""Independent reference computations used by the property tests."""

import math

import numpy as np
from scipy.optimize import brentq


def edge_multiplicities(P, a, b):
    """``(theta, Theta, theta_vec)`` on the open segment ``a -> b`` by walking every atom.

    Uses only the raw polylines: an atom traverses the piece once per curve
    segment containing its midpoint, with the sign of the segment direction.
    """
    mid = 0.5 * (a + b)
    u = (b - a) / np.linalg.norm(b - a)
    theta = Theta = vec = 0.0
    for atom in P.atoms:
        V = atom.curve.vertices
        count = 0
        signed = 0
        for p, q in zip(V[:-1], V[1:]):
            d = q - p
            L = np.linalg.norm(d)
            t = float((mid - p) @ d) / (L * L)
            if 0 < t < 1 and np.linalg.norm(p + t * d - mid) < 1e-9:
                count += 1
                signed += 1 if float(d @ u) > 0 else -1
        if count:
            theta += atom.mass
            Theta += atom.mass * count
            vec += atom.mass * signed
    return theta, Theta, vec


def energy_by_walking(P, alpha):
    net = P.network
    total = []
    for e in range(net.n_edges):
        a, b = net.edge_points(e)
        th, Th, _ = edge_multiplicities(P, a, b)
        total.append(net.lengths[e] * th ** (alpha - 1) * Th)
    return math.fsum(total)


def flow_mass_by_walking(P, alpha):
    net = P.network
    total = []
    for e in range(net.n_edges):
        a, b = net.edge_points(e)
        _, _, v = edge_multiplicities(P, a, b)
        total.append(net.lengths[e] * abs(v) ** alpha)
    return math.fsum(total)


def boundary_of_edges(starts, ends, weights):
    """Signed endpoint sums ``Σ w (δ_b − δ_a)`` as a dict keyed by rounded coordinates."""
    out = {}
    for a, b, w in zip(starts, ends, weights):
        for p, s in ((b, w), (a, -w)):
            key = tuple(np.round(p, 8))
            out[key] = out.get(key, 0.0) + s
    return {k: v for k, v in out.items() if abs(v) > 1e-10}


def in_cone(w, axis, s):
    """One-sided closed cone around ``axis`` with aperture ``s`` (``w`` relative to apex)."""
    nw = np.linalg.norm(w)
    along = float(w @ axis)
    return along >= -1e-12 * nw and nw * nw - along * along <= s * s * nw * nw + 1e-12 * nw * nw


def oracle_proper(curve, t0: float, r: float, s: float) -> bool:
    """Each half of the curve reaches distance ``r`` inside its one-sided cone.

    The cone is convex, so a polyline piece stays inside iff its vertices do.
    The exit parameter is located with brentq on the distance function.
    """


    x0 = curve.point_at(t0)
    v = curve.direction(curve.segment_at(t0))
    L = curve.length
    dist = lambda t: float(np.linalg.norm(curve.point_at(t) - x0)) - r

    for sign, stop in ((1, L), (-1, 0.0)):
        ts = [t0] + [c for c in (curve.cum if sign > 0 else curve.cum[::-1]) if sign * (c - t0) > 1e-12]
        hit = None
        for a, b in zip(ts[:-1], ts[1:]):
            if dist(b) >= 0:
                hit = brentq(dist, a, b, xtol=1e-14) if dist(a) < 0 else a
                break
        if hit is None:
            return False
        pts = [curve.point_at(t) for t in ts if sign * (t - hit) < 0] + [curve.point_at(hit)]
        if not all(in_cone(p - x0, sign * v, s) for p in pts):
            return False
    return True
