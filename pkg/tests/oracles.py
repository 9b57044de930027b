"""Independent reference computations used only by the tests."""

import math

import mpmath
import numpy as np
from scipy.optimize import brentq, linear_sum_assignment
from scipy.spatial import ConvexHull


def uniform_phi(w):
    """Cauchy transform of the uniform measure in the chart centered at infinity."""
    w = complex(w)
    return w.conjugate() / (1 + abs(w) ** 2)


def uniform_real_root(N, xi=1.0):
    """Real root near ``xi`` of the averaged equation for the uniform measure."""

    def f(w):
        return -N / w + 1 / (w - xi) + (N - 1) * w / (1 + w * w)

    lo = xi * (1 + 1e-9)
    hi = xi * (1 + 20.0 / N)
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)


def critical_polynomial(zeros, dps=60):
    """Exact coefficients (highest first) of ``r = w q' - N q``, ``q = prod (w - z)``."""
    with mpmath.workdps(dps):
        q = [mpmath.mpc(1)]
        for z in zeros:
            zc = mpmath.mpc(z.real, z.imag)
            nxt = q + [mpmath.mpc(0)]
            for i in range(1, len(nxt)):
                nxt[i] -= zc * q[i - 1]
            q = nxt
        n = len(zeros)
        deg = len(q) - 1
        # coefficient of w^k in w q' - N q is (k - N) q_k
        return [(deg - i - n) * c for i, c in enumerate(q)]


def critical_points_oracle(zeros, dps=60, rel_tol=1e-12):
    """Roots of the exactly expanded critical polynomial, polished in high precision.

    Leading coefficients below ``rel_tol`` times the largest are treated as
    cancelled; the zeros are doubles, so exact cancellation is only visible to
    that resolution. Returns ``(roots, degree_drop)``.
    """
    zeros = np.asarray(zeros, dtype=complex)
    n = zeros.size
    with mpmath.workdps(dps):
        coeffs = critical_polynomial(zeros, dps)
        scale = max(abs(c) for c in coeffs)
        k = 0
        while k < len(coeffs) and abs(coeffs[k]) <= rel_tol * scale:
            k += 1
        coeffs = coeffs[k:]
        deg = len(coeffs) - 1
        drop = (n - 1) - deg
        if deg <= 0:
            return np.empty(0, complex), drop
        approx = np.roots(np.array([complex(c) for c in coeffs]))
        out = []
        for x in approx:
            w = mpmath.mpc(x.real, x.imag)
            for _ in range(8):
                v, d = mpmath.polyval(coeffs, w, derivative=True)
                if d == 0:
                    break
                step = v / d
                w -= step
                if abs(step) <= mpmath.mpf(10) ** (-40) * max(1, abs(w)):
                    break
            out.append(complex(w))
        return np.array(out), drop


def match_distance(a, b):
    """Largest distance after optimal one-to-one matching."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return float(np.max(cost[i, j]))


def hull_excess(points, hull_points):
    """How far ``points`` stick out of the convex hull (0 if inside)."""
    hull_points = np.asarray(hull_points, dtype=complex)
    if hull_points.size == 2:
        a, b = hull_points
        t = np.clip(np.real((np.asarray(points) - a) * np.conj(b - a)) / abs(b - a) ** 2, 0, 1)
        return float(np.max(np.abs(np.asarray(points) - (a + t * (b - a))), initial=0.0))
    hp = np.column_stack([np.real(hull_points), np.imag(hull_points)])
    hull = ConvexHull(hp)
    p = np.column_stack([np.real(points), np.imag(points)])
    # equations: normal . x + offset <= 0 inside, unit normals
    vals = p @ hull.equations[:, :2].T + hull.equations[:, 2]
    return float(max(0.0, np.max(vals))) if p.size else 0.0
