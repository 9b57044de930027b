"""Compiled inner loops.

Sums are Neumaier-compensated and taken in a fixed order (largest distance
first, ties broken by the caller's canonical zero order) so results do not
depend on how the zeros were listed or on how work is split across threads.
"""

import numpy as np
from numba import njit

POLE_TOL = 1e-12


@njit(cache=True, nogil=True)
def _two_sum(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


@njit(cache=True, nogil=True)
def _insertion_sort(order, key):
    """Sort ``order`` by ``(key[k], k)``; cheap when ``order`` is nearly sorted.

    The total key makes the result independent of the starting permutation.
    """
    for i in range(1, order.shape[0]):
        k = order[i]
        kk = key[k]
        j = i - 1
        while j >= 0 and (key[order[j]] > kk or (key[order[j]] == kk and order[j] > k)):
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = k


@njit(cache=True, nogil=True)
def field_values(ws, zeros, charge, out, derivative):
    """``out[i] = -charge/w + sum_k 1/(w - z_k)`` at each ``w = ws[i]``.

    When ``derivative`` is given it receives ``charge/w^2 - sum_k 1/(w - z_k)^2``.
    Returns the number of evaluation points that hit a pole (those get nan).
    """
    n = zeros.shape[0]
    dist = np.empty(n)
    poles = 0
    first = True
    order = np.arange(n)
    want_d = derivative.shape[0] == ws.shape[0]
    for i in range(ws.shape[0]):
        w = ws[i]
        near = abs(w) < POLE_TOL
        for k in range(n):
            d = abs(w - zeros[k])
            dist[k] = -d
            if d < POLE_TOL:
                near = True
        if near:
            out[i] = complex(np.nan, np.nan)
            if want_d:
                derivative[i] = complex(np.nan, np.nan)
            poles += 1
            continue
        if first:
            order = np.argsort(dist, kind="mergesort")
            first = False
        else:
            _insertion_sort(order, dist)
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        dr = 0.0
        dcr = 0.0
        di = 0.0
        dci = 0.0
        for j in range(n):
            t = 1.0 / (w - zeros[order[j]])
            sr, cr = _two_sum(sr, cr, t.real)
            si, ci = _two_sum(si, ci, t.imag)
            if want_d:
                t2 = -t * t
                dr, dcr = _two_sum(dr, dcr, t2.real)
                di, dci = _two_sum(di, dci, t2.imag)
        p = -charge / w
        sr, cr = _two_sum(sr, cr, p.real)
        si, ci = _two_sum(si, ci, p.imag)
        out[i] = complex(sr + cr, si + ci)
        if want_d:
            p2 = charge / (w * w)
            dr, dcr = _two_sum(dr, dcr, p2.real)
            di, dci = _two_sum(di, dci, p2.imag)
            derivative[i] = complex(dr + dcr, di + dci)
    return poles


@njit(cache=True, nogil=True)
def aberth(approx, zeros, tol, max_iters):
    """Simultaneous iteration on the roots of ``r = w q' - N q``.

    With ``S = q'/q`` and ``g = sum z_k/(w - z_k) = w S - N`` we have
    ``r = q g`` and ``r'/r = S + g'/g``. Updates in place (Gauss-Seidel order).
    Returns the number of sweeps, or ``-1`` if ``max_iters`` was exhausted.
    """
    m = approx.shape[0]
    n = zeros.shape[0]
    done = np.zeros(m, dtype=np.bool_)
    for it in range(max_iters):
        all_done = True
        for i in range(m):
            if done[i]:
                continue
            w = approx[i]
            s = 0j
            g = 0j
            dg = 0j
            hit = False
            for k in range(n):
                d = w - zeros[k]
                if d == 0:
                    hit = True
                    break
                inv = 1.0 / d
                s += inv
                zk = zeros[k] * inv
                g += zk
                dg -= zk * inv
            if hit:
                approx[i] = w + 1e-8 * (1.0 + abs(w))
                all_done = False
                continue
            if g == 0:
                # r = q g vanishes exactly: w is a root
                done[i] = True
                continue
            lr = s + dg / g
            a = 0j
            for j in range(m):
                if j != i:
                    a += 1.0 / (w - approx[j])
            den = lr - a
            if den == 0:
                approx[i] = w + 1e-8 * (1.0 + abs(w))
                all_done = False
                continue
            corr = 1.0 / den
            approx[i] = w - corr
            if abs(corr) <= tol * abs(w):
                done[i] = True
            else:
                all_done = False
        if all_done:
            return it + 1
    return -1
