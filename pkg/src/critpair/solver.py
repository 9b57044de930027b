"""Critical points of ``p(w) = w^{-N} q(w)`` straight from the zero locations.

The finite critical points are the roots of ``r(w) = w q'(w) - N q(w)``, a
polynomial of degree at most ``N - 1``. Writing ``g(w) = sum z_k / (w - z_k)``
gives ``r = q g`` and the expansion ``g(w) = sum_m P_m w^{-m}`` in the power
sums ``P_m = sum z_k^m``. So ``deg r = N - m0`` where ``P_m0`` is the first
non-vanishing power sum, and the remaining ``m0 - 1`` critical points of the
rational map sit at OMEGA (the degree drop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .field import POLE_TOL, ConditionedSample, PoleError, expected_field, field_many
from .measures import ZeroMeasure
from .sphere import Contour, geodesic_distance_array

HARVEST_RADIUS = 1e9
POWER_SUM_TOL = 1e-10


class IndeterminateError(RuntimeError):
    """A root sits (numerically) on the contour; the count cannot be certified."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CriticalSet:
    points: np.ndarray
    degree_drop: int
    residuals: np.ndarray
    converged: bool = True
    iterations: int = 0

    def __len__(self):
        return self.points.size


def degree_drop(zeros) -> int:
    """Number of critical points of the rational map sitting at OMEGA."""
    zeros = np.asarray(zeros, dtype=complex)
    n = zeros.size
    if n < 2:
        return 0
    scale = np.max(np.abs(zeros))
    if scale == 0:
        return n - 1
    u = zeros / scale
    au = np.abs(u)
    pw = np.ones_like(u)
    apw = np.ones_like(au)
    for m in range(1, n):
        pw = pw * u
        apw = apw * au
        if abs(np.sum(pw)) > POWER_SUM_TOL * np.sum(apw):
            return m - 1
    return n - 1


def _initial_guesses(zeros: np.ndarray, n_charge: int, count: int) -> np.ndarray:
    """Predicted paired point next to each zero, using the sample's own other zeros.

    Solves ``-N/w + 1/(w - z_k) + F_k = 0`` to first order, where ``F_k`` is the
    field of the remaining zeros at ``z_k``. The least confident guesses are
    dropped to keep ``count`` of them.
    """
    n = zeros.size
    diff = zeros[:, None] - zeros[None, :]
    np.fill_diagonal(diff, 1.0)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)
    fk = inv.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = n_charge / zeros - fk
        disp = 1.0 / c
    guess = zeros + disp
    spread = np.abs(disp) * 2.0 / (1.0 + np.abs(zeros) ** 2)
    spread[~np.isfinite(guess)] = np.inf
    keep = np.argsort(spread, kind="mergesort")[:count]
    out = guess[keep]
    bad = ~np.isfinite(out)
    if np.any(bad):
        rad = 2.0 * math.sqrt(np.max(np.abs(zeros)))
        k = np.nonzero(bad)[0]
        out[k] = rad * np.exp(2j * np.pi * (k + 0.25) / max(count, 1))
    # Aberth needs pairwise distinct starts
    for i in range(1, out.size):
        while np.any(np.abs(out[:i] - out[i]) < 1e-10 * (1 + abs(out[i]))):
            out[i] += 1e-6 * (1 + abs(out[i])) * np.exp(1j * (i + 0.5))
    return out


def all_critical_points(sample: ConditionedSample, tol: float = 1e-12, max_iters: int = 200,
                        initial=None) -> CriticalSet:
    """Every finite critical point, plus the count absorbed at OMEGA."""
    zeros = sample.zeros
    n = zeros.size
    if n < 2:
        return CriticalSet(np.empty(0, complex), 0, np.empty(0))
    pts = np.column_stack([zeros.real, zeros.imag])
    if cKDTree(pts).query_pairs(1e-12):
        raise ValueError("coincident zeros are not supported")
    drop = degree_drop(zeros)
    d = n - 1 - drop
    if d == 0:
        return CriticalSet(np.empty(0, complex), drop, np.empty(0))
    if initial is None:
        approx = _initial_guesses(zeros, n, d)
    else:
        approx = np.asarray(initial, dtype=complex).copy()
        if approx.size != d:
            raise ValueError(f"need {d} initial approximants")
    approx = np.ascontiguousarray(approx)
    iters = _kernels.aberth(approx, zeros, tol, max_iters)
    converged = iters >= 0
    far = np.abs(approx) > HARVEST_RADIUS
    drop += int(np.count_nonzero(far))
    approx = approx[~far]
    approx = approx[np.lexsort((approx.imag, approx.real))]
    res = np.abs(field_many(sample, approx, strict=False)) if approx.size else np.empty(0)
    return CriticalSet(approx, drop, res, bool(converged), iters if converged else max_iters)


def local_scale(sample: ConditionedSample, w) -> np.ndarray:
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    return np.sum(1.0 / np.abs(w[:, None] - sample.zeros[None, :]), axis=1) + sample.N / np.abs(w)


def _wrapped_steps(vals: np.ndarray) -> np.ndarray:
    return np.angle(np.roll(vals, -1) / vals)


def winding_count(sample: ConditionedSample, contour: Contour, max_points: int = 1 << 16) -> int:
    """Winding number of the field along the contour.

    Equals (critical points inside) - (zeros inside) - (1 if ``w = 0`` inside).
    Arcs are bisected until every argument step is below ``pi/2``.
    """
    if sample.N and np.min(contour.gap(sample.zeros)) <= POLE_TOL:
        raise IndeterminateError("a zero lies on the contour")
    theta = contour.angles()
    vals = field_many(sample, contour.at(theta), strict=False)
    while True:
        if not np.all(np.isfinite(vals)) or np.any(vals == 0):
            raise IndeterminateError("field vanishes or blows up on the contour")
        steps = _wrapped_steps(vals)
        bad = np.abs(steps) >= np.pi / 2
        if not np.any(bad):
            break
        if theta.size + np.count_nonzero(bad) > max_points:
            raise IndeterminateError("argument refinement cap exceeded")
        nxt = np.roll(theta, -1)
        nxt[-1] += 2 * np.pi
        mids = 0.5 * (theta[bad] + nxt[bad])
        new_vals = field_many(sample, contour.at(mids), strict=False)
        theta = np.concatenate([theta, mids])
        vals = np.concatenate([vals, new_vals])
        order = np.argsort(theta, kind="mergesort")
        theta, vals = theta[order], vals[order]
    total = np.sum(steps) / (2 * np.pi)
    k = int(round(total))
    if abs(total - k) > 1e-6:
        raise IndeterminateError("non-integer winding")
    return k


def poles_inside(sample: ConditionedSample, contour: Contour) -> int:
    return int(np.count_nonzero(contour.contains(sample.zeros))) + int(bool(contour.contains(0j)))


def critical_count_inside(sample: ConditionedSample, contour: Contour) -> int:
    """Critical points inside the contour via the argument principle."""
    return winding_count(sample, contour) + poles_inside(sample, contour)


def local_refine(sample: ConditionedSample, start: complex, tol: float = 1e-14, max_iter: int = 50) -> complex:
    """Newton iteration on the field from ``start``."""
    w = complex(start)
    radius = None
    prev = None
    for _ in range(max_iter):
        try:
            f, fp = field_many(sample, [w], derivative=True)
        except PoleError as exc:
            raise ConvergenceError("Newton iterate hit a pole") from exc
        f, fp = complex(f[0]), complex(fp[0])
        if f == 0:
            return w
        if fp == 0:
            raise ConvergenceError("vanishing derivative")
        step = f / fp
        if radius is None:
            radius = 10.0 * abs(step)
        w = w - step
        if abs(w - start) > radius:
            raise ConvergenceError("Newton iteration left its trust disk")
        if abs(step) <= tol * abs(w):
            return w
        # rounding-level stagnation
        if prev is not None and abs(step) < 1e-11 * abs(w) and abs(step) >= prev:
            return w
        prev = abs(step)
    raise ConvergenceError("Newton iteration did not converge")


def contour_moment_estimate(sample: ConditionedSample, contour: Contour, m: int = 512) -> complex:
    """Location of the single critical point inside, from the first argument-principle moment.

    ``(1/2 pi i) * integral of w E'/E dw`` equals the sum of the enclosed roots
    minus the enclosed poles; the poles are the known zeros (and ``w = 0``).
    """
    theta = 2 * np.pi * np.arange(m) / m
    e = np.exp(1j * theta)
    w = contour.center + contour.chart_radius * e
    f, fp = field_many(sample, w, derivative=True)
    dw = 1j * contour.chart_radius * e
    moment = np.sum(w * fp / f * dw) * (2 * np.pi / m) / (2j * np.pi)
    inside = sample.zeros[contour.contains(sample.zeros)]
    return complex(moment + np.sum(inside))


@dataclass(frozen=True)
class ContourCheck:
    c1_hat: float
    c2_hat: float
    ok: bool
    xi_gap: float


def verify_contour_conditions(mu: ZeroMeasure, pinned, N: int, xi: complex, contour: Contour) -> ContourCheck:
    """Empirical constants of the two contour conditions.

    ``c1_hat = min |E[E_N]| / N`` and ``c2_hat = N * max d(w, xi)`` over the
    contour samples. ``ok`` needs ``c1_hat > 1e-3`` and ``xi`` off the contour
    by more than 1e-9 (chart units).
    """
    xi = complex(xi)
    pts = contour.points()
    gap = float(contour.gap(xi))
    try:
        mean = expected_field(mu, pinned, N, pts)
        c1 = float(np.min(np.abs(mean))) / N
    except PoleError:
        c1 = 0.0
    c2 = N * float(np.max(geodesic_distance_array(pts, xi)))
    ok = c1 > 1e-3 and gap > 1e-9
    return ContourCheck(c1, c2, ok, gap)
