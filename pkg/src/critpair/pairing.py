"""Predicted paired critical points and Monte Carlo pairing trials.

A zero pinned at ``xi`` is expected to have a critical point at the root
``w_exact`` of the averaged field equation, at distance of order ``1/N``.
A trial draws the remaining zeros and asks whether exactly one critical point
lies inside the geodesic circle of radius ``r/N`` around ``w_exact``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .field import ConditionedSample, PoleError, expected_field, expected_field_jacobian
from .measures import ZeroMeasure, is_exceptional
from .solver import (
    ConvergenceError,
    IndeterminateError,
    contour_moment_estimate,
    local_refine,
    poles_inside,
    winding_count,
)
from .sphere import OMEGA, Contour, geodesic_circle, geodesic_distance


class ExceptionalPointError(ValueError):
    """The pinned zero lies (within margin) in the exceptional set."""


class SpacingError(ValueError):
    """Pinned zeros violate the separation condition."""


class StallError(RuntimeError):
    """Rejection sampling of well-spaced points stopped making progress."""


def wrap_angle(a: float) -> float:
    """Map an angle to ``(-pi, pi]``."""
    a = math.remainder(a, 2 * math.pi)
    return math.pi if a == -math.pi else a


def trial_rng(seed: int, N: int, trial_index: int) -> np.random.Generator:
    """Independent stream per ``(seed, N, trial_index)``; order of execution is irrelevant."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(N), int(trial_index)))))


@dataclass(frozen=True)
class PairingPrediction:
    xi: complex
    N: int
    r: float
    w_first_order: complex
    w_exact: complex
    predicted_arg: float
    contour: Contour
    literal_arg: float  # the alternative displayed form, kept for comparison


def predicted_argument(mu: ZeroMeasure, xi: complex, literal: bool = False) -> float:
    """Direction of ``w - xi`` for the paired point.

    Expanding the first-order location gives ``arg(xi) - arg(1 - phi(xi) xi)``.
    ``literal=True`` returns ``arg(xi) - arg(1/xi - phi(xi))`` instead, which
    differs by ``arg(xi)``.
    """
    xi = complex(xi)
    phi = mu.cauchy_field(xi).value
    if literal:
        return wrap_angle(cmath.phase(xi) - cmath.phase(1.0 / xi - phi))
    return wrap_angle(cmath.phase(xi) - cmath.phase(1.0 - phi * xi))


def solve_expected_field(mu: ZeroMeasure, pinned, N: int, start: complex, scale: float,
                         tol: float = 1e-15, max_iter: int = 60) -> complex:
    """Root of the (non-holomorphic) expected field by real 2x2 Newton steps.

    With ``a = dF/dw`` and ``b = dF/d conj(w)`` the step solves
    ``a d + b conj(d) = -F``.
    """
    w = complex(start)
    for _ in range(max_iter):
        f = expected_field(mu, pinned, N, w)
        a, b = expected_field_jacobian(mu, pinned, N, w)
        den = abs(a) ** 2 - abs(b) ** 2
        if den == 0:
            raise ConvergenceError("singular Jacobian in expected-field solve")
        d = (b * f.conjugate() - a.conjugate() * f) / den
        w += d
        if abs(w - start) > 10 * scale:
            raise ConvergenceError("expected-field Newton solve diverged")
        if abs(d) <= tol * max(abs(w), 1.0):
            return w
    if abs(d) <= 1e-12 * max(abs(w), 1.0):
        return w
    raise ConvergenceError("expected-field Newton solve did not converge")


def predict(mu: ZeroMeasure, xi, N: int, r: float = 0.5, others=(), margin: float = 0.05,
            samples: int = 128) -> PairingPrediction:
    """Paired-point prediction and its contour for a zero pinned at ``xi``.

    ``others`` are further pinned zeros (for simultaneous pairing); they enter
    the expected field exactly.
    """
    if xi is OMEGA or is_exceptional(mu, xi, margin):
        raise ExceptionalPointError(f"xi={xi!r} is within {margin} of the exceptional set")
    if N < 4:
        raise ValueError("N must be at least 4")
    if r <= 0:
        raise ValueError("r must be positive")
    xi = complex(xi)
    phi = mu.cauchy_field(xi).value
    w1 = xi * (1.0 - (1.0 / N) / (phi * xi - 1.0))
    pinned = np.concatenate([[xi], np.asarray(others, dtype=complex).ravel()])
    try:
        w = solve_expected_field(mu, pinned, N, w1, scale=abs(w1 - xi))
    except PoleError as exc:
        raise ConvergenceError("expected-field solve hit a pole") from exc
    contour = geodesic_circle(w, r / N, samples)
    if contour.gap(xi) <= 1e-9 * contour.chart_radius:
        raise ValueError("the pinned zero lies on the contour; choose a different r")
    return PairingPrediction(
        xi=xi,
        N=N,
        r=r,
        w_first_order=w1,
        w_exact=w,
        predicted_arg=predicted_argument(mu, xi),
        contour=contour,
        literal_arg=predicted_argument(mu, xi, literal=True),
    )


@dataclass(frozen=True)
class TrialOutcome:
    N: int
    seed: int
    trial_index: int
    xi: complex
    paired: bool
    count_inside: int | None
    indeterminate: bool
    paired_point: complex | None = None
    distance_to_xi: float = math.nan
    arg_error: float = math.nan
    offset_from_prediction: float = math.nan

    def to_record(self) -> dict:
        def c(z):
            return None if z is None else [z.real, z.imag]

        return {
            "N": self.N,
            "seed": self.seed,
            "trial_index": self.trial_index,
            "xi": c(self.xi),
            "paired": self.paired,
            "count_inside": self.count_inside,
            "indeterminate": self.indeterminate,
            "paired_point": c(self.paired_point),
            "distance_to_xi": None if math.isnan(self.distance_to_xi) else self.distance_to_xi,
            "arg_error": None if math.isnan(self.arg_error) else self.arg_error,
            "offset_from_prediction": None if math.isnan(self.offset_from_prediction) else self.offset_from_prediction,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TrialOutcome":
        def c(v):
            return None if v is None else complex(v[0], v[1])

        def f(v):
            return math.nan if v is None else float(v)

        return cls(
            N=int(rec["N"]),
            seed=int(rec["seed"]),
            trial_index=int(rec["trial_index"]),
            xi=c(rec["xi"]),
            paired=bool(rec["paired"]),
            count_inside=rec["count_inside"],
            indeterminate=bool(rec["indeterminate"]),
            paired_point=c(rec["paired_point"]),
            distance_to_xi=f(rec["distance_to_xi"]),
            arg_error=f(rec["arg_error"]),
            offset_from_prediction=f(rec["offset_from_prediction"]),
        )


def _locate_single(sample: ConditionedSample, pred: PairingPrediction) -> complex | None:
    contour = pred.contour
    try:
        w = local_refine(sample, pred.w_exact)
        if contour.contains(w):
            return w
    except ConvergenceError:
        pass
    try:
        guess = contour_moment_estimate(sample, contour)
    except PoleError:
        return None
    if not np.isfinite(guess) or not contour.contains(guess):
        return None
    try:
        w = local_refine(sample, guess)
        if contour.contains(w):
            return w
    except ConvergenceError:
        pass
    return guess


def evaluate_pairing(sample: ConditionedSample, pred: PairingPrediction, seed: int, trial_index: int) -> TrialOutcome:
    """Pairing outcome for one pinned zero of an already drawn sample."""
    common = dict(N=sample.N, seed=seed, trial_index=trial_index, xi=pred.xi)
    try:
        count = winding_count(sample, pred.contour) + poles_inside(sample, pred.contour)
    except IndeterminateError:
        return TrialOutcome(paired=False, count_inside=None, indeterminate=True, **common)
    if count != 1:
        return TrialOutcome(paired=False, count_inside=count, indeterminate=False, **common)
    w = _locate_single(sample, pred)
    if w is None:
        return TrialOutcome(paired=True, count_inside=1, indeterminate=False, **common)
    return TrialOutcome(
        paired=True,
        count_inside=1,
        indeterminate=False,
        paired_point=w,
        distance_to_xi=geodesic_distance(pred.xi, w),
        arg_error=wrap_angle(cmath.phase(w - pred.xi) - pred.predicted_arg),
        offset_from_prediction=abs(w - pred.w_exact),
        **common,
    )


def run_single_trial(mu: ZeroMeasure, xi, N: int, r: float, seed: int, trial_index: int,
                     prediction: PairingPrediction | None = None) -> TrialOutcome:
    """One draw with a zero pinned at ``xi``; a pure function of its arguments."""
    pred = prediction if prediction is not None else predict(mu, xi, N, r)
    rng = trial_rng(seed, N, trial_index)
    sample = ConditionedSample.draw(mu, [pred.xi], N, rng, seed=seed, trial_index=trial_index)
    return evaluate_pairing(sample, pred, seed, trial_index)


def check_spacing(Xi, N: int, epsilon: float) -> None:
    """Raise unless all pairwise chart distances exceed ``N^(-1/2 + epsilon/2)``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    Xi = np.asarray(Xi, dtype=complex)
    if Xi.size < 2:
        return
    d = np.abs(Xi[:, None] - Xi[None, :])
    np.fill_diagonal(d, np.inf)
    lim = N ** (-0.5 + 0.5 * epsilon)
    if np.min(d) <= lim:
        raise SpacingError(f"pinned zeros {np.min(d):.3g} apart, need more than {lim:.3g}")


@dataclass(frozen=True)
class MultiTrialOutcome:
    all_paired: bool
    per_xi: list

    @property
    def indeterminate(self) -> bool:
        return any(o.indeterminate for o in self.per_xi)


def multi_predictions(mu: ZeroMeasure, Xi, N: int, r: float, epsilon: float, alpha: float = 0.5,
                      margin: float = 0.05) -> list[PairingPrediction]:
    """Validated predictions for every pinned zero of a simultaneous-pairing experiment."""
    Xi = np.atleast_1d(np.asarray(Xi, dtype=complex))
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    if Xi.size < 1 or Xi.size > N**alpha + 1e-9:
        raise ValueError(f"need between 1 and N^alpha = {N**alpha:.4g} pinned zeros")
    check_spacing(Xi, N, epsilon)
    preds = []
    for i, xi in enumerate(Xi):
        others = np.delete(Xi, i)
        preds.append(predict(mu, xi, N, r, others=others, margin=margin))
    return preds


def run_multi_trial(mu: ZeroMeasure, Xi, N: int, r: float, epsilon: float, seed: int, trial_index: int,
                    alpha: float = 0.5, predictions: list | None = None) -> MultiTrialOutcome:
    """One draw with every point of ``Xi`` pinned; pairing checked for each of them."""
    preds = predictions if predictions is not None else multi_predictions(mu, Xi, N, r, epsilon, alpha)
    Xi = np.array([p.xi for p in preds])
    rng = trial_rng(seed, N, trial_index)
    sample = ConditionedSample.draw(mu, Xi, N, rng, seed=seed, trial_index=trial_index)
    per = [evaluate_pairing(sample, p, seed, trial_index) for p in preds]
    return MultiTrialOutcome(all(o.paired for o in per), per)


def generate_well_spaced(mu: ZeroMeasure, count: int, N: int, epsilon: float, margin: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample ``count`` non-exceptional points from ``mu`` obeying the spacing condition."""
    if count > N**0.9:
        raise ValueError("count must not exceed N^0.9")
    lim = N ** (-0.5 + 0.5 * epsilon)
    accepted = np.empty(0, dtype=complex)
    rejects = 0
    patience = 1000 * count
    while accepted.size < count:
        for z in mu.sample(256, rng):
            if accepted.size and np.min(np.abs(accepted - z)) <= lim:
                rejects += 1
            elif is_exceptional(mu, z, margin):
                rejects += 1
            else:
                accepted = np.append(accepted, z)
                rejects = 0
                if accepted.size == count:
                    break
            if rejects >= patience:
                raise StallError(f"{patience} consecutive rejections with {accepted.size} of {count} points placed")
    return accepted
