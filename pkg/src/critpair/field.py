"""Conditioned random polynomials and their electrostatic field.

In the chart centered at infinity a degree ``N`` polynomial with zeros
``z_1..z_N`` is ``p(w) = w^{-N} prod (w - z_k)`` and

    E_N(w) = d/dw log p(w) = -N/w + sum_k 1/(w - z_k).

The finite zeros of ``E_N`` are exactly the critical points of ``p``. The field
is always evaluated from zero locations, never from coefficients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .measures import ZeroMeasure
from .sphere import OMEGA, Contour, geodesic_distance_array

POLE_TOL = _kernels.POLE_TOL


class PoleError(ValueError):
    """Field evaluated at ``w = 0`` or at a zero of the polynomial."""


def _canonical(zeros: np.ndarray) -> np.ndarray:
    zeros = np.asarray(zeros, dtype=complex)
    return zeros[np.lexsort((zeros.imag, zeros.real))]


@dataclass(frozen=True, eq=False)
class ConditionedSample:
    """One draw: pinned zeros plus i.i.d. random zeros, ``N`` zeros in total."""

    pinned: np.ndarray
    random_zeros: np.ndarray
    measure_id: str = ""
    seed: int | None = None
    trial_index: int | None = None
    zeros: np.ndarray = dc_field(init=False, repr=False)

    def __post_init__(self):
        pinned = np.atleast_1d(np.asarray(self.pinned, dtype=complex)).copy()
        rand = np.atleast_1d(np.asarray(self.random_zeros, dtype=complex)).copy()
        allz = np.concatenate([pinned, rand])
        if not np.all(np.isfinite(allz)):
            raise ValueError("all zeros must be finite chart values")
        for a in (pinned, rand):
            a.flags.writeable = False
        zs = _canonical(allz)
        zs.flags.writeable = False
        object.__setattr__(self, "pinned", pinned)
        object.__setattr__(self, "random_zeros", rand)
        object.__setattr__(self, "zeros", zs)

    @property
    def N(self) -> int:
        return self.zeros.size

    @classmethod
    def from_zeros(cls, zeros, **kw) -> "ConditionedSample":
        """A sample with every zero treated as pinned (deterministic polynomial)."""
        return cls(np.asarray(zeros, dtype=complex), np.empty(0, dtype=complex), **kw)

    @classmethod
    def draw(cls, mu: ZeroMeasure, pinned, N: int, rng: np.random.Generator, **kw):
        pinned = np.atleast_1d(np.asarray(pinned, dtype=complex))
        if N < pinned.size:
            raise ValueError("N is smaller than the number of pinned zeros")
        return cls(pinned, mu.sample(N - pinned.size, rng), measure_id=mu.measure_id, **kw)

    def to_record(self) -> dict:
        return {
            "N": self.N,
            "pinned": [[z.real, z.imag] for z in self.pinned],
            "random_zeros": [[z.real, z.imag] for z in self.random_zeros],
            "measure_id": self.measure_id,
            "seed": self.seed,
            "trial_index": self.trial_index,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())

    @classmethod
    def from_record(cls, rec: dict) -> "ConditionedSample":
        def c(xs):
            return np.array([complex(a, b) for a, b in xs], dtype=complex)

        s = cls(c(rec["pinned"]), c(rec["random_zeros"]), rec.get("measure_id", ""),
                rec.get("seed"), rec.get("trial_index"))
        if s.N != rec["N"]:
            raise ValueError("record N does not match the number of zeros")
        return s

    @classmethod
    def from_json(cls, text: str) -> "ConditionedSample":
        return cls.from_record(json.loads(text))


def field_many(sample: ConditionedSample, ws, derivative: bool = False, strict: bool = True):
    """Vectorized field (and optionally its derivative) at the points ``ws``.

    With ``strict=False`` pole hits come back as nan instead of raising.
    """
    ws = np.ascontiguousarray(np.atleast_1d(np.asarray(ws, dtype=complex)))
    out = np.empty(ws.shape, dtype=complex)
    der = np.empty(ws.shape if derivative else 0, dtype=complex)
    poles = _kernels.field_values(ws, sample.zeros, float(sample.N), out, der)
    if poles and strict:
        raise PoleError(f"field evaluated at a pole ({poles} point(s))")
    return (out, der) if derivative else out


def field(sample: ConditionedSample, w: complex) -> complex:
    """``E_N(w)``; raises :class:`PoleError` within 1e-12 of ``0`` or a zero."""
    return complex(field_many(sample, [w])[0])


def field_derivative(sample: ConditionedSample, w: complex) -> tuple[complex, complex]:
    v, d = field_many(sample, [w], derivative=True)
    return complex(v[0]), complex(d[0])


def expected_field(mu: ZeroMeasure, pinned, N: int, w):
    """Mean of the field over the random zeros (vectorized in ``w``).

    ``-N/w + sum_{pinned} 1/(w - xi) + (N - |pinned|) phi(w)``, with the exact
    number of random zeros.
    """
    pinned = np.atleast_1d(np.asarray(pinned, dtype=complex))
    ws = np.atleast_1d(np.asarray(w, dtype=complex))
    if np.any(np.abs(ws) < POLE_TOL):
        raise PoleError("expected field evaluated at w = 0")
    diff = ws[:, None] - pinned[None, :]
    if np.any(np.abs(diff) < POLE_TOL):
        raise PoleError("expected field evaluated at a pinned zero")
    val = -N / ws + np.sum(1.0 / diff, axis=1)
    n_random = N - pinned.size
    if n_random:
        val = val + n_random * mu.cauchy_values(ws)
    return complex(val[0]) if np.ndim(w) == 0 else val


def expected_field_jacobian(mu: ZeroMeasure, pinned, N: int, w: complex) -> tuple[complex, complex]:
    """``(dF/dw, dF/d conj(w))`` of the expected field ``F``; it is not holomorphic."""
    pinned = np.atleast_1d(np.asarray(pinned, dtype=complex))
    w = complex(w)
    a = N / (w * w) - complex(np.sum(1.0 / (w - pinned) ** 2))
    n_random = N - pinned.size
    b = 0j
    if n_random:
        dw, dwbar = mu.cauchy_derivatives(w)
        a += n_random * dw
        b = n_random * dwbar
    return a, b


def fluctuation_sup_on_contour(sample: ConditionedSample, contour: Contour, mu: ZeroMeasure) -> float:
    """Max over contour samples of ``|E_N - E[E_N]|``."""
    pts = contour.points()
    if sample.N and np.min(np.abs(pts[:, None] - sample.zeros[None, :])) <= POLE_TOL:
        raise PoleError("contour passes through a zero")
    if sample.random_zeros.size == 0:
        return 0.0
    actual = field_many(sample, pts)
    mean = expected_field(mu, sample.pinned, sample.N, pts)
    return float(np.max(np.abs(actual - mean)))


def count_zeros_in_ball(sample: ConditionedSample, center, radius: float, include_pinned: bool = True) -> int:
    """Number of zeros within geodesic distance ``radius`` of ``center``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    zs = sample.zeros if include_pinned else sample.random_zeros
    if zs.size == 0:
        return 0
    if center is OMEGA:
        d = np.pi - geodesic_distance_array(zs, 0j)
    else:
        d = geodesic_distance_array(zs, complex(center))
    return int(np.count_nonzero(d <= radius))


@dataclass(frozen=True)
class SecondMomentResult:
    occurred: bool
    sum_value: float


def second_moment_event(sample: ConditionedSample, w0: complex, eta: float) -> SecondMomentResult:
    """Whether ``sum_j 1/|w0 - xi_j|^2`` over random zeros exceeds ``N^(2 - 2 eta)``."""
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    rz = sample.random_zeros
    if rz.size == 0:
        return SecondMomentResult(False, 0.0)
    d2 = np.abs(complex(w0) - rz) ** 2
    if np.any(d2 < POLE_TOL**2):
        raise PoleError("w0 coincides with a zero")
    s = float(np.sum(1.0 / d2))
    return SecondMomentResult(s > sample.N ** (2.0 - 2.0 * eta), s)
