"""Geometry of the unit round sphere in the holomorphic chart ``w`` centered at infinity.

The chart origin ``w = 0`` is the polynomial's pole (the point "infinity" of
the Riemann sphere). The antipodal point is not a finite chart value and is
represented by the singleton :data:`OMEGA`.

Distances are measured on the sphere of radius 1, so antipodal points are
``pi`` apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


class _Omega:
    """The chart point at ``w = infinity`` (antipode of the pole)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OMEGA"

    def __reduce__(self):
        return (_Omega, ())


OMEGA = _Omega()

ChartPoint = Union[complex, _Omega]


def is_omega(p) -> bool:
    return p is OMEGA


def as_chart_point(p) -> ChartPoint:
    """Coerce numbers (and the strings ``"OMEGA"``/``"inf"``) to a chart point."""
    if p is OMEGA:
        return OMEGA
    if isinstance(p, str):
        s = p.strip()
        if s.upper() in ("OMEGA", "INF", "INFINITY"):
            return OMEGA
        return complex(s.replace(" ", "").replace("i", "j"))
    z = complex(p)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return OMEGA
    return z


def chordal_distance(a: ChartPoint, b: ChartPoint) -> float:
    if a is OMEGA and b is OMEGA:
        return 0.0
    if a is OMEGA or b is OMEGA:
        z = b if a is OMEGA else a
        return 2.0 / math.sqrt(1.0 + abs(z) ** 2)
    a, b = complex(a), complex(b)
    return 2.0 * abs(a - b) / math.sqrt((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


def geodesic_distance(a: ChartPoint, b: ChartPoint) -> float:
    """Great-circle distance in radians between two chart points."""
    c = chordal_distance(a, b)
    return 2.0 * math.asin(min(1.0, 0.5 * c))


def geodesic_distance_array(zs, b: complex) -> np.ndarray:
    """Vectorized :func:`geodesic_distance` from finite points ``zs`` to finite ``b``."""
    zs = np.asarray(zs, dtype=complex)
    chord = 2.0 * np.abs(zs - b) / np.sqrt((1.0 + np.abs(zs) ** 2) * (1.0 + abs(b) ** 2))
    return 2.0 * np.arcsin(np.minimum(1.0, 0.5 * chord))


def antipode(p: ChartPoint) -> ChartPoint:
    if p is OMEGA:
        return 0j
    p = complex(p)
    if p == 0:
        return OMEGA
    return -1.0 / p.conjugate()


def invert(p: ChartPoint) -> ChartPoint:
    """The chart inversion ``w -> 1/w`` (an isometry of the round sphere)."""
    if p is OMEGA:
        return 0j
    p = complex(p)
    if p == 0:
        return OMEGA
    return 1.0 / p


@dataclass(frozen=True)
class Contour:
    """Positively oriented chart circle sampled at equally spaced angles."""

    center: complex
    chart_radius: float
    sample_count: int = 128

    def __post_init__(self):
        if not self.chart_radius > 0:
            raise ValueError("chart_radius must be positive")
        if self.sample_count < 64:
            raise ValueError("sample_count must be at least 64")

    def angles(self, m: int | None = None) -> np.ndarray:
        m = self.sample_count if m is None else m
        return 2.0 * np.pi * np.arange(m) / m

    def at(self, theta) -> np.ndarray:
        return self.center + self.chart_radius * np.exp(1j * np.asarray(theta, dtype=float))

    def points(self, m: int | None = None) -> np.ndarray:
        return self.at(self.angles(m))

    def contains(self, w) -> np.ndarray | bool:
        """Strict interior test (chart disk)."""
        return np.abs(np.asarray(w) - self.center) < self.chart_radius

    def gap(self, w) -> np.ndarray | float:
        """Chart distance from ``w`` to the circle itself."""
        return np.abs(np.abs(np.asarray(w) - self.center) - self.chart_radius)

    def with_samples(self, m: int) -> "Contour":
        return Contour(self.center, self.chart_radius, m)


def geodesic_circle(center: ChartPoint, geodesic_radius: float, samples: int = 128) -> Contour:
    """The geodesic circle of the given radius around ``center`` as a chart circle.

    Stereographic charts map circles to circles, so this is exact. The chart
    radius agrees with the conformal estimate ``R (1 + |c|^2) / 2`` up to a
    relative ``O(R^2)``, and the chart center is shifted from ``center`` by
    ``O(R^2)`` as well.
    """
    if center is OMEGA:
        raise ValueError("geodesic_circle needs a finite center")
    center = complex(center)
    if center == 0:
        raise ValueError("geodesic_circle is undefined around the pole w = 0")
    if not 0 < geodesic_radius < 0.1:
        raise ValueError("geodesic_radius must lie in (0, 0.1)")
    c, rho = geodesic_ball_as_chart_disk(center, geodesic_radius)
    return Contour(c, rho, samples)


def geodesic_ball_as_chart_disk(center: complex, radius: float) -> tuple[complex, float]:
    """Exact chart disk ``(c, rho)`` equal to the closed geodesic ball around ``center``.

    Stereographic charts map circles to circles. Requires that the ball does not
    contain ``OMEGA``.
    """
    center = complex(center)
    chord = 2.0 * math.sin(0.5 * radius)
    k = chord * chord * (1.0 + abs(center) ** 2) / 4.0
    if k >= 1.0:
        raise ValueError("ball contains the chart point at infinity")
    c = center / (1.0 - k)
    rho = math.sqrt(k * (1.0 + abs(center) ** 2 - k)) / (1.0 - k)
    return c, rho


def uniform_area_element(w) -> np.ndarray:
    """Density of the normalized uniform measure w.r.t. Lebesgue measure in the chart."""
    return 1.0 / (np.pi * (1.0 + np.abs(np.asarray(w)) ** 2) ** 2)


def uniform_ball_mass(radius: float) -> float:
    """Normalized uniform mass of a geodesic ball of the given radius."""
    return math.sin(0.5 * radius) ** 2
