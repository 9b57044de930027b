"""Probability measures on the sphere with bounded density w.r.t. the uniform measure.

Every measure is described by its push-forward to the chart ``w`` centered at
infinity. Each provides a sampler, its density, and its Cauchy transform

    phi(w) = integral of dmu(zeta) / (w - zeta),

the mean field at ``w`` produced by one random zero. Radially symmetric
measures have the closed form ``phi(w) = M(|w|) / w`` where ``M(rho)`` is the
mass of the chart disk of radius ``rho`` (mass outside ``|w|`` contributes no
field). Everything else goes through a two-dimensional quadrature in polar
coordinates centered at ``w``.

Note that the uniform measure has ``phi(w) = conj(w) / (1 + |w|^2)`` in this
chart, not zero: the chart's area element is not translation invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .sphere import OMEGA, geodesic_ball_as_chart_disk, uniform_area_element, uniform_ball_mass

QUAD_EPSABS = 1e-10
INNER_RADIUS = 0.1


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its target accuracy."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class CauchyFieldValue:
    value: complex
    method: str  # "closed_form" or "quadrature"
    error: float = 0.0


def _open_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random(n)
    return np.where(u == 0.0, 2.0**-54, u)


# ---------------------------------------------------------------- quadrature

def _circle_cuts(w: complex, rho: float, radii) -> list[float]:
    """Angles where the circle ``|zeta - w| = rho`` crosses ``|zeta| = a``."""
    cuts = []
    aw = abs(w)
    if aw == 0.0:
        return cuts
    alpha = math.atan2(w.imag, w.real)
    for a in radii:
        c = (a * a - aw * aw - rho * rho) / (2.0 * rho * aw)
        if -1.0 < c < 1.0:
            d = math.acos(c)
            cuts.extend([(alpha + d) % (2 * math.pi), (alpha - d) % (2 * math.pi)])
    return sorted(cuts)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def _angular_moment(h, w: complex, rho: float, radii) -> complex:
    """Integral over theta of ``h(w + rho e^{i theta}) e^{-i theta}``."""
    cuts = _circle_cuts(w, rho, radii)
    if not cuts:
        n = 64
        prev = None
        while True:
            th = 2.0 * np.pi * np.arange(n) / n
            e = np.exp(1j * th)
            val = (2.0 * np.pi / n) * np.sum(h(w + rho * e) / e)
            if prev is not None and abs(val - prev) <= 1e-14 * (1.0 + abs(val)):
                return val
            if n >= 16384:
                return val
            prev = val
            n *= 2
    # piecewise smooth: Gauss-Legendre on each arc between crossings
    edges = cuts + [cuts[0] + 2 * math.pi]
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        pieces = max(1, int(math.ceil((hi - lo) / (math.pi / 8))))
        bounds = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(bounds[:-1], bounds[1:]):
            th = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
            e = np.exp(1j * th)
            total += 0.5 * (b - a) * np.sum(_GL_W * h(w + rho * e) / e)
    return total


def cauchy_quadrature(h: Callable, w: complex, radii=(), epsabs: float = QUAD_EPSABS):
    """Integral of ``h(zeta) / (w - zeta)`` over the plane, ``h`` a Lebesgue density.

    Polar coordinates centered at ``w`` absorb the ``1/|w - zeta|`` singularity.
    ``radii`` lists origin-centered circles across which ``h`` jumps. Returns
    ``(value, error_estimate)``.
    """
    w = complex(w)
    aw = abs(w)
    brk = {INNER_RADIUS, aw}
    for a in radii:
        brk.update({abs(a - aw), a + aw})
    brk = sorted(b for b in brk if b > 0.0)

    def integrand(rho):
        v = -_angular_moment(h, w, rho, radii)
        return np.array([v.real, v.imag])

    value = 0j
    err = 0.0
    edges = [0.0] + brk + [np.inf]
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        res, e = integrate.quad_vec(integrand, a, b, epsabs=epsabs / len(edges), epsrel=1e-12, limit=400)
        value += complex(res[0], res[1])
        err += float(e)
    return value, err


def disk_mass_quadrature(h: Callable, center: complex, rho: float, radii=()) -> float:
    """Mass of the chart disk ``|zeta - center| <= rho`` under Lebesgue density ``h``."""
    center = complex(center)

    def ring(s):
        cuts = _circle_cuts(center, s, radii) if s > 0 else []
        edges = (cuts + [cuts[0] + 2 * math.pi]) if cuts else [0.0, 2 * math.pi]
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            pieces = max(1, int(math.ceil((hi - lo) / (math.pi / 8))))
            bounds = np.linspace(lo, hi, pieces + 1)
            for a, b in zip(bounds[:-1], bounds[1:]):
                th = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
                tot += 0.5 * (b - a) * float(np.sum(_GL_W * h(center + s * np.exp(1j * th))))
        return s * tot

    pts = sorted({abs(a - abs(center)) for a in radii} | {a + abs(center) for a in radii})
    pts = [p for p in pts if 0 < p < rho]
    edges = [0.0] + pts + [rho]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(ring, a, b, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
    return total


# ------------------------------------------------------------------ measures

class ZeroMeasure:
    """Base class; subclasses fill in sampling and density."""

    kind = "generic"
    discontinuity_radii: tuple = ()

    def __init__(self, name: str, density_bound: float, params: dict | None = None):
        self.name = name
        self.density_bound = float(density_bound)
        self.params = dict(params or {})
        if self.density_bound < 1.0:
            raise ValueError("density_bound must be at least 1")

    @property
    def measure_id(self) -> str:
        if not self.params:
            return self.name
        args = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.name}({args})"

    def __repr__(self):
        return f"<{type(self).__name__} {self.measure_id}>"

    # density w.r.t. the uniform measure; vectorized
    def density(self, w):
        raise NotImplementedError

    def lebesgue_density(self, w):
        return self.density(w) * uniform_area_element(w)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _check_density_bound(self):
        rho = np.concatenate([np.linspace(0.0, 3.0, 61)[1:], np.geomspace(3.0, 1e3, 40)])
        th = np.linspace(0.0, 2 * np.pi, 48, endpoint=False)
        grid = (rho[:, None] * np.exp(1j * th[None, :])).ravel()
        f = np.asarray(self.density(grid), dtype=float)
        if np.any(f < -1e-12):
            raise ValueError(f"{self.name}: negative density")
        if np.max(f) > self.density_bound * (1 + 1e-9):
            raise ValueError(
                f"{self.name}: density {np.max(f):.6g} exceeds declared bound {self.density_bound}"
            )

    def cauchy_quadrature(self, w) -> CauchyFieldValue:
        value, err = cauchy_quadrature(self.lebesgue_density, w, self.discontinuity_radii)
        if err > 1e-8:
            raise QuadratureError("Cauchy transform quadrature did not converge", err)
        return CauchyFieldValue(value, "quadrature", err)

    def cauchy_field(self, w) -> CauchyFieldValue:
        if w is OMEGA:
            return CauchyFieldValue(0j, "closed_form")
        return self.cauchy_quadrature(w)

    def cauchy_values(self, ws) -> np.ndarray:
        ws = np.atleast_1d(np.asarray(ws, dtype=complex))
        return np.array([self.cauchy_field(w).value for w in ws])

    def cauchy_derivatives(self, w: complex) -> tuple[complex, complex]:
        """``(d phi / dw, d phi / d conj(w))`` at ``w``.

        The second is ``pi`` times the Lebesgue density; the first is the
        Cauchy transform of the ``d/dw`` derivative of the density.
        """
        h = self.lebesgue_density
        step = 1e-6

        def dh(z):
            dx = (h(z + step) - h(z - step)) / (2 * step)
            dy = (h(z + 1j * step) - h(z - 1j * step)) / (2 * step)
            return 0.5 * (dx - 1j * dy)

        dw, err = cauchy_quadrature(dh, w, self.discontinuity_radii, epsabs=1e-8)
        return dw, complex(np.pi * h(complex(w)))

    def disk_mass(self, center: complex, rho: float) -> float:
        return disk_mass_quadrature(self.lebesgue_density, center, rho, self.discontinuity_radii)

    def ball_mass(self, center: complex, radius: float) -> float:
        """Mass of the closed geodesic ball around a finite center."""
        c, rho = geodesic_ball_as_chart_disk(center, radius)
        return self.disk_mass(c, rho)


class RadialMeasure(ZeroMeasure):
    """Measure invariant under rotations ``w -> e^{it} w`` of the chart.

    ``mass(rho)`` is the mass of ``{|w| <= rho}``, ``mass_derivative`` its
    derivative and ``inverse_mass`` the quantile function used for sampling.
    """

    kind = "radial"

    def __init__(self, name, mass, mass_derivative, inverse_mass, density, density_bound,
                 params=None, discontinuity_radii=()):
        super().__init__(name, density_bound, params)
        self._mass = mass
        self._dmass = mass_derivative
        self._inv = inverse_mass
        self._density = density
        self.discontinuity_radii = tuple(discontinuity_radii)
        self._check_density_bound()

    def mass(self, rho):
        return self._mass(np.asarray(rho, dtype=float))

    def density(self, w):
        return self._density(np.abs(np.asarray(w)))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be non-negative")
        if count == 0:
            return np.empty(0, dtype=complex)
        u = _open_unit(rng, count)
        theta = 2.0 * np.pi * rng.random(count)
        return self._inv(u) * np.exp(1j * theta)

    def cauchy_values(self, ws) -> np.ndarray:
        ws = np.atleast_1d(np.asarray(ws, dtype=complex))
        return self.mass(np.abs(ws)) / ws

    def cauchy_field(self, w) -> CauchyFieldValue:
        if w is OMEGA:
            return CauchyFieldValue(0j, "closed_form")
        w = complex(w)
        if w == 0:
            raise ValueError("Cauchy transform evaluated at the pole w = 0")
        return CauchyFieldValue(complex(self.mass(abs(w)) / w), "closed_form")

    def cauchy_derivatives(self, w: complex) -> tuple[complex, complex]:
        w = complex(w)
        rho = abs(w)
        dm = float(self._dmass(rho))
        m = float(self.mass(rho))
        dwbar = dm / (2.0 * rho)
        dw = dm * w.conjugate() / (2.0 * rho * w) - m / (w * w)
        return complex(dw), complex(dwbar)

    def disk_mass(self, center: complex, rho: float) -> float:
        if complex(center) == 0:
            return float(self.mass(rho))
        return super().disk_mass(center, rho)


class Uniform(RadialMeasure):
    """Normalized area measure of the round sphere."""

    kind = "uniform"

    def __init__(self):
        super().__init__(
            "uniform",
            mass=lambda r: r * r / (1.0 + r * r),
            mass_derivative=lambda r: 2.0 * r / (1.0 + r * r) ** 2,
            inverse_mass=lambda u: np.sqrt(u / (1.0 - u)),
            density=lambda r: np.ones_like(r, dtype=float),
            density_bound=1.0,
        )

    def ball_mass(self, center, radius: float) -> float:
        return uniform_ball_mass(radius)


def gaussian_at_omega() -> RadialMeasure:
    """Standard complex Gaussian in ``z = 1/w``, i.e. concentrated around OMEGA.

    Mass of ``{|w| <= rho}`` is ``exp(-1/rho^2)``; the density w.r.t. uniform
    is ``e^{-s} (1 + s)^2`` with ``s = 1/rho^2``, maximal ``4/e`` at ``s = 1``.
    """

    def mass(r):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(r > 0, np.exp(-1.0 / np.maximum(r, 1e-300) ** 2), 0.0)

    def dmass(r):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            s = 1.0 / np.maximum(r, 1e-300) ** 2
            return np.where(r > 0, 2.0 * s / np.maximum(r, 1e-300) * np.exp(-s), 0.0)

    def density(r):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            s = 1.0 / np.maximum(r, 1e-300) ** 2
            return np.where(r > 0, np.exp(-s) * (1.0 + s) ** 2, 0.0)

    return RadialMeasure(
        "gaussian",
        mass=mass,
        mass_derivative=dmass,
        inverse_mass=lambda u: 1.0 / np.sqrt(-np.log(u)),
        density=density,
        density_bound=1.5,
    )


def spherical_cap(radius: float = 1.0) -> RadialMeasure:
    """Uniform measure restricted to the chart disk ``|w| <= radius`` (a cap around the pole)."""
    a = float(radius)
    if a <= 0:
        raise ValueError("cap radius must be positive")
    c = a * a / (1.0 + a * a)

    def mass(r):
        return np.where(r <= a, (r * r / (1.0 + r * r)) / c, 1.0)

    def dmass(r):
        return np.where(r <= a, 2.0 * r / (1.0 + r * r) ** 2 / c, 0.0)

    def density(r):
        return np.where(r <= a, 1.0 / c, 0.0)

    def inverse(u):
        v = u * c
        return np.sqrt(v / (1.0 - v))

    return RadialMeasure(
        "cap",
        mass=mass,
        mass_derivative=dmass,
        inverse_mass=inverse,
        density=density,
        density_bound=1.0 / c,
        params={"radius": a},
        discontinuity_radii=(a,),
    )


class GenericDensity(ZeroMeasure):
    """Arbitrary bounded density w.r.t. uniform, sampled by rejection from uniform."""

    kind = "generic"

    def __init__(self, name, density, density_bound, params=None):
        super().__init__(name, density_bound, params)
        self._density = density
        self._proposal = Uniform()
        self._check_density_bound()

    def density(self, w):
        return self._density(np.asarray(w, dtype=complex))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be non-negative")
        out = []
        have = 0
        while have < count:
            batch = max(16, int(1.3 * self.density_bound * (count - have)) + 8)
            cand = self._proposal.sample(batch, rng)
            keep = cand[rng.random(batch) * self.density_bound < self.density(cand)]
            out.append(keep)
            have += keep.size
        if not out:
            return np.empty(0, dtype=complex)
        return np.concatenate(out)[:count]


def tilted(strength: float = 0.5) -> GenericDensity:
    """Density ``1 + strength * X`` w.r.t. uniform, ``X`` the first sphere coordinate.

    Not rotationally symmetric in the chart, so its Cauchy transform has no
    closed form here.
    """
    s = float(strength)
    if not 0 <= abs(s) < 1:
        raise ValueError("tilt strength must lie in [0, 1)")

    def density(w):
        w = np.asarray(w, dtype=complex)
        return 1.0 + s * 2.0 * w.real / (1.0 + np.abs(w) ** 2)

    return GenericDensity("tilted", density, 1.0 + abs(s), params={"strength": s})


def make_measure(name: str, **params) -> ZeroMeasure:
    """Build one of the bundled measures by name."""
    key = name.strip().lower()
    if key == "uniform":
        return Uniform()
    if key in ("gaussian", "gaussian-at-omega", "gaussian_at_omega"):
        return gaussian_at_omega()
    if key == "cap":
        return spherical_cap(params.get("radius", params.get("cap_radius", 1.0)))
    if key == "tilted":
        return tilted(params.get("strength", params.get("tilt", 0.5)))
    raise ValueError(f"unknown measure {name!r}")


def parse_measure(text: str) -> ZeroMeasure:
    """Parse ``name`` or ``name(key=value,...)`` as produced by ``measure_id``."""
    text = text.strip()
    if "(" not in text:
        return make_measure(text)
    name, rest = text.split("(", 1)
    params = {}
    for item in rest.rstrip(")").split(","):
        if item.strip():
            k, v = item.split("=")
            params[k.strip()] = float(v)
    return make_measure(name, **params)


# ------------------------------------------------------------------ operations

def sample_zeros(mu: ZeroMeasure, count: int, rng: np.random.Generator) -> np.ndarray:
    return mu.sample(count, rng)


def cauchy_field(mu: ZeroMeasure, w) -> CauchyFieldValue:
    return mu.cauchy_field(w)


def pairing_quantity(mu: ZeroMeasure, xi) -> complex:
    """``-1/xi + phi(xi)``; the exceptional set is where this is 0 or infinite."""
    xi = complex(xi)
    return -1.0 / xi + mu.cauchy_field(xi).value


def is_exceptional(mu: ZeroMeasure, xi, margin: float) -> bool:
    """True when ``xi`` lies within ``margin`` of the exceptional set."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    if xi is OMEGA:
        return True
    xi = complex(xi)
    if abs(xi) < margin or abs(xi) > 1.0 / margin:
        return True
    q = abs(pairing_quantity(mu, xi))
    return q < margin or q > 1.0 / margin


def exceptional_set_test(mu: ZeroMeasure, xi, margin: float) -> str:
    """``"exceptional"`` or ``"clear"``, see :func:`is_exceptional`."""
    return "exceptional" if is_exceptional(mu, xi, margin) else "clear"
