import math

import numpy as np
import pytest

from critpair.measures import (
    QuadratureError,
    Uniform,
    cauchy_field,
    exceptional_set_test,
    gaussian_at_omega,
    is_exceptional,
    make_measure,
    parse_measure,
    sample_zeros,
    spherical_cap,
    tilted,
)
from critpair.sphere import OMEGA, geodesic_distance_array

from oracles import uniform_phi

MEASURES = [Uniform(), gaussian_at_omega(), spherical_cap(1.0), spherical_cap(0.4), tilted(0.5)]
GRID = [0.3 * np.exp(0.7j), 0.9 + 0.2j, 1 + 0j, -1.1 + 0.6j, 1.7j, 2.5 - 1.5j, -0.05 + 0.08j, 4 + 0j,
        0.5 - 0.5j, -3 - 2j, 0.2 + 1.1j, 1.3 + 1.3j, -0.7 - 0.1j, 6j, 0.45 + 0j, -2 + 0.1j,
        0.01 + 0.7j, 1.05 - 0.02j, -0.6 + 2.2j, 10 + 10j]


def test_sample_count_zero():
    rng = np.random.default_rng(0)
    for mu in MEASURES:
        assert sample_zeros(mu, 0, rng).size == 0


def test_uniform_hemisphere_fraction():
    z = sample_zeros(Uniform(), 100_000, np.random.default_rng(1))
    assert np.mean(np.abs(z) <= 1) == pytest.approx(0.5, abs=0.005)


def test_gaussian_outer_fraction():
    z = sample_zeros(gaussian_at_omega(), 100_000, np.random.default_rng(2))
    assert np.mean(np.abs(z) >= 1) == pytest.approx(1 - math.exp(-1), abs=0.005)


def test_sampling_is_deterministic():
    mu = tilted(0.3)
    a = mu.sample(50, np.random.default_rng(9))
    b = mu.sample(50, np.random.default_rng(9))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("mu", MEASURES, ids=lambda m: m.measure_id)
def test_sampler_matches_disk_mass(mu):
    """Empirical mass of 8 geodesic balls within 4 standard errors of the integrated density."""
    rng = np.random.default_rng(11)
    n = 40_000
    z = mu.sample(n, rng)
    centers = [1 + 0j, 0.3 + 0.4j, -2 + 1j, 0.1j, 2 - 2j, -0.5 - 0.5j, 1.5j, 0.8 - 0.1j]
    for c in centers:
        R = 0.6
        p = mu.ball_mass(c, R)
        emp = np.mean(geodesic_distance_array(z, c) <= R)
        se = math.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(emp - p) <= 4 * se + 1e-9, (c, emp, p)


def test_closed_form_examples():
    assert cauchy_field(gaussian_at_omega(), 2 + 0j).value == pytest.approx(math.exp(-0.25) / 2, abs=1e-15)
    assert cauchy_field(gaussian_at_omega(), 2 + 0j).value == pytest.approx(0.38940, abs=1e-5)
    assert cauchy_field(spherical_cap(1.0), 2 + 0j).value == pytest.approx(0.5, abs=1e-15)
    assert cauchy_field(gaussian_at_omega(), 2 + 0j).method == "closed_form"


def test_uniform_transform_is_not_zero_in_this_chart():
    """Monte Carlo: the mean field of one uniform zero at w=1 is 1/2, not 0."""
    rng = np.random.default_rng(5)
    z = Uniform().sample(400_000, rng)
    vals = 1.0 / (1.0 - z)
    mean = np.mean(vals)
    se = np.std(vals) / math.sqrt(vals.size)
    assert abs(mean - 0.5) <= 4 * se
    assert abs(mean) > 50 * se


@pytest.mark.parametrize("w", GRID[:8])
def test_uniform_closed_form(w):
    assert cauchy_field(Uniform(), w).value == pytest.approx(uniform_phi(w), abs=1e-15)


@pytest.mark.parametrize("mu", MEASURES[:4], ids=lambda m: m.measure_id)
def test_radial_closed_form_matches_quadrature(mu):
    for w in GRID[::3]:
        q = mu.cauchy_quadrature(w)
        assert q.method == "quadrature"
        assert q.error <= 1e-8
        assert abs(q.value - mu.cauchy_field(w).value) <= 1e-6


def test_generic_density_goes_through_quadrature():
    mu = tilted(0.5)
    v = mu.cauchy_field(1 + 0.5j)
    assert v.method == "quadrature" and v.error <= 1e-8
    rng = np.random.default_rng(8)
    z = mu.sample(200_000, rng)
    vals = 1.0 / (1 + 0.5j - z)
    se = np.std(vals) / math.sqrt(vals.size)
    assert abs(np.mean(vals) - v.value) <= 4 * se


@pytest.mark.parametrize("mu", MEASURES, ids=lambda m: m.measure_id)
def test_far_field_is_unit_charge(mu):
    for w in (100 + 0j, 100j, -70 - 70j):
        assert abs(w * mu.cauchy_field(w).value - 1) <= 0.05


@pytest.mark.parametrize("mu", MEASURES[:4], ids=lambda m: m.measure_id)
def test_radial_derivatives_match_finite_differences(mu):
    w = 0.5 + 0.6j
    h = 1e-6
    f = lambda z: mu.cauchy_field(z).value
    dx = (f(w + h) - f(w - h)) / (2 * h)
    dy = (f(w + 1j * h) - f(w - 1j * h)) / (2 * h)
    dw, dwbar = mu.cauchy_derivatives(w)
    assert dw == pytest.approx(0.5 * (dx - 1j * dy), abs=1e-6)
    assert dwbar == pytest.approx(0.5 * (dx + 1j * dy), abs=1e-6)


def test_exceptional_set_examples():
    assert exceptional_set_test(Uniform(), 1 + 0j, 0.1) == "clear"
    assert exceptional_set_test(Uniform(), OMEGA, 0.1) == "exceptional"
    assert exceptional_set_test(Uniform(), OMEGA, 1e-6) == "exceptional"
    assert exceptional_set_test(gaussian_at_omega(), 1 + 0j, 0.1) == "clear"
    assert is_exceptional(Uniform(), 0.01 + 0j, 0.05)
    assert is_exceptional(Uniform(), 50 + 0j, 0.05)
    with pytest.raises(ValueError):
        is_exceptional(Uniform(), 1 + 0j, 0.0)


def test_density_bound_is_enforced():
    from critpair.measures import GenericDensity

    with pytest.raises(ValueError):
        GenericDensity("bad", lambda w: 1.0 + 2.0 * np.real(w) / (1 + np.abs(w) ** 2), 1.5)
    gaussian = gaussian_at_omega()
    gaussian.density_bound = 1.0
    with pytest.raises(ValueError):
        gaussian._check_density_bound()


def test_measure_ids_round_trip():
    for mu in MEASURES:
        assert parse_measure(mu.measure_id).measure_id == mu.measure_id
    assert make_measure("cap", radius=0.5).measure_id == "cap(radius=0.5)"
    with pytest.raises(ValueError):
        make_measure("nonsense")


def test_quadrature_error_type():
    assert issubclass(QuadratureError, RuntimeError)
