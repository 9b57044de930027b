"""Acceptance criteria A1-A9, run at their stated sizes and tolerances."""

import math
import time

import numpy as np
import pytest

from critpair.experiment import ExperimentConfig, fit_exponent, run_lemmas, run_sweep
from critpair.field import ConditionedSample
from critpair.measures import Uniform, gaussian_at_omega, spherical_cap
from critpair.solver import all_critical_points

from acceptance_report import record
from oracles import critical_points_oracle, hull_excess, match_distance

pytestmark = pytest.mark.slow

SWEEP_N = [64, 128, 256, 512, 1024]
LEMMA_N = [128, 256, 512, 1024, 2048]


def _sweep_config(out, threads):
    return ExperimentConfig(measure="uniform", xi=1 + 0j, r=0.5, N_list=SWEEP_N, trials=2000,
                            seed=20160101, threads=threads, out=str(out))


@pytest.fixture(scope="session")
def pair_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("pair_sweep")
    t0 = time.perf_counter()
    summary = run_sweep(_sweep_config(out, threads=4))
    return summary, out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def lemma_summary(tmp_path_factory):
    out = tmp_path_factory.mktemp("lemmas")
    cfg = ExperimentConfig(measure="uniform", xi=1 + 0j, N_list=LEMMA_N, trials=10_000, eta=0.25,
                           delta=0.5, seed=20160102, threads=4, out=str(out))
    return run_lemmas(cfg)


def test_a1_solver_matches_coefficient_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20160103)
    worst_match = worst_hull = 0.0
    drops_ok = True
    for i in range(500):
        mu = Uniform() if i % 2 == 0 else gaussian_at_omega()
        N = int(rng.integers(2, 31))
        s = ConditionedSample.draw(mu, [1.0], N, rng)
        cs = all_critical_points(s)
        roots, drop = critical_points_oracle(s.zeros)
        drops_ok &= cs.degree_drop == drop
        worst_match = max(worst_match, match_distance(cs.points, roots))
        worst_hull = max(worst_hull, hull_excess(1 / cs.points, 1 / s.zeros))
    elapsed = time.perf_counter() - t0
    ok = drops_ok and worst_match <= 1e-8 and worst_hull <= 1e-9 and elapsed < 30
    record("A1", ok, f"max match {worst_match:.2e}, max hull excess {worst_hull:.2e}, "
                     f"degree drops agree {drops_ok}, {elapsed:.1f} s")
    assert ok


def test_a2_single_point_pairing_rate(pair_sweep):
    summary, _, elapsed = pair_sweep
    rows = summary.rows
    mono = all(b.paired_frac >= a.paired_frac - 2 * math.hypot(a.paired_se, b.paired_se)
               for a, b in zip(rows, rows[1:]))
    top = summary.row(1024).paired_frac
    fit = summary.fit
    ok = mono and top >= 0.95 and fit.slope <= -0.6 and elapsed < 300
    fracs = ", ".join(f"{r.N}:{r.paired_frac:.4f}" for r in rows)
    record("A2", ok, f"paired {fracs}; slope {fit.slope:.3f} CI [{fit.ci[0]:.3f}, {fit.ci[1]:.3f}]; "
                     f"monotone {mono}; {elapsed:.0f} s")
    assert mono, "paired fraction decreases by more than 2 s.e."
    assert top >= 0.95
    assert fit.slope <= -0.6
    assert elapsed < 300


def test_a3_distance_and_argument_scaling(pair_sweep):
    summary, _, _ = pair_sweep
    rows = summary.rows
    dist = summary.row(1024).median_Ndist
    dists = [r.median_Ndist for r in rows]
    args = [r.median_Nargerr for r in rows]
    offs = [r.median_N2offset for r in rows]

    def grows(xs):
        return all(b > a for a, b in zip(xs, xs[1:]))

    dist_ok = all(0.8 <= d <= 1.25 for d in dists)
    ok = dist_ok and not grows(args) and not grows(offs)
    record("A3", ok, "median N*dist " + ", ".join(f"{d:.3f}" for d in dists)
           + "; median N*|arg err| " + ", ".join(f"{a:.3f}" for a in args)
           + "; median N^2*offset " + ", ".join(f"{o:.3f}" for o in offs))
    assert dist_ok, "median N * distance outside [0.8, 1.25]"
    assert not grows(args), "median N * |arg error| grows monotonically"
    assert not grows(offs), "median N^2 * offset grows monotonically"


def test_a4_small_ball_counts(lemma_summary):
    rows = lemma_summary.rows
    fit = lemma_summary.small_ball_fit
    binom_ok = all(abs(r.mid_ball_mean - r.binomial_mean) <= 3 * r.mid_ball_se for r in rows)
    ok = fit.slope <= -0.35 and binom_ok
    probs = ", ".join(f"{r.N}:{r.small_ball_prob:.4f}" for r in rows)
    devs = ", ".join(f"{(r.mid_ball_mean - r.binomial_mean) / r.mid_ball_se:+.2f}" for r in rows)
    record("A4", ok, f"P(count>=1) {probs}; slope {fit.slope:.3f} CI [{fit.ci[0]:.3f}, {fit.ci[1]:.3f}]; "
                     f"mid-ball deviation in s.e. {devs}")
    assert fit.slope <= -0.35
    assert binom_ok


def test_a5_second_moment_event(lemma_summary):
    rows = lemma_summary.rows
    fit = lemma_summary.second_moment_fit
    ok = fit.slope <= -0.35
    probs = ", ".join(f"{r.N}:{r.second_moment_prob:.4f}" for r in rows)
    record("A5", ok, f"P(A) {probs}; slope {fit.slope:.3f} CI [{fit.ci[0]:.3f}, {fit.ci[1]:.3f}] {fit.note}")
    assert ok


def test_a6_simultaneous_pairing(pair_sweep, tmp_path):
    cfg = ExperimentConfig(measure="uniform", mode="multi", N_list=[1024], trials=500, r=0.5, epsilon=0.5,
                           alpha=0.5, multi_count=32, multi_layout="circle", seed=20160104, threads=4,
                           out=str(tmp_path))
    row = run_sweep(cfg).row(1024)
    single = pair_sweep[0].row(1024)
    p_single = 1 - single.paired_frac
    p_multi = row.per_xi_fail_frac
    n_multi = 32 * row.determinate
    se = math.sqrt(p_single * (1 - p_single) / single.determinate + p_multi * (1 - p_multi) / n_multi)
    consistent = abs(p_multi - p_single) <= 3 * se
    ok = row.paired_frac >= 0.8 and consistent
    record("A6", ok, f"all-paired {row.paired_frac:.4f}; per-point failure {p_multi:.4f} vs single "
                     f"{p_single:.4f} (3 s.e. = {3 * se:.4f})")
    assert consistent, "per-point failure rate differs from the single-point rate"
    assert row.paired_frac >= 0.8


A7_GRID = [0.3 * np.exp(0.7j), 0.9 + 0.2j, 1 + 0j, -1.1 + 0.6j, 1.7j, 2.5 - 1.5j, -0.2 + 0.3j, 4 + 0j,
           0.5 - 0.5j, -3 - 2j, 0.2 + 1.1j, 1.3 + 1.3j, -0.7 - 0.1j, 6j, 0.45 + 0j, -2 + 0.1j,
           0.1 + 0.7j, 1.05 - 0.02j, -0.6 + 2.2j, 10 + 10j]


def _cap_enclosed_mass_over_w(a):
    c = a * a / (1 + a * a)
    return lambda w: min(1.0, abs(w) ** 2 / (1 + abs(w) ** 2) / c) / w


def test_a7_cauchy_transform_closed_forms():
    forms = {
        "uniform": (Uniform(), lambda w: 0j),
        "gaussian": (gaussian_at_omega(), lambda w: math.exp(-1 / abs(w) ** 2) / w),
        "cap(radius=1)": (spherical_cap(1.0), _cap_enclosed_mass_over_w(1.0)),
    }
    errs = {}
    for name, (mu, form) in forms.items():
        errs[name] = max(abs(form(w) - mu.cauchy_quadrature(w).value) for w in A7_GRID)
    ok = all(e <= 1e-6 for e in errs.values())
    record("A7", ok, "max |closed form - quadrature|: " + ", ".join(f"{k} {v:.2e}" for k, v in errs.items()))
    assert ok, errs


def test_a7_supplement_uniform_transform_in_this_chart():
    """The uniform transform used by the package, conj(w)/(1+|w|^2), agrees with quadrature."""
    mu = Uniform()
    err = max(abs(mu.cauchy_field(w).value - mu.cauchy_quadrature(w).value) for w in A7_GRID)
    assert err <= 1e-6


def test_a8_degenerate_configurations():
    roots9 = all_critical_points(ConditionedSample.from_zeros(np.exp(2j * np.pi * np.arange(9) / 9)))
    pm = all_critical_points(ConditionedSample.from_zeros([1, -1]))
    rng = np.random.default_rng(20160105)
    worst = 0.0
    for _ in range(200):
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        cs = all_critical_points(ConditionedSample.from_zeros([a, b]))
        hm = 2 * a * b / (a + b)
        worst = max(worst, abs(cs.points[0] - hm) / max(1.0, abs(hm)))
    ok = len(roots9) == 0 and roots9.degree_drop == 8 and pm.degree_drop == 1 and len(pm) == 0 and worst <= 1e-12
    record("A8", ok, f"ninth roots: {len(roots9)} points, drop {roots9.degree_drop}; "
                     f"{{1,-1}} drop {pm.degree_drop}; N=2 harmonic mean error {worst:.1e}")
    assert ok


def test_a9_thread_count_determinism(pair_sweep, tmp_path):
    _, first, _ = pair_sweep
    run_sweep(_sweep_config(tmp_path, threads=2))
    same = all((first / f).read_bytes() == (tmp_path / f).read_bytes() for f in ("trials.jsonl", "summary.csv"))
    record("A9", same, "trials.jsonl and summary.csv byte-identical for 4 and 2 threads" if same
           else "outputs differ between thread counts")
    assert same
