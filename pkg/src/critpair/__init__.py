"""Pairing of zeros and critical points for random polynomials on the Riemann sphere."""

from .experiment import ExperimentConfig, SweepSummary, fit_exponent, load_config, run_lemmas, run_sweep
from .field import ConditionedSample, PoleError, count_zeros_in_ball, expected_field, field, second_moment_event
from .measures import Uniform, gaussian_at_omega, make_measure, parse_measure, spherical_cap, tilted
from .pairing import PairingPrediction, TrialOutcome, predict, run_multi_trial, run_single_trial
from .plot import emit_plot
from .solver import all_critical_points, critical_count_inside, degree_drop, winding_count
from .sphere import OMEGA, Contour, antipode, geodesic_circle, geodesic_distance

__version__ = "0.1.0"
