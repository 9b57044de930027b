"""Sweep orchestration, aggregation, exponent fits and result files."""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .field import ConditionedSample, count_zeros_in_ball, second_moment_event
from .measures import ZeroMeasure, make_measure, parse_measure
from .pairing import (
    MultiTrialOutcome,
    TrialOutcome,
    generate_well_spaced,
    multi_predictions,
    predict,
    run_multi_trial,
    run_single_trial,
    trial_rng,
)
from .sphere import as_chart_point

THREADS_ENV = "CRITPAIR_THREADS"
INDETERMINATE_LIMIT = 0.05

SUMMARY_COLUMNS = [
    "N", "trials", "paired_frac", "indeterminate_frac", "median_Ndist", "median_Nargerr",
    "r", "measure", "xi",
    # extra diagnostics
    "paired_se", "zero_inside_frac", "multi_inside_frac", "median_N2offset", "per_xi_fail_frac",
]


class ConfigError(ValueError):
    pass


def _fmt_complex(z: complex) -> str:
    return repr(complex(z)).strip("()")


@dataclass
class ExperimentConfig:
    measure: str = "uniform"
    density_bound: float | None = None
    xi: complex = 1 + 0j
    mode: str = "single"  # single | multi
    N_list: list = field(default_factory=lambda: [64, 128, 256, 512, 1024])
    trials: int = 2000
    r: float = 0.5
    eta: float = 0.25
    kappa: float = 0.5
    delta: float = 0.5
    alpha: float = 0.5
    epsilon: float = 0.5
    multi_count: int | None = None  # default floor(N^alpha)
    multi_layout: str = "circle"  # circle | random
    margin: float = 0.05
    seed: int = 20160101
    threads: int = 1
    out: str = "results"

    def make_measure(self) -> ZeroMeasure:
        mu = parse_measure(self.measure)
        if self.density_bound is not None:
            mu.density_bound = float(self.density_bound)
            mu._check_density_bound()
        return mu

    def validate(self, sweep: bool = True) -> "ExperimentConfig":
        if not self.N_list or any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ConfigError("N_list must be non-empty and strictly increasing")
        if any(n < 4 for n in self.N_list):
            raise ConfigError("every N must be at least 4")
        if sweep and self.trials < 100:
            raise ConfigError("sweeps need at least 100 trials per N")
        if not 0 < self.eta < 0.5:
            raise ConfigError("eta must lie in (0, 1/2)")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if not 0 <= self.alpha < 1:
            raise ConfigError("alpha must lie in [0, 1)")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.kappa <= 0:
            raise ConfigError("kappa must be positive")
        if self.r <= 0:
            raise ConfigError("r must be positive")
        if self.mode not in ("single", "multi"):
            raise ConfigError("mode must be 'single' or 'multi'")
        if self.multi_layout not in ("circle", "random"):
            raise ConfigError("multi_layout must be 'circle' or 'random'")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            self.make_measure()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name == "N_list":
        return [int(x) for x in raw.replace(",", " ").split()]
    if name == "xi":
        return as_chart_point(raw)
    if name in ("trials", "seed", "threads"):
        return int(raw)
    if name == "multi_count":
        return None if raw.lower() in ("", "none", "auto") else int(raw)
    if name in ("density_bound",):
        return None if raw.lower() in ("", "none") else float(raw)
    if name in ("r", "eta", "kappa", "delta", "alpha", "epsilon", "margin"):
        return float(raw)
    return raw


_ALIASES = {"n": "N_list", "n_list": "N_list", "trials_per_n": "trials"}


def load_config(path: str | os.PathLike | None = None, **overrides) -> ExperimentConfig:
    """Read an INI-style config (sections ``[experiment]`` and ``[measure]``), then apply overrides.

    The measure section takes ``kind`` plus its parameters (``radius`` for a
    cap, ``strength`` for the tilted measure) and optionally ``density_bound``.
    """
    cfg = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        if parser.has_section("experiment"):
            for key, raw in parser.items("experiment"):
                name = _ALIASES.get(key.lower(), key)
                if name not in known:
                    raise ConfigError(f"unknown config key {key!r}")
                try:
                    values[name] = _parse_value(name, raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        if parser.has_section("measure"):
            sec = dict(parser.items("measure"))
            kind = sec.pop("kind", "uniform")
            if "density_bound" in sec:
                values["density_bound"] = float(sec.pop("density_bound"))
            try:
                params = {k: float(v) for k, v in sec.items()}
                values["measure"] = make_measure(kind, **params).measure_id
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
    for key, v in overrides.items():
        if v is None:
            continue
        name = _ALIASES.get(key.lower(), key)
        if name not in known:
            raise ConfigError(f"unknown override {key!r}")
        values[name] = _parse_value(name, v) if isinstance(v, str) else v
    if "threads" not in overrides or overrides.get("threads") is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            values.setdefault("threads", int(env))
    return replace(cfg, **values)


# ---------------------------------------------------------------- execution

def _map_ordered(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def multi_points(config: ExperimentConfig, mu: ZeroMeasure, N: int) -> np.ndarray:
    """Pinned set for a simultaneous-pairing sweep at degree ``N``."""
    count = config.multi_count or max(1, int(math.floor(N**config.alpha + 1e-9)))
    if config.multi_layout == "circle":
        rad = abs(config.xi)
        start = np.angle(config.xi)
        return rad * np.exp(1j * (start + 2 * np.pi * np.arange(count) / count))
    return generate_well_spaced(mu, count, N, config.epsilon, config.margin, trial_rng(config.seed, N, 2**32))


def _median(xs) -> float:
    xs = [x for x in xs if not math.isnan(x)]
    return float(np.median(xs)) if xs else math.nan


@dataclass(frozen=True)
class SweepRow:
    N: int
    trials: int
    paired_frac: float
    indeterminate_frac: float
    median_Ndist: float
    median_Nargerr: float
    r: float
    measure: str
    xi: str
    paired_se: float
    zero_inside_frac: float
    multi_inside_frac: float
    median_N2offset: float
    per_xi_fail_frac: float
    failures: int
    determinate: int

    def csv_values(self) -> list:
        return [getattr(self, c) for c in SUMMARY_COLUMNS]


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    ci: tuple
    n_used: int
    excluded: list
    below_resolution: bool = False
    note: str = ""

    @property
    def flagged(self) -> bool:
        return bool(self.excluded)


@dataclass
class SweepSummary:
    rows: list
    fit: ExponentFit | None
    mode: str = "single"

    def row(self, N: int) -> SweepRow:
        return next(r for r in self.rows if r.N == N)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row.csv_values()])
        return buf.getvalue()


def aggregate_rows(N: int, outcomes: list, config: ExperimentConfig, mode: str) -> SweepRow:
    """Summary row for one ``N`` from ordered per-trial outcomes (single or multi)."""
    if mode == "multi":
        flat = [o for m in outcomes for o in m.per_xi]
        det = [m for m in outcomes if not m.indeterminate]
        paired = sum(m.all_paired for m in det)
        per_det = [o for o in flat if not o.indeterminate]
        per_fail = sum(not o.paired for o in per_det) / len(per_det) if per_det else math.nan
        n_ind = len(outcomes) - len(det)
    else:
        flat = outcomes
        per_det = [o for o in flat if not o.indeterminate]
        paired = sum(o.paired for o in per_det)
        per_fail = math.nan
        n_ind = len(outcomes) - len(per_det)
        det = per_det
    n_det = len(det)
    p = paired / n_det if n_det else math.nan
    located = [o for o in flat if o.paired_point is not None]
    return SweepRow(
        N=N,
        trials=len(outcomes),
        paired_frac=p,
        indeterminate_frac=n_ind / len(outcomes),
        median_Ndist=_median([N * o.distance_to_xi for o in located]),
        median_Nargerr=_median([N * abs(o.arg_error) for o in located]),
        r=config.r,
        measure=config.measure,
        xi=_fmt_complex(config.xi),
        paired_se=math.sqrt(p * (1 - p) / n_det) if n_det else math.nan,
        zero_inside_frac=sum(o.count_inside == 0 for o in per_det) / max(len(per_det), 1),
        multi_inside_frac=sum((o.count_inside or 0) >= 2 for o in per_det) / max(len(per_det), 1),
        median_N2offset=_median([N * N * o.offset_from_prediction for o in located]),
        per_xi_fail_frac=per_fail,
        failures=n_det - paired,
        determinate=n_det,
    )


def _trial_record(mode: str, outcome) -> dict:
    if mode == "multi":
        return {"mode": "multi", "all_paired": outcome.all_paired,
                "per_xi": [o.to_record() for o in outcome.per_xi]}
    rec = outcome.to_record()
    rec["mode"] = "single"
    return rec


def _outcome_from_record(rec: dict):
    if rec.get("mode") == "multi":
        return MultiTrialOutcome(bool(rec["all_paired"]), [TrialOutcome.from_record(r) for r in rec["per_xi"]])
    return TrialOutcome.from_record(rec)


def summarize(outcomes_by_N: dict, config: ExperimentConfig, mode: str) -> SweepSummary:
    rows = [aggregate_rows(N, outs, config, mode) for N, outs in sorted(outcomes_by_N.items())]
    fit = fit_exponent([(r.N, r.failures / r.determinate, r.paired_se, r.determinate) for r in rows if r.determinate],
                       seed=config.seed)
    return SweepSummary(rows, fit, mode)


def run_sweep(config: ExperimentConfig, write: bool = True, progress=None) -> SweepSummary:
    """All trials for every ``N``; writes ``trials.jsonl`` and ``summary.csv`` under ``config.out``."""
    config.validate(sweep=True)
    mu = config.make_measure()
    mode = config.mode
    by_N = {}
    for N in config.N_list:
        if mode == "single":
            pred = predict(mu, config.xi, N, config.r, margin=config.margin)

            def one(i, N=N, pred=pred):
                return run_single_trial(mu, pred.xi, N, config.r, config.seed, i, pred)
        else:
            Xi = multi_points(config, mu, N)
            preds = multi_predictions(mu, Xi, N, config.r, config.epsilon, config.alpha, config.margin)

            def one(i, N=N, Xi=Xi, preds=preds):
                return run_multi_trial(mu, Xi, N, config.r, config.epsilon, config.seed, i,
                                       config.alpha, preds)
        by_N[N] = _map_ordered(one, range(config.trials), config.threads)
        if progress:
            progress(N)
    summary = summarize(by_N, config, mode)
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "trials.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for N in config.N_list:
                for o in by_N[N]:
                    fh.write(json.dumps(_trial_record(mode, o), sort_keys=True) + "\n")
        (out / "summary.csv").write_text(summary.to_csv(), encoding="utf-8")
        (out / "config.json").write_text(json.dumps(_config_record(config), sort_keys=True, indent=1) + "\n",
                                         encoding="utf-8")
    return summary


def _config_record(config: ExperimentConfig) -> dict:
    rec = asdict(config)
    rec["xi"] = _fmt_complex(config.xi)
    rec.pop("threads")
    rec.pop("out")
    return rec


def load_trials(path: str | os.PathLike) -> dict:
    """Per-``N`` ordered outcomes from a ``trials.jsonl`` file."""
    by_N = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                o = _outcome_from_record(json.loads(line))
                N = o.per_xi[0].N if isinstance(o, MultiTrialOutcome) else o.N
                by_N.setdefault(N, []).append(o)
    return by_N


def resummarize(directory: str | os.PathLike) -> SweepSummary:
    """Rebuild the summary from stored trial records and the stored config."""
    directory = Path(directory)
    rec = json.loads((directory / "config.json").read_text(encoding="utf-8"))
    rec["xi"] = as_chart_point(rec["xi"])
    config = ExperimentConfig(**rec)
    return summarize(load_trials(directory / "trials.jsonl"), config, config.mode)


# ---------------------------------------------------------------- lemma statistics

@dataclass(frozen=True)
class LemmaRow:
    N: int
    trials: int
    small_ball_radius: float
    small_ball_prob: float
    small_ball_se: float
    mid_ball_radius: float
    mid_ball_mean: float
    mid_ball_se: float
    binomial_mean: float
    large_count_prob: float
    second_moment_prob: float
    second_moment_se: float


@dataclass
class LemmaSummary:
    rows: list
    small_ball_fit: ExponentFit | None
    second_moment_fit: ExponentFit | None

    def to_csv(self) -> str:
        cols = [f.name for f in fields(LemmaRow)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows:
            w.writerow([repr(getattr(row, c)) if isinstance(getattr(row, c), float) else getattr(row, c)
                        for c in cols])
        return buf.getvalue()


def lemma_trial(mu: ZeroMeasure, xi: complex, w_xi: complex, N: int, config: ExperimentConfig, i: int):
    """Counts and second-moment event for one draw around the predicted point ``w_xi``."""
    sample = ConditionedSample.draw(mu, [xi], N, trial_rng(config.seed, N, i), seed=config.seed, trial_index=i)
    small = count_zeros_in_ball(sample, w_xi, N ** (-1 + config.eta), include_pinned=False)
    mid = count_zeros_in_ball(sample, w_xi, N ** (-0.5 + 0.5 * config.delta), include_pinned=False)
    ev = second_moment_event(sample, w_xi, config.eta)
    return small, mid, ev.occurred


def run_lemmas(config: ExperimentConfig, write: bool = True) -> LemmaSummary:
    config.validate(sweep=True)
    mu = config.make_measure()
    rows = []
    for N in config.N_list:
        pred = predict(mu, config.xi, N, config.r, margin=config.margin)
        w_xi = pred.w_exact
        res = _map_ordered(lambda i: lemma_trial(mu, pred.xi, w_xi, N, config, i), range(config.trials),
                           config.threads)
        small = np.array([x[0] for x in res])
        mid = np.array([x[1] for x in res], dtype=float)
        ev = np.array([x[2] for x in res], dtype=float)
        t = len(res)
        ps = float(np.mean(small >= 1))
        pa = float(np.mean(ev))
        R_mid = N ** (-0.5 + 0.5 * config.delta)
        rows.append(LemmaRow(
            N=N,
            trials=t,
            small_ball_radius=N ** (-1 + config.eta),
            small_ball_prob=ps,
            small_ball_se=math.sqrt(ps * (1 - ps) / t),
            mid_ball_radius=R_mid,
            mid_ball_mean=float(np.mean(mid)),
            mid_ball_se=float(np.std(mid, ddof=1) / math.sqrt(t)),
            binomial_mean=(N - 1) * mu.ball_mass(w_xi, R_mid),
            large_count_prob=float(np.mean(mid >= N ** (config.delta + config.kappa))),
            second_moment_prob=pa,
            second_moment_se=math.sqrt(pa * (1 - pa) / t),
        ))
    summary = LemmaSummary(
        rows,
        fit_exponent([(r.N, r.small_ball_prob, r.small_ball_se, r.trials) for r in rows], seed=config.seed),
        fit_exponent([(r.N, r.second_moment_prob, r.second_moment_se, r.trials) for r in rows], seed=config.seed),
    )
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "lemmas.csv").write_text(summary.to_csv(), encoding="utf-8")
    return summary


# ---------------------------------------------------------------- exponent fits

def _wls(x, y, wts):
    W = np.sum(wts)
    xm = np.sum(wts * x) / W
    ym = np.sum(wts * y) / W
    sxx = np.sum(wts * (x - xm) ** 2)
    slope = np.sum(wts * (x - xm) * (y - ym)) / sxx
    return float(slope), float(ym - slope * xm)


def fit_exponent(rows, n_boot: int = 1000, seed: int = 0) -> ExponentFit | None:
    """Weighted least squares of ``log rate`` on ``log N``.

    ``rows`` holds ``(N, rate, se)`` or ``(N, rate, se, trials)``. Rows with a
    zero rate are excluded (and listed). Weights are ``(rate/se)^2`` when every
    standard error is positive, else uniform. With trial counts the confidence
    interval comes from resampling each row's Bernoulli outcomes; otherwise
    from Gaussian perturbation of the rates by their standard errors.
    All-zero rates give a ``below_resolution`` fit; fewer than 3 usable rows
    give a nan slope with an explanatory note.
    """
    rows = [tuple(r) for r in rows]
    used = [r for r in rows if r[1] > 0]
    excluded = [int(r[0]) for r in rows if not r[1] > 0]
    if rows and not used:
        return ExponentFit(math.nan, math.nan, (math.nan, math.nan), 0, excluded, True, "below resolution")
    if len(used) < 3:
        return ExponentFit(math.nan, math.nan, (math.nan, math.nan), len(used), excluded, False,
                           "fewer than 3 rows with nonzero rate")
    N = np.array([r[0] for r in used], dtype=float)
    rate = np.array([r[1] for r in used], dtype=float)
    se = np.array([r[2] if len(r) > 2 else 0.0 for r in used], dtype=float)
    trials = [r[3] if len(r) > 3 else None for r in used]
    x = np.log(N)

    weighted = bool(np.all(se > 0))

    def weights(rt, s):
        # resamples use the same weighting scheme as the point estimate
        if weighted and np.all(s > 0):
            return (rt / s) ** 2
        return np.ones_like(rt)

    slope, intercept = _wls(x, np.log(rate), weights(rate, se))
    rng = np.random.default_rng(seed)
    boots = []
    have_trials = all(t is not None for t in trials)
    for _ in range(n_boot):
        if have_trials:
            t = np.array(trials, dtype=float)
            rb = rng.binomial(t.astype(np.int64), rate) / t
            sb = np.sqrt(rb * (1 - rb) / t)
        elif np.any(se > 0):
            rb = rate + se * rng.standard_normal(rate.size)
            sb = se
        else:
            break
        ok = rb > 0
        if np.count_nonzero(ok) < 3:
            continue
        wb = weights(rb[ok], sb[ok])
        boots.append(_wls(x[ok], np.log(rb[ok]), wb)[0])
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))) if boots else (slope, slope)
    return ExponentFit(slope, intercept, ci, len(used), excluded)
