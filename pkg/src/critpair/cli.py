"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment
from .experiment import ConfigError, ExperimentConfig, INDETERMINATE_LIMIT, load_config
from .field import ConditionedSample
from .pairing import ExceptionalPointError, predict, trial_rng
from .plot import emit_plot
from .solver import all_critical_points
from .sphere import as_chart_point

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INDETERMINATE = 3


def _add_common(p: argparse.ArgumentParser, sweep: bool = True):
    p.add_argument("--config", help="INI config file ([experiment] and [measure] sections)")
    p.add_argument("--measure", help="measure id, e.g. uniform, gaussian, cap(radius=0.5), tilted(strength=0.5)")
    p.add_argument("--xi", help="pinned zero in the chart, e.g. 1, 0.5+0.5j, OMEGA")
    p.add_argument("--N", nargs="+", type=int, help="degree(s)")
    p.add_argument("--r", type=float, help="contour radius factor (geodesic radius r/N)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    if sweep:
        p.add_argument("--trials", type=int, help="trials per N")
        p.add_argument("--eta", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--threads", type=int, help=f"worker threads (env {experiment.THREADS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critpair", description="Pairing of zeros and critical points "
                                     "of random polynomials on the sphere.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo", help="draw one sample, solve for all critical points, write an SVG")
    _add_common(p, sweep=False)
    p.add_argument("--zeros", nargs="+", help="explicit zeros instead of a random draw")

    for name, text in (("pair-sweep", "single pinned zero pairing sweep"),
                       ("multi-sweep", "simultaneous pairing of many pinned zeros"),
                       ("lemmas", "zero-count and second-moment statistics")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        if name == "multi-sweep":
            p.add_argument("--count", type=int, help="number of pinned zeros (default floor(N^alpha))")
            p.add_argument("--layout", choices=["circle", "random"])
        if name != "lemmas":
            p.add_argument("--plot", action="store_true", help="also write failure_rate.svg")

    p = sub.add_parser("predict", help="print the paired-point prediction")
    _add_common(p, sweep=False)
    p.add_argument("--literal", action="store_true", help="also print the alternative argument form")

    p = sub.add_parser("fit", help="re-aggregate and re-fit stored sweep results")
    p.add_argument("directory", help="directory holding trials.jsonl and config.json")
    return parser


def _config(args, **extra) -> ExperimentConfig:
    over = {k: getattr(args, k, None) for k in
            ("measure", "xi", "r", "seed", "out", "trials", "eta", "alpha", "epsilon", "threads")}
    if getattr(args, "N", None):
        over["N_list"] = list(args.N)
    over.update(extra)
    cfg = load_config(args.config, **over)
    try:
        cfg.make_measure()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _print_rows(summary):
    cols = ["N", "trials", "paired_frac", "paired_se", "indeterminate_frac", "zero_inside_frac",
            "multi_inside_frac", "median_Ndist", "median_Nargerr"]
    print("  ".join(f"{c:>12}" for c in cols))
    for row in summary.rows:
        print("  ".join(f"{getattr(row, c):>12.4g}" if isinstance(getattr(row, c), float)
                        else f"{getattr(row, c):>12}" for c in cols))
    fit = summary.fit
    if fit is None or fit.note:
        print(f"failure slope: {fit.note if fit else 'no data'}")
    else:
        flag = f" (excluded zero-failure N: {fit.excluded})" if fit.excluded else ""
        print(f"failure slope: {fit.slope:.3f}  95% CI [{fit.ci[0]:.3f}, {fit.ci[1]:.3f}]{flag}")


def cmd_demo(args) -> int:
    cfg = _config(args)
    mu = cfg.make_measure()
    N = args.N[0] if args.N else 30
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.zeros:
        sample = ConditionedSample.from_zeros([as_chart_point(z) for z in args.zeros])
        preds = []
    else:
        sample = ConditionedSample.draw(mu, [cfg.xi], N, trial_rng(cfg.seed, N, 0), seed=cfg.seed, trial_index=0)
        preds = [predict(mu, cfg.xi, N, cfg.r, margin=cfg.margin)]
    crit = all_critical_points(sample)
    path = emit_plot(sample, out / "demo.svg", critical=crit.points, degree_drop=crit.degree_drop,
                     predicted=[p.w_exact for p in preds], contours=[p.contour for p in preds])
    (out / "demo_sample.json").write_text(sample.to_json() + "\n", encoding="utf-8")
    print(f"{sample.N} zeros, {len(crit)} finite critical points, degree_drop={crit.degree_drop}")
    for p in preds:
        print(f"predicted paired point {p.w_exact!r}")
    print(f"wrote {path}")
    return EXIT_OK


def _sweep_exit(summary) -> int:
    worst = max(r.indeterminate_frac for r in summary.rows)
    if worst > INDETERMINATE_LIMIT:
        print(f"indeterminate fraction {worst:.3f} exceeds {INDETERMINATE_LIMIT}", file=sys.stderr)
        return EXIT_INDETERMINATE
    return EXIT_OK


def cmd_sweep(args, mode: str) -> int:
    extra = {"mode": mode}
    if mode == "multi":
        extra["multi_count"] = args.count
        extra["multi_layout"] = args.layout
    cfg = _config(args, **extra)
    summary = experiment.run_sweep(cfg)
    _print_rows(summary)
    if args.plot:
        emit_plot(summary, Path(cfg.out) / "failure_rate.svg")
    print(f"wrote {cfg.out}/trials.jsonl and {cfg.out}/summary.csv")
    return _sweep_exit(summary)


def cmd_lemmas(args) -> int:
    cfg = _config(args)
    summary = experiment.run_lemmas(cfg)
    print(summary.to_csv(), end="")
    for name, fit in (("small-ball", summary.small_ball_fit), ("second-moment", summary.second_moment_fit)):
        if fit is None or fit.note:
            print(f"{name} slope: {fit.note if fit else 'no data'}")
        else:
            print(f"{name} slope: {fit.slope:.3f}  95% CI [{fit.ci[0]:.3f}, {fit.ci[1]:.3f}]")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    mu = cfg.make_measure()
    out = {}
    for N in (args.N or cfg.N_list):
        p = predict(mu, cfg.xi, N, cfg.r, margin=cfg.margin)
        rec = {
            "xi": repr(p.xi),
            "w_first_order": repr(p.w_first_order),
            "w_exact": repr(p.w_exact),
            "predicted_arg": p.predicted_arg,
            "contour_center": repr(p.contour.center),
            "contour_chart_radius": p.contour.chart_radius,
        }
        if args.literal:
            rec["literal_arg"] = p.literal_arg
        out[str(N)] = rec
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_fit(args) -> int:
    summary = experiment.resummarize(args.directory)
    _print_rows(summary)
    return _sweep_exit(summary)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "demo":
            return cmd_demo(args)
        if args.command == "pair-sweep":
            return cmd_sweep(args, "single")
        if args.command == "multi-sweep":
            return cmd_sweep(args, "multi")
        if args.command == "lemmas":
            return cmd_lemmas(args)
        if args.command == "predict":
            return cmd_predict(args)
        return cmd_fit(args)
    except (ConfigError, ExceptionalPointError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
