"""Command-line entry point ``plxrank``.

Every subcommand prints a short human summary and, with ``--report PATH``
(``sweep`` uses ``--out``), writes a CSV with the columns

    n,trial,estimator,metric,value,ci_halfwidth,seconds

Exit status is 0 on success and 1 with a one-line ``error:`` message otherwise.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .data import TOP_L, MixtureParams
from .errors import PlxError
from .identifiability import Verdict, check_assumption1, check_bilinear, check_mixture, check_plx
from .metrics import pairwise_accuracy, pairwise_mse, param_mse
from .mixture import EmOptions, align_components, direct_mle, em_fit
from .mle import estimate_phi, fit_beta, rmse_bound, sample_complexity
from .model import PlDesign
from .optim import OptimizerOptions
from .rbcml import WeightingFunction, fit_rbcml
from .synth import ExperimentConfig, gen_synthetic, parse_l_policy
from .sweep import run_sweep

REPORT_HELP = "CSV columns: n,trial,estimator,metric,value,ci_halfwidth,seconds"


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _bounds(text: str) -> tuple[float, float]:
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError("bounds are given as low,high")
    return v


def _opts(args) -> OptimizerOptions:
    return OptimizerOptions(max_iters=args.max_iters, g_tol=args.tol)


def _load_features(args):
    if args.features:
        return io.load_features(args.features)
    if args.y and args.z:
        return io.load_bilinear(args.y, args.z)
    raise PlxError("give --features, or both --y and --z")


def _load_data(args):
    features = _load_features(args)
    profile = io.load_profile(args.profile, n_agents=features.n)
    return features, profile


def _row(n, estimator, metric, value, seconds=""):
    return dict(n=n, trial="", estimator=estimator, metric=metric, value=value, ci_halfwidth="", seconds=seconds)


def _emit(args, rows):
    for r in rows:
        print(f"{r['estimator']} {r['metric']} = {r['value']}")
    if getattr(args, "report", None):
        io.write_report(args.report, rows)


# ---------------------------------------------------------------- subcommands


def cmd_gen(args) -> int:
    cfg = ExperimentConfig(
        m=args.m,
        d=args.d,
        n=args.n,
        k=args.k,
        feature_bounds=args.feature_bounds,
        beta_bounds=args.beta_bounds,
        seed=args.seed,
        **parse_l_policy(args.l_policy),
    )
    features, truth, profile = gen_synthetic(cfg, np.random.default_rng(args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.save_features(out / "features.txt", features)
    io.save_profile(out / "profile.txt", profile)
    io.save_params(out / "truth.txt", truth, m=cfg.m)
    print(f"wrote {out / 'features.txt'}, {out / 'profile.txt'}, {out / 'truth.txt'}")
    return 0


def cmd_fit(args) -> int:
    features, profile = _load_data(args)
    t0 = time.perf_counter()
    rep = fit_beta(profile, features, _opts(args), delta=args.delta)
    secs = time.perf_counter() - t0
    io.save_params(args.out, MixtureParams.single(rep.beta_hat, rep.phi_hat), m=features.m)
    n = len(profile)
    rows = [
        _row(n, "mle", "log_likelihood", rep.log_likelihood, secs),
        _row(n, "mle", "iterations", rep.iterations),
        _row(n, "mle", "converged", int(rep.converged)),
        _row(n, "mle", "lambda1", rep.lambda1_at_estimate),
        _row(n, "mle", "full_row_rank", int(rep.full_row_rank)),
        _row(n, "mle", "assumption1", int(rep.assumption1_ok)),
    ]
    if rep.rmse_bound is not None:
        rows.append(_row(n, "mle", "rmse_bound_approx", rep.rmse_bound))
    _emit(args, rows)
    return 0


def cmd_fit_mixture(args) -> int:
    features, profile = _load_data(args)
    t0 = time.perf_counter()
    if args.method == "em":
        rep = em_fit(
            profile,
            features,
            EmOptions(k=args.k, iterations=args.iterations, restarts=args.restarts, seed=args.seed, inner=_opts(args)),
        )
        params, ll = rep.params, rep.log_likelihood
        extra = [_row(len(profile), "em", "iterations", rep.iterations), _row(len(profile), "em", "collapsed", len(rep.collapsed))]
    else:
        rep = direct_mle(profile, features, args.k, _opts(args), rng=args.seed)
        params, ll = rep.params, rep.log_likelihood
        extra = [_row(len(profile), "direct", "converged", int(rep.converged))]
    secs = time.perf_counter() - t0
    io.save_params(args.out, params, m=features.m)
    _emit(args, [_row(len(profile), args.method, "log_likelihood", ll, secs)] + extra)
    return 0


def cmd_fit_rbcml(args) -> int:
    features, profile = _load_data(args)
    w = WeightingFunction.parse(args.weighting)
    t0 = time.perf_counter()
    rep = fit_rbcml(profile, features, args.family, w, _opts(args))
    secs = time.perf_counter() - t0
    io.save_params(args.out, MixtureParams.single(rep.beta_hat), m=features.m)
    name = f"rbcml-{args.weighting}"
    n = len(profile)
    _emit(
        args,
        [
            _row(n, name, "composite_ll", rep.objective, secs),
            _row(n, name, "iterations", rep.iterations),
            _row(n, name, "converged", int(rep.converged)),
        ],
    )
    return 0


def cmd_check_id(args) -> int:
    if args.y and args.z and not args.features:
        Y, Z = io.load_matrix(args.y), io.load_matrix(args.z)
        report = check_bilinear(Y, Z, tol=args.rank_tol)
        features = io.load_bilinear(args.y, args.z)
    else:
        features = _load_features(args)
        report = check_plx(features, tol=args.rank_tol)
    profile = io.load_profile(args.profile, n_agents=features.n) if args.profile else None
    if args.k > 1:
        phi = estimate_phi(profile) if profile is not None and profile.kind == TOP_L else None
        report = check_mixture(features, args.k, phi=phi, tol=args.rank_tol)
    print(report.verdict)
    print(f"rank {report.rank}, full row rank {report.full_row_rank}: {report.notes}")
    rows = [
        _row(features.n, "check-id", "rank", report.rank),
        _row(features.n, "check-id", "full_row_rank", int(report.full_row_rank)),
        _row(features.n, "check-id", "identifiable", int(report.verdict in (Verdict.IDENTIFIABLE, Verdict.CONDITIONALLY_IDENTIFIABLE))),
    ]
    if profile is not None:
        a1 = check_assumption1(features, profile)
        print(f"sign-diversity condition: {'holds' if a1.holds else 'fails for features ' + str(a1.missing)}")
        rows.append(_row(len(profile), "check-id", "assumption1", int(a1.holds)))
    if args.report:
        io.write_report(args.report, rows)
    return 0


def cmd_bound(args) -> int:
    features, profile = _load_data(args)
    params = io.load_params(args.params)
    b = rmse_bound(features, profile, params.betas[0], args.delta)
    rows = [_row(len(profile), "bound", "rmse_bound_approx", b)]
    if args.eps is not None:
        lam = float(np.linalg.eigvalsh(-PlDesign(profile, features).hessian(params.betas[0]) / len(profile))[0])
        n_req = sample_complexity(features.m, features.d, features.spread, lam, args.eps, args.delta)
        rows.append(_row(len(profile), "bound", "sample_complexity", n_req))
    _emit(args, rows)
    return 0


def cmd_eval(args) -> int:
    features, profile = _load_data(args)
    params = io.load_params(args.params)
    n = len(profile)
    rows = [
        _row(n, "eval", "pairwise_accuracy", pairwise_accuracy(params, features, profile)),
        _row(n, "eval", "pairwise_mse", pairwise_mse(params, features, profile)),
    ]
    if args.truth:
        truth = io.load_params(args.truth)
        if truth.k == 1 and params.k == 1:
            mse = param_mse(params.betas[0], truth.betas[0])
        else:
            mse = float(align_components(params, truth)[1].mean())
        rows.append(_row(n, "eval", "mse", mse))
    _emit(args, rows)
    return 0


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig(
        m=args.m,
        d=args.d,
        n=args.n,
        k=args.k,
        feature_bounds=args.feature_bounds,
        beta_bounds=args.beta_bounds,
        trials=args.trials,
        seed=args.seed,
        estimators=tuple(args.estimator.split(",")),
        family=args.family,
        n_test=args.n_test,
        em_iterations=args.iterations,
        max_iters=args.max_iters,
        g_tol=args.tol,
        timing=args.timing,
        **parse_l_policy(args.l_policy),
    )
    rows, summary = run_sweep(cfg, jobs=args.jobs)
    io.write_report(args.out, (rows if args.per_trial else []) + summary)
    for r in summary:
        print(f"n={r['n']} {r['estimator']} {r['metric']} = {r['value']:.6g} +/- {r['ci_halfwidth']:.3g}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plxrank", description="Plackett-Luce with features: fitting, checks and experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, profile=True):
        sp.add_argument("--features", help="features file (header m= d= n=)")
        sp.add_argument("--y", help="agent feature matrix file (rows= cols=), lifted with --z")
        sp.add_argument("--z", help="alternative feature matrix file (rows= cols=)")
        if profile:
            sp.add_argument("--profile", required=True, help="profile file (header kind= m=)")

    def opt_args(sp):
        sp.add_argument("--tol", type=float, default=1e-8, help="gradient tolerance on max|grad|/n")
        sp.add_argument("--max-iters", type=int, default=500)

    def report_arg(sp):
        sp.add_argument("--report", help=REPORT_HELP)

    def synth_args(sp):
        sp.add_argument("--m", type=int, default=10)
        sp.add_argument("--d", type=int, default=10)
        sp.add_argument("--k", type=int, default=1)
        sp.add_argument("--l-policy", default="full", help="full | fixed:<l> | phi:<p1,...> | lway:<p>")
        sp.add_argument("--feature-bounds", type=_bounds, default=(-1.0, 1.0), help="low,high")
        sp.add_argument("--beta-bounds", type=_bounds, default=(-2.0, 2.0), help="low,high")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("gen", help="generate features, profile and ground truth")
    synth_args(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("fit", help="maximum likelihood for a single model", epilog=REPORT_HELP)
    data_args(sp)
    opt_args(sp)
    sp.add_argument("--delta", type=float, help="also report the approximate error bound at confidence 1-delta")
    sp.add_argument("--out", required=True, help="parameter file to write")
    report_arg(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("fit-mixture", help="k-component mixture by EM or direct ascent", epilog=REPORT_HELP)
    data_args(sp)
    opt_args(sp)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--method", choices=("em", "direct"), default="em")
    sp.add_argument("--iterations", type=int, default=50)
    sp.add_argument("--restarts", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="parameter file to write")
    report_arg(sp)
    sp.set_defaults(func=cmd_fit_mixture)

    sp = sub.add_parser("fit-rbcml", help="rank breaking with composite likelihood", epilog=REPORT_HELP)
    data_args(sp)
    opt_args(sp)
    sp.add_argument("--family", choices=("logistic", "probit"), default="logistic")
    sp.add_argument("--weighting", default="harmonic", help="uniform | harmonic | custom:<file with lines 'l w'>")
    sp.add_argument("--out", required=True, help="parameter file to write")
    report_arg(sp)
    sp.set_defaults(func=cmd_fit_rbcml)

    sp = sub.add_parser("check-id", help="rank-based identifiability verdict", epilog=REPORT_HELP)
    data_args(sp, profile=False)
    sp.add_argument("--profile", help="optional profile for the length distribution and sign diversity")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--rank-tol", type=float, default=None, help="relative singular value cutoff (default machine eps)")
    report_arg(sp)
    sp.set_defaults(func=cmd_check_id)

    sp = sub.add_parser("bound", help="approximate error bound and sample complexity", epilog=REPORT_HELP)
    data_args(sp)
    sp.add_argument("--params", required=True, help="parameter file with the estimate")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--eps", type=float, help="target error for the sample-complexity figure")
    report_arg(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("eval", help="pairwise accuracy, pairwise MSE and optional coefficient MSE", epilog=REPORT_HELP)
    data_args(sp)
    sp.add_argument("--params", required=True)
    sp.add_argument("--truth", help="ground-truth parameter file for coefficient MSE")
    report_arg(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", help="seeded n-sweep with trial averaging", epilog=REPORT_HELP)
    synth_args(sp)
    opt_args(sp)
    sp.add_argument("--n", type=_ints, default=(200, 500, 1000, 2000), help="comma-separated sample sizes")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--estimator", default="mle", help="comma-separated: mle, em, direct, rbcml-<weighting>")
    sp.add_argument("--family", choices=("logistic", "probit"), default="logistic")
    sp.add_argument("--n-test", type=int, default=0, help="held-out agents per trial")
    sp.add_argument("--iterations", type=int, default=50, help="EM iterations")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes; results do not depend on it")
    sp.add_argument("--timing", action="store_true", help="fill the seconds column (makes output run-dependent)")
    sp.add_argument("--per-trial", action="store_true", help="also write one row per trial")
    sp.add_argument("--out", required=True, help="CSV report path")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PlxError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
