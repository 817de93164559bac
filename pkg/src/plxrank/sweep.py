"""Seeded n-sweeps: per-trial fits, summary rows with t-based 95% half-widths.

Every (n, trial) pair gets its own random stream derived from the base seed,
so results do not depend on the order or the process that runs the trials.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
from scipy import stats

from .data import TOP_L, MixtureParams
from .errors import ParameterError
from .metrics import pairwise_accuracy, param_mse
from .mixture import EmOptions, align_components, direct_mle, em_fit, mixture_log_likelihood, random_init
from .mle import fit_beta
from .optim import OptimizerOptions
from .rbcml import WeightingFunction, fit_rbcml
from .synth import ExperimentConfig, draw_features, draw_truth, sample_orders

ESTIMATORS = ("mle", "em", "direct", "rbcml-uniform", "rbcml-harmonic")


def check_estimator(name: str) -> None:
    if name in ("mle", "em", "direct"):
        return
    if name.startswith("rbcml-"):
        WeightingFunction.parse(name[len("rbcml-"):])
        return
    raise ParameterError(f"unknown estimator {name!r}; expected mle, em, direct or rbcml-<weighting>")


def ci_halfwidth(values) -> float:
    """``t_{0.975, T-1} * s / sqrt(T)`` with the sample standard deviation; NaN for one value."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float("nan")
    return float(stats.t.ppf(0.975, v.size - 1) * v.std(ddof=1) / np.sqrt(v.size))


def trial_rng(seed: int, n: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(trial)]))


def trial_data(config: ExperimentConfig, n: int, trial: int):
    """Features for ``n + n_test`` agents, the truth, training and held-out profiles, and an init draw."""
    rng = trial_rng(config.seed, n, trial)
    features = draw_features(config, n + config.n_test, rng)
    truth = draw_truth(config, rng)
    train = sample_orders(config, features, truth, np.arange(n), rng)
    test = sample_orders(config, features, truth, np.arange(n, n + config.n_test), rng) if config.n_test else None
    init = random_init(config.k, config.d, rng)
    return features, truth, train, test, init, rng


def _fit(name: str, config: ExperimentConfig, features, train, init, rng) -> MixtureParams:
    opts = OptimizerOptions(max_iters=config.max_iters, g_tol=config.g_tol)
    if name == "mle":
        return MixtureParams.single(fit_beta(train, features, opts).beta_hat)
    if name == "em":
        em = EmOptions(k=config.k, iterations=config.em_iterations, inner=opts, init=init, seed=int(rng.integers(2**31)))
        return em_fit(train, features, em).params
    if name == "direct":
        return direct_mle(train, features, config.k, replace(opts, max_iters=max(opts.max_iters, 1000)), init=init).params
    w = WeightingFunction.parse(name[len("rbcml-"):])
    return MixtureParams.single(fit_rbcml(train, features, config.family, w, opts).beta_hat)


def run_trial(config: ExperimentConfig, n: int, trial: int) -> list[dict]:
    """Fit every configured estimator on one dataset; one row per (estimator, metric)."""
    features, truth, train, test, init, rng = trial_data(config, n, trial)
    rows = []
    for name in config.estimators:
        t0 = time.perf_counter()
        est = _fit(name, config, features, train, init, rng)
        secs = time.perf_counter() - t0 if config.timing else ""
        if truth.k == 1 and est.k == 1:
            mse = param_mse(est.betas[0], truth.betas[0])
        else:
            mse = float(align_components(est, truth)[1].mean())
        metrics = [("mse", mse)]
        if test is not None:
            if test.kind == TOP_L:
                ll = mixture_log_likelihood(test, features, est, include_phi=False) / len(test)
                metrics.append(("heldout_ll", ll))
            metrics.append(("pairwise_accuracy", pairwise_accuracy(est, features, test)))
        for metric, value in metrics:
            rows.append(dict(n=n, trial=trial, estimator=name, metric=metric, value=float(value), ci_halfwidth="", seconds=secs))
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and 95% half-width per (n, estimator, metric); ``trial`` is ``mean``."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["n"], r["estimator"], r["metric"]), []).append(r)
    out = []
    for (n, est, metric), rs in groups.items():
        vals = [r["value"] for r in rs]
        secs = [r["seconds"] for r in rs if r["seconds"] != ""]
        out.append(
            dict(
                n=n,
                trial="mean",
                estimator=est,
                metric=metric,
                value=float(np.mean(vals)),
                ci_halfwidth=ci_halfwidth(vals),
                seconds=float(np.mean(secs)) if secs else "",
            )
        )
    return out


def _run_cell(args):
    config, n, trial = args
    return run_trial(config, n, trial)


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> tuple[list[dict], list[dict]]:
    """Per-trial rows and summary rows for every n of the config."""
    for name in config.estimators:
        check_estimator(name)
    cells = [(config, n, t) for n in config.n for t in range(config.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    else:
        results = [_run_cell(c) for c in cells]
    rows = [r for rs in results for r in rs]
    return rows, summarize(rows)
