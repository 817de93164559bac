"""Evaluation metrics: coefficient error and pairwise prediction quality on test orders."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .data import TOP_L, FeatureTensor, MixtureParams, Profile, as_mixture
from .errors import DimensionError


def param_mse(beta_hat, beta_0) -> float:
    """``||beta_hat - beta_0||^2 / d``."""
    a = np.asarray(beta_hat, dtype=float).reshape(-1)
    b = np.asarray(beta_0, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def _pairs(profile: Profile):
    """Per-order (winner, loser) pairs determined by the order, as flat arrays.

    For top-l orders these are ranked-vs-ranked and ranked-vs-unranked pairs;
    for l-way orders only pairs inside the ranked subset.
    """
    m = profile.m
    a, b = np.triu_indices(m, k=1)
    lengths = profile.lengths[:, None]
    if profile.kind == TOP_L:
        keep = a[None, :] < lengths
    else:
        keep = b[None, :] < lengths
    rows = np.broadcast_to(np.arange(len(profile))[:, None], keep.shape)[keep]
    win = profile.ranked[:, a][keep]
    lose = profile.ranked[:, b][keep]
    return rows, win, lose, keep.sum(axis=1)


def mixture_pairwise_probs(params, features: FeatureTensor, profile: Profile):
    """``sum_r alpha_r expit(beta_r . (x_win - x_lose))`` for every determined pair."""
    params = as_mixture(params)
    profile.check_against(features)
    if params.d != features.d:
        raise DimensionError(f"parameters have d={params.d} but features have d={features.d}")
    rows, win, lose, counts = _pairs(profile)
    agents = profile.agents[rows]
    D = features.values[agents, win] - features.values[agents, lose]
    probs = expit(D @ params.betas.T) @ params.alpha
    return rows, probs, counts


def _per_order_mean(rows, values, counts, n) -> np.ndarray:
    sums = np.bincount(rows, weights=values, minlength=n)
    return sums / counts


def pairwise_accuracy(params: MixtureParams, features: FeatureTensor, test_profile: Profile) -> float:
    """Share of determined pairs whose observed winner has model probability strictly above 1/2.

    Averaged first within each order, then over orders. Ties count as errors.
    """
    if len(test_profile) == 0:
        raise DimensionError("empty test profile")
    rows, probs, counts = mixture_pairwise_probs(params, features, test_profile)
    hits = (probs > 0.5).astype(float)
    return float(_per_order_mean(rows, hits, counts, len(test_profile)).mean())


def pairwise_mse(params: MixtureParams, features: FeatureTensor, test_profile: Profile) -> float:
    """Mean of ``(1 - Pr(winner beats loser))^2`` over determined pairs, averaged per order."""
    if len(test_profile) == 0:
        raise DimensionError("empty test profile")
    rows, probs, counts = mixture_pairwise_probs(params, features, test_profile)
    return float(_per_order_mean(rows, (1.0 - probs) ** 2, counts, len(test_profile)).mean())
