"""Synthetic data generation for seeded Monte-Carlo experiments."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import FeatureTensor, MixtureParams, Profile
from .errors import ParameterError
from .model import sample_lway_profile, sample_profile

FULL = "full"
FIXED = "fixed"
PHI = "phi"
LWAY = "lway"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to regenerate an experiment from its seed.

    ``l_policy`` is ``full`` (complete rankings), ``fixed`` (every order has
    length ``l``), ``phi`` (lengths drawn from ``phi``) or ``lway`` (each
    alternative kept with probability ``p``).
    """

    m: int = 10
    d: int = 10
    n: tuple[int, ...] = (200, 500, 1000, 2000)
    k: int = 1
    l_policy: str = FULL
    l: int | None = None
    phi: tuple[float, ...] | None = None
    p: float = 0.5
    feature_bounds: tuple[float, float] = (-1.0, 1.0)
    beta_bounds: tuple[float, float] = (-2.0, 2.0)
    trials: int = 200
    seed: int = 0
    estimators: tuple[str, ...] = ("mle",)
    family: str = "logistic"
    n_test: int = 0
    em_iterations: int = 50
    max_iters: int = 500
    g_tol: float = 1e-8
    timing: bool = False

    def __post_init__(self):
        n = (self.n,) if isinstance(self.n, (int, np.integer)) else tuple(int(v) for v in self.n)
        object.__setattr__(self, "n", n)
        if self.m < 2 or self.d < 1 or self.k < 1 or any(v < 1 for v in n) or not n:
            raise ParameterError("need m >= 2, d >= 1, k >= 1 and every n >= 1")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        for name in ("feature_bounds", "beta_bounds"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ParameterError(f"{name} needs low < high, got ({lo}, {hi})")
        if self.l_policy not in (FULL, FIXED, PHI, LWAY):
            raise ParameterError(f"unknown l-policy {self.l_policy!r}")
        if self.l_policy == FIXED and (self.l is None or not 1 <= self.l <= self.m - 1):
            raise ParameterError(f"fixed l must lie in [1, {self.m - 1}]")
        if self.l_policy == PHI and (self.phi is None or len(self.phi) != self.m - 1):
            raise ParameterError(f"phi must have m-1 = {self.m - 1} entries")
        if self.l_policy == LWAY and not 0 < self.p <= 1:
            raise ParameterError("p must lie in (0, 1]")

    def length_distribution(self) -> np.ndarray | None:
        if self.l_policy == LWAY:
            return None
        if self.l_policy == PHI:
            phi = np.asarray(self.phi, dtype=float)
            return phi / phi.sum()
        l = self.m - 1 if self.l_policy == FULL else self.l
        phi = np.zeros(self.m - 1)
        phi[l - 1] = 1.0
        return phi

    def at(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def parse_l_policy(text: str) -> dict:
    """``full``, ``fixed:<l>``, ``phi:<p1,...>`` or ``lway:<p>`` as config fields."""
    kind, _, arg = text.partition(":")
    try:
        if kind == FULL and not arg:
            return {"l_policy": FULL}
        if kind == FIXED:
            return {"l_policy": FIXED, "l": int(arg)}
        if kind == PHI:
            return {"l_policy": PHI, "phi": tuple(float(v) for v in arg.split(","))}
        if kind == LWAY:
            return {"l_policy": LWAY, "p": float(arg)}
    except ValueError:
        pass
    raise ParameterError(f"bad l-policy {text!r}; use full, fixed:<l>, phi:<p1,...> or lway:<p>")


def draw_truth(config: ExperimentConfig, rng) -> MixtureParams:
    lo, hi = config.beta_bounds
    betas = rng.uniform(lo, hi, size=(config.k, config.d))
    if config.k == 1:
        alpha = np.ones(1)
    else:
        raw = rng.uniform(size=config.k)
        alpha = raw / raw.sum()
    return MixtureParams(alpha, betas, config.length_distribution())


def draw_features(config: ExperimentConfig, n: int, rng) -> FeatureTensor:
    lo, hi = config.feature_bounds
    return FeatureTensor(rng.uniform(lo, hi, size=(n, config.m, config.d)))


def sample_orders(config: ExperimentConfig, features: FeatureTensor, truth: MixtureParams, agents, rng) -> Profile:
    """One order per agent; each agent's component is drawn from ``alpha`` first."""
    agents = np.asarray(agents, dtype=np.int64)
    comp = rng.choice(truth.k, size=len(agents), p=truth.alpha) if truth.k > 1 else np.zeros(len(agents), dtype=int)
    pieces, where = [], []
    for r in range(truth.k):
        idx = np.flatnonzero(comp == r)
        if len(idx) == 0:
            continue
        if config.l_policy == LWAY:
            part = sample_lway_profile(features, truth.betas[r], config.p, rng, agents=agents[idx])
        else:
            part = sample_profile(features, truth.betas[r], truth.phi, rng, agents=agents[idx])
        pieces.append(part)
        where.append(idx)
    profile = pieces[0]
    for part in pieces[1:]:
        profile = profile.concat(part)
    order = np.argsort(np.concatenate(where), kind="stable")
    return profile.select(order)


def gen_synthetic(config: ExperimentConfig, rng, n: int | None = None) -> tuple[FeatureTensor, MixtureParams, Profile]:
    """Features, ground truth and one order per agent for ``n`` agents (default: the first n of the config)."""
    n = config.n[0] if n is None else int(n)
    rng = np.random.default_rng(rng)
    features = draw_features(config, n, rng)
    truth = draw_truth(config, rng)
    profile = sample_orders(config, features, truth, np.arange(n), rng)
    return features, truth, profile
