"""Rank breaking followed by composite marginal likelihood estimation.

Each l-way order is broken into all its ordered pairs, each weighted by
``w(l)``. The composite log-likelihood is evaluated per agent because
pairwise probabilities depend on the agent's features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import L_WAY, FeatureTensor, Profile
from .errors import DimensionError, ParameterError
from .identifiability import check_assumption1, check_plx
from .mle import FitReport
from .model import FAMILIES, pairwise_dlog_cdf, pairwise_log_cdf
from .optim import OptimizerOptions, maximize

UNIFORM = "uniform"
HARMONIC = "harmonic"
CUSTOM = "custom"


@dataclass(frozen=True)
class WeightingFunction:
    """Weight ``w(l)`` given to every pair broken out of an order of length ``l``."""

    kind: str = UNIFORM
    table: dict = field(default_factory=dict)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in (UNIFORM, HARMONIC, CUSTOM):
            raise ParameterError(f"unknown weighting kind {self.kind!r}")
        if self.kind == CUSTOM:
            if not self.table or any(v <= 0 for v in self.table.values()):
                raise ParameterError("a custom weighting needs positive weights")
        if self.scale <= 0:
            raise ParameterError("weight scale must be positive")

    def __call__(self, l: int) -> float:
        if l < 2:
            raise ParameterError(f"orders of length {l} yield no pairs")
        if self.kind == UNIFORM:
            w = 1.0
        elif self.kind == HARMONIC:
            w = 1.0 / (l - 1)
        else:
            if l not in self.table:
                raise ParameterError(f"custom weighting has no entry for l={l}")
            w = float(self.table[l])
        return self.scale * w

    def scaled(self, factor: float) -> "WeightingFunction":
        return WeightingFunction(self.kind, dict(self.table), self.scale * factor)

    @classmethod
    def parse(cls, text: str) -> "WeightingFunction":
        """``uniform``, ``harmonic`` or ``custom:<file>`` (lines ``l w``)."""
        if text in (UNIFORM, HARMONIC):
            return cls(text)
        if text.startswith("custom:"):
            from .io import load_weight_table

            return cls(CUSTOM, load_weight_table(text.split(":", 1)[1]))
        raise ParameterError(f"unknown weighting {text!r}")


@dataclass(frozen=True)
class BreakingGraph:
    """Weighted pair counts ``kappa[a, b]`` plus the per-order pairs they came from."""

    kappa: np.ndarray
    order_index: np.ndarray
    agent: np.ndarray
    winner: np.ndarray
    loser: np.ndarray
    weight: np.ndarray


def _as_lway(profile: Profile) -> Profile:
    if profile.kind == L_WAY:
        return profile
    return profile.as_lway()


def break_profile(profile: Profile, w: WeightingFunction = WeightingFunction()) -> BreakingGraph:
    """All ordered pairs ``a before b`` of every order, weighted by ``w(l)``.

    Top-l profiles are accepted only when every order is a complete ranking.
    """
    m = profile.m
    kappa = np.zeros((m, m))
    if len(profile) == 0:
        empty_i = np.zeros(0, dtype=np.int64)
        return BreakingGraph(kappa, empty_i, empty_i, empty_i, empty_i, np.zeros(0))
    profile = _as_lway(profile)
    idx, agent, win, lose, weight = [], [], [], [], []
    for l in np.unique(profile.lengths):
        rows = np.flatnonzero(profile.lengths == l)
        a, b = np.triu_indices(int(l), k=1)
        R = profile.ranked[rows]
        idx.append(np.repeat(rows, len(a)))
        agent.append(np.repeat(profile.agents[rows], len(a)))
        win.append(R[:, a].ravel())
        lose.append(R[:, b].ravel())
        weight.append(np.full(len(rows) * len(a), w(int(l))))
    idx, agent, win, lose, weight = (np.concatenate(v) for v in (idx, agent, win, lose, weight))
    order = np.argsort(idx, kind="stable")
    idx, agent, win, lose, weight = idx[order], agent[order], win[order], lose[order], weight[order]
    np.add.at(kappa, (win, lose), weight)
    return BreakingGraph(kappa, idx, agent, win, lose, weight)


def expected_kappa_full(utilities) -> np.ndarray:
    """Probability that ``a`` precedes ``b`` in a full PL ranking, by enumerating all rankings."""
    import itertools

    u = np.asarray(utilities, dtype=float)
    m = u.shape[0]
    out = np.zeros((m, m))
    for perm in itertools.permutations(range(m)):
        p, rest = 1.0, list(perm)
        for i in perm[:-1]:
            e = np.exp(u[rest])
            p *= np.exp(u[i]) / e.sum()
            rest.remove(i)
        for s in range(m):
            for t in range(s + 1, m):
                out[perm[s], perm[t]] += p
    return out


class CompositeDesign:
    """Broken pairs with their feature differences, ready for repeated evaluation."""

    def __init__(self, profile: Profile, features: FeatureTensor, w: WeightingFunction, family: str):
        if family not in FAMILIES:
            raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")
        profile.check_against(features)
        self.graph = break_profile(profile, w)
        g = self.graph
        self.D = features.values[g.agent, g.winner] - features.values[g.agent, g.loser]
        self.weight = g.weight
        self.family = family

    def value_and_grad(self, beta):
        t = self.D @ beta
        value = float(self.weight @ pairwise_log_cdf(t, self.family))
        grad = (self.weight * pairwise_dlog_cdf(t, self.family)) @ self.D
        return value, grad

    def hessian(self, beta) -> np.ndarray:
        """Analytic Hessian for the logistic family."""
        if self.family != "logistic":
            raise ParameterError("analytic composite Hessian is implemented for the logistic family")
        t = self.D @ beta
        s = 1.0 / (1.0 + np.exp(-t))
        c = self.weight * s * (1.0 - s)
        return -(self.D * c[:, None]).T @ self.D


def composite_ll(profile: Profile, features: FeatureTensor, beta, family: str = "logistic", w: WeightingFunction = WeightingFunction()) -> float:
    """``sum_orders w(l) sum_{a before b} ln f(beta . (x_a - x_b))`` with the order's agent features."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (features.d,):
        raise DimensionError(f"beta has shape {beta.shape}, expected ({features.d},)")
    return CompositeDesign(profile, features, w, family).value_and_grad(beta)[0]


def fit_rbcml(
    profile: Profile,
    features: FeatureTensor,
    family: str = "logistic",
    w: WeightingFunction = WeightingFunction(),
    opts: OptimizerOptions = OptimizerOptions(),
) -> FitReport:
    """Maximise the composite log-likelihood of the broken profile."""
    if len(profile) == 0:
        raise ParameterError("cannot fit an empty profile")
    design = CompositeDesign(profile, features, w, family)
    d = features.d
    x0 = np.zeros(d) if opts.beta0 is None else np.asarray(opts.beta0, dtype=float)
    total = float(design.weight.sum())
    res = maximize(design.value_and_grad, x0, opts, scale=total)
    if family == "logistic":
        lam = float(np.linalg.eigvalsh(-design.hessian(res.x) / len(profile))[0])
    else:
        lam = float("nan")
    return FitReport(
        beta_hat=res.x,
        phi_hat=None,
        log_likelihood=float("nan"),
        objective=res.value,
        iterations=res.iterations,
        converged=res.converged,
        lambda1_at_estimate=lam,
        rmse_bound=None,
        assumption1_ok=check_assumption1(features, profile).holds,
        full_row_rank=check_plx(features.subset(np.unique(profile.agents))).full_row_rank,
        trace=res.trace,
        message=res.message,
    )
