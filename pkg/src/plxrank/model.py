"""Plackett-Luce with features: probabilities, likelihood derivatives, sampling.

The utility of alternative ``i`` for agent ``j`` is ``beta . x_ji``. A top-l
order ``i_1 > ... > i_l > others`` has marginal probability

    prod_{p=1..l} exp(u_{i_p}) / sum_{q >= p} exp(u_{i_q})

where the inner sum runs over every alternative not yet chosen. For an l-way
order only the alternatives in the order enter the denominators.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import expit, log_expit, log_ndtr, ndtr

from .data import L_WAY, TOP_L, FeatureTensor, LWayOrder, MixtureParams, Profile, TopLOrder, check_phi
from .errors import DimensionError, InfeasibleSupportError, ParameterError

FAMILIES = ("logistic", "probit")
MAX_SUBSET_REDRAWS = 10**6


def _beta(features: FeatureTensor, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != features.d:
        raise DimensionError(f"beta has length {beta.shape[0]} but features have d={features.d}")
    return beta


def utilities(features: FeatureTensor, agent: int, beta) -> np.ndarray:
    """Utilities ``(beta . x_j1, ..., beta . x_jm)`` of one agent."""
    if not 0 <= agent < features.n:
        raise DimensionError(f"agent {agent} out of range [0, {features.n})")
    return features.values[agent] @ _beta(features, beta)


class PlDesign:
    """Profile and features gathered into padded arrays for vectorised evaluation.

    Row ``j`` holds the features of order ``j``'s alternatives in ranked
    order. ``choice[j, p]`` marks positions that are selection events and
    ``avail[j, q]`` the alternatives that enter the denominators.
    """

    def __init__(self, profile: Profile, features: FeatureTensor):
        profile.check_against(features)
        self.profile = profile
        self.features = features
        self.n = len(profile)
        m = profile.m
        self.X = features.values[profile.agents[:, None], profile.ranked]
        pos = np.arange(m)[None, :]
        lengths = profile.lengths[:, None]
        if profile.kind == TOP_L:
            self.choice = pos < lengths
            self.avail = np.ones((self.n, m), dtype=bool)
        else:
            self.choice = pos < lengths - 1
            self.avail = pos < lengths
        self._upper = np.triu(np.ones((m, m), dtype=bool))

    def _softmax_tables(self, beta):
        U = self.X @ beta
        Ua = np.where(self.avail, U, -np.inf)
        lse = np.logaddexp.accumulate(Ua[:, ::-1], axis=1)[:, ::-1]
        lse = np.where(self.choice, lse, 0.0)
        return U, Ua, lse

    def order_log_probs(self, beta) -> np.ndarray:
        U, _, lse = self._softmax_tables(beta)
        return np.where(self.choice, U - lse, 0.0).sum(axis=1)

    def _weights(self, Ua, lse):
        mask = self._upper[None, :, :] & self.choice[:, :, None]
        with np.errstate(invalid="ignore"):
            E = Ua[:, None, :] - lse[:, :, None]
        return np.where(mask, np.exp(np.where(mask, E, -np.inf)), 0.0)

    def order_grads(self, beta) -> np.ndarray:
        """Per-order gradients of ``ln Pr(O_j | beta)``, shape (n, d)."""
        _, Ua, lse = self._softmax_tables(beta)
        W = self._weights(Ua, lse)
        coef = self.choice.astype(float) - W.sum(axis=1)
        return np.einsum("jq,jqr->jr", coef, self.X)

    def value_and_grad(self, beta, weights=None):
        U, Ua, lse = self._softmax_tables(beta)
        lp = np.where(self.choice, U - lse, 0.0).sum(axis=1)
        W = self._weights(Ua, lse)
        coef = self.choice.astype(float) - W.sum(axis=1)
        if weights is not None:
            lp = lp * weights
            coef = coef * weights[:, None]
        return lp.sum(), np.einsum("jq,jqr->r", coef, self.X)

    def hessian(self, beta, weights=None) -> np.ndarray:
        _, Ua, lse = self._softmax_tables(beta)
        W = self._weights(Ua, lse)
        w = np.ones(self.n) if weights is None else weights
        s = W.sum(axis=1) * w[:, None]
        second = np.einsum("jq,jqa,jqb->ab", s, self.X, self.X)
        mu = np.einsum("jpq,jqa->jpa", W, self.X)
        outer = np.einsum("j,jpa,jpb->ab", w, mu, mu)
        H = -(second - outer)
        return 0.5 * (H + H.T)


def _order_arrays(order, m: int):
    if isinstance(order, LWayOrder):
        order.validate(m)
        return Profile.from_orders([order], m, kind=L_WAY)
    if isinstance(order, TopLOrder):
        order.validate(m)
        return Profile.from_orders([order], m, kind=TOP_L)
    raise TypeError(f"expected TopLOrder or LWayOrder, got {type(order).__name__}")


def log_prob_top_l(features: FeatureTensor, order, beta) -> float:
    """Log marginal probability of one order under coefficient vector ``beta``."""
    beta = _beta(features, beta)
    design = PlDesign(_order_arrays(order, features.m), features)
    return float(design.order_log_probs(beta)[0])


def prob_top_l(features: FeatureTensor, order, beta) -> float:
    """Marginal probability of a top-l order, without the length factor."""
    return float(np.exp(log_prob_top_l(features, order, beta)))


def prob_top_l_with_phi(features: FeatureTensor, order: TopLOrder, beta, phi) -> float:
    phi = check_phi(phi, features.m)
    order.validate(features.m)
    weight = phi[order.length - 1]
    if weight == 0.0:
        return 0.0
    return float(weight * prob_top_l(features, order, beta))


def mixture_prob_top_l(features: FeatureTensor, order: TopLOrder, params: MixtureParams) -> float:
    """``phi_l * sum_r alpha_r Pr(O | beta_r)``; a missing phi counts as 1."""
    order.validate(features.m)
    weight = 1.0 if params.phi is None else check_phi(params.phi, features.m)[order.length - 1]
    comps = [prob_top_l(features, order, b) for b in params.betas]
    return float(weight * np.dot(params.alpha, comps))


def order_log_probs(profile: Profile, features: FeatureTensor, beta) -> np.ndarray:
    """``ln Pr(O_j | beta)`` for every order of the profile."""
    return PlDesign(profile, features).order_log_probs(_beta(features, beta))


def log_likelihood(profile: Profile, features: FeatureTensor, beta, phi) -> float:
    """``sum_j (ln phi_{l_j} + ln Pr(O_j | beta))``."""
    phi = check_phi(phi, profile.m)
    if profile.kind != TOP_L:
        raise ParameterError("the length distribution applies to top-l profiles only")
    used = phi[profile.lengths - 1]
    if np.any(used == 0.0):
        j = int(np.argmax(used == 0.0))
        raise InfeasibleSupportError(
            f"order {j} has length {int(profile.lengths[j])} but phi assigns it probability 0"
        )
    return float(np.log(used).sum() + order_log_probs(profile, features, beta).sum())


def grad_beta(profile: Profile, features: FeatureTensor, beta, weights=None) -> np.ndarray:
    """Gradient of ``sum_j w_j ln Pr(O_j | beta)`` (unit weights by default)."""
    w = None if weights is None else np.asarray(weights, dtype=float)
    return PlDesign(profile, features).value_and_grad(_beta(features, beta), w)[1]


def hessian_beta(profile: Profile, features: FeatureTensor, beta, weights=None) -> np.ndarray:
    """Hessian of ``sum_j w_j ln Pr(O_j | beta)``; always negative semidefinite."""
    w = None if weights is None else np.asarray(weights, dtype=float)
    return PlDesign(profile, features).hessian(_beta(features, beta), w)


# ---------------------------------------------------------------- sampling


def _draw_sequential(U: np.ndarray, avail: np.ndarray, lengths: np.ndarray, rng) -> np.ndarray:
    """Selection without replacement by inverse CDF on the softmax of the remaining items."""
    n, m = U.shape
    remaining = avail.copy()
    out = np.full((n, int(lengths.max()) if n else 0), -1, dtype=np.int64)
    rows = np.arange(n)
    for p in range(out.shape[1]):
        active = lengths > p
        logits = np.where(remaining, U, -np.inf)
        top = logits.max(axis=1, keepdims=True)
        logits = logits - np.where(np.isfinite(top), top, 0.0)
        cdf = np.cumsum(np.exp(logits), axis=1)
        u = rng.random(n) * cdf[:, -1]
        u = np.where(active, u, 0.0)
        pick = np.minimum((cdf <= u[:, None]).sum(axis=1), m - 1)
        # rounding can land on an exhausted slot; fall back to the last remaining item
        bad = ~remaining[rows, pick]
        if np.any(bad):
            pick[bad] = m - 1 - np.argmax(remaining[bad][:, ::-1], axis=1)
        pick = np.where(active, pick, -1)
        out[:, p] = pick
        remaining[rows[active], pick[active]] = False
    return out


def _complete(prefix: np.ndarray, lengths: np.ndarray, m: int) -> np.ndarray:
    ranked = np.empty((len(prefix), m), dtype=np.int64)
    for j, l in enumerate(lengths):
        head = prefix[j, :l]
        rest = np.setdiff1d(np.arange(m), head)
        ranked[j, :l] = head
        ranked[j, l:] = rest
    return ranked


def sample_profile(features: FeatureTensor, beta, phi, rng, agents=None) -> Profile:
    """One top-l order per listed agent (all agents by default): ``l ~ phi`` then PL selection."""
    beta = _beta(features, beta)
    phi = check_phi(phi, features.m)
    agents = np.arange(features.n) if agents is None else np.asarray(agents, dtype=np.int64)
    m = features.m
    lengths = rng.choice(np.arange(1, m), size=len(agents), p=phi)
    U = features.values[agents] @ beta
    prefix = _draw_sequential(U, np.ones_like(U, dtype=bool), lengths, rng)
    return Profile(agents, _complete(prefix, lengths, m), lengths, m, TOP_L)


def sample_top_l(features: FeatureTensor, agent: int, beta, phi, rng) -> TopLOrder:
    if not 0 <= agent < features.n:
        raise DimensionError(f"agent {agent} out of range [0, {features.n})")
    return sample_profile(features, beta, phi, rng, agents=[agent])[0]


def _draw_subsets(n: int, m: int, p: float, rng) -> np.ndarray:
    mask = rng.random((n, m)) < p
    todo = mask.sum(axis=1) < 2
    tries = 0
    while np.any(todo):
        tries += 1
        if tries > MAX_SUBSET_REDRAWS:
            raise ParameterError(f"could not draw a subset of size >= 2 with p={p} after {MAX_SUBSET_REDRAWS} tries")
        mask[todo] = rng.random((int(todo.sum()), m)) < p
        todo = mask.sum(axis=1) < 2
    return mask


def sample_lway_profile(features: FeatureTensor, beta, p: float, rng, agents=None) -> Profile:
    """One l-way order per listed agent: Bernoulli(p) subset of size >= 2, then a PL ranking of it."""
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"inclusion probability must lie in (0, 1], got {p}")
    beta = _beta(features, beta)
    agents = np.arange(features.n) if agents is None else np.asarray(agents, dtype=np.int64)
    m = features.m
    subsets = _draw_subsets(len(agents), m, p, rng)
    lengths = subsets.sum(axis=1)
    U = features.values[agents] @ beta
    prefix = _draw_sequential(U, subsets, lengths, rng)
    return Profile(agents, _complete(prefix, lengths, m), lengths, m, L_WAY)


def sample_lway(features: FeatureTensor, agent: int, beta, p: float, rng) -> LWayOrder:
    if not 0 <= agent < features.n:
        raise DimensionError(f"agent {agent} out of range [0, {features.n})")
    return sample_lway_profile(features, beta, p, rng, agents=[agent])[0]


# ---------------------------------------------------------------- pairwise marginals


def pairwise_cdf(t, family: str = "logistic"):
    """``f(t)``: probability that the first alternative wins given utility gap ``t``."""
    if family == "logistic":
        return expit(t)
    if family == "probit":
        # unit-variance Gaussian noise on each utility, so the gap has variance 2
        return ndtr(np.asarray(t) / np.sqrt(2.0))
    raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")


def pairwise_log_cdf(t, family: str = "logistic"):
    if family == "logistic":
        return log_expit(t)
    if family == "probit":
        return log_ndtr(np.asarray(t) / np.sqrt(2.0))
    raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")


def pairwise_dlog_cdf(t, family: str = "logistic"):
    """Derivative of ``ln f(t)`` with respect to ``t``."""
    t = np.asarray(t, dtype=float)
    if family == "logistic":
        return expit(-t)
    if family == "probit":
        z = t / np.sqrt(2.0)
        return np.exp(-0.5 * z * z - 0.5 * np.log(2 * np.pi) - log_ndtr(z)) / np.sqrt(2.0)
    raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")


def pairwise_prob(features: FeatureTensor, agent: int, i1: int, i2: int, beta, family: str = "logistic") -> float:
    """Probability that ``agent`` prefers ``i1`` to ``i2``."""
    if i1 == i2:
        raise DimensionError("pairwise probability needs two distinct alternatives")
    for i in (i1, i2):
        if not 0 <= i < features.m:
            raise DimensionError(f"alternative {i} out of range [0, {features.m})")
    u = utilities(features, agent, beta)
    return float(pairwise_cdf(u[i1] - u[i2], family))


# ---------------------------------------------------------------- enumeration helpers


def all_top_l_orders(m: int, agent: int = 0):
    """Every top-l order over m alternatives, l = 1..m-1."""
    for l in range(1, m):
        for prefix in itertools.permutations(range(m), l):
            yield TopLOrder(agent, prefix)
