"""Mixtures of k PL-with-features components: EM and direct likelihood ascent."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, softmax

from .data import TOP_L, FeatureTensor, MixtureParams, Profile
from .errors import ParameterError
from .mle import _ascend, estimate_phi
from .model import PlDesign
from .optim import OptimizerOptions, maximize

COLLAPSE_TOL = 1e-12


@dataclass(frozen=True)
class EmOptions:
    k: int = 2
    iterations: int = 50
    restarts: int = 1
    seed: int | None = None
    inner: OptimizerOptions = OptimizerOptions()
    init: MixtureParams | None = None
    stop_gain: float | None = 1e-8

    def __post_init__(self):
        if self.k < 1 or self.iterations < 1 or self.restarts < 1:
            raise ParameterError("need k >= 1, iterations >= 1 and restarts >= 1")


@dataclass
class EmReport:
    params: MixtureParams
    responsibilities: np.ndarray
    trace: list
    e_seconds: float
    m_seconds: float
    iterations: int
    stopped_early: bool = False
    collapsed: list = field(default_factory=list)

    @property
    def log_likelihood(self) -> float:
        return self.trace[-1]


def _component_log_probs(design: PlDesign, betas) -> np.ndarray:
    return np.stack([design.order_log_probs(b) for b in betas], axis=1)


def _log_weighted(design: PlDesign, alpha, betas) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(alpha)[None, :] + _component_log_probs(design, betas)


def e_step(profile: Profile, features: FeatureTensor, params: MixtureParams) -> np.ndarray:
    """Posterior component memberships, one row per order."""
    return _responsibilities(_log_weighted(PlDesign(profile, features), params.alpha, params.betas))


def _responsibilities(logw: np.ndarray) -> np.ndarray:
    # log-domain normalisation; a zero-weight component gets responsibility 0
    return np.exp(logw - logsumexp(logw, axis=1, keepdims=True))


def m_step_alpha(responsibilities) -> np.ndarray:
    w = np.asarray(responsibilities, dtype=float)
    alpha = w.sum(axis=0) / w.shape[0]
    return alpha / alpha.sum()


def mixture_log_likelihood(profile: Profile, features: FeatureTensor, params: MixtureParams, include_phi: bool = True) -> float:
    """``sum_j ln(phi_{l_j} sum_r alpha_r Pr(O_j | beta_r))``."""
    design = PlDesign(profile, features)
    ll = float(logsumexp(_log_weighted(design, params.alpha, params.betas), axis=1).sum())
    if include_phi and params.phi is not None and profile.kind == TOP_L:
        with np.errstate(divide="ignore"):
            ll += float(np.log(params.phi[profile.lengths - 1]).sum())
    return ll


def random_init(k: int, d: int, rng) -> MixtureParams:
    return MixtureParams(np.full(k, 1.0 / k), rng.uniform(-1.0, 1.0, size=(k, d)))


def _em_run(design: PlDesign, profile: Profile, init: MixtureParams, phi, opts: EmOptions) -> EmReport:
    alpha, betas = init.alpha.copy(), init.betas.copy()
    phi_ll = float(np.log(phi[profile.lengths - 1]).sum()) if phi is not None else 0.0
    logw = _log_weighted(design, alpha, betas)
    trace = [float(logsumexp(logw, axis=1).sum()) + phi_ll]
    te = tm = 0.0
    collapsed: set[int] = set()
    stopped = False
    w = _responsibilities(logw)
    it = 0
    for it in range(1, opts.iterations + 1):
        t0 = time.perf_counter()
        w = _responsibilities(logw)
        te += time.perf_counter() - t0

        t0 = time.perf_counter()
        alpha = m_step_alpha(w)
        for r in range(opts.k):
            if alpha[r] < COLLAPSE_TOL:
                collapsed.add(r)
                continue
            inner = OptimizerOptions(
                max_iters=opts.inner.max_iters,
                g_tol=opts.inner.g_tol,
                beta0=betas[r],
                armijo=opts.inner.armijo,
                shrink=opts.inner.shrink,
            )
            betas[r] = _ascend(design, w[:, r], inner).x
        tm += time.perf_counter() - t0

        logw = _log_weighted(design, alpha, betas)
        trace.append(float(logsumexp(logw, axis=1).sum()) + phi_ll)
        if opts.stop_gain is not None and trace[-1] - trace[-2] < opts.stop_gain:
            stopped = it < opts.iterations
            break
    params = MixtureParams(alpha, betas, phi)
    return EmReport(params, w, trace, te, tm, it, stopped, sorted(collapsed))


def em_fit(profile: Profile, features: FeatureTensor, opts: EmOptions = EmOptions()) -> EmReport:
    """Alternate membership updates, mixing-weight updates and weighted per-component fits.

    The length distribution is estimated once by counting since it separates
    from the rest of the likelihood. With several restarts the run with the
    highest final log-likelihood is kept.
    """
    if len(profile) == 0:
        raise ParameterError("cannot fit an empty profile")
    design = PlDesign(profile, features)
    phi = estimate_phi(profile) if profile.kind == TOP_L else None
    rng = np.random.default_rng(opts.seed)
    best = None
    for restart in range(opts.restarts):
        if opts.init is not None and restart == 0:
            init = opts.init
        else:
            init = random_init(opts.k, features.d, rng)
        rep = _em_run(design, profile, init, phi, opts)
        if best is None or rep.log_likelihood > best.log_likelihood:
            best = rep
    return best


@dataclass
class DirectMleReport:
    params: MixtureParams
    log_likelihood: float
    converged: bool
    iterations: int
    seconds: float


def direct_mle(
    profile: Profile,
    features: FeatureTensor,
    k: int,
    opts: OptimizerOptions = OptimizerOptions(max_iters=1000),
    rng=None,
    init: MixtureParams | None = None,
) -> DirectMleReport:
    """Joint ascent over mixing weights (softmax-parameterised) and all component coefficients.

    The objective is not concave for k >= 2, so the result is a local optimum
    from a random start.
    """
    if len(profile) == 0:
        raise ParameterError("cannot fit an empty profile")
    t0 = time.perf_counter()
    design = PlDesign(profile, features)
    d = features.d
    rng = np.random.default_rng(rng)
    if init is None:
        init = random_init(k, d, rng)
    x0 = np.concatenate([np.log(init.alpha), init.betas.ravel()])

    def value_and_grad(x):
        logits, betas = x[:k], x[k:].reshape(k, d)
        log_alpha = logits - logsumexp(logits)
        logw = log_alpha[None, :] + _component_log_probs(design, betas)
        lse = logsumexp(logw, axis=1, keepdims=True)
        w = np.exp(logw - lse)
        g_logits = w.sum(axis=0) - len(profile) * np.exp(log_alpha)
        g_betas = [np.einsum("j,jr->r", w[:, r], design.order_grads(betas[r])) for r in range(k)]
        return float(lse.sum()), np.concatenate([g_logits, np.concatenate(g_betas)])

    res = maximize(value_and_grad, x0, opts, scale=len(profile))
    phi = estimate_phi(profile) if profile.kind == TOP_L else None
    params = MixtureParams(softmax(res.x[:k]), res.x[k:].reshape(k, d), phi)
    ll = mixture_log_likelihood(profile, features, params)
    return DirectMleReport(params, ll, res.converged, res.iterations, time.perf_counter() - t0)


def align_components(estimate: MixtureParams, truth: MixtureParams) -> tuple[MixtureParams, np.ndarray]:
    """Relabel the estimate to minimise total squared coefficient error against the truth.

    Returns the relabelled estimate and the per-component mean squared error.
    """
    if estimate.k != truth.k or estimate.d != truth.d:
        raise ParameterError("estimate and truth must have the same k and d")
    if estimate.k > 8:
        raise ParameterError("exhaustive alignment is limited to k <= 8")
    cost = ((estimate.betas[:, None, :] - truth.betas[None, :, :]) ** 2).mean(axis=2)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(estimate.k)):
        c = sum(cost[perm[r], r] for r in range(estimate.k))
        if c < best_cost:
            best, best_cost = perm, c
    aligned = estimate.permuted(best)
    return aligned, np.array([cost[best[r], r] for r in range(estimate.k)])
