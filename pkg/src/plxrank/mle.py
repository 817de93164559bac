"""Maximum likelihood for PL with features from top-l orders, and its error bound.

The log-likelihood separates into a length part, maximised by counting, and
a coefficient part, which is concave in beta and strictly concave when the
normalized features have full row rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import TOP_L, FeatureTensor, Profile
from .errors import DimensionError, ParameterError, RankDeficiencyError, UnboundedLikelihoodError
from .identifiability import check_assumption1, check_plx
from .model import PlDesign
from .optim import OptimizerOptions, maximize

LAMBDA_TOL = 1e-10


@dataclass(frozen=True)
class FitReport:
    beta_hat: np.ndarray
    phi_hat: np.ndarray | None
    log_likelihood: float
    objective: float
    iterations: int
    converged: bool
    lambda1_at_estimate: float
    rmse_bound: float | None
    assumption1_ok: bool
    full_row_rank: bool
    trace: list = field(default_factory=list, repr=False)
    message: str = ""


def estimate_phi(profile: Profile, m: int | None = None) -> np.ndarray:
    """Empirical frequency of each order length l = 1..m-1."""
    m = profile.m if m is None else m
    if profile.kind != TOP_L:
        raise ParameterError("length frequencies are defined for top-l profiles")
    if len(profile) == 0:
        raise ParameterError("cannot estimate phi from an empty profile")
    counts = np.bincount(profile.lengths - 1, minlength=m - 1)
    if counts.shape[0] != m - 1:
        raise DimensionError(f"profile lengths exceed m-1 = {m - 1}")
    return counts / len(profile)


def _smallest_eig(H: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(-H)[0])


def _ascend(design: PlDesign, weights, opts: OptimizerOptions):
    d = design.features.d
    x0 = np.zeros(d) if opts.beta0 is None else np.asarray(opts.beta0, dtype=float)
    if x0.shape != (d,):
        raise DimensionError(f"initial beta has shape {x0.shape}, expected ({d},)")
    total = design.n if weights is None else float(np.sum(weights))
    if total <= 0:
        raise ParameterError("weights must have positive total")
    return maximize(lambda b: design.value_and_grad(b, weights), x0, opts, scale=total)


def fit_beta(
    profile: Profile,
    features: FeatureTensor,
    opts: OptimizerOptions = OptimizerOptions(),
    delta: float | None = None,
) -> FitReport:
    """Maximise ``sum_j ln Pr(O_j | beta)`` and report diagnostics.

    The rank condition and the sign-diversity condition are checked and
    recorded but do not stop the fit. When ``delta`` is given the report
    carries the approximate error bound at that confidence level.
    """
    if len(profile) == 0:
        raise ParameterError("cannot fit an empty profile")
    design = PlDesign(profile, features)
    full_rank = check_plx(features.subset(np.unique(profile.agents))).full_row_rank
    a1 = check_assumption1(features, profile).holds
    try:
        res = _ascend(design, None, opts)
    except UnboundedLikelihoodError as exc:
        raise UnboundedLikelihoodError(
            f"{exc} (sign-diversity condition {'holds' if a1 else 'fails'} on this data)", assumption1_ok=a1
        ) from exc
    H = design.hessian(res.x) / len(profile)
    lam = _smallest_eig(H)
    phi = estimate_phi(profile) if profile.kind == TOP_L else None
    ll = res.value + (float(np.log(phi[profile.lengths - 1]).sum()) if phi is not None else 0.0)
    bound = None
    if delta is not None and lam > LAMBDA_TOL:
        bound = _bound_formula(features.m, features.d, features.spread, lam, len(profile), delta)
    return FitReport(
        beta_hat=res.x,
        phi_hat=phi,
        log_likelihood=ll,
        objective=res.value,
        iterations=res.iterations,
        converged=res.converged,
        lambda1_at_estimate=lam,
        rmse_bound=bound,
        assumption1_ok=a1,
        full_row_rank=full_rank,
        trace=res.trace,
        message=res.message,
    )


def fit_beta_weighted(profile: Profile, features: FeatureTensor, weights, opts: OptimizerOptions = OptimizerOptions()) -> np.ndarray:
    """Maximise ``sum_j w_j ln Pr(O_j | beta)`` for nonnegative per-order weights."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != len(profile):
        raise DimensionError(f"{w.shape[0]} weights for {len(profile)} orders")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ParameterError("weights must be finite and nonnegative")
    return _ascend(PlDesign(profile, features), w, opts).x


def weighted_objective(profile: Profile, features: FeatureTensor, beta, weights) -> float:
    return PlDesign(profile, features).value_and_grad(np.asarray(beta, dtype=float), np.asarray(weights, dtype=float))[0]


def _bound_formula(m: int, d: int, c: float, lam: float, n: int, delta: float) -> float:
    return math.sqrt(8 * (m - 1) ** 2 * c**2 * d * math.log(2 * d / delta)) / (lam * math.sqrt(n))


def rmse_bound(features: FeatureTensor, profile: Profile, beta_star, delta: float) -> float:
    """High-probability bound on ``||beta_hat - beta_0||_2``.

    The smallest eigenvalue along the segment to the truth is replaced by
    the smallest eigenvalue of ``-H(beta_star) / n``, so the value is an
    approximation of the guaranteed bound.
    """
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    n = len(profile)
    if n == 0:
        raise ParameterError("empty profile")
    H = PlDesign(profile, features).hessian(np.asarray(beta_star, dtype=float)) / n
    lam = _smallest_eig(H)
    if lam <= LAMBDA_TOL:
        raise RankDeficiencyError(
            f"smallest eigenvalue of -H/n is {lam:.3g}; the bound is undefined without full row rank"
        )
    return _bound_formula(features.m, features.d, features.spread, lam, n, delta)


def sample_complexity(m: int, d: int, c: float, lambda_min: float, eps: float, delta: float) -> int:
    """Smallest n for which the error bound is at most ``eps`` with probability ``1 - delta``."""
    if lambda_min <= 0 or eps <= 0 or not 0 < delta < 1:
        raise ParameterError("need lambda_min > 0, eps > 0 and 0 < delta < 1")
    v = 8 * (m - 1) ** 2 * c**2 * d * math.log(2 * d / delta) / (lambda_min**2 * eps**2)
    # absorb rounding so an exact integer is not bumped to the next one
    near = round(v)
    if near > 0 and abs(v - near) <= 1e-9 * near:
        return int(near)
    return int(math.ceil(v))
