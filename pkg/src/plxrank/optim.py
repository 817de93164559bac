"""Quasi-Newton ascent with a backtracking line search.

Every accepted step satisfies the Armijo condition, or when rounding makes
that test meaningless near the optimum, at least does not lower the
objective and reduces the gradient. The objective therefore never
decreases from one iteration to the next.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError, UnboundedLikelihoodError

DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = 500
    g_tol: float = 1e-8
    beta0: np.ndarray | None = None
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.g_tol <= 0 or self.armijo <= 0 or not 0 < self.shrink < 1:
            raise ParameterError("tolerances must be positive and the shrink factor in (0, 1)")


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    message: str = ""


def maximize(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    opts: OptimizerOptions = OptimizerOptions(),
    scale: float = 1.0,
    bound: float = DIVERGENCE_BOUND,
) -> AscentResult:
    """BFGS ascent on ``value_and_grad``; converged when ``max|grad| / scale <= g_tol``.

    Raises :class:`UnboundedLikelihoodError` if any coordinate exceeds ``bound``.
    """
    x = np.array(x0, dtype=float)
    d = x.shape[0]
    # work on the negated, scaled objective
    f, g = value_and_grad(x)
    f, g = -f / scale, -np.asarray(g) / scale
    trace = [-f * scale]
    Hinv = None
    it = 0
    message = "iteration limit reached"
    converged = False
    while True:
        if np.max(np.abs(g), initial=0.0) <= opts.g_tol:
            converged = True
            message = "gradient tolerance met"
            break
        if it >= opts.max_iters:
            break
        it += 1
        if Hinv is None:
            p = -g / max(1.0, np.max(np.abs(g)))
        else:
            p = -Hinv @ g
            if g @ p >= 0:
                Hinv = None
                p = -g / max(1.0, np.max(np.abs(g)))
        slope = g @ p
        t = 1.0
        accepted = False
        for _ in range(opts.max_backtracks):
            xn = x + t * p
            fn, gn = value_and_grad(xn)
            fn, gn = -fn / scale, -np.asarray(gn) / scale
            if np.isfinite(fn):
                if fn <= f + opts.armijo * t * slope:
                    accepted = True
                    break
                if fn <= f and np.max(np.abs(gn)) < np.max(np.abs(g)):
                    accepted = True
                    break
            t *= opts.shrink
        if not accepted:
            if Hinv is not None:
                Hinv = None
                it -= 1
                continue
            message = "line search failed"
            break
        s = xn - x
        y = gn - g
        x, f, g = xn, fn, gn
        trace.append(-f * scale)
        if np.max(np.abs(x)) > bound:
            raise UnboundedLikelihoodError(
                f"iterate left the box |beta| <= {bound:g} after {it} iterations; "
                "the likelihood appears to have no finite maximiser"
            )
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if Hinv is None:
                Hinv = np.eye(d) * (sy / (y @ y))
            rho = 1.0 / sy
            V = np.eye(d) - rho * np.outer(s, y)
            Hinv = V @ Hinv @ V.T + rho * np.outer(s, s)
    return AscentResult(x, -f * scale, -g * scale, it, converged, trace, message)
