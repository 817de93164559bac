"""Rank conditions for identifiability and boundedness of feature-based PL models."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .data import BilinearFeatures, FeatureTensor, Profile, check_phi
from .errors import DimensionError, ParameterError


class Verdict(str, enum.Enum):
    IDENTIFIABLE = "Identifiable"
    NOT_IDENTIFIABLE = "NotIdentifiable"
    CONDITIONALLY_IDENTIFIABLE = "ConditionallyIdentifiable"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class IdReport:
    rank: int
    full_row_rank: bool
    tolerance: float
    verdict: Verdict
    notes: str = ""

    def as_record(self) -> dict:
        return {
            "rank": self.rank,
            "full_row_rank": self.full_row_rank,
            "tolerance": self.tolerance,
            "verdict": str(self.verdict),
            "notes": self.notes,
        }


@dataclass(frozen=True)
class NormalizedFeatures:
    """``matrix`` is d x (m-1)n: each agent's alternatives minus its baseline alternative."""

    matrix: np.ndarray
    baseline: int = 0


def normalize(features: FeatureTensor, baseline: int = 0) -> NormalizedFeatures:
    """Subtract the baseline alternative's features from every other alternative, per agent.

    Column ``j*(m-1) + c`` holds ``x_{j,i} - x_{j,baseline}`` where ``i`` is the
    ``c``-th non-baseline alternative in increasing order.
    """
    if not 0 <= baseline < features.m:
        raise DimensionError(f"baseline {baseline} out of range [0, {features.m})")
    v = features.values
    others = [i for i in range(features.m) if i != baseline]
    diff = v[:, others, :] - v[:, baseline : baseline + 1, :]
    return NormalizedFeatures(diff.transpose(2, 0, 1).reshape(features.d, -1), baseline)


def normalize_columns(Z) -> np.ndarray:
    """``norm(Z) = [z_2 - z_1, ..., z_m - z_1]`` for a K x m alternative-feature matrix."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return Z[:, 1:] - Z[:, :1]


def default_tolerance(matrix) -> float:
    return float(np.finfo(float).eps)


def numerical_rank(matrix, tol: float | None = None) -> int:
    """Number of singular values above ``tol * sigma_max * max(shape)``.

    ``tol`` defaults to machine epsilon.
    """
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    if A.size == 0:
        return 0
    if not np.all(np.isfinite(A)):
        raise ParameterError("matrix has non-finite entries")
    tol = default_tolerance(A) if tol is None else tol
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0] * max(A.shape)))


def _rank_report(matrix, d: int, tol: float | None, what: str) -> IdReport:
    tol = default_tolerance(matrix) if tol is None else tol
    r = numerical_rank(matrix, tol)
    full = r == d
    verdict = Verdict.IDENTIFIABLE if full else Verdict.NOT_IDENTIFIABLE
    return IdReport(r, full, tol, verdict, f"rank({what}) = {r}, rows = {d}")


def check_plx(features: FeatureTensor, tol: float | None = None) -> IdReport:
    """Identifiable exactly when the normalized feature matrix has full row rank."""
    return _rank_report(normalize(features).matrix, features.d, tol, "Norm(X)")


def check_bilinear(Y, Z=None, tol: float | None = None) -> IdReport:
    """Bilinear model check: ``Y`` and ``norm(Z)`` must both have full row rank."""
    if isinstance(Y, BilinearFeatures):
        Y, Z = Y.Y, Y.Z
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    nz = normalize_columns(Z)
    ry, rz = numerical_rank(Y, tol), numerical_rank(nz, tol)
    L, K = Y.shape[0], nz.shape[0]
    full = ry == L and rz == K
    return IdReport(
        rank=ry * rz,
        full_row_rank=full,
        tolerance=default_tolerance(Y) if tol is None else tol,
        verdict=Verdict.IDENTIFIABLE if full else Verdict.NOT_IDENTIFIABLE,
        notes=f"rank(Y) = {ry} of {L}; rank(norm(Z)) = {rz} of {K}",
    )


def kron_lift(Y, Z=None) -> FeatureTensor:
    """Features ``x_ji = y_j (x) z_i``, so ``beta . x_ji = z_i^T B y_j`` with ``beta = vec(B)`` (column-major)."""
    if isinstance(Y, BilinearFeatures):
        Y, Z = Y.Y, Y.Z
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    L, n = Y.shape
    K, m = Z.shape
    # values[j, i, l*K + k] = Y[l, j] * Z[k, i]
    values = np.einsum("lj,ki->jilk", Y, Z).reshape(n, m, L * K)
    return FeatureTensor(values)


def vec(B) -> np.ndarray:
    """Column-major vectorisation matching :func:`kron_lift`."""
    return np.asarray(B, dtype=float).reshape(np.shape(B)[0], -1).flatten(order="F")


# (k, m) pairs for which mixtures of k standard PLs are known to be identifiable
def _kpl_known_identifiable(k: int, m: int) -> bool:
    return k == 1 or (k == 2 and m >= 4)


def check_mixture(features: FeatureTensor, k: int, m: int | None = None, phi=None, tol: float | None = None) -> IdReport:
    """Sufficient-condition check for a k-component mixture with top-l data.

    ConditionallyIdentifiable needs full row rank, ``phi[m-1] > 0`` and a
    (k, m) pair for which standard PL mixtures are known to be identifiable
    (identifiability then holds up to relabelling the components).
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    m = features.m if m is None else m
    if m != features.m:
        raise DimensionError(f"m={m} disagrees with features (m={features.m})")
    base = check_plx(features, tol)
    if not base.full_row_rank:
        return IdReport(base.rank, False, base.tolerance, Verdict.NOT_IDENTIFIABLE, base.notes)
    if phi is None:
        last = 1.0
    else:
        last = check_phi(phi, m)[-1]
    if last <= 0.0:
        note = "full rank, but phi gives zero mass to complete rankings; sufficient condition does not apply"
        return IdReport(base.rank, True, base.tolerance, Verdict.UNKNOWN, note)
    if k >= 3:
        note = f"full rank; identifiability of {k}-component PL mixtures is open"
        return IdReport(base.rank, True, base.tolerance, Verdict.UNKNOWN, note)
    if not _kpl_known_identifiable(k, m):
        note = f"full rank; {k}-component PL mixtures over m={m} alternatives are not known to be identifiable"
        return IdReport(base.rank, True, base.tolerance, Verdict.UNKNOWN, note)
    note = "identifiable up to label switching" if k > 1 else "identifiable"
    return IdReport(base.rank, True, base.tolerance, Verdict.CONDITIONALLY_IDENTIFIABLE, note)


def null_direction(features: FeatureTensor, tol: float | None = None) -> np.ndarray | None:
    """A unit vector ``nu`` with ``Norm(X)^T nu = 0``, or None under full row rank.

    Taken from the left singular vector of the smallest singular value, with
    its largest-magnitude entry made positive so the result is reproducible.
    """
    A = normalize(features).matrix
    if numerical_rank(A, tol) == features.d:
        return None
    U, _, _ = np.linalg.svd(A, full_matrices=True)
    nu = U[:, -1]
    return nu if nu[np.argmax(np.abs(nu))] > 0 else -nu


def witness_beta(features: FeatureTensor, beta, scale: float = 1.0, tol: float | None = None) -> np.ndarray | None:
    """A second coefficient vector inducing the same order distribution as ``beta``."""
    nu = null_direction(features, tol)
    if nu is None:
        return None
    return np.asarray(beta, dtype=float) + scale * nu


def preference_signs(profile: Profile) -> np.ndarray:
    """``xi[j, a, b]``: +1 if order j puts a above b, -1 if below, 0 if unknown.

    A top-l order ranks its prefix above every unranked alternative; two
    unranked alternatives are incomparable. An l-way order says nothing
    about alternatives outside it.
    """
    n, m = len(profile), profile.m
    pos = np.full((n, m), m, dtype=np.int64)
    rows = np.arange(n)[:, None]
    pos[rows, profile.ranked] = np.arange(m)[None, :]
    lengths = profile.lengths[:, None]
    ranked = pos < lengths
    if profile.kind == "top-l":
        known = ranked[:, :, None] | ranked[:, None, :]
        rank_pos = np.where(ranked, pos, m)
    else:
        known = ranked[:, :, None] & ranked[:, None, :]
        rank_pos = pos
    sign = np.sign(rank_pos[:, None, :] - rank_pos[:, :, None])
    return np.where(known, sign, 0).astype(np.int8)


@dataclass(frozen=True)
class Assumption1Result:
    holds: bool
    witnesses: list = field(default_factory=list)
    missing: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.holds


def check_assumption1(features: FeatureTensor, profile: Profile) -> Assumption1Result:
    """Sign-diversity condition guaranteeing a bounded MLE.

    For every feature r we need two orders and a pair (a, b) such that
    ``xi * (x_a,r - x_b,r)`` is positive for one order and negative for the
    other. Each order counts as its own agent, so repeated orders from one
    agent can witness each other. ``witnesses[r]`` is ``(j1, j2, a, b)``.
    """
    profile.check_against(features)
    xi = preference_signs(profile).astype(float)
    X = features.values[profile.agents]
    gaps = X[:, :, None, :] - X[:, None, :, :]
    s = xi[:, :, :, None] * gaps
    pos = s > 0
    neg = s < 0
    both = pos.any(axis=0) & neg.any(axis=0)
    witnesses, missing = [], []
    for r in range(features.d):
        hits = np.argwhere(both[:, :, r])
        if len(hits) == 0:
            missing.append(r)
            witnesses.append(None)
            continue
        a, b = (int(t) for t in hits[0])
        j1 = int(np.argmax(pos[:, a, b, r]))
        j2 = int(np.argmax(neg[:, a, b, r]))
        witnesses.append((j1, j2, a, b))
    return Assumption1Result(not missing, witnesses, missing)


def rank_violation_frequency(feature_source: FeatureTensor, n_sub: int, trials: int, rng, tol: float | None = None) -> float:
    """Share of random agent subsets (without replacement) whose normalized features lose full row rank.

    Each subset is a prefix of a fresh random permutation, so calls that share
    a seed see nested subsets as ``n_sub`` grows and the estimates are
    nonincreasing in ``n_sub``.
    """
    if not 1 <= n_sub <= feature_source.n:
        raise ParameterError(f"n_sub must lie in [1, {feature_source.n}]")
    d = feature_source.d
    failures = 0
    for _ in range(trials):
        idx = rng.permutation(feature_source.n)[:n_sub]
        if numerical_rank(normalize(feature_source.subset(idx)).matrix, tol) < d:
            failures += 1
    return failures / trials
