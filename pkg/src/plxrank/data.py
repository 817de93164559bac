"""Core value types: features, orders, profiles and parameter containers.

Indices are 0-based throughout the Python API. The text formats in
:mod:`plxrank.io` use 1-based indices and convert at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, ParameterError

SIMPLEX_TOL = 1e-12

TOP_L = "top-l"
L_WAY = "l-way"


@dataclass(frozen=True)
class FeatureTensor:
    """Per-agent feature matrices stored as ``values[agent, alternative, feature]``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 3:
            raise DimensionError(f"feature tensor must be 3-d (n, m, d), got shape {v.shape}")
        n, m, d = v.shape
        if n < 1 or m < 2 or d < 1:
            raise DimensionError(f"need n >= 1, m >= 2, d >= 1; got n={n}, m={m}, d={d}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("feature tensor contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def d(self) -> int:
        return self.values.shape[2]

    @property
    def spread(self) -> float:
        """Largest minus smallest entry over the whole tensor."""
        return float(self.values.max() - self.values.min())

    def matrix(self) -> np.ndarray:
        """The d x (m n) layout ``[X_1, ..., X_n]`` with ``X_j`` of shape d x m."""
        return self.values.transpose(2, 0, 1).reshape(self.d, self.n * self.m)

    def subset(self, agents: Sequence[int]) -> "FeatureTensor":
        return FeatureTensor(self.values[np.asarray(agents, dtype=int)])

    def shifted(self, agent: int, offset: np.ndarray) -> "FeatureTensor":
        """Add ``offset`` to every alternative's features of one agent."""
        v = self.values.copy()
        v[agent] += np.asarray(offset, dtype=float)
        return FeatureTensor(v)


@dataclass(frozen=True)
class BilinearFeatures:
    """Agent features ``Y`` (L x n) and alternative features ``Z`` (K x m)."""

    Y: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        Y = np.atleast_2d(np.array(self.Y, dtype=float))
        Z = np.atleast_2d(np.array(self.Z, dtype=float))
        if Y.ndim != 2 or Z.ndim != 2:
            raise DimensionError("Y and Z must be matrices")
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(Z))):
            raise ParameterError("bilinear features contain non-finite entries")
        Y.setflags(write=False)
        Z.setflags(write=False)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Z", Z)

    @property
    def L(self) -> int:
        return self.Y.shape[0]

    @property
    def K(self) -> int:
        return self.Z.shape[0]

    @property
    def n(self) -> int:
        return self.Y.shape[1]

    @property
    def m(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class TopLOrder:
    """``prefix[0] > prefix[1] > ... > prefix[l-1] > others`` reported by ``agent``."""

    agent: int
    prefix: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(i) for i in self.prefix))
        object.__setattr__(self, "agent", int(self.agent))

    @property
    def length(self) -> int:
        return len(self.prefix)

    def validate(self, m: int) -> None:
        _check_indices(self.prefix, m)
        if not 1 <= len(self.prefix) <= m - 1:
            raise DimensionError(f"top-l order needs 1 <= l <= m-1 = {m - 1}, got l={len(self.prefix)}")


@dataclass(frozen=True)
class LWayOrder:
    """A linear order over the subset ``ranking`` of the alternatives."""

    agent: int
    ranking: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranking", tuple(int(i) for i in self.ranking))
        object.__setattr__(self, "agent", int(self.agent))

    @property
    def length(self) -> int:
        return len(self.ranking)

    def validate(self, m: int) -> None:
        _check_indices(self.ranking, m)
        if not 2 <= len(self.ranking) <= m:
            raise DimensionError(f"l-way order needs 2 <= l <= m = {m}, got l={len(self.ranking)}")


def _check_indices(items: Sequence[int], m: int) -> None:
    if len(set(items)) != len(items):
        raise DimensionError(f"order repeats an alternative: {tuple(items)}")
    for i in items:
        if not 0 <= i < m:
            raise DimensionError(f"alternative index {i} out of range [0, {m})")


class Profile:
    """A collection of orders stored as padded integer arrays.

    ``ranked[j]`` lists order ``j``'s alternatives first (in preference order)
    followed by the alternatives it does not rank, ascending. ``lengths[j]``
    is the number of ranked alternatives.
    """

    def __init__(self, agents, ranked, lengths, m: int, kind: str = TOP_L):
        if kind not in (TOP_L, L_WAY):
            raise ParameterError(f"unknown profile kind {kind!r}")
        agents = np.asarray(agents, dtype=np.int64).reshape(-1)
        ranked = np.asarray(ranked, dtype=np.int64).reshape(len(agents), m)
        lengths = np.asarray(lengths, dtype=np.int64).reshape(-1)
        if len(lengths) != len(agents):
            raise DimensionError("agents and lengths disagree in size")
        if np.any(agents < 0):
            raise DimensionError("negative agent index")
        if len(agents):
            if not np.array_equal(np.sort(ranked, axis=1), np.broadcast_to(np.arange(m), ranked.shape)):
                raise DimensionError("each row of ranked must be a permutation of the alternatives")
            lo, hi = (1, m - 1) if kind == TOP_L else (2, m)
            if lengths.min() < lo or lengths.max() > hi:
                raise DimensionError(f"{kind} order lengths must lie in [{lo}, {hi}]")
        for a in (agents, ranked, lengths):
            a.setflags(write=False)
        self.agents = agents
        self.ranked = ranked
        self.lengths = lengths
        self.m = int(m)
        self.kind = kind

    @classmethod
    def from_orders(cls, orders: Iterable[TopLOrder | LWayOrder], m: int, kind: str | None = None) -> "Profile":
        orders = list(orders)
        if kind is None:
            kind = L_WAY if orders and isinstance(orders[0], LWayOrder) else TOP_L
        agents, ranked, lengths = [], [], []
        for o in orders:
            items = o.ranking if isinstance(o, LWayOrder) else o.prefix
            if kind == TOP_L:
                TopLOrder(o.agent, items).validate(m)
            else:
                LWayOrder(o.agent, items).validate(m)
            seen = set(items)
            agents.append(o.agent)
            ranked.append(list(items) + [i for i in range(m) if i not in seen])
            lengths.append(len(items))
        return cls(agents, np.array(ranked, dtype=np.int64).reshape(len(orders), m), lengths, m, kind)

    def __len__(self) -> int:
        return len(self.agents)

    def __iter__(self) -> Iterator[TopLOrder | LWayOrder]:
        return iter(self.orders)

    def __getitem__(self, j: int) -> TopLOrder | LWayOrder:
        items = tuple(int(i) for i in self.ranked[j, : self.lengths[j]])
        if self.kind == TOP_L:
            return TopLOrder(int(self.agents[j]), items)
        return LWayOrder(int(self.agents[j]), items)

    @property
    def orders(self) -> list[TopLOrder | LWayOrder]:
        return [self[j] for j in range(len(self))]

    @property
    def n(self) -> int:
        return len(self.agents)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Profile):
            return NotImplemented
        return (
            self.m == other.m
            and self.kind == other.kind
            and np.array_equal(self.agents, other.agents)
            and np.array_equal(self.lengths, other.lengths)
            and all(
                np.array_equal(self.ranked[j, : self.lengths[j]], other.ranked[j, : other.lengths[j]])
                for j in range(len(self))
            )
        )

    def __repr__(self) -> str:
        return f"Profile(kind={self.kind!r}, m={self.m}, n={len(self)})"

    def check_against(self, features: FeatureTensor) -> None:
        """Raise unless every order addresses an agent row of ``features``."""
        if features.m != self.m:
            raise DimensionError(f"profile has m={self.m} but features have m={features.m}")
        if len(self) and self.agents.max() >= features.n:
            j = int(np.argmax(self.agents >= features.n))
            raise DimensionError(
                f"order {j} references agent {int(self.agents[j])} but features hold {features.n} agents"
            )

    def select(self, idx) -> "Profile":
        idx = np.asarray(idx)
        return Profile(self.agents[idx], self.ranked[idx], self.lengths[idx], self.m, self.kind)

    def concat(self, other: "Profile") -> "Profile":
        if other.m != self.m or other.kind != self.kind:
            raise DimensionError("cannot concatenate profiles of different m or kind")
        return Profile(
            np.concatenate([self.agents, other.agents]),
            np.concatenate([self.ranked, other.ranked]),
            np.concatenate([self.lengths, other.lengths]),
            self.m,
            self.kind,
        )

    def reversed(self) -> "Profile":
        """Every order with its ranked part reversed (meaningful for full rankings)."""
        ranked = self.ranked.copy()
        for j, l in enumerate(self.lengths):
            ranked[j, :l] = ranked[j, :l][::-1]
        return Profile(self.agents, ranked, self.lengths, self.m, self.kind)

    def as_lway(self) -> "Profile":
        """View complete top-(m-1) orders as l-way orders over all m alternatives."""
        if self.kind == L_WAY:
            return self
        if len(self) and np.any(self.lengths != self.m - 1):
            raise DimensionError("only complete top-(m-1) orders can be read as l-way rankings")
        return Profile(self.agents, self.ranked, np.full(len(self), self.m), self.m, L_WAY)


def check_phi(phi, m: int | None = None) -> np.ndarray:
    """Validate a length distribution over l = 1..m-1 and return it as an array."""
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if m is not None and phi.shape[0] != m - 1:
        raise DimensionError(f"phi must have length m-1 = {m - 1}, got {phi.shape[0]}")
    if np.any(phi < 0) or not np.all(np.isfinite(phi)):
        raise ParameterError("phi must be finite and nonnegative")
    if abs(phi.sum() - 1.0) > SIMPLEX_TOL:
        raise ParameterError(f"phi must sum to 1, sums to {phi.sum()!r}")
    return phi


@dataclass(frozen=True)
class MixtureParams:
    """Mixing weights, one coefficient vector per component, and the length distribution."""

    alpha: np.ndarray
    betas: np.ndarray
    phi: np.ndarray = field(default=None)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        if betas.shape[0] != alpha.shape[0]:
            raise DimensionError(f"{alpha.shape[0]} mixing weights but {betas.shape[0]} components")
        if alpha.shape[0] < 1:
            raise ParameterError("need k >= 1 components")
        if np.any(alpha < 0) or abs(alpha.sum() - 1.0) > SIMPLEX_TOL:
            raise ParameterError(f"alpha must lie on the simplex, got {alpha}")
        if not np.all(np.isfinite(betas)):
            raise ParameterError("component coefficients must be finite")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "betas", betas)
        if self.phi is not None:
            object.__setattr__(self, "phi", check_phi(self.phi))

    @classmethod
    def single(cls, beta, phi=None) -> "MixtureParams":
        return cls(np.ones(1), np.asarray(beta, dtype=float)[None, :], phi)

    @property
    def k(self) -> int:
        return self.alpha.shape[0]

    @property
    def d(self) -> int:
        return self.betas.shape[1]

    def permuted(self, perm: Sequence[int]) -> "MixtureParams":
        perm = list(perm)
        return MixtureParams(self.alpha[perm], self.betas[perm], self.phi)


def as_mixture(params) -> MixtureParams:
    """Accept a MixtureParams or a bare coefficient vector."""
    if isinstance(params, MixtureParams):
        return params
    return MixtureParams.single(np.asarray(params, dtype=float).reshape(-1))
