"""Weak learner contract and four concrete selectors.

A weak learner maps the current weight distribution to a column of the
game matrix, either by index (``optimal``, ``goal-edge``) or as an
implicit +-1 vector built on the fly (``bounded-edge``, whose full
column space would be astronomically large if materialized).  The
``scripted`` learner returns a bare edge value with no column at all;
it feeds the matrix-free recursion runs in :mod:`smoothboost.dynamics`.

All selectors are stateless and deterministic: ties break toward the
lowest column index, and the bounded-edge sort is stable, so traces and
cycles are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GameMatrix, WeightDist, edges, update_weights, arctanh_edge

__all__ = [
    "WeakSelection",
    "BoundedEdgeParams",
    "optimal_select",
    "goal_edge_select",
    "bounded_edge_select",
    "prefix_weight_map",
    "scripted_edge",
    "weight_ratio_stat",
    "OptimalLearner",
    "GoalEdgeLearner",
    "BoundedEdgeLearner",
    "ScriptedLearner",
]

# Prefix-edge comparisons against the target must tolerate the rounding
# of the weight entries themselves (an exact tie, e.g. the uniform
# start, can land either side of the threshold by a few ulp).
_THRESHOLD_SNAP = 1e-9


def _weights_of(d) -> np.ndarray:
    return d.weights if isinstance(d, WeightDist) else np.asarray(d, dtype=float)


@dataclass(frozen=True, eq=False)
class WeakSelection:
    """A chosen weak classifier: its +-1 column, index, and edge.

    ``index`` is the column position in the game matrix, or -1 for an
    implicit column that exists only as the vector itself.
    """

    column: np.ndarray
    index: int
    r: float


@dataclass(frozen=True)
class BoundedEdgeParams:
    """Admissible parameters for the bounded-edge construction.

    The construction keeps every realized edge inside
    [rho_bar, rho_bar + sigma].  That guarantee needs a ratio cap
    phi >= (1 + rho_bar + sigma) / (1 - rho_bar - sigma), at least
    m >= 2 phi / sigma examples, and m (rho_bar + 1) / 2 integral (the
    largest number of +1 entries any emitted column may carry).
    """

    rho_bar: float
    sigma: float
    phi: float
    m: int
    cap: int

    def __post_init__(self):
        if not 0.0 < self.rho_bar < 1.0:
            raise ValueError("target edge must lie in (0, 1)")
        if self.sigma <= 0.0:
            raise ValueError("width sigma must be positive")
        if self.rho_bar + self.sigma >= 1.0:
            raise ValueError("rho_bar + sigma must stay below 1")
        phi_min = (1.0 + self.rho_bar + self.sigma) / (1.0 - self.rho_bar - self.sigma)
        if self.phi < phi_min - 1e-12:
            raise ValueError(f"ratio cap phi={self.phi:g} below required {phi_min:g}")
        if self.m < 2.0 * self.phi / self.sigma - 1e-9:
            raise ValueError(
                f"m={self.m} too small: need m >= 2 phi / sigma = "
                f"{2.0 * self.phi / self.sigma:g} "
                f"(smallest admissible m is {self.suggest_m(self.rho_bar, self.sigma, self.phi)})"
            )
        exact_cap = self.m * (self.rho_bar + 1.0) / 2.0
        if abs(exact_cap - round(exact_cap)) > 1e-9:
            raise ValueError(
                f"m (rho_bar + 1) / 2 = {exact_cap:g} is not an integer "
                f"(smallest admissible m is {self.suggest_m(self.rho_bar, self.sigma, self.phi)})"
            )
        if self.cap != round(exact_cap):
            raise ValueError(f"cap must equal m (rho_bar + 1) / 2 = {round(exact_cap)}")

    @staticmethod
    def suggest_m(rho_bar: float, sigma: float, phi: float | None = None) -> int:
        if phi is None:
            phi = (1.0 + rho_bar + sigma) / (1.0 - rho_bar - sigma)
        m = max(2, math.ceil(2.0 * phi / sigma - 1e-9))
        while True:
            cap = m * (rho_bar + 1.0) / 2.0
            if abs(cap - round(cap)) <= 1e-9:
                return m
            m += 1

    @classmethod
    def admissible(cls, rho_bar: float, sigma: float, m: int | None = None,
                   phi: float | None = None) -> "BoundedEdgeParams":
        """Build params, choosing the smallest valid phi and m when omitted."""
        if phi is None:
            phi = (1.0 + rho_bar + sigma) / (1.0 - rho_bar - sigma)
        if m is None:
            m = cls.suggest_m(rho_bar, sigma, phi)
        cap = int(round(m * (rho_bar + 1.0) / 2.0))
        return cls(rho_bar, sigma, phi, m, cap)


def optimal_select(M: GameMatrix, d) -> WeakSelection:
    """Column of maximum edge; ties go to the lowest index."""
    e = edges(M, d)
    j = int(np.argmax(e))
    return WeakSelection(M.entries[:, j], j, float(e[j]))


def goal_edge_select(M: GameMatrix, d, r_goal: float) -> WeakSelection:
    """Among columns with strictly positive edge, the one closest to r_goal.

    A nonpositive edge would stall or reverse the run (arctanh of the
    edge is the natural step scale), so those columns are filtered out
    first; if none remain the run cannot proceed and this raises.
    """
    if not 0.0 < r_goal < 1.0:
        raise ValueError("goal edge must lie in (0, 1)")
    e = edges(M, d)
    ok = np.flatnonzero(e > 0.0)
    if ok.size == 0:
        raise ValueError("no column has positive edge; run cannot proceed")
    j = int(ok[np.argmin(np.abs(e[ok] - r_goal))])
    return WeakSelection(M.entries[:, j], j, float(e[j]))


def bounded_edge_select(d, params: BoundedEdgeParams) -> WeakSelection:
    """Implicit column meeting the target edge with the shortest prefix.

    Sorts the examples by weight (descending, stable) and emits the
    column that is +1 exactly on the smallest prefix whose edge
    2 * (prefix weight) - 1 reaches rho_bar.  Under the admissibility
    constraints the prefix never exceeds ``cap`` entries and the
    realized edge stays within [rho_bar, rho_bar + sigma].
    """
    w = _weights_of(d)
    if w.shape[0] != params.m:
        raise ValueError(f"distribution has {w.shape[0]} entries, params expect {params.m}")
    order = np.argsort(-w, kind="stable")
    prefix_edges = 2.0 * np.cumsum(w[order]) - 1.0
    k = int(np.searchsorted(prefix_edges, params.rho_bar - _THRESHOLD_SNAP, side="left"))
    if k >= w.shape[0]:
        raise ValueError("no prefix reaches the target edge (weights not normalized?)")
    i_bar = k + 1
    if i_bar > params.cap:
        raise ValueError(
            f"prefix length {i_bar} exceeds cap {params.cap}; "
            "admissibility invariants were violated upstream"
        )
    column = np.full(params.m, -1.0)
    column[order[:i_bar]] = 1.0
    return WeakSelection(column, -1, float(prefix_edges[k]))


def prefix_weight_map(d, i_bar: int, r: float) -> WeightDist:
    """Closed-form reweighting after a step on a prefix column.

    For weights already sorted descending (as ``bounded_edge_select``
    consumes them), a step of arctanh(r) on the column that is +1 on
    the first ``i_bar`` entries divides those weights by (1 + r) and
    the rest by (1 - r).  The result lands back on the simplex exactly
    when r is the realized prefix edge.
    """
    if not 0.0 < r < 1.0:
        raise ValueError("edge must lie in (0, 1)")
    w = _weights_of(d)
    if not 1 <= i_bar <= w.shape[0]:
        raise ValueError("prefix length out of range")
    out = np.concatenate([w[:i_bar] / (1.0 + r), w[i_bar:] / (1.0 - r)])
    return WeightDist(out)


def scripted_edge(script, t: int, cycle: bool = False) -> float:
    """Edge value at step t (0-based) from a prescribed script."""
    seq = np.atleast_1d(np.asarray(script, dtype=float))
    if cycle or seq.shape[0] == 1:
        return float(seq[t % seq.shape[0]])
    if t >= seq.shape[0]:
        raise IndexError(f"script of length {seq.shape[0]} exhausted at step {t}")
    return float(seq[t])


def weight_ratio_stat(d, phi: float) -> float:
    """max(max_i d_i / min_i d_i, phi); equals phi while the cap holds."""
    w = _weights_of(d)
    return max(float(w.max() / w.min()), phi)


class OptimalLearner:
    """Maximum-edge selection at every round."""

    def select(self, M: GameMatrix, d: np.ndarray, t: int) -> WeakSelection:
        return optimal_select(M, d)


class GoalEdgeLearner:
    """Selection of the positive edge closest to a fixed goal."""

    def __init__(self, goal: float):
        if not 0.0 < goal < 1.0:
            raise ValueError("goal edge must lie in (0, 1)")
        self.goal = goal

    def select(self, M: GameMatrix, d: np.ndarray, t: int) -> WeakSelection:
        return goal_edge_select(M, d, self.goal)


class BoundedEdgeLearner:
    """Implicit prefix columns with edges pinned to [rho_bar, rho_bar + sigma]."""

    def __init__(self, params: BoundedEdgeParams):
        self.params = params

    @property
    def m(self) -> int:
        return self.params.m

    def select(self, M: GameMatrix | None, d: np.ndarray, t: int) -> WeakSelection:
        return bounded_edge_select(d, self.params)


class ScriptedLearner:
    """Edges read off a script; produces no column.

    Only usable with the matrix-free recursion runner: there is nothing
    to update a weight distribution with.
    """

    def __init__(self, script, cycle: bool = False):
        self.script = np.atleast_1d(np.asarray(script, dtype=float))
        if np.any(self.script <= 0.0) or np.any(self.script >= 1.0):
            raise ValueError("scripted edges must lie in (0, 1)")
        self.cycle = cycle

    def edge_at(self, t: int) -> float:
        return scripted_edge(self.script, t, self.cycle)


def check_prefix_map_consistency(d_sorted: np.ndarray, i_bar: int) -> tuple[WeightDist, WeightDist]:
    """Both routes to the post-step weights of a prefix column.

    Returns (closed-form map, exponential update) for the column that
    is +1 on the first ``i_bar`` sorted entries, using the realized
    prefix edge.  The two must agree entrywise; used as a
    cross-implementation oracle in the tests.
    """
    w = np.asarray(d_sorted, dtype=float)
    r = float(2.0 * w[:i_bar].sum() - 1.0)
    column = np.full(w.shape[0], -1.0)
    column[:i_bar] = 1.0
    mapped = prefix_weight_map(w, i_bar, r)
    updated = update_weights(w, column, arctanh_edge(r))
    return mapped, updated
