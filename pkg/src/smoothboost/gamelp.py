"""Exact maximum-margin oracle via the zero-sum game linear program.

The maximum margin rho is the value of the matrix game

    min over d in the example simplex of the maximum edge
        = max over lam in the classifier simplex of the minimum margin.

Shifting M by +2 makes every entry positive, so the game value v = rho + 2
is positive and the classic normalization applies: with A = (M + 2)^T,

    maximize sum(w)  subject to  A w <= 1, w >= 0

has optimum 1/v, the normalized w is the optimal d, and the LP dual
variables normalize to the optimal lam.  The all-slack basis is feasible,
so a single phase of the simplex method solves both sides at once.

Bland's smallest-index pivoting rule guarantees termination under
degeneracy at the cost of speed, which is irrelevant at the few-hundred
row scale this module targets.  Solutions are certified a posteriori by
plugging both simplex points into the original +-1 matrix: the gap
between the dual and primal objective values bounds how far the reported
rho can be from the true game value.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import GameMatrix

__all__ = ["LPSolution", "max_margin", "brute_force_value"]

_ENTER_TOL = 1e-10
_PIVOT_TOL = 1e-9
_GAP_TARGET = 1e-9
_MAX_PIVOTS = 50_000
_FEAS_SLACK = 1e-7


class SimplexStall(ArithmeticError):
    pass


def _simplex_max(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximize c.x s.t. A x <= b, x >= 0 with b >= 0; returns (x, duals).

    Dense tableau with Bland's rule (smallest variable index enters,
    smallest-index basic variable leaves on ratio ties).  Heavily
    degenerate instances can erode the tableau numerically; the
    right-hand side is therefore clamped against rounding-induced
    negatives and any objective regression raises :class:`SimplexStall`
    so the caller can retry on a permuted copy.
    """
    n_rows, n_cols = A.shape
    T = np.zeros((n_rows + 1, n_cols + n_rows + 1))
    T[:-1, :n_cols] = A
    T[:-1, n_cols:-1] = np.eye(n_rows)
    T[:-1, -1] = b
    T[-1, :n_cols] = c
    basis = list(range(n_cols, n_cols + n_rows))
    objective = 0.0

    for _ in range(_MAX_PIVOTS):
        reduced = T[-1, :-1]
        candidates = np.flatnonzero(reduced > _ENTER_TOL)
        if candidates.size == 0:
            break
        enter = int(candidates[0])  # Bland: smallest variable index
        col = T[:-1, enter]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise SimplexStall("unbounded game LP (cannot happen for valid input)")
        rhs = np.maximum(T[rows, -1], 0.0)
        ratios = rhs / col[rows]
        best = float(ratios.min())
        near = rows[ratios <= best + 1e-9 * (1.0 + best)]
        leave_row = int(min(near, key=lambda i: basis[i]))  # Bland on ties
        piv = T[leave_row, enter]
        T[leave_row] /= piv
        others = np.flatnonzero(np.arange(n_rows + 1) != leave_row)
        T[others] -= np.outer(T[others, enter], T[leave_row])
        basis[leave_row] = enter
        rhs_col = T[:-1, -1]
        if float(rhs_col.min()) < -_FEAS_SLACK:
            raise SimplexStall("lost primal feasibility (degenerate erosion)")
        np.maximum(rhs_col, 0.0, out=rhs_col)
        new_objective = -float(T[-1, -1])
        if new_objective < objective - _FEAS_SLACK:
            raise SimplexStall("objective regressed (degenerate erosion)")
        objective = new_objective
    else:
        raise SimplexStall(f"no optimum after {_MAX_PIVOTS} pivots")

    x = np.zeros(n_cols + n_rows)
    x[basis] = T[:-1, -1]
    duals = -T[-1, n_cols:-1]  # reduced costs of the slacks
    return x[:n_cols], duals


@dataclass(frozen=True)
class LPSolution:
    """Certified game value with optimal strategies for both players.

    ``rho`` is the midpoint of the primal value min_i (M lam*)_i and the
    dual value max_j (d*^T M)_j; ``gap`` is their difference.  A gap
    above 1e-9 means certification failed and rho should be treated as
    an estimate only.
    """

    rho: float
    lambda_star: np.ndarray
    d_star: np.ndarray
    gap: float
    primal_value: float
    dual_value: float

    @property
    def separable(self) -> bool:
        return self.rho > 0.0


def _solve_once(M: np.ndarray) -> LPSolution:
    shifted = M + 2.0  # entries in {1, 3}, so the game value is in [1, 3]
    w, y = _simplex_max(shifted.T, np.ones(M.shape[1]), np.ones(M.shape[0]))
    w_total = float(w.sum())
    y_total = float(y.sum())
    if w_total <= 0.0 or y_total <= 0.0:
        raise SimplexStall("degenerate normalization in game LP")
    d_star = w / w_total
    lambda_star = y / y_total
    primal = float((M @ lambda_star).min())
    dual = float((d_star @ M).max())
    return LPSolution(
        rho=0.5 * (primal + dual),
        lambda_star=lambda_star,
        d_star=d_star,
        gap=abs(dual - primal),
        primal_value=primal,
        dual_value=dual,
    )


def max_margin(M: GameMatrix, max_retries: int = 3) -> LPSolution:
    """Maximum margin of the game matrix with a certified duality gap.

    Retries on permuted copies of the matrix if the first solve does not
    certify to 1e-9 (a different pivot path usually does); returns the
    best-gap solution either way rather than failing, so callers must
    check ``gap`` when they need the certificate.
    """
    A = M.entries
    best: LPSolution | None = None
    rng = np.random.default_rng(0)
    for attempt in range(max_retries + 1):
        if attempt == 0:
            perm = np.arange(A.shape[0])
        else:
            perm = rng.permutation(A.shape[0])
        try:
            sol = _solve_once(A[perm])
        except SimplexStall:
            continue
        if best is None or sol.gap < best.gap:
            best = sol
        if best.gap <= _GAP_TARGET:
            break
    if best is None:
        raise SimplexStall("simplex failed on every attempt")
    return best


def brute_force_value(M: GameMatrix, grid: int) -> float:
    """Best minimum margin over a barycentric grid of the lam simplex.

    Exhaustive enumeration with ``grid`` subdivisions per coordinate;
    a lower bound on the true maximum margin within O(1/grid).  Only
    meant as an independent oracle for tiny column counts.
    """
    if M.n > 4:
        raise ValueError("brute force enumeration is limited to n <= 4 columns")
    if M.n > 1 and grid < 10:
        raise ValueError("grid must be at least 10")
    A = M.entries
    if M.n == 1:
        return float(A[:, 0].min())

    best = -math.inf
    # Enumerate integer compositions of `grid`; the last coordinate is
    # vectorized so the loop body stays in numpy.
    outer_axes = M.n - 2
    for head in itertools.product(range(grid + 1), repeat=outer_axes):
        used = sum(head)
        if used > grid:
            continue
        k_penult = np.arange(grid - used + 1)
        k_last = grid - used - k_penult
        lam_head = sum(A[:, i] * (k / grid) for i, k in enumerate(head)) \
            if outer_axes else np.zeros(M.m)
        margins = (
            lam_head[:, None]
            + A[:, [M.n - 2]] * (k_penult / grid)
            + A[:, [M.n - 1]] * (k_last / grid)
        )
        best = max(best, float(margins.min(axis=0).max()))
    return best
