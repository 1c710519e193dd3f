"""Core quantities of the boosting margin game.

The game matrix ``M`` has entries ``M[i, j] = +1`` when weak classifier
``j`` classifies training example ``i`` correctly and ``-1`` otherwise.
Everything else is a pure function of ``M``, a nonnegative coefficient
vector ``lam`` over its columns, or a weight distribution ``d`` over its
rows:

    exponential loss   F(lam)  = sum_i exp(-(M lam)_i)
    margin             mu(lam) = min_i (M lam)_i / s,   s = sum_j lam_j
    smooth margin      G(lam)  = -ln F(lam) / s
    edge               r_j     = (d^T M)_j

``G`` under-approximates ``mu`` and converges to it as ``s`` grows,
which is what makes it usable as a differentiable stand-in for the
margin.  All loss-like quantities are computed in shifted log space:
margins grow linearly with the iteration count, so raw exponentials
underflow within a few hundred boosting steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GameMatrix",
    "WeightDist",
    "ModelState",
    "IterationRecord",
    "uniform_weights",
    "log_exp_loss",
    "smooth_margin",
    "min_margin",
    "edges",
    "edge",
    "constant_edge_margin",
    "arctanh_edge",
    "update_weights",
    "predict_step",
    "shell_quadratic_form",
    "log_cosh",
    "UNIT_EDGE_TOL",
]

# |r| >= 1 - UNIT_EDGE_TOL means a (near) perfect or perfectly wrong
# classifier; arctanh diverges there, so every step rule rejects it.
UNIT_EDGE_TOL = 1e-12

_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GameMatrix:
    """Dense matrix of +-1 agreements between weak classifiers and labels.

    Rows index training examples (m >= 2), columns index weak
    classifiers (n >= 1).  No column may be all +1: a perfect weak
    classifier would make the learning problem trivial and puts the
    maximum margin at 1, outside the regime every formula here assumes.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2:
            raise ValueError("game matrix must be two-dimensional")
        m, n = a.shape
        if m < 2:
            raise ValueError(f"need at least 2 training examples, got {m}")
        if n < 1:
            raise ValueError("need at least 1 weak classifier")
        if not np.all(np.abs(a) == 1.0):
            raise ValueError("game matrix entries must be exactly -1 or +1")
        if np.any(np.all(a == 1.0, axis=0)):
            j = int(np.flatnonzero(np.all(a == 1.0, axis=0))[0])
            raise ValueError(f"column {j} is all +1 (perfect classifier)")
        object.__setattr__(self, "entries", a)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]


@dataclass(frozen=True, eq=False)
class WeightDist:
    """Point on the example simplex: nonnegative weights summing to 1."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > _SIMPLEX_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def uniform_weights(m: int) -> WeightDist:
    return WeightDist(np.full(m, 1.0 / m))


@dataclass(eq=False)
class ModelState:
    """Coefficient vector with cached 1-norm and margins.

    ``margins`` caches ``M lam`` so a boosting step costs O(m) instead
    of O(mn); ``revalidate`` recomputes it from scratch to bound the
    drift of the incremental updates.
    """

    lam: np.ndarray
    s: float
    margins: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.margins = np.asarray(self.margins, dtype=float)
        if np.any(self.lam < 0):
            raise ValueError("coefficients must be nonnegative")
        total = float(self.lam.sum())
        if abs(self.s - total) > 1e-10 * max(1.0, total):
            raise ValueError(f"cached s={self.s!r} disagrees with sum {total!r}")

    @classmethod
    def zero(cls, M: GameMatrix) -> "ModelState":
        return cls(np.zeros(M.n), 0.0, np.zeros(M.m))

    @classmethod
    def from_coeffs(cls, M: GameMatrix, lam) -> "ModelState":
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (M.n,):
            raise ValueError("coefficient vector length must match column count")
        return cls(lam, float(lam.sum()), M.entries @ lam)

    def bump(self, M: GameMatrix, j: int, alpha: float) -> "ModelState":
        """New state with ``alpha`` added to coefficient ``j`` (O(m))."""
        lam = self.lam.copy()
        lam[j] += alpha
        return ModelState(lam, self.s + alpha, self.margins + alpha * M.entries[:, j])

    def revalidate(self, M: GameMatrix, tol: float = 1e-8) -> None:
        exact = M.entries @ self.lam
        drift = float(np.max(np.abs(exact - self.margins))) if self.margins.size else 0.0
        if drift > tol:
            raise ValueError(f"cached margins drifted by {drift:g} (> {tol:g})")
        self.margins = exact


@dataclass(frozen=True)
class IterationRecord:
    """One row of a boosting trace.

    Describes the state at the *start* of iteration ``t`` (s, g, mu,
    log_loss all refer to the current coefficients) together with the
    action taken: chosen column ``j`` (-1 for an implicit column), its
    edge ``r``, ``gamma = arctanh(r)`` and the step ``alpha``.  ``g``
    and ``mu`` are NaN at t = 1 where s = 0 leaves them undefined.
    """

    t: int
    j: int
    r: float
    gamma: float
    alpha: float
    s: float
    g: float
    mu: float
    log_loss: float


def _log_sum_exp_neg(margins: np.ndarray) -> float:
    """ln sum_i exp(-margins_i), shifted so exponent args are <= 0."""
    lo = float(margins.min())
    return float(np.log(np.exp(lo - margins).sum())) - lo


def log_exp_loss(state: ModelState) -> float:
    """Natural log of the exponential loss; finite for any finite state."""
    return _log_sum_exp_neg(state.margins)


def min_margin(state: ModelState) -> float:
    """Minimum normalized margin over the examples; requires s > 0."""
    if state.s <= 0.0:
        raise ValueError("margin is undefined at s = 0")
    return float(state.margins.min()) / state.s


def smooth_margin(state: ModelState) -> float:
    """Smooth margin G = -ln F / s, via the shift-stable form.

    Computed as mu - ln(sum_i exp(-(margins_i - min margins))) / s so
    the exponentials never overflow; satisfies
    ``-ln(m)/s + mu <= G < mu`` exactly.
    """
    if state.s <= 0.0:
        raise ValueError("smooth margin is undefined at s = 0")
    lo = float(state.margins.min())
    shifted = float(np.log(np.exp(lo - state.margins).sum()))
    return (lo - shifted) / state.s


def edges(M: GameMatrix, d) -> np.ndarray:
    """All column edges (d^T M)_j as a vector."""
    w = d.weights if isinstance(d, WeightDist) else np.asarray(d, dtype=float)
    return w @ M.entries


def edge(M: GameMatrix, d, j: int) -> float:
    """Edge of column j: weighted correct minus weighted incorrect."""
    w = d.weights if isinstance(d, WeightDist) else np.asarray(d, dtype=float)
    return float(w @ M.entries[:, j])


def constant_edge_margin(r: float) -> float:
    """Margin value that a run with every edge equal to r settles at.

    Equals -ln(1 - r^2) / ln((1 + r)/(1 - r)), the average of tanh over
    [0, arctanh r].  Strictly increasing on (0, 1) with
    r/2 < value < r.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"edge must lie strictly inside (0, 1), got {r!r}")
    # -0.5*log1p(-r^2) keeps precision for small r.
    return -0.5 * math.log1p(-r * r) / math.atanh(r)


def arctanh_edge(r: float) -> float:
    """arctanh of an edge, rejecting degenerate |r| ~ 1."""
    if abs(r) >= 1.0 - UNIT_EDGE_TOL:
        raise ValueError(f"degenerate edge {r!r}: |r| must stay below 1 - 1e-12")
    return math.atanh(r)


def update_weights(d, column: np.ndarray, alpha: float) -> WeightDist:
    """Multiplicative reweighting d_i <- d_i exp(-column_i * alpha) / z.

    ``column`` is the +-1 agreement vector of the selected classifier;
    the normalizer z restores the simplex.  alpha = 0 returns d
    unchanged.
    """
    w = d.weights if isinstance(d, WeightDist) else np.asarray(d, dtype=float)
    if not math.isfinite(alpha):
        raise ValueError("step size must be finite")
    if alpha == 0.0:
        return d if isinstance(d, WeightDist) else WeightDist(w)
    col = np.asarray(column, dtype=float)
    scaled = w * np.exp(-alpha * col)
    return WeightDist(scaled / scaled.sum())


def log_cosh(x: float) -> float:
    """ln cosh x without overflow for large |x|."""
    ax = abs(x)
    return ax - math.log(2.0) + math.log1p(math.exp(-2.0 * ax))


def predict_step(log_loss: float, g: float, s: float, gamma: float,
                 alpha: float) -> tuple[float, float]:
    """Post-step (ln F, G) from pre-step scalars alone.

    One coordinate step of size alpha on a column with edge tanh(gamma)
    multiplies F by cosh(gamma - alpha)/cosh(gamma), hence

        ln F' = ln F + ln cosh(gamma - alpha) - ln cosh(gamma)
        G'    = (s G + ln cosh(gamma) - ln cosh(gamma - alpha)) / (s + alpha)

    Independent of any matrix, which makes it usable as an oracle
    against direct recomputation from the margins.
    """
    if s + alpha <= 0.0:
        raise ValueError("post-step 1-norm must be positive")
    gain = log_cosh(gamma) - log_cosh(gamma - alpha)
    return log_loss - gain, (s * g + gain) / (s + alpha)


def shell_quadratic_form(M: GameMatrix, state: ModelState, w: np.ndarray) -> float:
    """Second derivative of G along a sum-zero direction w, in closed form.

    Directions with sum_j w_j = 0 keep the 1-norm fixed, so this is the
    curvature of G on the shell through ``state``.  It is <= 0 for
    every such w (Cauchy-Schwarz), with equality exactly when (M w)_i
    is constant over i.
    """
    if state.s <= 0.0:
        raise ValueError("shell curvature is undefined at s = 0")
    w = np.asarray(w, dtype=float)
    if abs(float(w.sum())) > _SIMPLEX_TOL:
        raise ValueError("direction must have zero component sum")
    # Common factor exp(-min margin) cancels between numerator and F^2.
    u = np.exp(float(state.margins.min()) - state.margins)
    mw = M.entries @ w
    s0 = float(u.sum())
    s1 = float((mw * u).sum())
    s2 = float((mw * mw * u).sum())
    return (-s2 * s0 + s1 * s1) / (s0 * s0 * state.s)
