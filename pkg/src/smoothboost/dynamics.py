"""Cycle diagnostics and matrix-free recursion simulators.

Adaboost's weight vectors can settle into a periodic orbit; this module
detects such cycles in a trace, extracts the per-cycle invariants
(support set, equal edges, correct-classification counts, the product
condition each support vector must satisfy), and provides two
matrix-free simulators:

* :func:`constant_edge_recursion` iterates the exact two-variable
  (s, g) recursion of the approximate coordinate ascent rule when every
  edge equals a constant rho, the setting whose t^(-1/3) decay makes
  the general convergence rate sharp.
* :func:`recursion_run` drives any step rule from scripted edges using
  only the one-step (ln F, G) recursions, no matrix involved.

Both exist to be cross-checked against each other and against real
matrix runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .boosting import RunConfig, RunResult, StepRule, ascent_line_search
from .core import GameMatrix, IterationRecord, constant_edge_margin, arctanh_edge, predict_step
from .learners import ScriptedLearner

__all__ = [
    "DetectedCycle",
    "CycleReport",
    "MonotonicityReport",
    "RecursionTrace",
    "detect_cycle",
    "cycle_diagnostics",
    "scan_monotonicity",
    "constant_edge_recursion",
    "recursion_run",
    "DecayFit",
    "fit_decay_exponent",
]


@dataclass(frozen=True)
class DetectedCycle:
    """Minimal period and the earliest index from which it holds."""

    period: int
    start: int
    max_gap: float  # worst infinity-norm mismatch inside the verified window
    tol: float


@dataclass(frozen=True)
class CycleReport:
    """Per-cycle invariants extracted from a detected orbit.

    ``tau`` counts, for each support vector, the iterations of one
    period whose chosen column classifies it correctly; the
    ``condition_residuals`` measure how far each support vector is from
    satisfying prod_t (1 + M[i, j_t] r_t) = 1 over the period.
    """

    period: int
    start: int
    cycle_edges: np.ndarray
    support_set: tuple[int, ...]
    tau: dict[int, int]
    condition_residuals: dict[int, float]
    edges_equal: bool
    tau_uniform: Optional[bool]


@dataclass(frozen=True)
class MonotonicityReport:
    increases: int
    decreases: int
    flats: int
    per_period_decreases: Optional[list[int]] = None


def detect_cycle(weight_trace: np.ndarray, tol: float = 1e-9,
                 max_period: int = 64) -> Optional[DetectedCycle]:
    """Smallest period T with d[t + T] ~ d[t] over a late window.

    Scans periods in increasing order (so the returned period is
    minimal, never a multiple of a shorter one) and anchors the check
    at the end of the trace, where a converging orbit is closest to its
    limit: T is accepted when the last 2T comparison pairs all match
    within ``tol`` in the infinity norm.  ``start`` is then pushed as
    far back as the tolerance keeps holding.  Returns None when no
    period fits, which is a legitimate outcome.
    """
    d = np.asarray(weight_trace, dtype=float)
    L = d.shape[0]
    if L < 2 * max_period:
        raise ValueError(f"trace of length {L} too short for max_period {max_period}")
    for period in range(1, max_period + 1):
        window = 2 * period
        first = L - period - window
        if first < 0:
            break
        gaps = np.abs(d[first + period:L] - d[first:L - period]).max(axis=1)
        if gaps.max() <= tol:
            start = first
            while start > 0 and np.abs(d[start - 1 + period] - d[start - 1]).max() <= tol:
                start -= 1
            return DetectedCycle(period=period, start=start,
                                 max_gap=float(gaps.max()), tol=tol)
    return None


def cycle_diagnostics(M: GameMatrix, records: Sequence[IterationRecord],
                      weight_trace: np.ndarray, detected: DetectedCycle,
                      support_tol: float = 1e-7,
                      edge_tol: float = 1e-6) -> CycleReport:
    """Fill in the per-cycle invariants for a detected period.

    Support vectors are the examples whose weight stays above
    ``support_tol`` throughout the verified window (in the limit the
    dichotomy is exact: a weight is either 0 at every cycle step or
    positive at every one).  When all edges of the final period agree
    within ``edge_tol``, the correct-classification counts tau must be
    identical across support vectors, and ``tau_uniform`` records
    whether they are.
    """
    d = np.asarray(weight_trace, dtype=float)
    L = d.shape[0]
    T = detected.period
    if len(records) != L:
        raise ValueError("records and weight trace must cover the same iterations")
    # Re-verify periodicity on the reported window before trusting it.
    window_gap = float(np.abs(d[detected.start + T:L] - d[detected.start:L - T]).max())
    if window_gap > detected.tol:
        raise ValueError(
            f"window disagrees with the detected period (gap {window_gap:g})"
        )

    support = np.flatnonzero(d[detected.start:].min(axis=0) > support_tol)
    last_period = records[L - T:L]
    cols = [rec.j for rec in last_period]
    if any(j < 0 for j in cols):
        raise ValueError("cycle diagnostics need explicit column indices")
    edges_cycle = np.array([rec.r for rec in last_period])

    tau: dict[int, int] = {}
    residuals: dict[int, float] = {}
    for i in support:
        signs = M.entries[i, cols]
        tau[int(i)] = int(np.sum(signs > 0))
        prod = float(np.prod(1.0 + signs * edges_cycle))
        residuals[int(i)] = abs(prod - 1.0)

    equal = float(edges_cycle.max() - edges_cycle.min()) <= edge_tol
    uniform = None
    if equal and tau:
        uniform = len(set(tau.values())) == 1
    return CycleReport(
        period=T,
        start=detected.start,
        cycle_edges=edges_cycle,
        support_set=tuple(int(i) for i in support),
        tau=tau,
        condition_residuals=residuals,
        edges_equal=equal,
        tau_uniform=uniform,
    )


def scan_monotonicity(g_values: Sequence[float], period: Optional[int] = None,
                      slack: float = 0.0) -> MonotonicityReport:
    """Count strict rises and falls of a smooth-margin trace.

    With ``period`` given, additionally reports the number of strict
    decreases inside each trailing window of that length (a cycling run
    with unequal edges must keep decreasing somewhere in every period).
    """
    g = np.asarray(g_values, dtype=float)
    diff = np.diff(g)
    inc = int(np.sum(diff > slack))
    dec = int(np.sum(diff < -slack))
    flat = int(diff.size - inc - dec)
    per_period = None
    if period is not None and period > 0:
        per_period = []
        k = diff.size // period
        for b in range(diff.size - k * period, diff.size, period):
            chunk = diff[b:b + period]
            per_period.append(int(np.sum(chunk < -slack)))
    return MonotonicityReport(inc, dec, flat, per_period)


@dataclass(frozen=True)
class RecursionTrace:
    """Dense (t, s, g, x) arrays from a recursion simulation; x = rho - g."""

    rho: float
    t: np.ndarray
    s: np.ndarray
    g: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.rho - self.g

    def __len__(self) -> int:
        return self.t.shape[0]


def constant_edge_recursion(rho: float, g0: float, s0: float,
                            steps: int) -> RecursionTrace:
    """Iterate the exact (s, g) recursion for edges all equal to rho.

    One approximate-coordinate-ascent step with edge rho updates

        s'   = s + (ln((1+rho)/(1-rho)) + ln((1-g)/(1+g))) / 2
        s'g' = s g + (ln((1+g)/(1+rho)) + ln((1-g)/(1-rho))) / 2

    g increases strictly toward rho and never reaches it.  O(1) memory
    per step and no matrix anywhere; index 0 of the returned trace is
    the initial state.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if not 0.0 <= g0 < rho:
        raise ValueError("g0 must lie in [0, rho)")
    if s0 <= 0.0:
        raise ValueError("s0 must be positive")
    s_arr = np.empty(steps + 1)
    g_arr = np.empty(steps + 1)
    s, g = float(s0), float(g0)
    s_arr[0], g_arr[0] = s, g
    log = math.log
    lr = log((1.0 + rho) / (1.0 - rho))
    for k in range(1, steps + 1):
        gain = 0.5 * (lr + log((1.0 - g) / (1.0 + g)))
        sg = s * g + 0.5 * (log((1.0 + g) / (1.0 + rho)) + log((1.0 - g) / (1.0 - rho)))
        s = s + gain
        g = sg / s
        s_arr[k], g_arr[k] = s, g
    return RecursionTrace(rho=rho, t=np.arange(steps + 1), s=s_arr, g=g_arr)


def recursion_run(learner: ScriptedLearner, rule: StepRule, m: int, steps: int,
                  g_switch: bool = True) -> list[IterationRecord]:
    """Matrix-free boosting trace driven entirely by the one-step recursions.

    Starts from the zero coefficient vector of an m-example problem
    (ln F = ln m) and advances (ln F, s, G) with
    :func:`smoothboost.core.predict_step`; the margin is never defined
    here, so the mu field of every record is NaN and j is -1.  The
    arcgv rule needs a margin and is rejected.
    """
    if rule is StepRule.ARC_GV:
        raise ValueError("arcgv needs a margin; scripted runs carry none")
    if m < 2:
        raise ValueError("need at least 2 examples")
    records: list[IterationRecord] = []
    log_loss = math.log(m)
    s = 0.0
    g: Optional[float] = None
    for t in range(1, steps + 1):
        r = learner.edge_at(t - 1)
        gamma = arctanh_edge(r)
        warm = g is None or (g_switch and g <= 0.0)
        if rule is StepRule.ADABOOST or warm:
            alpha = gamma
        else:
            g_clamped = max(0.0, g)
            if rule is StepRule.APPROX_COORD_ASCENT:
                alpha = gamma - math.atanh(g_clamped)
            else:
                alpha = ascent_line_search(s, g_clamped, gamma)
        records.append(IterationRecord(
            t=t, j=-1, r=r, gamma=gamma, alpha=alpha, s=s,
            g=g if g is not None else math.nan, mu=math.nan, log_loss=log_loss,
        ))
        # The G-recursion needs s g = -ln F, which only holds once s > 0;
        # the first step seeds G from the loss directly.
        log_loss, g_next = predict_step(log_loss, g if g is not None else 0.0,
                                        s, gamma, alpha)
        seed = g is None
        s += alpha
        g = -log_loss / s if seed else g_next
    return records


@dataclass(frozen=True)
class DecayFit:
    """Log-log slope of a decaying positive series over a time window."""

    slope: float
    intercept: float
    curvature: float
    n_points: int

    @property
    def is_power_law(self) -> bool:
        # A genuine power law is straight in log-log space; noticeable
        # curvature flags exponential or otherwise non-polynomial decay.
        return abs(self.curvature) < 0.05


def fit_decay_exponent(t: np.ndarray, x: np.ndarray,
                       window: tuple[float, float],
                       max_points: int = 200) -> DecayFit:
    """Least-squares slope of ln x against ln t over [t_lo, t_hi].

    Subsamples to at most ``max_points`` log-equispaced points first so
    dense late iterations do not dominate the fit.  Rejects nonpositive
    x inside the window (the quantity must still be decaying toward its
    limit for the exponent to mean anything).
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t_lo, t_hi = window
    if t_hi < 10 * t_lo:
        raise ValueError("window must span at least a decade (t_hi >= 10 t_lo)")
    mask = (t >= t_lo) & (t <= t_hi)
    if not np.any(mask):
        raise ValueError("window contains no samples")
    t_w, x_w = t[mask], x[mask]
    if np.any(x_w <= 0.0):
        raise ValueError("series must be strictly positive inside the window")
    if t_w.shape[0] > max_points:
        targets = np.geomspace(t_w[0], t_w[-1], max_points)
        idx = np.unique(np.searchsorted(t_w, targets).clip(0, t_w.shape[0] - 1))
        t_w, x_w = t_w[idx], x_w[idx]
    lt, lx = np.log(t_w), np.log(x_w)
    slope, intercept = np.polyfit(lt, lx, 1)
    # Quadratic coefficient over the normalized window measures bending.
    span = lt[-1] - lt[0]
    quad = np.polyfit((lt - lt[0]) / span, lx, 2)[0] if span > 0 else 0.0
    return DecayFit(
        slope=float(slope),
        intercept=float(intercept),
        curvature=float(quad),
        n_points=int(t_w.shape[0]),
    )
