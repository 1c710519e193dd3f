"""Experiment generators and inequality audit suites.

Three families live here:

* dataset generators: the signed-hypercube classification problem (with
  its game matrix of coordinate stumps and their negations) and a
  seeded corpus of small random separable matrices;
* suites: many-trial goal-edge runs (margin versus test error) and the
  bounded-edge run whose tail smooth margin must land inside the
  bracket [constant_edge_margin(rho_bar), constant_edge_margin(rho_bar + sigma)];
* audits: per-step and first-hit inequality checks against a known
  maximum margin, collected into a :class:`BoundReport` whose
  ``violations`` list must stay empty on a conforming run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .boosting import RunConfig, RunResult, StepRule, run
from .core import GameMatrix, IterationRecord, constant_edge_margin
from .gamelp import LPSolution, max_margin
from .learners import (
    BoundedEdgeLearner,
    BoundedEdgeParams,
    GoalEdgeLearner,
    OptimalLearner,
    bounded_edge_select,
)

__all__ = [
    "HypercubeDataset",
    "gen_hypercube",
    "test_error",
    "random_separable_corpus",
    "GoalTrial",
    "run_goal_edge_suite",
    "BoundedEdgeReport",
    "run_bounded_edge_suite",
    "Violation",
    "BoundReport",
    "audit_bounds",
]

_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class HypercubeDataset:
    """Random +-1 hypercube points labeled by the sign of a coordinate sum.

    The label of a point is the sign of the sum of its first
    ``k_signal`` coordinates; ``k_signal`` must be odd so that sum can
    never be zero.
    """

    train_points: np.ndarray
    train_labels: np.ndarray
    test_points: np.ndarray
    test_labels: np.ndarray
    k_signal: int

    @property
    def m(self) -> int:
        return self.train_points.shape[0]

    @property
    def dim(self) -> int:
        return self.train_points.shape[1]


def _sign_labels(points: np.ndarray, k_signal: int) -> np.ndarray:
    return np.sign(points[:, :k_signal].sum(axis=1))


def gen_hypercube(m: int, dim: int, k_signal: int, n_test: int,
                  seed: int) -> tuple[HypercubeDataset, GameMatrix]:
    """Deterministic hypercube dataset plus its stump game matrix.

    The weak classifiers are the ``dim`` coordinate stumps h_j(x) = x_j
    followed by their negations, so the matrix has 2 * dim columns and
    column dim + j is the negation of column j.
    """
    if k_signal % 2 == 0:
        raise ValueError("k_signal must be odd (guarantees nonzero label sums)")
    if k_signal > dim:
        raise ValueError("k_signal cannot exceed the dimension")
    rng = np.random.default_rng(seed)
    train = rng.choice([-1.0, 1.0], size=(m, dim))
    test = rng.choice([-1.0, 1.0], size=(n_test, dim))
    data = HypercubeDataset(
        train_points=train,
        train_labels=_sign_labels(train, k_signal),
        test_points=test,
        test_labels=_sign_labels(test, k_signal),
        k_signal=k_signal,
    )
    half = data.train_labels[:, None] * train
    M = GameMatrix(np.hstack([half, -half]))
    return data, M


def test_error(data: HypercubeDataset, lam: np.ndarray) -> float:
    """Fraction of test points the combined classifier gets wrong.

    ``lam`` spans the 2 * dim stump columns; a zero combined score
    counts as an error (deterministic and pessimistic).
    """
    dim = data.dim
    coeff = lam[:dim] - lam[dim:]
    scores = data.test_points @ coeff
    return float(np.mean(scores * data.test_labels <= 0.0))


def random_separable_corpus(count: int, seed: int, m_range=(4, 12),
                            n_range=(5, 30), rho_min: float = 0.05,
                            ) -> list[tuple[GameMatrix, LPSolution]]:
    """Seeded corpus of small random +-1 matrices with margin above rho_min.

    Rejection-samples random shapes and entries, repairs all-+1 columns
    by flipping one entry, and keeps matrices whose LP value certifies
    separability with some room.
    """
    rng = np.random.default_rng(seed)
    out: list[tuple[GameMatrix, LPSolution]] = []
    while len(out) < count:
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        entries = rng.choice([-1.0, 1.0], size=(m, n))
        for j in np.flatnonzero(np.all(entries == 1.0, axis=0)):
            entries[int(rng.integers(m)), j] = -1.0
        M = GameMatrix(entries)
        sol = max_margin(M)
        if sol.gap <= 1e-9 and sol.rho >= rho_min:
            out.append((M, sol))
    return out


@dataclass(frozen=True)
class GoalTrial:
    """Summary of one goal-edge (or optimal) trial on a dataset."""

    goal: Optional[float]  # None marks the optimal trial
    final_margin: float
    mean_edge: float  # averaged over the trailing asymptotic window
    margin_at_mean_edge: float  # constant_edge_margin(mean_edge)
    margin_gap: float
    test_err: float
    edge_min: float
    edge_max: float


def _trial_summary(goal: Optional[float], result: RunResult,
                   data: HypercubeDataset, tail_frac: float) -> GoalTrial:
    edges_seen = np.array([rec.r for rec in result.records])
    tail = edges_seen[int(len(edges_seen) * (1.0 - tail_frac)):]
    mean_edge = float(tail.mean())
    target = constant_edge_margin(mean_edge)
    final_margin = result.final_mu
    return GoalTrial(
        goal=goal,
        final_margin=final_margin,
        mean_edge=mean_edge,
        margin_at_mean_edge=target,
        margin_gap=abs(final_margin - target),
        test_err=test_error(data, result.state.lam),
        edge_min=float(edges_seen.min()),
        edge_max=float(edges_seen.max()),
    )


def spaced_goals(rho: float, r_top: float, count: int = 8,
                 lo_frac: float = 0.15, hi_frac: float = 0.9) -> list[float]:
    """Equally spaced goal edges strictly between rho and r_top."""
    if r_top <= rho:
        raise ValueError("top edge must exceed the maximum margin")
    lo = rho + lo_frac * (r_top - rho)
    hi = rho + hi_frac * (r_top - rho)
    return [float(v) for v in np.linspace(lo, hi, count)]


def run_goal_edge_suite(data: HypercubeDataset, M: GameMatrix,
                        goals: Optional[Sequence[float]], iters: int,
                        rho: Optional[float] = None,
                        n_goals: int = 8,
                        tail_frac: float = 0.1) -> list[GoalTrial]:
    """One optimal trial plus one trial per goal edge, all adaboost.

    Each trial reports its final margin, the trailing-window mean edge
    r-bar with constant_edge_margin(r-bar) (where the margin should
    settle), and the test error.  Goals must exceed the maximum margin;
    when omitted, ``n_goals`` equally spaced values between rho and the
    optimal trial's trailing mean edge are used.  Realized edges are
    checked to stay inside (0, 1).
    """
    if rho is None:
        rho = max_margin(M).rho
    trials = []
    cfg = RunConfig(rule=StepRule.ADABOOST, max_iters=iters, learner=OptimalLearner(),
                    rho=rho)
    optimal = _trial_summary(None, run(M, cfg), data, tail_frac)
    trials.append(optimal)
    if goals is None:
        goals = spaced_goals(rho, optimal.mean_edge, count=n_goals)
    for goal in goals:
        if not rho < goal < 1.0:
            raise ValueError(f"goal {goal:g} outside (rho={rho:g}, 1)")
    for goal in goals:
        cfg = RunConfig(rule=StepRule.ADABOOST, max_iters=iters,
                        learner=GoalEdgeLearner(goal), rho=rho)
        result = run(M, cfg)
        if any(not 0.0 < rec.r < 1.0 for rec in result.records):
            raise ValueError(f"goal {goal:g} run left the (0, 1) edge range")
        trials.append(_trial_summary(goal, result, data, tail_frac))
    return trials


def margin_error_rank_correlation(trials: Sequence[GoalTrial]) -> float:
    """Spearman rank correlation between final margins and test errors."""
    from scipy.stats import spearmanr

    margins = [tr.final_margin for tr in trials]
    errors = [tr.test_err for tr in trials]
    value = spearmanr(margins, errors).statistic
    return float(value)


@dataclass(frozen=True)
class BoundedEdgeReport:
    """Outcome of a bounded-edge run against its guarantees."""

    params: BoundedEdgeParams
    result: RunResult
    edge_min: float
    edge_max: float
    ratio_cap_held: bool  # max_i d_i / min_i d_i <= phi at every step
    max_weight_ok: bool  # max_i d_i <= phi / m at every step
    bracket_lo: float  # constant_edge_margin(rho_bar)
    bracket_hi: float  # constant_edge_margin(rho_bar + sigma)
    tail_g_min: float
    tail_g_max: float
    tail_in_bracket: bool
    realized_rho: float  # LP value of the matrix of realized columns
    realized_rho_consistent: bool  # realized_rho <= rho_bar

    @property
    def edges_in_range(self) -> bool:
        lo = self.params.rho_bar - 1e-9  # threshold snap slack, see learners
        hi = self.params.rho_bar + self.params.sigma + _SLACK
        return lo <= self.edge_min and self.edge_max <= hi


def run_bounded_edge_suite(rho_bar: float, sigma: float, iters: int,
                           m: Optional[int] = None, tail_frac: float = 0.1,
                           delta_check: float = 0.01,
                           max_realized_columns: int = 120) -> BoundedEdgeReport:
    """Adaboost with the bounded-edge learner, checked against its bracket.

    Verifies edge containment at every step, the weight-ratio cap, the
    trailing-window smooth margin against
    [constant_edge_margin(rho_bar) - delta, constant_edge_margin(rho_bar + sigma) + delta],
    and that the LP value of the distinct columns actually emitted stays
    at or below rho_bar.
    """
    params = BoundedEdgeParams.admissible(rho_bar, sigma, m=m)
    learner = BoundedEdgeLearner(params)
    cfg = RunConfig(rule=StepRule.ADABOOST, max_iters=iters, learner=learner,
                    keep_weights=True)
    result = run(None, cfg)

    edges_seen = np.array([rec.r for rec in result.records])
    weights = result.weight_trace
    ratios = weights.max(axis=1) / weights.min(axis=1)
    ratio_ok = bool(np.all(ratios <= params.phi + _SLACK))
    max_w_ok = bool(np.all(weights.max(axis=1) <= params.phi / params.m + _SLACK))

    g_vals = np.array([rec.g for rec in result.records])
    tail = g_vals[int(len(g_vals) * (1.0 - tail_frac)):]
    lo = constant_edge_margin(rho_bar)
    hi = constant_edge_margin(rho_bar + sigma)
    in_bracket = bool(tail.min() >= lo - delta_check and tail.max() <= hi + delta_check)

    # The learner is stateless, so the realized columns can be
    # reconstructed from the saved weights; their LP value must respect
    # the rho_bar ceiling (every emitted column has at most `cap` +1s).
    seen: dict[bytes, np.ndarray] = {}
    for d in weights:
        col = bounded_edge_select(d, params).column
        seen.setdefault(col.tobytes(), col)
        if len(seen) >= max_realized_columns:
            break
    realized = GameMatrix(np.column_stack(list(seen.values())))
    realized_rho = max_margin(realized).rho

    return BoundedEdgeReport(
        params=params,
        result=result,
        edge_min=float(edges_seen.min()),
        edge_max=float(edges_seen.max()),
        ratio_cap_held=ratio_ok,
        max_weight_ok=max_w_ok,
        bracket_lo=lo,
        bracket_hi=hi,
        tail_g_min=float(tail.min()),
        tail_g_max=float(tail.max()),
        tail_in_bracket=in_bracket,
        realized_rho=realized_rho,
        realized_rho_consistent=bool(realized_rho <= rho_bar + 1e-9),
    )


@dataclass(frozen=True)
class Violation:
    check: str
    t: int
    lhs: float
    rhs: float


@dataclass
class BoundReport:
    """Every audited inequality for one trace, with its worst margins.

    ``violations`` collects (check, t, lhs, rhs) for each failed
    inequality; ``unverified`` names first-hit checks whose target was
    not reached inside the trace while the bound still exceeds its
    length (nothing can be concluded there).
    """

    rule: StepRule
    rho: float
    eps: float
    c1: float
    c2: float
    t_tilde: Optional[int]
    s_tilde: Optional[float]
    warmup_bound: float
    bound_t52: Optional[float]
    first_hit_g: Optional[int]
    first_hit_margin: Optional[int]
    R_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    violations: list[Violation] = field(default_factory=list)
    unverified: list[str] = field(default_factory=list)
    sign_mismatches: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_bounds(records: Sequence[IterationRecord], rho: float,
                 rule: StepRule, m: int, eps: float = 0.05,
                 slack: float = _SLACK) -> BoundReport:
    """Check every applicable inequality of one trace against rho.

    For all rules: the warm-up length and the margin sandwich
    -ln(m)/s + mu <= g < mu <= rho <= r at each step past the first
    positive smooth margin.  For the ascent rules and arcgv: per-step
    progress and the step-size cap.  For the ascent rules: the
    first-hit bound on rho - g <= eps, plus its adaptive refinement
    from the running minimum edge.  For arcgv: the first-hit bound on
    the best margin.  For adaboost: the sign equivalence between
    smooth-margin progress and constant_edge_margin(r) - g.
    """
    if rho <= 0.0:
        raise ValueError("audits need a separable instance (rho > 0)")
    c1 = math.log(2.0) / (1.0 - rho)
    c2 = rho / (1.0 - rho)
    report = BoundReport(
        rule=rule, rho=rho, eps=eps, c1=c1, c2=c2,
        t_tilde=None, s_tilde=None,
        warmup_bound=2.0 * math.log(m) / (-math.log1p(-rho * rho)) + 1.0,
        bound_t52=None, first_hit_g=None, first_hit_margin=None,
    )
    add = report.violations.append

    g = np.array([rec.g for rec in records])
    mu = np.array([rec.mu for rec in records])
    r = np.array([rec.r for rec in records])
    alpha = np.array([rec.alpha for rec in records])
    s = np.array([rec.s for rec in records])
    t_idx = np.array([rec.t for rec in records])
    report.R_t = np.minimum.accumulate(r)

    positive = np.flatnonzero((s > 0.0) & (g > 0.0))
    if positive.size == 0:
        report.unverified.append("warmup: smooth margin never turned positive")
        return report
    k_tilde = int(positive[0])
    report.t_tilde = int(t_idx[k_tilde])
    report.s_tilde = float(s[k_tilde])
    if report.t_tilde > report.warmup_bound:
        add(Violation("warmup", report.t_tilde, report.t_tilde, report.warmup_bound))

    # Sandwich at every step from t-tilde on.
    ln_m = math.log(m)
    for k in range(k_tilde, len(records)):
        if not (-ln_m / s[k] + mu[k] <= g[k] + slack):
            add(Violation("sandwich_lower", int(t_idx[k]), -ln_m / s[k] + mu[k], g[k]))
        if not (g[k] <= mu[k] + slack):
            add(Violation("sandwich_upper", int(t_idx[k]), g[k], mu[k]))
        if not (mu[k] <= rho + slack):
            add(Violation("margin_vs_rho", int(t_idx[k]), mu[k], rho))
        if not (rho <= r[k] + slack):
            add(Violation("rho_vs_edge", int(t_idx[k]), rho, r[k]))

    ascent = rule in (StepRule.COORD_ASCENT, StepRule.APPROX_COORD_ASCENT)
    if ascent or rule is StepRule.ARC_GV:
        # Progress and step-cap inequalities, valid from t-tilde on.
        for k in range(k_tilde, len(records) - 1):
            s_next = s[k] + alpha[k]
            lhs = g[k + 1] - g[k]
            rhs = alpha[k] * (r[k] - g[k]) / (2.0 * s_next)
            if lhs < rhs - slack:
                add(Violation("per_step_progress", int(t_idx[k]), lhs, rhs))
            cap = c1 + c2 * s[k]
            if alpha[k] > cap + slack:
                add(Violation("step_cap", int(t_idx[k]), alpha[k], cap))

    if ascent:
        report.bound_t52 = report.t_tilde + (report.s_tilde + math.log(2.0)) \
            * eps ** (-(3.0 - rho) / (1.0 - rho))
        hit = np.flatnonzero((s > 0.0) & (rho - g <= eps))
        if hit.size:
            report.first_hit_g = int(t_idx[hit[0]])
            if report.first_hit_g > report.bound_t52:
                add(Violation("first_hit_bound", report.first_hit_g,
                              report.first_hit_g, report.bound_t52))
            # Adaptive refinement: the forecast made at any earlier step
            # (from the running minimum edge) must also have come true.
            for k in range(len(records)):
                if t_idx[k] >= report.first_hit_g:
                    break
                R = report.R_t[k]
                bound_k = report.t_tilde + (report.s_tilde + math.log(2.0)) \
                    * eps ** (-(3.0 - R) / (1.0 - R))
                if report.first_hit_g > bound_k + slack:
                    add(Violation("adaptive_forecast", int(t_idx[k]),
                                  report.first_hit_g, bound_k))
        elif len(records) >= report.bound_t52:
            add(Violation("first_hit_bound", len(records),
                          math.inf, report.bound_t52))
        else:
            report.unverified.append("first_hit_bound: trace shorter than the bound")

    if rule is StepRule.ARC_GV:
        report.bound_t52 = report.t_tilde + (report.s_tilde + math.log(2.0)) \
            * eps ** (-(3.0 - rho) / (1.0 - rho))
        best = np.maximum.accumulate(np.where(np.isnan(mu), -np.inf, mu))
        hit = np.flatnonzero(rho - best <= eps)
        if hit.size:
            report.first_hit_margin = int(t_idx[hit[0]])
            if report.first_hit_margin > report.bound_t52:
                add(Violation("best_margin_bound", report.first_hit_margin,
                              report.first_hit_margin, report.bound_t52))
        elif len(records) >= report.bound_t52:
            add(Violation("best_margin_bound", len(records),
                          math.inf, report.bound_t52))
        else:
            report.unverified.append("best_margin_bound: trace shorter than the bound")

    if rule is StepRule.ADABOOST:
        band = 1e-12
        for k in range(len(records) - 1):
            if s[k] <= 0.0:
                continue
            da = g[k + 1] - g[k]
            db = constant_edge_margin(r[k]) - g[k]
            if (da > band and db < -band) or (da < -band and db > band):
                report.sign_mismatches += 1
                add(Violation("large_step_sign", int(t_idx[k]), da, db))

    return report
