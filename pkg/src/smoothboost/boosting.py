"""Unified boosting loop with four pluggable step rules.

Every rule shares the same outer iteration: select a column, read its
edge r, and add a step alpha to that column's coefficient.  They differ
only in alpha:

    adaboost   alpha = arctanh(r)                      (line search on ln F)
    alg1       alpha = argmax of G along the ray       (line search on G)
    alg2       alpha = arctanh(r) - arctanh(max(0, G)) (closed-form proxy)
    arcgv      alpha = arctanh(r) - arctanh(mu)

The smooth margin G is undefined at the zero coefficient vector and
negative early on, where alg1's and arcgv's steps lose their meaning
(arcgv's arctanh(mu) even diverges at the mu = -1 state every cold
start passes through).  With ``g_switch`` on (the default) all rules
take plain adaboost steps until G first turns positive, the iteration
recorded as ``t_positive``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    GameMatrix,
    IterationRecord,
    ModelState,
    UNIT_EDGE_TOL,
    _log_sum_exp_neg,
    arctanh_edge,
    log_cosh,
)
from .learners import BoundedEdgeLearner, OptimalLearner, ScriptedLearner

__all__ = [
    "StepRule",
    "RunConfig",
    "RunResult",
    "adaboost_step",
    "approx_ascent_step",
    "arc_gv_step",
    "ascent_line_search",
    "run",
]

# Bisection targets for the alg1 line search: stop on |f| below the
# residual tolerance or after the iteration cap, whichever first.
_LINE_SEARCH_RESIDUAL = 1e-13
_LINE_SEARCH_MAX_ITER = 200


class StepRule(enum.Enum):
    ADABOOST = "adaboost"
    COORD_ASCENT = "alg1"
    APPROX_COORD_ASCENT = "alg2"
    ARC_GV = "arcgv"


def adaboost_step(r: float) -> float:
    """Exact minimizer of the exponential loss along the chosen column."""
    if r <= 0.0:
        raise ValueError(f"adaboost step needs a positive edge, got {r!r}")
    return arctanh_edge(r)


def approx_ascent_step(r: float, g: float) -> float:
    """Closed-form approximation to the G line search.

    Requires 0 <= g < r (the smooth margin sits strictly below every
    admissible edge); reduces to the adaboost step at g = 0.
    """
    if g < 0.0:
        raise ValueError("clamped smooth margin cannot be negative")
    if g >= r:
        raise ValueError(
            f"smooth margin {g!r} >= edge {r!r}: violates the margin/edge ordering"
        )
    return arctanh_edge(r) - math.atanh(g)


def arc_gv_step(r: float, mu: float) -> float:
    """arctanh(r) - arctanh(mu); nonnegative whenever mu <= r."""
    if mu > r:
        raise ValueError(f"margin {mu!r} exceeds edge {r!r}")
    if mu <= -1.0 + UNIT_EDGE_TOL:
        raise ValueError(f"margin {mu!r} too close to -1; step diverges")
    return arctanh_edge(r) - math.atanh(mu)


def _line_search_f(alpha: float, s: float, g: float, gamma: float) -> float:
    # Strictly increasing in alpha for alpha > 0; its unique root is the
    # G-maximizing step.
    return s * g + log_cosh(gamma) - log_cosh(gamma - alpha) \
        - (s + alpha) * math.tanh(gamma - alpha)


def ascent_line_search(s: float, g: float, gamma: float) -> float:
    """Exact G-maximizing step along the chosen column, by bisection.

    The root is bracketed by construction: the objective derivative is
    s (g - r) < 0 at alpha = 0 and s g - ln(1 - r^2)/2 > 0 at
    alpha = gamma, so the unique zero lies in (0, gamma].  Bisection is
    preferred over Newton: the function is cheap, the bracket is
    guaranteed, and robustness matters more than speed here.
    """
    if s <= 0.0:
        raise ValueError("line search requires s > 0")
    if g < 0.0:
        raise ValueError("line search requires a nonnegative smooth margin")
    if g >= math.tanh(gamma):
        raise ValueError("smooth margin must stay below the edge")
    lo, hi = 0.0, gamma
    f_lo = _line_search_f(lo, s, g, gamma)
    f_hi = _line_search_f(hi, s, g, gamma)
    if f_lo > 0.0 or f_hi < 0.0:
        raise ArithmeticError(
            f"line search bracket failed: f(0)={f_lo:g}, f(gamma)={f_hi:g}"
        )
    mid = 0.5 * (lo + hi)
    for _ in range(_LINE_SEARCH_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = _line_search_f(mid, s, g, gamma)
        if abs(f_mid) <= _LINE_SEARCH_RESIDUAL:
            return mid
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    return mid


@dataclass
class RunConfig:
    """Everything that determines a boosting run.

    ``rho`` (the maximum margin, when known from the LP oracle) enables
    the ``stop_eps`` early stop and the separability guard: a run on a
    nonseparable problem (rho <= 0) is refused for the margin-seeking
    rules, and for adaboost unless ``allow_nonseparable`` is set.
    ``seed`` is recorded for provenance; the built-in learners are all
    deterministic.
    """

    rule: StepRule
    max_iters: int
    learner: object = field(default_factory=OptimalLearner)
    g_switch: bool = True
    stop_eps: Optional[float] = None
    rho: Optional[float] = None
    seed: int = 0
    allow_nonseparable: bool = False
    keep_weights: bool = False
    revalidate_every: int = 1024

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.stop_eps is not None and self.stop_eps <= 0.0:
            raise ValueError("stop_eps must be positive")
        if self.rho is not None and self.rho <= 0.0:
            if self.rule is not StepRule.ADABOOST:
                raise ValueError(
                    f"maximum margin {self.rho:g} <= 0: rule {self.rule.value} "
                    "is only analyzed on separable problems"
                )
            if not self.allow_nonseparable:
                raise ValueError(
                    "nonseparable input (rho <= 0); pass allow_nonseparable=True "
                    "to run adaboost anyway"
                )


@dataclass
class RunResult:
    """Trace plus final state of one boosting run.

    ``records[k]`` describes the state entering iteration k+1 and the
    step taken there; the arrays below hold the state after the last
    step.  ``state`` is None when the learner emitted implicit columns
    (there is no finite coefficient vector to report).
    """

    records: list[IterationRecord]
    t_positive: Optional[int]
    state: Optional[ModelState]
    margins: np.ndarray
    s: float
    d: np.ndarray
    weight_trace: Optional[np.ndarray]
    best_mu: float

    @property
    def final_mu(self) -> float:
        return float(self.margins.min()) / self.s if self.s > 0 else math.nan

    @property
    def final_g(self) -> float:
        if self.s <= 0:
            return math.nan
        lo = float(self.margins.min())
        return (lo - float(np.log(np.exp(lo - self.margins).sum()))) / self.s


def _rule_alpha(rule: StepRule, r: float, gamma: float, g_raw: Optional[float],
                mu: Optional[float], s: float, g_switch: bool) -> float:
    warm = g_raw is None or (g_switch and g_raw <= 0.0)
    if rule is StepRule.ADABOOST or warm:
        if r <= 0.0:
            raise ValueError(f"nonpositive edge {r!r}: separable-regime step undefined")
        return gamma
    g = max(0.0, g_raw)
    if rule is StepRule.APPROX_COORD_ASCENT:
        return approx_ascent_step(r, g)
    if rule is StepRule.COORD_ASCENT:
        return ascent_line_search(s, g, gamma)
    if rule is StepRule.ARC_GV:
        return arc_gv_step(r, mu)
    raise AssertionError(f"unhandled rule {rule}")


def run(M: Optional[GameMatrix], config: RunConfig,
        stop: Optional[Callable[[int, float, float, float, float], bool]] = None,
        ) -> RunResult:
    """Run one boosting loop and return its trace.

    ``M`` may be None only when the learner generates implicit columns
    and knows the example count itself.  ``stop``, if given, is called
    after each step with (t, s, g, mu, best_mu) of the post-step state
    and ends the run when it returns True; the spec'd ``stop_eps``
    criterion (rho - mu <= eps, best mu for arcgv) is applied on top.
    """
    learner = config.learner
    if isinstance(learner, ScriptedLearner):
        raise ValueError("scripted learners carry no columns; use dynamics.recursion_run")
    if isinstance(learner, BoundedEdgeLearner):
        if M is not None and M.m != learner.m:
            raise ValueError("matrix row count disagrees with the learner params")
        m = learner.m
        explicit = False  # implicit columns: no finite coefficient vector
    elif M is None:
        raise ValueError("a game matrix is required for this learner")
    else:
        m = M.m
        explicit = True
    lam = np.zeros(M.n) if explicit else None
    margins = np.zeros(m)
    s = 0.0
    d = np.full(m, 1.0 / m)
    records: list[IterationRecord] = []
    weight_trace = [] if config.keep_weights else None
    t_positive: Optional[int] = None
    best_mu = -math.inf

    for t in range(1, config.max_iters + 1):
        if weight_trace is not None:
            weight_trace.append(d.copy())

        log_loss = _log_sum_exp_neg(margins)
        if s > 0.0:
            g_raw = -log_loss / s
            mu = float(margins.min()) / s
        else:
            g_raw, mu = None, None
        if t_positive is None and g_raw is not None and g_raw > 0.0:
            t_positive = t

        sel = learner.select(M, d, t)
        r = sel.r
        if abs(r) >= 1.0 - UNIT_EDGE_TOL:
            raise ValueError(f"degenerate edge {r!r} at iteration {t}")
        gamma = arctanh_edge(r)
        alpha = _rule_alpha(config.rule, r, gamma, g_raw, mu, s, config.g_switch)

        records.append(IterationRecord(
            t=t, j=sel.index, r=r, gamma=gamma, alpha=alpha, s=s,
            g=g_raw if g_raw is not None else math.nan,
            mu=mu if mu is not None else math.nan,
            log_loss=log_loss,
        ))

        margins = margins + alpha * sel.column
        s += alpha
        if explicit and sel.index >= 0:
            lam[sel.index] += alpha
        scaled = d * np.exp(-alpha * sel.column)
        d = scaled / scaled.sum()

        if explicit and config.revalidate_every and t % config.revalidate_every == 0:
            exact = M.entries @ lam
            drift = float(np.max(np.abs(exact - margins)))
            if drift > 1e-8:
                raise ArithmeticError(f"margin cache drifted by {drift:g} at t={t}")
            margins = exact

        mu_next = float(margins.min()) / s
        best_mu = max(best_mu, mu_next)
        g_next = -_log_sum_exp_neg(margins) / s
        if config.stop_eps is not None and config.rho is not None:
            crit = best_mu if config.rule is StepRule.ARC_GV else mu_next
            if config.rho - crit <= config.stop_eps:
                break
        if stop is not None and stop(t, s, g_next, mu_next, best_mu):
            break

    state = ModelState(lam, s, margins.copy()) if explicit else None
    return RunResult(
        records=records,
        t_positive=t_positive,
        state=state,
        margins=margins,
        s=s,
        d=d,
        weight_trace=np.asarray(weight_trace) if weight_trace is not None else None,
        best_mu=best_mu,
    )
