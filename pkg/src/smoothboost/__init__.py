"""Margin-maximizing boosting analyzed through the smooth margin.

A small numpy library around the +-1 game matrix of boosting: the
exponential loss, margin, and smooth margin; four step rules (adaboost,
exact and approximate coordinate ascent on the smooth margin, and
arc-gv); weak learners including a constructive bounded-edge one; an
exact LP oracle for the maximum margin; cycle detection with per-cycle
diagnostics; and matrix-free recursion simulators for convergence-rate
studies.
"""

from .core import (
    GameMatrix,
    IterationRecord,
    ModelState,
    WeightDist,
    arctanh_edge,
    constant_edge_margin,
    edge,
    edges,
    log_exp_loss,
    min_margin,
    predict_step,
    shell_quadratic_form,
    smooth_margin,
    uniform_weights,
    update_weights,
)
from .boosting import (
    RunConfig,
    RunResult,
    StepRule,
    adaboost_step,
    approx_ascent_step,
    arc_gv_step,
    ascent_line_search,
    run,
)
from .learners import (
    BoundedEdgeLearner,
    BoundedEdgeParams,
    GoalEdgeLearner,
    OptimalLearner,
    ScriptedLearner,
    WeakSelection,
    bounded_edge_select,
    goal_edge_select,
    optimal_select,
    prefix_weight_map,
    scripted_edge,
)
from .gamelp import LPSolution, brute_force_value, max_margin
from .dynamics import (
    CycleReport,
    DetectedCycle,
    RecursionTrace,
    constant_edge_recursion,
    cycle_diagnostics,
    detect_cycle,
    fit_decay_exponent,
    recursion_run,
    scan_monotonicity,
)
from .harness import (
    BoundReport,
    BoundedEdgeReport,
    GoalTrial,
    audit_bounds,
    gen_hypercube,
    random_separable_corpus,
    run_bounded_edge_suite,
    run_goal_edge_suite,
    test_error,
)

__version__ = "0.1.0"
