"""Command-line surface for runs, the LP oracle, cycles, and suites.

Exit codes: 0 on success, 1 on usage or validation errors, 2 when an
audit or suite check is violated.  Every command is deterministic given
its flags; randomness only enters through explicit seed flags.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, harness, io
from .boosting import RunConfig, StepRule, run
from .core import GameMatrix, predict_step
from .gamelp import max_margin
from .learners import (
    BoundedEdgeLearner,
    BoundedEdgeParams,
    GoalEdgeLearner,
    OptimalLearner,
    ScriptedLearner,
)

USAGE_ERROR = 1
AUDIT_VIOLATION = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; reserve 2 for audit
    # violations instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _add_matrix_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", type=Path, help="path to a matrix file")
    p.add_argument("--gen", choices=["hypercube"], help="generate the input instead")
    p.add_argument("--m", type=int, default=60, help="hypercube training examples")
    p.add_argument("--dim", type=int, default=80, help="hypercube dimension")
    p.add_argument("--ksignal", type=int, default=11, help="signal coordinates (odd)")
    p.add_argument("--ntest", type=int, default=2000, help="hypercube test examples")
    p.add_argument("--seed", type=int, default=0, help="generator seed")


def _resolve_matrix(args) -> tuple[GameMatrix, object]:
    if args.matrix is not None and args.gen is not None:
        raise ValueError("pass either --matrix or --gen, not both")
    if args.matrix is not None:
        return io.load_matrix(args.matrix), None
    if args.gen == "hypercube":
        data, M = harness.gen_hypercube(args.m, args.dim, args.ksignal,
                                        args.ntest, args.seed)
        return M, data
    raise ValueError("one of --matrix or --gen is required")


def _make_learner(args, m_hint):
    if args.learner == "optimal":
        return OptimalLearner()
    if args.learner == "goal-edge":
        if args.goal is None:
            raise ValueError("--learner goal-edge requires --goal")
        return GoalEdgeLearner(args.goal)
    if args.learner == "bounded-edge":
        if args.rho_bar is None or args.sigma is None:
            raise ValueError("--learner bounded-edge requires --rho-bar and --sigma")
        params = BoundedEdgeParams.admissible(args.rho_bar, args.sigma,
                                              m=args.edge_m or m_hint)
        return BoundedEdgeLearner(params)
    if args.learner == "script":
        if args.script is None:
            raise ValueError("--learner script requires --script FILE")
        edges = [float(line) for line in Path(args.script).read_text().split()]
        return ScriptedLearner(edges, cycle=args.script_cycle)
    raise ValueError(f"unknown learner {args.learner!r}")


def cmd_run(args) -> int:
    rule = StepRule(args.rule)
    if args.learner == "script":
        learner = _make_learner(args, None)
        records = dynamics.recursion_run(learner, rule, args.script_m, args.iters,
                                         g_switch=not args.no_g_switch)
        if args.trace:
            io.write_trace(args.trace, records, args.format)
        last = records[-1]
        g_pre = 0.0 if math.isnan(last.g) else last.g
        log_f, _ = predict_step(last.log_loss, g_pre, last.s, last.gamma, last.alpha)
        s_final = last.s + last.alpha
        print(f"iterations: {len(records)}")
        print(f"final s={s_final!r} g={-log_f / s_final!r}")
        return 0

    if args.learner == "bounded-edge":
        M = None  # the implicit column space is never materialized
        learner = _make_learner(args, None)
        rho = None
    else:
        M, _ = _resolve_matrix(args)
        learner = _make_learner(args, M.m)
        rho = args.rho if args.rho is not None else (
            None if args.no_lp else max_margin(M).rho)

    config = RunConfig(
        rule=rule, max_iters=args.iters, learner=learner,
        g_switch=not args.no_g_switch, stop_eps=args.stop_eps, rho=rho,
        seed=args.seed, allow_nonseparable=args.allow_nonseparable,
    )
    result = run(M, config)
    if args.trace:
        io.write_trace(args.trace, result.records, args.format)
    print(f"iterations: {len(result.records)}")
    print(f"first positive smooth margin: {result.t_positive}")
    print(f"final s={result.s!r} g={result.final_g!r} mu={result.final_mu!r}")
    if rho is not None:
        print(f"rho={rho!r} rho-mu={rho - result.final_mu!r}")
    return 0


def cmd_lp(args) -> int:
    M, _ = _resolve_matrix(args)
    sol = max_margin(M)
    print(f"rho={sol.rho!r}")
    print(f"gap={sol.gap!r}")
    print("lambda* =", " ".join(repr(float(v)) for v in sol.lambda_star))
    print("d* =", " ".join(repr(float(v)) for v in sol.d_star))
    print(f"separable: {sol.separable}")
    return 0


def cmd_cycle(args) -> int:
    M, _ = _resolve_matrix(args)
    config = RunConfig(rule=StepRule.ADABOOST, max_iters=args.iters,
                       learner=OptimalLearner(), keep_weights=True)
    result = run(M, config)
    detected = dynamics.detect_cycle(result.weight_trace, tol=args.tol,
                                     max_period=args.max_period)
    if detected is None:
        print("no cycle detected")
        return 0
    report = dynamics.cycle_diagnostics(M, result.records, result.weight_trace,
                                        detected)
    print(f"period: {report.period}")
    print(f"start: {report.start}")
    print("cycle edges:", " ".join(f"{r:.12g}" for r in report.cycle_edges))
    print(f"edges equal: {report.edges_equal}")
    print("support vectors:", " ".join(str(i) for i in report.support_set))
    print("tau:", " ".join(f"{i}:{v}" for i, v in sorted(report.tau.items())))
    print("condition residuals:",
          " ".join(f"{i}:{v:.3e}" for i, v in sorted(report.condition_residuals.items())))
    if report.tau_uniform is not None:
        print(f"tau uniform across support vectors: {report.tau_uniform}")
    return 0


def cmd_simulate(args) -> int:
    if not args.g0 < args.rho:
        raise ValueError(f"g0={args.g0:g} must be below rho={args.rho:g}")
    trace = dynamics.constant_edge_recursion(args.rho, args.g0, args.s0, args.steps)
    if args.out:
        x = trace.x
        with open(args.out, "w") as fh:
            fh.write("t,s,g,x\n")
            for k in range(len(trace)):
                fh.write(f"{trace.t[k]},{float(trace.s[k])!r},"
                         f"{float(trace.g[k])!r},{float(x[k])!r}\n")
    lo, hi = args.window
    fit = dynamics.fit_decay_exponent(trace.t, trace.x, (lo, hi))
    print(f"steps: {args.steps}")
    print(f"final s={float(trace.s[-1])!r} g={float(trace.g[-1])!r} "
          f"gap={float(trace.x[-1])!r}")
    print(f"decay exponent over [{lo:g}, {hi:g}]: {fit.slope:.6f} "
          f"(curvature {fit.curvature:.4f}, power-law: {fit.is_power_law})")
    return 0


def cmd_suite(args) -> int:
    failures = []
    if args.which == "bounded-edge":
        report = harness.run_bounded_edge_suite(args.rho_bar, args.sigma,
                                                args.iters, m=args.edge_m)
        checks = [
            ("edges in [rho_bar, rho_bar+sigma]", report.edges_in_range,
             f"[{report.edge_min:.6g}, {report.edge_max:.6g}]"),
            ("weight ratio cap", report.ratio_cap_held, f"phi={report.params.phi:.6g}"),
            ("max weight <= phi/m", report.max_weight_ok, ""),
            ("tail smooth margin in bracket", report.tail_in_bracket,
             f"[{report.tail_g_min:.6g}, {report.tail_g_max:.6g}] vs "
             f"[{report.bracket_lo:.6g}, {report.bracket_hi:.6g}]"),
            ("realized-column LP value <= rho_bar", report.realized_rho_consistent,
             f"rho={report.realized_rho:.6g}"),
        ]
        for name, ok, detail in checks:
            print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
            if not ok:
                failures.append(name)
        if args.out:
            io.write_trace(Path(args.out), report.result.records, "csv")
    else:
        data, M = harness.gen_hypercube(args.m, args.dim, args.ksignal,
                                        args.ntest, args.seed)
        sol = max_margin(M)
        goals = [float(g) for g in args.goals.split(",")] if args.goals else None
        trials = harness.run_goal_edge_suite(data, M, goals, args.iters,
                                             rho=sol.rho, n_goals=args.n_goals)
        print(f"rho={sol.rho:.6g}")
        print("goal final_margin mean_edge margin_at_mean_edge gap test_error")
        for tr in trials:
            tag = "optimal" if tr.goal is None else f"{tr.goal:.4f}"
            print(f"{tag} {tr.final_margin:.6f} {tr.mean_edge:.6f} "
                  f"{tr.margin_at_mean_edge:.6f} {tr.margin_gap:.6f} {tr.test_err:.6f}")
        corr = harness.margin_error_rank_correlation(trials)
        print(f"margin/test-error rank correlation: {corr:.4f}")
        worst_gap = max(tr.margin_gap for tr in trials)
        for name, ok in [("margin within 0.02 of constant-edge value", worst_gap <= 0.02),
                         ("rank correlation <= 0", corr <= 0.0)]:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}")
            if not ok:
                failures.append(name)
    return AUDIT_VIOLATION if failures else 0


def cmd_audit(args) -> int:
    records = io.read_trace(args.trace)
    report = harness.audit_bounds(records, args.rho, StepRule(args.rule), args.m,
                                  eps=args.eps)
    print(f"rule={report.rule.value} rho={report.rho:g} eps={report.eps:g}")
    print(f"c1={report.c1!r} c2={report.c2!r}")
    print(f"t_tilde={report.t_tilde} warmup_bound={report.warmup_bound:g}")
    if report.bound_t52 is not None:
        print(f"first_hit_bound={report.bound_t52:g} "
              f"first_hit_g={report.first_hit_g} first_hit_margin={report.first_hit_margin}")
    for name in report.unverified:
        print(f"[UNVERIFIED] {name}")
    if report.violations:
        for v in report.violations:
            print(f"[FAIL] {v.check} at t={v.t}: lhs={v.lhs!r} rhs={v.rhs!r}")
        return AUDIT_VIOLATION
    print("[PASS] all audited inequalities hold")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="smoothboost",
                     description="margin-maximizing boosting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one boosting loop")
    _add_matrix_flags(p_run)
    p_run.add_argument("--rule", choices=[r.value for r in StepRule],
                       default="adaboost")
    p_run.add_argument("--learner",
                       choices=["optimal", "goal-edge", "bounded-edge", "script"],
                       default="optimal")
    p_run.add_argument("--goal", type=float, help="goal edge for goal-edge")
    p_run.add_argument("--rho-bar", type=float, help="bounded-edge target")
    p_run.add_argument("--sigma", type=float, help="bounded-edge width")
    p_run.add_argument("--edge-m", type=int,
                       help="bounded-edge example count (smallest admissible if omitted)")
    p_run.add_argument("--script", type=Path, help="one edge value per line")
    p_run.add_argument("--script-cycle", action="store_true",
                       help="repeat the script instead of erroring at its end")
    p_run.add_argument("--script-m", type=int, default=60,
                       help="example count for matrix-free scripted runs")
    p_run.add_argument("--iters", type=int, default=1000)
    p_run.add_argument("--trace", type=Path, help="write the trace here")
    p_run.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p_run.add_argument("--stop-eps", type=float,
                       help="stop when rho - margin <= eps (needs rho)")
    p_run.add_argument("--rho", type=float, help="known maximum margin")
    p_run.add_argument("--no-lp", action="store_true",
                       help="skip the LP solve for rho")
    p_run.add_argument("--allow-nonseparable", action="store_true")
    p_run.add_argument("--no-g-switch", action="store_true",
                       help="apply the rule's own step even before G > 0")
    p_run.set_defaults(func=cmd_run)

    p_lp = sub.add_parser("lp", help="exact maximum margin via the game LP")
    _add_matrix_flags(p_lp)
    p_lp.set_defaults(func=cmd_lp)

    p_cycle = sub.add_parser("cycle", help="detect periodic weight vectors")
    _add_matrix_flags(p_cycle)
    p_cycle.add_argument("--iters", type=int, default=4000)
    p_cycle.add_argument("--tol", type=float, default=1e-9)
    p_cycle.add_argument("--max-period", type=int, default=64)
    p_cycle.set_defaults(func=cmd_cycle)

    p_sim = sub.add_parser("simulate", help="constant-edge recursion simulator")
    p_sim.add_argument("--rho", type=float, required=True)
    p_sim.add_argument("--g0", type=float, required=True)
    p_sim.add_argument("--s0", type=float, default=1.0)
    p_sim.add_argument("--steps", type=int, default=10**6)
    p_sim.add_argument("--out", type=Path, help="write t,s,g,x rows here")
    p_sim.add_argument("--window", type=float, nargs=2, default=(1e3, 1e6),
                       metavar=("T_LO", "T_HI"))
    p_sim.set_defaults(func=cmd_simulate)

    p_suite = sub.add_parser("suite", help="experiment suites with pass/fail checks")
    p_suite.add_argument("which", choices=["goal-edge", "bounded-edge"])
    _add_matrix_flags(p_suite)
    p_suite.add_argument("--iters", type=int, default=3000)
    p_suite.add_argument("--goals", help="comma-separated goal edges")
    p_suite.add_argument("--n-goals", type=int, default=8)
    p_suite.add_argument("--rho-bar", type=float, default=0.3)
    p_suite.add_argument("--sigma", type=float, default=0.1)
    p_suite.add_argument("--edge-m", type=int)
    p_suite.add_argument("--out", type=Path)
    p_suite.set_defaults(func=cmd_suite)

    p_audit = sub.add_parser("audit", help="check a trace against the bounds")
    p_audit.add_argument("--trace", type=Path, required=True)
    p_audit.add_argument("--rho", type=float, required=True)
    p_audit.add_argument("--rule", choices=[r.value for r in StepRule],
                         required=True)
    p_audit.add_argument("--m", type=int, required=True,
                         help="training example count of the traced run")
    p_audit.add_argument("--eps", type=float, default=0.05)
    p_audit.set_defaults(func=cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, IndexError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
