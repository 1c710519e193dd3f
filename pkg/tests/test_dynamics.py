"""Cycle detection, cycle diagnostics, recursion simulators, decay fits."""

import math

import mpmath
import numpy as np
import pytest

from smoothboost import (
    RunConfig,
    StepRule,
    constant_edge_margin,
    constant_edge_recursion,
    cycle_diagnostics,
    detect_cycle,
    fit_decay_exponent,
    recursion_run,
    run,
    scan_monotonicity,
)
from smoothboost.core import IterationRecord
from smoothboost.learners import OptimalLearner, ScriptedLearner

mpmath.mp.dps = 40


def mp_recursion_step(rho, g, s):
    rho, g, s = mpmath.mpf(rho), mpmath.mpf(g), mpmath.mpf(s)
    s_next = s + mpmath.log(((1 + rho) / (1 - rho)) * ((1 - g) / (1 + g))) / 2
    sg_next = s * g + mpmath.log(((1 + g) / (1 + rho)) * ((1 - g) / (1 - rho))) / 2
    return s_next, sg_next / s_next


# Frozen from mp_recursion_step("0.5", "0.1", "1").
RECURSION_S1 = 1.4489707966029793
RECURSION_G1 = 0.16481758559870806


def test_frozen_recursion_step_matches_extended_precision():
    s1, g1 = mp_recursion_step("0.5", "0.1", "1")
    assert RECURSION_S1 == float(s1)
    assert RECURSION_G1 == float(g1)


class TestDetectCycle:
    def test_constant_trace_has_period_one(self):
        d = np.tile([0.2, 0.3, 0.5], (200, 1))
        found = detect_cycle(d, tol=1e-9, max_period=10)
        assert found.period == 1
        assert found.start == 0

    def test_synthetic_period_five(self, rng):
        base = rng.dirichlet(np.ones(4), size=5)
        d = np.tile(base, (40, 1))
        found = detect_cycle(d, tol=1e-9, max_period=20)
        assert found.period == 5

    def test_minimal_period_not_a_multiple(self, rng):
        base = rng.dirichlet(np.ones(3), size=3)
        d = np.tile(base, (60, 1))
        assert detect_cycle(d, tol=1e-9, max_period=30).period == 3

    def test_nonrepeating_returns_none(self, rng):
        d = rng.dirichlet(np.ones(3), size=300)
        assert detect_cycle(d, tol=1e-9, max_period=40) is None

    def test_start_marks_transient_end(self, rng):
        noise = rng.dirichlet(np.ones(3), size=37)
        base = rng.dirichlet(np.ones(3), size=4)
        d = np.vstack([noise, np.tile(base, (50, 1))])
        found = detect_cycle(d, tol=1e-9, max_period=16)
        assert found.period == 4
        assert found.start == 37

    def test_short_trace_rejected(self, rng):
        with pytest.raises(ValueError, match="too short"):
            detect_cycle(rng.dirichlet(np.ones(3), size=50), max_period=64)


class TestCycleDiagnostics:
    @pytest.fixture(scope="class")
    def golden_run(self, cycle_matrix):
        cfg = RunConfig(rule=StepRule.ADABOOST, max_iters=4000,
                        learner=OptimalLearner(), keep_weights=True)
        res = run(cycle_matrix, cfg)
        found = detect_cycle(res.weight_trace, tol=1e-9, max_period=64)
        return res, found

    def test_golden_cycle(self, cycle_matrix, golden_run):
        res, found = golden_run
        assert found is not None and found.period == 3
        report = cycle_diagnostics(cycle_matrix, res.records, res.weight_trace, found)
        # All three examples stay weighted: all are support vectors, each
        # correctly classified twice per three-step cycle.
        assert report.support_set == (0, 1, 2)
        assert report.tau == {0: 2, 1: 2, 2: 2}
        assert report.tau_uniform is True
        assert report.edges_equal
        golden = (math.sqrt(5) - 1) / 2
        np.testing.assert_allclose(report.cycle_edges, golden, atol=1e-9)
        assert max(report.condition_residuals.values()) <= 1e-6

    def test_equal_edge_product_forces_tau(self):
        # (1+r)^tau (1-r)^(T-tau) = 1 pins tau: solving for the golden
        # edge with T = 3 gives tau = 2 for every support vector.
        r = (math.sqrt(5) - 1) / 2
        assert (1 + r) ** 2 * (1 - r) == pytest.approx(1.0, abs=1e-12)

    def test_non_support_examples_excluded(self):
        # Synthetic period-1 trace where the third example's weight is
        # negligible throughout: it must not enter the support set.
        m = 3
        d = np.tile([0.6, 0.4 - 1e-12, 1e-12], (140, 1))
        M_entries = np.array([[1.0, -1.0], [1.0, 1.0], [-1.0, -1.0]])
        from smoothboost import GameMatrix
        M = GameMatrix(M_entries)
        records = [IterationRecord(t=k + 1, j=0, r=0.2, gamma=math.atanh(0.2),
                                   alpha=0.1, s=0.1 * k, g=0.0, mu=0.0, log_loss=0.0)
                   for k in range(140)]
        found = detect_cycle(d, tol=1e-9, max_period=8)
        report = cycle_diagnostics(M, records, d, found)
        assert 2 not in report.support_set
        assert set(report.tau) == {0, 1}


class TestMonotonicityScan:
    def test_ascent_trace_never_decreases(self, cycle_matrix):
        cfg = RunConfig(rule=StepRule.APPROX_COORD_ASCENT, max_iters=600,
                        learner=OptimalLearner())
        res = run(cycle_matrix, cfg)
        g = [rec.g for rec in res.records[res.t_positive - 1:]]
        scan = scan_monotonicity(g)
        assert scan.decreases == 0
        assert scan.increases > 0

    def test_counts_on_synthetic_zigzag(self):
        scan = scan_monotonicity([0.0, 1.0, 0.5, 0.5, 2.0])
        assert (scan.increases, scan.decreases, scan.flats) == (2, 1, 1)

    def test_equal_edge_cycle_converges_to_constant_edge_margin(self, cycle_matrix):
        # On the golden 3-cycle every edge is equal, so the smooth margin
        # must approach constant_edge_margin(r) with eventually monotone
        # residuals.
        cfg = RunConfig(rule=StepRule.ADABOOST, max_iters=3000,
                        learner=OptimalLearner(), keep_weights=True)
        res = run(cycle_matrix, cfg)
        found = detect_cycle(res.weight_trace, tol=1e-9, max_period=16)
        report = cycle_diagnostics(cycle_matrix, res.records, res.weight_trace, found)
        r = float(report.cycle_edges.mean())
        target = constant_edge_margin(r)
        resid = np.abs(np.array([rec.g for rec in res.records[-900:]]) - target)
        assert np.all(np.diff(resid) <= 1e-15)
        assert resid[-1] < 1e-3

    def test_unequal_edge_cycle_keeps_decreasing(self, uneven_cycle_matrix):
        cfg = RunConfig(rule=StepRule.ADABOOST, max_iters=3000,
                        learner=OptimalLearner(), keep_weights=True)
        res = run(uneven_cycle_matrix, cfg)
        found = detect_cycle(res.weight_trace, tol=1e-9, max_period=40)
        assert found is not None
        report = cycle_diagnostics(uneven_cycle_matrix, res.records,
                                   res.weight_trace, found)
        assert not report.edges_equal
        g = [rec.g for rec in res.records[res.t_positive - 1:]]
        scan = scan_monotonicity(g, period=found.period)
        # At least one strict decrease inside every trailing period window.
        assert min(scan.per_period_decreases[-30:]) >= 1


class TestConstantEdgeRecursion:
    def test_frozen_first_step(self):
        tr = constant_edge_recursion(0.5, 0.1, 1.0, 1)
        assert tr.s[1] == pytest.approx(RECURSION_S1, abs=1e-15)
        assert tr.g[1] == pytest.approx(RECURSION_G1, abs=1e-15)

    def test_per_step_progress_inequality(self):
        # g' - g >= alpha (rho - g) / (2 s') along the whole recursion.
        tr = constant_edge_recursion(0.5, 0.1, 1.0, 2000)
        alpha = np.diff(tr.s)
        lhs = np.diff(tr.g)
        rhs = alpha * (0.5 - tr.g[:-1]) / (2.0 * tr.s[1:])
        assert np.all(lhs >= rhs - 1e-12)

    def test_step_cap_inequality(self):
        rho = 0.5
        tr = constant_edge_recursion(rho, 0.1, 1.0, 2000)
        alpha = np.diff(tr.s)
        cap = math.log(2) / (1 - rho) + rho / (1 - rho) * tr.s[:-1]
        assert np.all(alpha <= cap + 1e-12)

    def test_monotone_and_bounded(self):
        tr = constant_edge_recursion(0.4, 0.0, 0.5, 5000)
        assert np.all(np.diff(tr.g) > 0)
        assert np.all(tr.g < 0.4)
        assert np.all(tr.x > 0)

    def test_domain(self):
        with pytest.raises(ValueError):
            constant_edge_recursion(0.5, 0.5, 1.0, 10)
        with pytest.raises(ValueError):
            constant_edge_recursion(0.5, 0.1, 0.0, 10)
        with pytest.raises(ValueError):
            constant_edge_recursion(1.0, 0.1, 1.0, 10)


class TestRecursionRunEquivalence:
    def test_matches_closed_form_recursion(self):
        # Two independent routes to the same orbit: the general
        # log-cosh one-step recursions versus the algebraic constant
        # edge form.  Agreement to 1e-9 per step over thousands of steps.
        m, rho, steps = 60, 0.5, 4000
        records = recursion_run(ScriptedLearner([rho], cycle=True),
                                StepRule.APPROX_COORD_ASCENT, m, steps)
        anchor = next(rec for rec in records if not math.isnan(rec.g) and rec.g > 0)
        tr = constant_edge_recursion(rho, anchor.g, anchor.s, steps - anchor.t)
        for k, rec in enumerate(records[anchor.t - 1:]):
            assert abs(rec.s - tr.s[k]) <= 1e-9
            assert abs(rec.g - tr.g[k]) <= 1e-9

    def test_alternating_script(self):
        records = recursion_run(ScriptedLearner([0.3, 0.5], cycle=True),
                                StepRule.ADABOOST, 10, 6)
        assert [rec.r for rec in records] == [0.3, 0.5, 0.3, 0.5, 0.3, 0.5]

    def test_finite_script_exhausts(self):
        with pytest.raises(IndexError):
            recursion_run(ScriptedLearner([0.3, 0.5]), StepRule.ADABOOST, 10, 3)

    def test_arcgv_rejected(self):
        with pytest.raises(ValueError, match="margin"):
            recursion_run(ScriptedLearner([0.5]), StepRule.ARC_GV, 10, 5)


class TestDecayFit:
    def test_exact_power_law(self):
        t = np.arange(1, 100_001)
        fit = fit_decay_exponent(t, t ** (-1 / 3), (1e2, 1e5))
        assert fit.slope == pytest.approx(-1 / 3, abs=1e-6)
        assert fit.is_power_law

    def test_exponential_flagged(self):
        t = np.arange(1, 50_001)
        fit = fit_decay_exponent(t, np.exp(-t / 500.0), (1e2, 1e4))
        assert fit.slope < -1.0
        assert not fit.is_power_law

    def test_recursion_decay_near_minus_third(self):
        tr = constant_edge_recursion(0.5, 0.1, 1.0, 100_000)
        fit = fit_decay_exponent(tr.t, tr.x, (1e3, 1e5))
        assert abs(fit.slope - (-1 / 3)) <= 0.05

    def test_rejects_nonpositive_series(self):
        t = np.arange(1, 2001)
        x = 1.0 / t - 0.01
        with pytest.raises(ValueError, match="positive"):
            fit_decay_exponent(t, x, (1e1, 2e3))

    def test_rejects_narrow_window(self):
        t = np.arange(1, 1001)
        with pytest.raises(ValueError, match="decade"):
            fit_decay_exponent(t, 1.0 / t, (100, 500))
