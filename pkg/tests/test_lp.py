"""Maximum-margin LP oracle: exact values, duality, and invariances."""

import math

import numpy as np
import pytest

from smoothboost import GameMatrix, ModelState, RunConfig, StepRule, log_exp_loss, run
from smoothboost.gamelp import brute_force_value, max_margin
from smoothboost.learners import OptimalLearner

from conftest import random_game_matrix


class TestKnownValues:
    def test_cycle_matrix(self, cycle_matrix):
        sol = max_margin(cycle_matrix)
        assert sol.rho == pytest.approx(1 / 3, abs=1e-9)
        np.testing.assert_allclose(sol.lambda_star, 1 / 3, atol=1e-9)
        np.testing.assert_allclose(sol.d_star, 1 / 3, atol=1e-9)
        assert sol.gap <= 1e-9

    def test_single_column(self):
        M = GameMatrix(np.array([[1.0], [-1.0]]))
        sol = max_margin(M)
        assert sol.rho == pytest.approx(-1.0, abs=1e-9)

    def test_antisymmetric_pair_is_fair(self):
        # h and -h both present: the value is 0.
        M = GameMatrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        sol = max_margin(M)
        assert sol.rho == pytest.approx(0.0, abs=1e-9)
        assert not sol.separable


class TestCertification:
    def test_duality_invariants_on_random_instances(self, rng):
        for _ in range(30):
            M = random_game_matrix(rng, int(rng.integers(2, 25)), int(rng.integers(1, 25)))
            sol = max_margin(M)
            assert sol.gap <= 1e-9
            for vec in (sol.lambda_star, sol.d_star):
                assert np.all(vec >= -1e-10)
                assert vec.sum() == pytest.approx(1.0, abs=1e-10)
            assert float((M.entries @ sol.lambda_star).min()) == pytest.approx(
                sol.rho, abs=1e-9)
            assert float((sol.d_star @ M.entries).max()) == pytest.approx(
                sol.rho, abs=1e-9)
            # weak duality: primal never exceeds dual
            assert sol.primal_value <= sol.dual_value + 1e-12

    def test_row_permutation_invariance(self, rng):
        M = random_game_matrix(rng, 9, 12)
        rho = max_margin(M).rho
        for _ in range(5):
            perm = rng.permutation(9)
            assert max_margin(GameMatrix(M.entries[perm])).rho == pytest.approx(
                rho, abs=1e-9)

    def test_column_duplication_invariance(self, rng):
        M = random_game_matrix(rng, 8, 6)
        rho = max_margin(M).rho
        doubled = GameMatrix(np.hstack([M.entries, M.entries[:, :3]]))
        assert max_margin(doubled).rho == pytest.approx(rho, abs=1e-9)

    def test_negation_closure_nonnegative(self, rng):
        for _ in range(10):
            M = random_game_matrix(rng, 7, 5)
            both = GameMatrix(np.hstack([M.entries, -M.entries]))
            assert max_margin(both).rho >= -1e-9


class TestBruteForce:
    def test_single_column_exact(self):
        M = GameMatrix(np.array([[1.0], [-1.0], [1.0]]))
        assert brute_force_value(M, 100) == -1.0

    def test_cycle_matrix_bracket(self, cycle_matrix):
        v = brute_force_value(cycle_matrix, 300)
        assert 1 / 3 - 0.01 <= v <= 1 / 3 + 1e-12

    def test_lower_bounds_lp(self, rng):
        for n in (2, 3, 4):
            for _ in range(5):
                M = random_game_matrix(rng, int(rng.integers(2, 10)), n)
                grid = {2: 600, 3: 240, 4: 100}[n]
                bf = brute_force_value(M, grid)
                sol = max_margin(M)
                assert bf <= sol.rho + 1e-9
                assert sol.rho - bf <= 0.03  # coarse-grid agreement

    def test_rejects_many_columns(self, rng):
        M = random_game_matrix(rng, 4, 5)
        with pytest.raises(ValueError, match="n <= 4"):
            brute_force_value(M, 100)


class TestSeparabilityFlag:
    def test_separable_runs_drive_loss_to_zero(self, cycle_matrix):
        sol = max_margin(cycle_matrix)
        assert sol.separable
        cfg = RunConfig(rule=StepRule.ADABOOST, max_iters=500, learner=OptimalLearner())
        res = run(cycle_matrix, cfg)
        assert res.records[-1].log_loss < -10.0

    def test_nonseparable_loss_floor(self, rng):
        # With rho = 0 no coefficient vector pushes F below 1.
        M = GameMatrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert max_margin(M).rho == pytest.approx(0.0, abs=1e-9)
        for _ in range(50):
            lam = rng.uniform(0, 5, size=2)
            if lam.sum() == 0:
                continue
            state = ModelState.from_coeffs(M, lam)
            assert log_exp_loss(state) >= -1e-12
