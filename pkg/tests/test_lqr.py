import json
import math

import numpy as np
import pytest
import scipy.linalg

from mfioc.benchmark import REFERENCE_KSTAR, reference_system
from mfioc.data import identify_gain
from mfioc.errors import GenerationFailureError, InfeasibleModelError, UsageError
from mfioc.linalg import min_eig_sym
from mfioc.lqr import (
    CostWeights,
    LtiSystem,
    care_residual,
    is_stabilizable,
    random_system,
    simulate_closed_loop,
    solve_care,
    system_from_json,
    system_to_json,
)


def closed_loop_decay(system, k):
    return float(np.max(np.linalg.eigvals(system.a - system.b @ k).real))


class TestSolveCare:
    def test_scalar_double_integrand(self):
        # p solves -p^2 + 1 = 0 with p > 0
        sol = solve_care(LtiSystem(a=[[0.0]], b=[[1.0]]),
                         CostWeights(q=[[1.0]], r=[[1.0]]))
        np.testing.assert_allclose(sol.p, [[1.0]], atol=1e-12)
        np.testing.assert_allclose(sol.k, [[1.0]], atol=1e-12)

    def test_identity_instance(self):
        # P^2 + 2P - 3I = 0 forces P = I
        sol = solve_care(LtiSystem(a=-np.eye(3), b=np.eye(3)),
                         CostWeights(q=3 * np.eye(3), r=np.eye(3)))
        np.testing.assert_allclose(sol.p, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(sol.k, np.eye(3), atol=1e-10)

    def test_reference_gain_three_decimals(self):
        system, cost, _ = reference_system()
        sol = solve_care(system, cost)
        assert np.max(np.abs(sol.k - REFERENCE_KSTAR)) <= 1e-3

    @pytest.mark.parametrize("seed", range(8))
    def test_invariants_and_scipy_oracle(self, seed):
        system, cost, _ = random_system(3, 2, seed)
        sol = solve_care(system, cost)
        assert min_eig_sym(sol.p) > 0
        assert closed_loop_decay(system, sol.k) < 0
        assert care_residual(system, cost, sol.p) <= 1e-8 * (1 + np.linalg.norm(sol.p, "fro"))
        p_ref = scipy.linalg.solve_continuous_are(system.a, system.b, cost.q, cost.r)
        np.testing.assert_allclose(sol.p, p_ref, atol=1e-8 * (1 + np.linalg.norm(p_ref)))

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_cost_scaling_leaves_gain(self, c):
        system, cost, _ = reference_system()
        base = solve_care(system, cost)
        scaled = solve_care(system, CostWeights(q=c * cost.q, r=c * cost.r))
        np.testing.assert_allclose(scaled.k, base.k, atol=1e-8)
        np.testing.assert_allclose(scaled.p, c * base.p, atol=1e-8 * c)

    def test_rejects_nonstabilizable(self):
        system = LtiSystem(a=np.diag([1.0, -1.0]), b=[[0.0], [1.0]])
        with pytest.raises(InfeasibleModelError):
            solve_care(system, CostWeights(q=np.eye(2), r=[[1.0]]))

    def test_rejects_indefinite_r(self):
        with pytest.raises(InfeasibleModelError):
            CostWeights(q=np.eye(2), r=np.diag([1.0, 0.0]))


class TestStabilizable:
    def test_hurwitz_always(self):
        assert is_stabilizable(LtiSystem(a=-np.eye(3), b=np.zeros((3, 1))))

    def test_uncontrollable_unstable_mode(self):
        assert not is_stabilizable(LtiSystem(a=np.diag([1.0, -1.0]), b=[[0.0], [1.0]]))

    def test_controllable_unstable_mode(self):
        assert is_stabilizable(LtiSystem(a=np.diag([1.0, -1.0]), b=[[1.0], [0.0]]))


class TestSimulate:
    def test_zero_initial_state(self):
        system, cost, _ = reference_system()
        sol = solve_care(system, cost)
        traj = simulate_closed_loop(system, sol.k, np.zeros(3), 2.0, 0.1)
        assert np.all(traj.states == 0) and np.all(traj.inputs == 0)

    def test_scalar_exponential(self):
        system = LtiSystem(a=[[-1.0]], b=[[0.0]])
        traj = simulate_closed_loop(system, [[0.0]], [2.0], 1.0, 0.1)
        assert traj.states[0, -1] == pytest.approx(2.0 * math.exp(-1.0), rel=1e-10)

    def test_reference_grid_and_gain_round_trip(self):
        system, cost, x0 = reference_system()
        sol = solve_care(system, cost)
        traj = simulate_closed_loop(system, sol.k, x0, 8.0, 0.1)
        assert traj.sample_count == 81
        np.testing.assert_allclose(identify_gain(traj), sol.k, atol=1e-9)

    def test_semigroup_property(self):
        system, cost, x0 = reference_system()
        sol = solve_care(system, cost)
        long = simulate_closed_loop(system, sol.k, x0, 2.0, 0.1)
        first = simulate_closed_loop(system, sol.k, x0, 1.0, 0.1)
        second = simulate_closed_loop(system, sol.k, first.states[:, -1], 1.0, 0.1)
        np.testing.assert_allclose(second.states[:, -1], long.states[:, -1], atol=1e-10)

    def test_dimension_mismatch(self):
        system, cost, x0 = reference_system()
        with pytest.raises(UsageError):
            simulate_closed_loop(system, np.zeros((2, 2)), x0, 1.0, 0.1)


class TestRandomSystem:
    def test_deterministic_in_seed(self):
        a = random_system(3, 2, seed=7)
        b = random_system(3, 2, seed=7)
        assert np.array_equal(a[0].a, b[0].a) and np.array_equal(a[0].b, b[0].b)
        assert np.array_equal(a[1].q, b[1].q) and np.array_equal(a[1].r, b[1].r)
        assert np.array_equal(a[2], b[2])

    def test_solvable_and_stable(self):
        system, cost, _ = random_system(3, 2, seed=11)
        sol = solve_care(system, cost)
        assert closed_loop_decay(system, sol.k) < 0

    def test_hundred_seeds_no_failures(self):
        for seed in range(100):
            try:
                system, cost, x0 = random_system(3, 2, seed)
            except GenerationFailureError as exc:  # pragma: no cover
                pytest.fail(f"seed {seed} failed generation: {exc}")
            assert x0.shape == (3,)

    def test_validates_dims(self):
        with pytest.raises(UsageError):
            random_system(0, 2, seed=0)


class TestSystemJson:
    def test_round_trip(self):
        system, cost, x0 = random_system(3, 2, seed=3)
        text = system_to_json(system, cost, x0)
        system2, cost2, x02 = system_from_json(text)
        np.testing.assert_array_equal(system2.a, system.a)
        np.testing.assert_array_equal(system2.b, system.b)
        np.testing.assert_array_equal(cost2.q, cost.q)
        np.testing.assert_array_equal(cost2.r, cost.r)
        np.testing.assert_array_equal(x02, x0)

    def test_row_major_layout(self):
        system, cost, x0 = reference_system()
        doc = json.loads(system_to_json(system, cost, x0))
        assert doc["A"][0] == list(system.a[0])  # rows serialize as rows
        assert doc["n"] == 3 and doc["m"] == 2

    def test_rejects_inconsistent_dims(self):
        system, cost, x0 = reference_system()
        doc = json.loads(system_to_json(system, cost, x0))
        doc["m"] = 3
        with pytest.raises(UsageError):
            system_from_json(json.dumps(doc))
