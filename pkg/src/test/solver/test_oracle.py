import unittest

import numpy as np

from src.main.generator.random_miqp import gen_random_miqp
from src.main.model.problem import FiniteSet, IntegerRange, Interval, NonnegReals, Problem, Reals, objective
from src.main.solver import kkt
from src.main.solver.admm import Settings, solve
from src.main.solver.errors import (BoundViolationError, CombinationCapError, InfeasibleError,
                                    InvalidProblemError)
from src.main.solver.oracle import OracleResult, enumerate_solve, optimality_gap


class EnumerateSolveTests(unittest.TestCase):
    """This class represents the brute-force oracle test case"""

    def test_tie_keeps_first(self):
        """Test to return the first of two tied assignments"""
        p = Problem.create([[2.0]], [-3.0], 0.0, sets=[FiniteSet([0, 1, 2])])
        result = enumerate_solve(p)
        self.assertEqual(result.status, 'optimal')
        self.assertEqual(result.x.tolist(), [1.0])
        self.assertEqual(result.objective, -2.0)
        self.assertEqual((result.assignments, result.feasible_assignments), (3, 3))

    def test_integer_range(self):
        """Test to enumerate integer ranges"""
        p = Problem.create([[2.0]], [-5.0], 0.0, sets=[IntegerRange(-2, 4)])
        result = enumerate_solve(p)
        # x^2 - 5x is smallest at 2 and 3; 2 comes first
        self.assertEqual(result.x.tolist(), [2.0])
        self.assertEqual(result.assignments, 7)

    def test_infeasible(self):
        """Test to report infeasible when no binary pair sums to one half"""
        p = Problem.create(np.eye(2), np.zeros(2), 0.0, [[1.0, 1.0]], [0.5], [FiniteSet([0, 1])] * 2)
        result = enumerate_solve(p)
        self.assertEqual(result.status, 'infeasible')
        self.assertFalse(result.feasible)
        self.assertIsNone(result.x)

    def test_convex_problem(self):
        """Test that a problem without discrete coordinates reduces to the equality QP"""
        rng = np.random.default_rng(1)
        Q = rng.normal(size=(5, 10))
        A = rng.normal(size=(2, 5))
        p = Problem.create(Q @ Q.T, rng.normal(size=5), 0.0, A, rng.normal(size=2))
        result = enumerate_solve(p)
        np.testing.assert_allclose(result.x, kkt.solve_equality_qp(p.P, p.q, p.A, p.b), atol=1e-9)
        self.assertEqual(result.assignments, 1)

    def test_bounded_continuous_part(self):
        """Test to solve interval subproblems exactly"""
        # x1 in {0, 1}, x2 in [0, 1], x1 + x2 = 1.2: only x1 = 1 leaves x2 = 0.2 inside its interval
        p = Problem.create(np.eye(2), [0.0, -1.0], 0.0, [[1.0, 1.0]], [1.2], [FiniteSet([0, 1]), Interval(0, 1)])
        result = enumerate_solve(p)
        np.testing.assert_allclose(result.x, [1.0, 0.2], atol=1e-7)
        self.assertEqual(result.feasible_assignments, 1)

    def test_bounded_subproblems_are_exact(self):
        """Test that every bounded subproblem is solved to its exact minimizer"""
        # x1 in {0, 1, 2}, x2 >= 0, x3 in [0, 1], x1 + x2 + x3 = 2.5; minimizing (x2 - 3)^2 + (x3 - 4)^2 + x1
        p = Problem.create(np.diag([0.0, 2.0, 2.0]), [1.0, -6.0, -8.0], 25.0, [[1.0, 1.0, 1.0]], [2.5],
                           [FiniteSet([0, 1, 2]), NonnegReals(), Interval(0, 1)])
        result = enumerate_solve(p)
        # x1 = 0: x3 = 1 at its bound, x2 = 1.5; objective 2.25 + 9
        np.testing.assert_allclose(result.x, [0.0, 1.5, 1.0], atol=1e-12)
        self.assertAlmostEqual(result.objective, 11.25, places=12)
        self.assertEqual(result.feasible_assignments, 3)

    def test_cap(self):
        """Test to refuse more assignments than the cap"""
        p = Problem.create(np.eye(17), np.zeros(17), sets=[FiniteSet([0, 1])] * 17)
        with self.assertRaises(CombinationCapError):
            enumerate_solve(p)
        with self.assertRaises(CombinationCapError):
            enumerate_solve(Problem.create(np.eye(3), np.zeros(3), sets=[FiniteSet([0, 1])] * 3),
                            combination_cap=7)

    def test_invalid_problem(self):
        """Test to reject an invalid problem"""
        p = Problem.create([[-1.0]], [0.0], sets=[FiniteSet([0, 1])])
        with self.assertRaises(InvalidProblemError):
            enumerate_solve(p)

    def test_permutation_invariance(self):
        """Test to find the same optimum after permuting the coordinates"""
        p, _ = gen_random_miqp(8, 3, 4, 2, seed=3)
        perm = np.random.default_rng(0).permutation(8)
        permuted = Problem.create(p.P[np.ix_(perm, perm)], p.q[perm], p.r, p.A[:, perm], p.b,
                                  [p.sets[i] for i in perm])
        first = enumerate_solve(p)
        second = enumerate_solve(permuted)
        self.assertAlmostEqual(first.objective, second.objective, delta=1e-7 * max(1.0, abs(first.objective)))

    def test_lower_bounds_heuristic(self):
        """Test that the optimum lower-bounds every heuristic point"""
        cache = kkt.KktCache()
        for seed in range(3):
            p, x0 = gen_random_miqp(10, 3, 5, 2, seed=seed)
            oracle = enumerate_solve(p)
            self.assertLessEqual(oracle.objective, objective(p, x0) + 1e-6)
            solution = solve(p, Settings(rho=0.5, seed=seed, polish=True, polish_eps_tol=1e-8), cache=cache)
            self.assertTrue(solution.found_feasible)
            self.assertGreaterEqual(optimality_gap(p, solution.best_x, oracle), -1e-9)


class OptimalityGapTests(unittest.TestCase):
    """This class represents the optimality gap test case"""

    def setUp(self):
        self.p = Problem.create([[0.0]], [1.0], sets=[Reals()])

    def test_relative_gap(self):
        """Test the relative gap of a 2067 heuristic against a 2040 optimum"""
        gap = optimality_gap(self.p, [2067.0], OracleResult('optimal', np.array([2040.0]), 2040.0))
        self.assertAlmostEqual(gap, 27 / 2040)

    def test_small_optimum(self):
        """Test to use an absolute gap when the optimum is below one in magnitude"""
        gap = optimality_gap(self.p, [0.5], OracleResult('optimal', np.array([0.25]), 0.25))
        self.assertAlmostEqual(gap, 0.25)

    def test_heuristic_below_optimum(self):
        """Test to flag a heuristic point below the certified optimum"""
        with self.assertRaises(BoundViolationError):
            optimality_gap(self.p, [2039.0], OracleResult('optimal', np.array([2040.0]), 2040.0))

    def test_missing_points(self):
        """Test to reject gaps without a feasible point on either side"""
        with self.assertRaises(InfeasibleError):
            optimality_gap(self.p, [1.0], OracleResult('infeasible'))
        with self.assertRaises(InfeasibleError):
            optimality_gap(self.p, None, OracleResult('optimal', np.array([1.0]), 1.0))


class ContinuousCoordinateTests(unittest.TestCase):
    """This class represents the mixed discrete and continuous coordinate test case"""

    def test_nonneg_is_convex(self):
        """Test that half-lines are handled as continuous coordinates"""
        p = Problem.create(np.eye(2), [-1.0, 1.0], 0.0, sets=[FiniteSet([0, 1]), NonnegReals()])
        result = enumerate_solve(p)
        np.testing.assert_allclose(result.x, [1.0, 0.0], atol=1e-9)


if __name__ == '__main__':
    unittest.main()
