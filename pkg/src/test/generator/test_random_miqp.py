import unittest

import numpy as np

from src.main.generator.random_miqp import gen_random_miqp, unconstrained_minimum
from src.main.model.problem import FiniteSet, NonnegReals, Reals, membership_distance, objective, residual, validate
from src.main.solver.errors import DimensionError
from src.main.solver.oracle import enumerate_solve


class RandomMiqpTests(unittest.TestCase):
    """This class represents the random mixed-Boolean QP generator test case"""

    def test_witness_is_feasible(self):
        """Test that the returned point satisfies every constraint"""
        p, x0 = gen_random_miqp(200, 50, 100, 50, seed=1)
        self.assertEqual(validate(p), [])
        self.assertLessEqual(residual(p, x0), 1e-12)
        self.assertEqual(membership_distance(p, x0), 0.0)

    def test_set_layout(self):
        """Test to place Boolean, then nonnegative, then real coordinates"""
        p, _ = gen_random_miqp(6, 2, 2, 3)
        self.assertEqual(list(p.sets), [FiniteSet([0, 1])] * 2 + [NonnegReals()] * 3 + [Reals()])

    def test_unconstrained_minimum_is_zero(self):
        """Test that r offsets the unconstrained minimum to zero"""
        p, _ = gen_random_miqp(8, 3, 4, 2, seed=5)
        x_bar = np.linalg.lstsq(p.P, -p.q, rcond=None)[0]
        self.assertAlmostEqual(objective(p, x_bar), 0.0, delta=1e-8 * max(1.0, abs(p.r)))
        self.assertAlmostEqual(unconstrained_minimum(p.P, p.q), -p.r)

    def test_seeded(self):
        """Test to reproduce an instance from its seed"""
        first, x_first = gen_random_miqp(10, 3, 5, 0, seed=9)
        second, x_second = gen_random_miqp(10, 3, 5, 0, seed=9)
        other, _ = gen_random_miqp(10, 3, 5, 0, seed=10)
        for name in ('P', 'q', 'A', 'b'):
            np.testing.assert_array_equal(getattr(first, name), getattr(second, name))
        np.testing.assert_array_equal(x_first, x_second)
        self.assertEqual(first.r, second.r)
        self.assertFalse(np.array_equal(first.P, other.P))

    def test_desk_scale_oracle(self):
        """Test that desk-scale instances are within reach of the oracle"""
        p, x0 = gen_random_miqp(10, 3, 5, 0, seed=0)
        result = enumerate_solve(p)
        self.assertTrue(result.feasible)
        self.assertEqual(result.assignments, 32)
        self.assertLessEqual(result.objective, objective(p, x0) + 1e-9)

    def test_bad_dimensions(self):
        """Test to reject inconsistent counts"""
        with self.assertRaises(DimensionError):
            gen_random_miqp(4, 2, 3, 2)
        with self.assertRaises(DimensionError):
            gen_random_miqp(4, 5, 1, 1)
        with self.assertRaises(DimensionError):
            gen_random_miqp(0, 0, 0, 0)


if __name__ == '__main__':
    unittest.main()
