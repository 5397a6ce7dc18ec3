import unittest

import numpy as np

from src.main.model.problem import FiniteSet, IntegerRange, Interval, NonnegReals, Reals
from src.main.solver.errors import DimensionError
from src.main.solver.projections import Projector, hull_sets, project, project_coord, sample_hull

CASES = 10000


def random_sets(rng, kind, count):
    sets = []
    for _ in range(count):
        if kind == 'reals':
            sets.append(Reals())
        elif kind == 'nonneg':
            sets.append(NonnegReals())
        elif kind == 'interval':
            lo = rng.normal(scale=3)
            sets.append(Interval(lo, lo + abs(rng.normal(scale=3))))
        elif kind == 'finite':
            size = int(rng.integers(1, 6))
            sets.append(FiniteSet(sorted(set(np.round(rng.normal(scale=3, size=size), 2)))))
        else:
            lo = int(rng.integers(-5, 5))
            sets.append(IntegerRange(lo, lo + int(rng.integers(0, 6))))
    return sets


def candidates(s):
    if isinstance(s, FiniteSet):
        return np.array(s.values)
    if isinstance(s, IntegerRange):
        return np.arange(s.lo, s.hi + 1, dtype=float)
    return None


class ProjectionTests(unittest.TestCase):
    """This class represents the projection test case"""

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def _check_kind(self, kind):
        sets = random_sets(self.rng, kind, CASES)
        z = self.rng.normal(scale=5, size=CASES)
        # exact midpoints of finite sets exercise the tie rule
        for i in range(0, CASES, 10):
            values = candidates(sets[i])
            if values is not None and len(values) > 1:
                z[i] = (values[0] + values[1]) / 2
        x = project(sets, z)
        for s, zi, xi in zip(sets, z, x):
            self.assertEqual(s.distance(xi), 0.0)
            self.assertEqual(project_coord(s, xi), xi)
            self.assertEqual(xi, project_coord(s, zi))
            values = candidates(s)
            if values is not None:
                gaps = np.abs(values - zi)
                best = values[gaps == gaps.min()].min()
                self.assertEqual(xi, best)
        np.testing.assert_array_equal(project(sets, x), x)

    def test_reals(self):
        """Test to leave reals unchanged"""
        self._check_kind('reals')

    def test_nonneg(self):
        """Test to clip onto the half-line"""
        self._check_kind('nonneg')

    def test_interval(self):
        """Test to clip onto intervals"""
        self._check_kind('interval')

    def test_finite(self):
        """Test finite sets against a linear scan with ties to the smaller value"""
        self._check_kind('finite')

    def test_intrange(self):
        """Test integer ranges against enumeration with ties to the smaller value"""
        self._check_kind('intrange')

    def test_tie_rule(self):
        """Test to resolve exact midpoints downward"""
        np.testing.assert_array_equal(project([FiniteSet([0, 1]), IntegerRange(0, 4)], [0.5, 2.5]), [0.0, 2.0])

    def test_dimension_mismatch(self):
        """Test to reject a vector of the wrong length"""
        with self.assertRaises(DimensionError):
            project([Reals()], [1.0, 2.0])
        with self.assertRaises(DimensionError):
            Projector([Reals(), Reals()])(np.zeros(3))

    def test_hull_sets(self):
        """Test to replace nonconvex sets by their convex hulls"""
        hull = hull_sets([FiniteSet([-3, -1, 1, 3]), IntegerRange(0, 2), NonnegReals(), FiniteSet([5])])
        self.assertEqual(hull[0], Interval(-3, 3))
        self.assertEqual(hull[1], Interval(0, 2))
        self.assertEqual(hull[2], NonnegReals())
        self.assertEqual(hull[3], FiniteSet([5]))

    def test_sample_hull(self):
        """Test to draw starting points inside the convex hull"""
        sets = [FiniteSet([0, 1]), Interval(-2, 5), NonnegReals(), Reals(), IntegerRange(-3, 3)]
        for _ in range(200):
            x = sample_hull(sets, self.rng)
            self.assertTrue(0 <= x[0] <= 1)
            self.assertTrue(-2 <= x[1] <= 5)
            self.assertGreaterEqual(x[2], 0)
            self.assertTrue(np.isfinite(x[3]))
            self.assertTrue(-3 <= x[4] <= 3)

    def test_sample_hull_seeded(self):
        """Test to reproduce samples from the same seed"""
        sets = [FiniteSet([0, 1]), Reals()]
        first = sample_hull(sets, np.random.default_rng(3))
        second = sample_hull(sets, np.random.default_rng(3))
        np.testing.assert_array_equal(first, second)


if __name__ == '__main__':
    unittest.main()
