'''
Projections onto X = X_1 x ... x X_n

1. project_coord: nearest point of one set
2. project: coordinatewise projection of a vector
3. sample_hull: random point of the convex hull Co X
'''
import numpy as np

from src.main.model.problem import FiniteSet, IntegerRange, Interval
from src.main.solver.errors import DimensionError


def project_coord(s, z):
    return s.project(z)


def hull_sets(sets):
    """Replace every set by its convex hull (finite/integer sets become intervals)."""
    return [Interval(*s.bounds()) if not s.is_convex() else s for s in sets]


def _nearest(values, z):
    # vectorized twin of FiniteSet.project: searchsorted is the same binary search
    idx = np.searchsorted(values, z, side='left')
    upper = values[np.minimum(idx, len(values) - 1)]
    lower = values[np.maximum(idx - 1, 0)]
    return np.where(z - lower <= upper - z, lower, upper)


class Projector(object):
    """
    Vectorized projection onto a fixed product of sets

    Box-like sets (reals, half-line, interval) share one clip; integer ranges
    round half down and then clip; finite sets are grouped by their value
    tuple and handled with one searchsorted per group.
    """

    def __init__(self, sets):
        n = len(sets)
        self.n = n
        self.lo = np.full(n, -np.inf)
        self.hi = np.full(n, np.inf)
        self.rounded = np.zeros(n, dtype=bool)
        groups = {}
        for i, s in enumerate(sets):
            self.lo[i], self.hi[i] = s.bounds()
            if isinstance(s, IntegerRange):
                self.rounded[i] = True
            elif isinstance(s, FiniteSet) and len(s.values) > 1:
                groups.setdefault(s.values, []).append(i)
        self.groups = [(np.array(idx), np.array(values)) for values, idx in groups.items()]
        self.bounded = np.isfinite(self.lo) & np.isfinite(self.hi)
        self.half_line = np.isfinite(self.lo) & ~np.isfinite(self.hi)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n,):
            raise DimensionError(f'vector has shape {z.shape}, expected ({self.n},)')
        out = np.clip(z, self.lo, self.hi)
        if self.rounded.any():
            r = self.rounded
            out[r] = np.clip(np.ceil(z[r] - 0.5), self.lo[r], self.hi[r])
        for idx, values in self.groups:
            out[idx] = _nearest(values, z[idx])
        return out

    def sample_hull(self, rng):
        """
        Draw a random point of Co X

        Bounded hulls are sampled uniformly on [min, max], the real line from a
        standard normal and the half-line from its absolute value.
        """
        uniform = rng.uniform(size=self.n)
        normal = rng.standard_normal(size=self.n)
        width = np.where(self.bounded, self.hi - self.lo, 0.0)
        base = np.where(self.bounded, self.lo, 0.0)
        x = np.where(self.bounded, base + uniform * width, normal)
        x = np.where(self.half_line, self.lo + np.abs(normal), x)
        return x


def project(sets, z):
    if len(sets) != np.shape(z)[0]:
        raise DimensionError(f'{len(sets)} sets for a vector of length {np.shape(z)[0]}')
    return Projector(sets)(z)


def sample_hull(sets, rng):
    return Projector(sets).sample_hull(rng)
