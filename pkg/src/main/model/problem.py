import bisect
import json
import math

import attrs
import numpy as np
import scipy.linalg
from marshmallow import Schema, ValidationError, fields, post_dump, post_load, validates_schema
from marshmallow import validate as mm_validate

from src.main.solver.errors import DimensionError

SET_TYPES = ('reals', 'nonneg', 'interval', 'finite', 'intrange')


class ConstraintSet(object):
    """One coordinate's constraint set X_i (closed, nonempty subset of R)."""

    TYPE = None

    def is_convex(self):
        return True

    def bounds(self):
        """Return (lo, hi) of the convex hull; infinite ends for unbounded sets."""
        return -math.inf, math.inf

    def project(self, z):
        return float(z)

    def distance(self, z):
        return abs(self.project(z) - z)

    def violations(self):
        return []


@attrs.frozen
class Reals(ConstraintSet):
    TYPE = 'reals'


@attrs.frozen
class NonnegReals(ConstraintSet):
    TYPE = 'nonneg'

    def bounds(self):
        return 0.0, math.inf

    def project(self, z):
        return max(float(z), 0.0)


@attrs.frozen
class Interval(ConstraintSet):
    TYPE = 'interval'

    lo: float = attrs.field(converter=float)
    hi: float = attrs.field(converter=float)

    def bounds(self):
        return self.lo, self.hi

    def project(self, z):
        return min(max(float(z), self.lo), self.hi)

    def violations(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            return ['interval bounds must be finite']
        if self.lo > self.hi:
            return [f'interval lo > hi ({self.lo} > {self.hi})']
        return []


def _float_tuple(values):
    return tuple(float(v) for v in values)


@attrs.frozen
class FiniteSet(ConstraintSet):
    TYPE = 'finite'

    values: tuple = attrs.field(converter=_float_tuple)

    def is_convex(self):
        return len(self.values) == 1

    def bounds(self):
        return self.values[0], self.values[-1]

    def project(self, z):
        # binary search over the sorted values; midpoint ties go to the smaller value
        values = self.values
        i = bisect.bisect_left(values, z)
        if i == 0:
            return values[0]
        if i == len(values):
            return values[-1]
        lo, hi = values[i - 1], values[i]
        return lo if z - lo <= hi - z else hi

    def violations(self):
        if not self.values:
            return ['finite set is empty']
        if not all(math.isfinite(v) for v in self.values):
            return ['finite set has non-finite values']
        if any(a >= b for a, b in zip(self.values, self.values[1:])):
            return ['finite set values are not strictly increasing']
        return []


@attrs.frozen
class IntegerRange(ConstraintSet):
    TYPE = 'intrange'

    lo: int = attrs.field(converter=int)
    hi: int = attrs.field(converter=int)

    @property
    def values(self):
        return tuple(float(v) for v in range(self.lo, self.hi + 1))

    def is_convex(self):
        return self.lo == self.hi

    def bounds(self):
        return float(self.lo), float(self.hi)

    def project(self, z):
        return float(min(max(math.ceil(z - 0.5), self.lo), self.hi))

    def violations(self):
        if self.lo > self.hi:
            return [f'integer range lo > hi ({self.lo} > {self.hi})']
        return []


def _frozen_array(value):
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


@attrs.frozen(eq=False)
class Problem:
    """minimize (1/2) x'Px + q'x + r  subject to  Ax = b, x in X_1 x ... x X_n."""

    P: np.ndarray = attrs.field(converter=_frozen_array)
    q: np.ndarray = attrs.field(converter=_frozen_array)
    r: float = attrs.field(converter=float)
    A: np.ndarray = attrs.field(converter=_frozen_array)
    b: np.ndarray = attrs.field(converter=_frozen_array)
    sets: tuple = attrs.field(converter=tuple)

    def __attrs_post_init__(self):
        if self.A.size == 0:
            object.__setattr__(self, 'A', _frozen_array(np.zeros((0, self.q.shape[0]))))
        if self.b.size == 0:
            object.__setattr__(self, 'b', _frozen_array(np.zeros(0)))

    @classmethod
    def create(cls, P, q, r=0.0, A=None, b=None, sets=None):
        q = np.asarray(q, dtype=float)
        n = q.shape[0]
        if A is None:
            A = np.zeros((0, n))
        if b is None:
            b = np.zeros(np.shape(A)[0])
        if sets is None:
            sets = [Reals()] * n
        return cls(P=P, q=q, r=r, A=A, b=b, sets=sets)

    @property
    def n(self):
        return self.q.shape[0]

    @property
    def m(self):
        return self.b.shape[0]

    def is_convex(self):
        return all(s.is_convex() for s in self.sets)

    def with_sets(self, sets):
        return attrs.evolve(self, sets=sets)

    def with_data(self, q=None, b=None):
        """Same P and A (and so the same KKT matrix) with new q and/or b."""
        return attrs.evolve(self, q=self.q if q is None else q, b=self.b if b is None else b)

    def freeze(self, mask, values):
        """Replace the sets of coordinates in ``mask`` with singletons at ``values``."""
        sets = [Interval(v, v) if frozen else s for s, frozen, v in zip(self.sets, mask, values)]
        return self.with_sets(sets)


def validate(p):
    """
    Check every problem invariant

    Parameters
    ----------
    p: Problem

    Returns
    -------
    List - violation messages, empty when the problem is valid
    """
    violations = []
    n = p.n
    if p.q.ndim != 1:
        return ['q must be a vector']
    if p.P.shape != (n, n):
        violations.append(f'P shape {p.P.shape} != ({n}, {n})')
    if p.A.ndim != 2 or p.A.shape[1] != n:
        violations.append(f'A shape {p.A.shape} does not have n={n} columns')
    if p.b.ndim != 1 or p.b.shape[0] != p.A.shape[0]:
        violations.append(f'b length {p.b.shape} != rows of A ({p.A.shape[0]})')
    if len(p.sets) != n:
        violations.append(f'sets length != n ({len(p.sets)} != {n})')
    for name in ('P', 'q', 'A', 'b'):
        if not np.all(np.isfinite(getattr(p, name))):
            violations.append(f'{name} has non-finite entries')
    if not math.isfinite(p.r):
        violations.append('r is not finite')
    for i, s in enumerate(p.sets):
        if not isinstance(s, ConstraintSet):
            violations.append(f'sets[{i}]: not a constraint set')
            continue
        violations.extend(f'sets[{i}]: {message}' for message in s.violations())
    if violations:
        return violations

    scale = max(float(np.max(np.abs(p.P))) if n else 0.0, 1e-300)
    asym = np.abs(p.P - p.P.T)
    if n and float(asym.max()) > 1e-10 * scale:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        violations.append(f'P not symmetric (entry ({i}, {j}))')
    elif n:
        eigenvalues = scipy.linalg.eigvalsh((p.P + p.P.T) / 2)
        norm = float(np.max(np.abs(eigenvalues)))
        if eigenvalues[0] < -1e-8 * max(norm, 1e-300):
            violations.append(f'P not PSD (smallest eigenvalue {eigenvalues[0]:.3g})')

    for i in range(p.m):
        if not np.any(p.A[i]) and p.b[i] != 0:
            violations.append(f'row {i} of A is zero but b[{i}] != 0 (infeasible)')
    return violations


def _point(p, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise DimensionError(f'point has shape {x.shape}, expected ({p.n},)')
    return x


def objective(p, x):
    x = _point(p, x)
    return float(0.5 * x @ p.P @ x + p.q @ x + p.r)


def residual(p, x):
    """l2 norm of Ax - b on the unscaled data."""
    x = _point(p, x)
    if p.m == 0:
        return 0.0
    return float(np.linalg.norm(p.A @ x - p.b))


def membership_distance(p, x):
    x = _point(p, x)
    return max((s.distance(v) for s, v in zip(p.sets, x)), default=0.0)


def describe(p):
    counts = {kind: 0 for kind in SET_TYPES}
    for s in p.sets:
        counts[s.TYPE] += 1
    return {'n': p.n, 'm': p.m, 'sets': counts, 'convex': p.is_convex()}


_SET_CLASSES = {cls.TYPE: cls for cls in (Reals, NonnegReals, Interval, FiniteSet, IntegerRange)}


class ConstraintSetSchema(Schema):
    type = fields.Function(lambda s: s.TYPE, deserialize=lambda value: str(value), required=True,
                           validate=mm_validate.OneOf(SET_TYPES))
    lo = fields.Float()
    hi = fields.Float()
    values = fields.List(fields.Float())

    @validates_schema
    def check_parameters(self, data, **kwargs):
        kind = data.get('type')
        if kind in ('interval', 'intrange'):
            missing = [key for key in ('lo', 'hi') if key not in data]
            if missing:
                raise ValidationError({key: [f'required for type {kind}'] for key in missing})
            if kind == 'intrange' and not all(float(data[k]).is_integer() for k in ('lo', 'hi')):
                raise ValidationError({'lo': ['intrange bounds must be integers']})
        if kind == 'finite' and not data.get('values'):
            raise ValidationError({'values': ['required and nonempty for type finite']})

    @post_load
    def make_set(self, data, **kwargs):
        kind = data['type']
        if kind == 'finite':
            return FiniteSet(data['values'])
        if kind in ('interval', 'intrange'):
            return _SET_CLASSES[kind](data['lo'], data['hi'])
        return _SET_CLASSES[kind]()

    @post_dump
    def drop_unused(self, data, **kwargs):
        keep = {'finite': ('values',), 'interval': ('lo', 'hi'), 'intrange': ('lo', 'hi')}
        return {key: value for key, value in data.items()
                if key == 'type' or key in keep.get(data['type'], ())}


class ProblemSchema(Schema):
    P = fields.List(fields.List(fields.Float()), required=True)
    q = fields.List(fields.Float(), required=True)
    r = fields.Float(load_default=0.0)
    A = fields.List(fields.List(fields.Float()), load_default=list)
    b = fields.List(fields.Float(), load_default=list)
    sets = fields.List(fields.Nested(ConstraintSetSchema), required=True)

    @validates_schema
    def check_rectangular(self, data, **kwargs):
        for name in ('P', 'A'):
            rows = data.get(name) or []
            if len({len(row) for row in rows}) > 1:
                raise ValidationError({name: ['rows have different lengths']})

    @post_load
    def make_problem(self, data, **kwargs):
        return Problem.create(**data)


def load_problem(path):
    with open(path) as fh:
        return ProblemSchema().load(json.load(fh))


def dump_problem(p, path):
    with open(path, 'w') as fh:
        json.dump(ProblemSchema().dump(p), fh, sort_keys=True)
