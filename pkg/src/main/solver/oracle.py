'''
Brute-force global solver for small instances

1. enumerate_solve: every assignment of the discrete coordinates, exact convex subproblem each
2. optimality_gap: relative gap of a heuristic point against the certified optimum
'''
import itertools
import logging
import math

import attrs
import numpy as np

from src.main.model.problem import FiniteSet, IntegerRange, Problem, Reals, objective, residual, validate
from src.main.solver import kkt, qp
from src.main.solver.errors import (BoundViolationError, CombinationCapError, InfeasibleError,
                                    InvalidProblemError, NcadmmError, SingularKktError,
                                    UnsupportedSetError)

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-7
DEFAULT_COMBINATION_CAP = 2 ** 16


@attrs.frozen(eq=False)
class OracleResult:
    status: str
    x: np.ndarray = None
    objective: float = math.inf
    assignments: int = 0
    feasible_assignments: int = 0

    @property
    def feasible(self):
        return self.status == 'optimal'


def _discrete_values(s):
    if isinstance(s, (FiniteSet, IntegerRange)):
        return s.values
    raise UnsupportedSetError(f'cannot enumerate a {type(s).__name__}')


class _Reduction(object):
    """Eliminates the discrete coordinates; P_FF and A_F never change across assignments."""

    def __init__(self, p, discrete):
        self.p = p
        self.discrete = discrete
        self.free = np.setdiff1d(np.arange(p.n), discrete)
        d, f = discrete, self.free
        self.P_ff = p.P[np.ix_(f, f)]
        self.P_fd = p.P[np.ix_(f, d)]
        self.P_dd = p.P[np.ix_(d, d)]
        self.A_f = p.A[:, f]
        self.A_d = p.A[:, d]
        self.sets = [p.sets[i] for i in f]
        self.all_reals = all(isinstance(s, Reals) for s in self.sets)
        self.lo = np.array([s.bounds()[0] for s in self.sets], dtype=float)
        self.hi = np.array([s.bounds()[1] for s in self.sets], dtype=float)
        self._equality = None

    def subproblem(self, values):
        p = self.p
        q = p.q[self.free] + self.P_fd @ values
        r = p.r + p.q[self.discrete] @ values + 0.5 * values @ self.P_dd @ values
        b = p.b - self.A_d @ values
        return Problem.create(self.P_ff, q, r, self.A_f, b, self.sets)

    def equality(self):
        """One factorization for every assignment; None when the regularized KKT is singular."""
        if self._equality is None:
            try:
                self._equality = kkt.EqualityQp(self.P_ff, self.A_f)
            except SingularKktError:
                self._equality = False
        return self._equality or None

    def solve(self, values):
        """Full-length minimizer for one assignment, or None when infeasible."""
        x = np.empty(self.p.n)
        x[self.discrete] = values
        if self.free.size == 0:
            return x if residual(self.p, x) <= FEASIBILITY_TOL else None
        sub = self.subproblem(values)
        try:
            if self.all_reals and self.equality() is not None:
                x[self.free], _ = self.equality().solve(sub.q, sub.b)
            else:
                x[self.free], _ = qp.active_set_qp(sub.P, sub.q, sub.A, sub.b, self.lo, self.hi)
        except (InfeasibleError, SingularKktError):
            return None
        return x if residual(self.p, x) <= FEASIBILITY_TOL else None


def enumerate_solve(p, combination_cap=DEFAULT_COMBINATION_CAP):
    """
    Global minimum by enumerating the discrete coordinates

    Assignments are visited in lexicographic order of the discrete
    coordinates' values; ties keep the first one found.

    Parameters
    ----------
    p: Problem - nonconvex sets must be FiniteSet or IntegerRange
    combination_cap: int - largest number of assignments allowed

    Returns
    -------
    OracleResult - status 'optimal' or 'infeasible'
    """
    violations = validate(p)
    if violations:
        raise InvalidProblemError(violations)
    discrete = np.array([i for i, s in enumerate(p.sets) if not s.is_convex()], dtype=int)
    choices = [_discrete_values(p.sets[i]) for i in discrete]
    total = math.prod(len(c) for c in choices)
    if total > combination_cap:
        raise CombinationCapError(f'{total} assignments exceed the cap of {combination_cap}')

    reduction = _Reduction(p, discrete)
    best_x, best_obj, feasible = None, math.inf, 0
    for values in itertools.product(*choices):
        try:
            x = reduction.solve(np.array(values, dtype=float))
        except NcadmmError as e:
            logger.debug('assignment %s skipped: %s', values, e)
            continue
        if x is None:
            continue
        feasible += 1
        value = objective(p, x)
        if value < best_obj:
            best_x, best_obj = x, value

    logger.info('enumerated %d assignments, %d feasible, optimum %.6g', total, feasible, best_obj)
    if best_x is None:
        return OracleResult('infeasible', assignments=total)
    return OracleResult('optimal', best_x, best_obj, total, feasible)


def optimality_gap(p, x_heuristic, oracle_result, slack=1e-6):
    """
    Relative gap (f_heur - f_star) / max(1, |f_star|)

    Raises BoundViolationError when the heuristic undercuts the optimum by
    more than slack (relative), and InfeasibleError when either side has no point.
    """
    if oracle_result is None or not oracle_result.feasible:
        raise InfeasibleError('oracle has no feasible point')
    if x_heuristic is None:
        raise InfeasibleError('heuristic has no feasible point')
    f_star = oracle_result.objective
    f_heur = objective(p, x_heuristic)
    scale = max(1.0, abs(f_star))
    if f_heur < f_star - slack * scale:
        raise BoundViolationError(f'heuristic objective {f_heur:.9g} is below the optimum {f_star:.9g}')
    return (f_heur - f_star) / scale
