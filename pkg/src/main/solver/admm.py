'''
Nonconvex ADMM engine

1. iterate: one preconditioned step (KKT solve, projection, dual update)
2. run_single: fixed-budget run from one starting point
3. solve: multi-start heuristic with best-point tracking
4. solve_convex: ADMM to tolerance for convex problems, finished by an exact active-set solve
5. polish: freeze nonconvex coordinates and solve the convex remainder exactly
6. relax_and_round: convex hull relaxation projected back onto X
'''
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor

import attrs
import numpy as np

from src.main.config import Config, resolve_threads
from src.main.model.problem import (Reals, describe, membership_distance, objective, residual,
                                    validate)
from src.main.model.solution import Solution, TraceRow
from src.main.solver import kkt, qp
from src.main.solver.errors import (InfeasibleError, InvalidProblemError, NcadmmError,
                                    SingularKktError)
from src.main.solver.preconditioner import normalize_mode
from src.main.solver.projections import Projector, hull_sets

logger = logging.getLogger(__name__)

POLISH_TOL = 1e-8
STALL_ITERS = 1000


def _positive(instance, attribute, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f'{attribute.name} must be positive and finite, got {value}')


def _at_least_one(instance, attribute, value):
    if value < 1:
        raise ValueError(f'{attribute.name} must be >= 1, got {value}')


def _optional_positive(instance, attribute, value):
    if value is not None:
        _positive(instance, attribute, value)


@attrs.frozen
class Settings:
    rho: float = attrs.field(default=1.0, converter=float, validator=_positive)
    iters: int = attrs.field(default=200, converter=int, validator=_at_least_one)
    restarts: int = attrs.field(default=10, converter=int, validator=_at_least_one)
    eps_tol: float = attrs.field(default=1e-4, converter=float, validator=_positive)
    precondition: str = attrs.field(default='l2', converter=normalize_mode)
    seed: int = attrs.field(default=0, converter=int)
    polish: bool = False
    polish_eps_tol: float = attrs.field(default=None, validator=_optional_positive)
    polish_iterates: bool = True
    trace: bool = False
    literal_dual_update: bool = False
    threads: int = 1

    @classmethod
    def from_config(cls, config=Config, **overrides):
        """Settings from a config class; overrides that are None are ignored."""
        values = {
            'rho': config.RHO,
            'iters': config.ITERS,
            'restarts': config.RESTARTS,
            'eps_tol': config.EPS_TOL,
            'precondition': config.PRECONDITION,
            'seed': config.SEED,
            'polish': config.POLISH,
            'polish_eps_tol': config.POLISH_EPS_TOL,
            'polish_iterates': config.POLISH_ITERATES,
            'literal_dual_update': config.LITERAL_DUAL_UPDATE,
            'threads': config.THREADS,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@attrs.frozen(eq=False)
class IterState:
    x: np.ndarray
    u: np.ndarray
    x_half: np.ndarray

    @classmethod
    def start(cls, x0, m):
        x0 = np.array(x0, dtype=float)
        return cls(x=x0, u=np.zeros(m + x0.shape[0]), x_half=x0.copy())


@attrs.frozen(eq=False)
class RestartResult:
    restart: int
    best_x: np.ndarray = None
    best_objective: float = math.inf
    best_residual: float = math.inf
    closest_residual: float = math.inf
    iterations: int = 0
    failed: bool = False
    trace: tuple = ()


class Operators(object):
    """Per-problem constants of the iteration, shared read-only by every restart."""

    def __init__(self, p, scaling, rho):
        self.rho = rho
        self.e = scaling.e
        self.f = scaling.f
        self.f2 = scaling.f ** 2
        self.At = p.A.T
        self.At_e2b = p.A.T @ (scaling.e ** 2 * p.b)
        self.projector = Projector(p.sets)


def iterate(state, fac, p, scaling, rho, ops=None, literal=False):
    """
    One preconditioned ADMM step

    Parameters
    ----------
    state: IterState - (x^k, u^k)
    fac: KktFactorization of assemble(P, A, scaling, rho)
    literal: bool - dual update against x^k instead of x^{k+1}

    Returns
    -------
    IterState - (x^{k+1}, u^{k+1}) with x^{k+1/2} kept for residual checks
    """
    if fac.n != p.n or fac.m != p.m or (fac.rho is not None and fac.rho != rho):
        raise NcadmmError(f'factorization is for (n={fac.n}, m={fac.m}, rho={fac.rho}), '
                          f'problem has (n={p.n}, m={p.m}, rho={rho})')
    ops = ops or Operators(p, scaling, rho)
    n, m = p.n, p.m
    u_a, u_x = state.u[:m], state.u[m:]

    top = -p.q + rho * (ops.f2 * state.x + ops.At_e2b - ops.At @ (ops.e * u_a) - ops.f * u_x)
    x_half = kkt.solve(fac, np.concatenate([top, np.zeros(m)]))[:n]
    if not np.all(np.isfinite(x_half)):
        raise SingularKktError('KKT solve produced non-finite values')

    x_new = ops.projector(x_half + u_x / ops.f)
    u_a = u_a + ops.e * (p.A @ x_half - p.b)
    u_x = u_x + ops.f * (x_half - (state.x if literal else x_new))
    return IterState(x=x_new, u=np.concatenate([u_a, u_x]), x_half=x_half)


class IteratePolisher(object):
    """Exact remainder solve for every discrete assignment a restart visits, once per assignment."""

    def __init__(self, p, tol=POLISH_TOL):
        self.p = p
        self.tol = tol
        self.mask = np.array([not s.is_convex() for s in p.sets], dtype=bool)
        self.enabled = bool(self.mask.any() and not self.mask.all())
        self.visited = {}

    def __call__(self, x):
        key = x[self.mask].tobytes()
        if key not in self.visited:
            self.visited[key] = polish_remainder(self.p, x, self.mask, self.tol)
        return self.visited[key]


def run_single(p, settings, fac, scaling, x0, restart=0, ops=None):
    """
    K iterations from (x0, u=0), keeping the best projected iterate

    A projected iterate is accepted when its residual is at most eps_tol;
    among accepted iterates the smallest objective wins. With
    polish_iterates, the polished point of each newly visited discrete
    assignment competes under the same rule. The budget is fixed, there is
    no early exit.

    Returns
    -------
    RestartResult
    """
    ops = ops or Operators(p, scaling, settings.rho)
    polisher = IteratePolisher(p) if settings.polish_iterates else None
    if polisher is not None and not polisher.enabled:
        polisher = None
    state = IterState.start(x0, p.m)
    best_x, best_obj, best_res = None, math.inf, math.inf
    closest = math.inf
    trace = []
    done = 0
    for k in range(settings.iters):
        try:
            state = iterate(state, fac, p, scaling, settings.rho, ops=ops,
                            literal=settings.literal_dual_update)
        except SingularKktError as e:
            logger.warning('restart %d aborted at iteration %d: %s', restart, k, e)
            return RestartResult(restart, best_x, best_obj, best_res, closest, done, True, tuple(trace))
        done = k + 1
        obj = objective(p, state.x)
        res = residual(p, state.x)
        if not (math.isfinite(obj) and math.isfinite(res)):
            logger.warning('restart %d diverged at iteration %d', restart, k)
            return RestartResult(restart, best_x, best_obj, best_res, closest, done, True, tuple(trace))
        closest = min(closest, res)
        if res <= settings.eps_tol and obj < best_obj:
            best_x, best_obj, best_res = state.x.copy(), obj, res
        if polisher is not None:
            candidate = polisher(state.x)
            if candidate is not None:
                c_obj, c_res = objective(p, candidate), residual(p, candidate)
                if c_res <= settings.eps_tol and c_obj < best_obj:
                    best_x, best_obj, best_res = candidate.copy(), c_obj, c_res
        if settings.trace:
            trace.append(TraceRow(restart, k, obj, res, best_obj))
    return RestartResult(restart, best_x, best_obj, best_res, closest, done, False, tuple(trace))


def _starting_points(projector, settings, x0):
    streams = np.random.SeedSequence(settings.seed).spawn(settings.restarts)
    starts = [projector.sample_hull(np.random.default_rng(stream)) for stream in streams]
    if x0 is not None:
        starts[0] = np.clip(np.asarray(x0, dtype=float), projector.lo, projector.hi)
    return starts


def solve(p, settings=None, cache=None, x0=None):
    """
    Multi-start nonconvex ADMM

    Parameters
    ----------
    p: Problem
    settings: Settings
    cache: KktCache - defaults to the module-level cache
    x0: optional warm start for the first restart (clipped onto Co X)

    Returns
    -------
    Solution - best feasible point over all restarts, deterministic for a fixed seed
    """
    settings = settings or Settings()
    violations = validate(p)
    if violations:
        raise InvalidProblemError(violations)
    cache = cache if cache is not None else kkt.DEFAULT_CACHE
    logger.info('solving %s', describe(p))

    start = time.perf_counter()
    factored_before = kkt.factorization_count()
    scaling, fac, hit = cache.get_or_factor(p, settings.precondition, settings.rho)
    setup_ms = (time.perf_counter() - start) * 1e3

    ops = Operators(p, scaling, settings.rho)
    starts = _starting_points(ops.projector, settings, x0)

    def run(index):
        return run_single(p, settings, fac, scaling, starts[index], restart=index, ops=ops)

    threads = min(resolve_threads(settings.threads), settings.restarts)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(settings.restarts)))
    else:
        results = [run(index) for index in range(settings.restarts)]

    best = None
    for result in results:
        if result.best_x is not None and (best is None or result.best_objective < best.best_objective):
            best = result
    failed = sum(result.failed for result in results)
    if failed:
        logger.warning('%d of %d restarts failed', failed, settings.restarts)

    best_x = None if best is None else best.best_x
    polished = False
    if best_x is not None and settings.polish:
        accept_tol = min(settings.eps_tol, settings.polish_eps_tol or settings.eps_tol)
        candidate = polish(p, best_x, eps_tol=accept_tol)
        polished = candidate is not best_x
        best_x = candidate

    found = best_x is not None
    solution = Solution(
        best_x=best_x,
        best_objective=objective(p, best_x) if found else math.inf,
        best_residual=residual(p, best_x) if found else math.inf,
        found_feasible=found,
        restarts=settings.restarts,
        iterations=sum(result.iterations for result in results),
        factorizations=kkt.factorization_count() - factored_before,
        wall_ms=(time.perf_counter() - start) * 1e3,
        setup_ms=setup_ms,
        polished=polished,
        closest_residual=min(result.closest_residual for result in results),
        traces=[row for result in results for row in result.trace],
    )
    logger.info('best objective %.6g (feasible=%s, cache hit=%s)', solution.best_objective, found, hit)
    return solution


@attrs.frozen(eq=False)
class ConvexResult:
    x: np.ndarray
    objective: float
    residual: float
    iterations: int
    converged: bool
    method: str = 'admm'


def _bounds(sets):
    lo = np.array([s.bounds()[0] for s in sets], dtype=float)
    hi = np.array([s.bounds()[1] for s in sets], dtype=float)
    return lo, hi


def refine_active_set(p, x, tol):
    """
    Exact solve on the active set guessed from x

    Coordinates sitting exactly on a bound stay fixed, the rest solve the
    equality-constrained QP. The guess is accepted only when the free
    coordinates stay inside their bounds, the multipliers of the fixed ones
    have the right sign and the residual is at most tol. Returns None otherwise.
    """
    lo, hi = _bounds(p.sets)
    at_lo = x == lo
    at_hi = (x == hi) & ~at_lo
    fixed = at_lo | at_hi
    free = ~fixed
    if not free.any() and p.m:
        return None

    cand = np.array(x, dtype=float)
    P_ff = p.P[np.ix_(free, free)]
    q_f = p.q[free] + p.P[np.ix_(free, fixed)] @ cand[fixed]
    A_f = p.A[:, free]
    b_f = p.b - p.A[:, fixed] @ cand[fixed]
    if free.any():
        try:
            cand[free], nu = kkt.equality_qp(P_ff, q_f, A_f, b_f)
        except (InfeasibleError, SingularKktError):
            return None
    else:
        nu = np.zeros(0)

    slack = 1e-9 * (1.0 + np.abs(np.where(np.isfinite(lo), lo, 0.0)) + np.abs(np.where(np.isfinite(hi), hi, 0.0)))
    if np.any(cand[free] < lo[free] - slack[free]) or np.any(cand[free] > hi[free] + slack[free]):
        return None
    cand[free] = np.clip(cand[free], lo[free], hi[free])

    gradient = p.P @ cand + p.q + (p.A.T @ nu if p.m else 0.0)
    g_tol = 1e-7 * (1.0 + float(np.max(np.abs(p.P @ cand), initial=0.0)) + float(np.max(np.abs(p.q), initial=0.0)))
    pinned = lo == hi
    if np.any(gradient[at_lo & ~pinned] < -g_tol) or np.any(gradient[at_hi & ~pinned] > g_tol):
        return None
    if residual(p, cand) > tol:
        return None
    return cand


def _finish_exactly(p, x, tol):
    """Exact solve of a convex problem, guided by x; returns (x, method) or None."""
    refined = refine_active_set(p, x, tol)
    if refined is not None:
        return refined, 'active-set'
    lo, hi = _bounds(p.sets)
    try:
        z, _ = qp.active_set_qp(p.P, p.q, p.A, p.b, lo, hi)
    except NcadmmError as e:
        logger.debug('exact finish found no point: %s', e)
        return None
    if residual(p, z) > max(tol, 1e-9 * (1.0 + float(np.max(np.abs(p.b), initial=0.0)))):
        return None
    return z, 'active-set-qp'


def solve_convex(p, rho=1.0, tol=1e-9, max_iters=20000, x0=None, cache=None, precondition='l2',
                 check_every=25, stall_iters=STALL_ITERS):
    """
    Convex ADMM run to tolerance

    The run hands off to an exact active-set solve once it is close enough
    to guess the active set, when the combined residual has not halved
    within stall_iters, or at the iteration cap.

    Parameters
    ----------
    p: Problem - every set convex
    tol: float - target residual and consensus gap
    x0: optional starting point

    Returns
    -------
    ConvexResult
    """
    if not p.is_convex():
        raise NcadmmError('solve_convex needs a convex problem')
    if all(isinstance(s, Reals) for s in p.sets):
        x = kkt.solve_equality_qp(p.P, p.q, p.A, p.b)
        return ConvexResult(x, objective(p, x), residual(p, x), 0, True, 'equality-qp')

    cache = cache if cache is not None else kkt.DEFAULT_CACHE
    scaling, fac, _ = cache.get_or_factor(p, precondition, rho)
    ops = Operators(p, scaling, rho)
    start = ops.projector(np.zeros(p.n) if x0 is None else np.asarray(x0, dtype=float))
    state = IterState.start(start, p.m)

    next_refine = 0
    best_error, best_at = math.inf, 0
    k = 0
    for k in range(1, max_iters + 1):
        previous = state.x
        state = iterate(state, fac, p, scaling, rho, ops=ops)
        if k % check_every and k != max_iters:
            continue
        primal = residual(p, state.x)
        gap = float(np.linalg.norm(state.x_half - state.x))
        dual = rho * float(np.linalg.norm(ops.f * (state.x - previous)))
        error = max(primal, gap, dual)
        if primal <= tol and gap <= tol and dual <= tol:
            return ConvexResult(state.x, objective(p, state.x), primal, k, True)
        if k >= next_refine and error <= 1e-4:
            refined = refine_active_set(p, state.x, tol)
            if refined is not None:
                logger.debug('active-set refinement accepted after %d iterations', k)
                return ConvexResult(refined, objective(p, refined), residual(p, refined), k, True,
                                    'active-set')
            next_refine = k + 8 * check_every
        if error <= 0.5 * best_error:
            best_error, best_at = error, k
        elif k - best_at >= stall_iters:
            logger.debug('convex ADMM stalled at iteration %d (error %.3g)', k, error)
            break
    else:
        logger.debug('convex ADMM stopped at the iteration cap (%d)', max_iters)

    finished = _finish_exactly(p, state.x, tol)
    if finished is not None:
        x, method = finished
        return ConvexResult(x, objective(p, x), residual(p, x), k, True, method)
    return ConvexResult(state.x, objective(p, state.x), residual(p, state.x), k, False)


def polish_remainder(p, x, mask, tol=POLISH_TOL):
    """
    Exact minimizer of the convex remainder with the masked coordinates frozen at x

    Returns None when the frozen problem has no feasible point or the
    solve fails.
    """
    frozen = p.freeze(mask, x)
    z = refine_active_set(frozen, x, tol)
    if z is None:
        lo, hi = _bounds(frozen.sets)
        try:
            z, _ = qp.active_set_qp(frozen.P, frozen.q, frozen.A, frozen.b, lo, hi)
        except NcadmmError as e:
            logger.debug('remainder solve found no point: %s', e)
            return None
    z = np.array(z, dtype=float)
    z[mask] = x[mask]
    return z


def polish(p, x, eps_tol=None, tol=POLISH_TOL):
    """
    Freeze the nonconvex coordinates at x and re-solve the convex remainder

    The polished point replaces x when its residual is at most eps_tol
    (default tol) and either it has a lower objective or x itself misses
    eps_tol. Otherwise x is returned unchanged (the same object).
    """
    mask = np.array([not s.is_convex() for s in p.sets], dtype=bool)
    if mask.all():
        return x
    accept_tol = tol if eps_tol is None else eps_tol
    candidate = polish_remainder(p, np.asarray(x, dtype=float), mask, tol)
    if candidate is None:
        return x
    if membership_distance(p, candidate) > 0 or residual(p, candidate) > accept_tol:
        return x
    if objective(p, candidate) < objective(p, x) or residual(p, x) > accept_tol:
        return candidate
    return x


def relax_and_round(p, settings=None, cache=None):
    """
    Solve the convex hull relaxation and project onto X

    The rounded point is always reported; found_feasible says whether it
    meets eps_tol.
    """
    settings = settings or Settings()
    violations = validate(p)
    if violations:
        raise InvalidProblemError(violations)
    start = time.perf_counter()
    factored_before = kkt.factorization_count()
    hull = p.with_sets(hull_sets(p.sets))
    result = solve_convex(hull, rho=settings.rho, tol=1e-7, cache=cache,
                          precondition=settings.precondition)
    x = Projector(p.sets)(result.x)
    res = residual(p, x)
    return Solution(
        best_x=x,
        best_objective=objective(p, x),
        best_residual=res,
        found_feasible=res <= settings.eps_tol,
        restarts=1,
        iterations=result.iterations,
        factorizations=kkt.factorization_count() - factored_before,
        wall_ms=(time.perf_counter() - start) * 1e3,
        closest_residual=res,
    )
