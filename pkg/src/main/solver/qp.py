'''
Exact solves of bounded convex QPs

minimize (1/2)x'Px + q'x  subject to  Ax = b, lo <= x <= hi

1. feasible_start: phase-one point from the HiGHS LP solver
2. active_set_qp: primal active-set method from that point
'''
import logging

import numpy as np
import scipy.linalg
import scipy.optimize

from src.main.solver.errors import InfeasibleError, NcadmmError

logger = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-9
STEP_TOL = 1e-11
MULTIPLIER_TOL = 1e-9


def _snap_tol(bound):
    return 1e-9 * (1.0 + np.abs(np.where(np.isfinite(bound), bound, 0.0)))


def independent_rows(A):
    """Indices of a maximal set of linearly independent rows of A, in their original order."""
    if A.shape[0] == 0:
        return np.arange(0)
    if A.shape[1] == 0:
        return np.arange(0)
    _, R, piv = scipy.linalg.qr(A.T, mode='economic', pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return np.arange(0)
    rank = int(np.sum(diag > 1e-10 * diag[0]))
    return np.sort(piv[:rank])


def feasible_start(A, b, lo, hi):
    """Any point with Ax = b inside the bounds; raises InfeasibleError when there is none."""
    n = lo.shape[0]
    if A.shape[0] == 0:
        return np.clip(np.zeros(n), lo, hi)
    bounds = [(None if np.isinf(l) else l, None if np.isinf(h) else h) for l, h in zip(lo, hi)]
    result = scipy.optimize.linprog(np.zeros(n), A_eq=A, b_eq=b, bounds=bounds, method='highs')
    if result.status == 2:
        raise InfeasibleError('no point satisfies the equalities within the bounds')
    if result.status != 0:
        raise NcadmmError(f'phase-one LP failed: {result.message}')
    return np.clip(result.x, lo, hi)


def _newton_step(P_ff, g_f, A_f, r):
    """
    Step on the free coordinates: P d + A' nu = -g, A d = r

    Returns (d, nu, zero_curvature). When the reduced system is inconsistent
    the objective has a zero-curvature descent direction; that direction is
    returned instead and zero_curvature is set.
    """
    k, m = P_ff.shape[0], A_f.shape[0]
    K = np.zeros((k + m, k + m))
    K[:k, :k] = P_ff
    K[:k, k:] = A_f.T
    K[k:, :k] = A_f
    rhs = np.concatenate([-g_f, r])
    sol = scipy.linalg.lstsq(K, rhs, lapack_driver='gelsy', check_finite=False)[0]
    gap = rhs - K @ sol
    if np.linalg.norm(gap) <= CONSISTENCY_TOL * (1.0 + np.linalg.norm(rhs)):
        return sol[:k], sol[k:], False
    return gap[:k], sol[k:], True


def _release_for_rank(A, free, held):
    """Free held coordinates until A restricted to the free columns has full row rank."""
    m = A.shape[0]
    rank = np.linalg.matrix_rank(A[:, free]) if free.any() else 0
    for i in np.flatnonzero(held):
        if rank == m:
            break
        trial = free.copy()
        trial[i] = True
        trial_rank = np.linalg.matrix_rank(A[:, trial])
        if trial_rank > rank:
            free, rank = trial, trial_rank
    return free


def active_set_qp(P, q, A, b, lo, hi, max_steps=None):
    """
    Primal active-set method

    Starts from a phase-one vertex, keeps the coordinates held at a bound
    in a working set whose complement spans the rows of A, and alternates
    Newton steps on the free coordinates with adding blocking bounds and
    releasing bounds whose multipliers have the wrong sign.

    Parameters
    ----------
    P: PSD n x n matrix
    lo, hi: bound vectors; equal entries pin a coordinate, infinite entries are open

    Returns
    -------
    Tuple - (x, steps)
    """
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise InfeasibleError('a lower bound exceeds its upper bound')

    x = feasible_start(A, b, lo, hi)
    pinned = lo == hi
    x[pinned] = lo[pinned]
    rows = independent_rows(A[:, ~pinned])
    A, b = A[rows], b[rows]

    at_lo = ~pinned & (x - lo <= _snap_tol(lo))
    at_hi = ~pinned & ~at_lo & (hi - x <= _snap_tol(hi))
    x[at_lo] = lo[at_lo]
    x[at_hi] = hi[at_hi]
    free = _release_for_rank(A, ~(pinned | at_lo | at_hi), at_lo | at_hi)
    at_lo &= ~free
    at_hi &= ~free

    limit = max_steps or 20 * (n + A.shape[0]) + 50
    for step in range(1, limit + 1):
        free = ~(pinned | at_lo | at_hi)
        g = P @ x + q
        d = np.zeros(n)
        nu = np.zeros(A.shape[0])
        flat = False
        if free.any():
            idx = np.flatnonzero(free)
            d[idx], nu, flat = _newton_step(P[np.ix_(idx, idx)], g[idx], A[:, idx], b - A @ x)

        scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
        if not flat and float(np.max(np.abs(d), initial=0.0)) <= STEP_TOL * scale:
            multipliers = g + A.T @ nu
            wrong = np.where(at_lo, -multipliers, 0.0) + np.where(at_hi, multipliers, 0.0)
            worst = int(np.argmax(wrong)) if n else 0
            if not n or wrong[worst] <= MULTIPLIER_TOL * (1.0 + float(np.max(np.abs(g), initial=0.0))):
                x = np.clip(x, lo, hi)
                logger.debug('active-set QP converged in %d steps', step)
                return x, step
            at_lo[worst] = at_hi[worst] = False
            continue

        moving = free & (np.abs(d) > 1e-14 * scale)
        with np.errstate(divide='ignore', invalid='ignore'):
            down = np.where(moving & (d < 0) & np.isfinite(lo), (lo - x) / d, np.inf)
            up = np.where(moving & (d > 0) & np.isfinite(hi), (hi - x) / d, np.inf)
        ratios = np.minimum(down, up)
        blocking = int(np.argmin(ratios)) if n else 0
        alpha = np.inf if flat else 1.0
        if n and ratios[blocking] < alpha:
            alpha = max(float(ratios[blocking]), 0.0)
        else:
            blocking = -1
        if np.isinf(alpha):
            raise NcadmmError('objective is unbounded below on the feasible set')

        x = x + alpha * d
        if blocking >= 0:
            if down[blocking] <= up[blocking]:
                x[blocking], at_lo[blocking] = lo[blocking], True
            else:
                x[blocking], at_hi[blocking] = hi[blocking], True

    raise NcadmmError(f'active-set QP did not converge in {limit} steps')
