import logging

import numpy as np
import scipy.linalg

from src.main.model.problem import FiniteSet, NonnegReals, Problem, Reals
from src.main.solver.errors import DimensionError

logger = logging.getLogger(__name__)


def unconstrained_minimum(P, q):
    """min of (1/2)x'Px + q'x through a least-squares solve of P x = -q."""
    x_bar = scipy.linalg.lstsq(P, -q)[0]
    return float(0.5 * x_bar @ P @ x_bar + q @ x_bar)


def gen_random_miqp(n, m, n_bool, n_nonneg, seed=0):
    """
    Random mixed-Boolean QP with a known feasible point

    Parameters
    ----------
    n, m: int - variables and equality rows
    n_bool: int - leading coordinates restricted to {0, 1}
    n_nonneg: int - following coordinates restricted to x >= 0
    seed: int

    Returns
    -------
    Tuple - (Problem, x0) with b = A x0 and r making the unconstrained minimum 0
    """
    if min(n, m, n_bool, n_nonneg) < 0 or n < 1:
        raise DimensionError(f'bad dimensions n={n}, m={m}, bool={n_bool}, nonneg={n_nonneg}')
    if n_bool + n_nonneg > n or m > n:
        raise DimensionError(f'need bool + nonneg <= n and m <= n (n={n}, m={m}, '
                             f'bool={n_bool}, nonneg={n_nonneg})')
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((n, n))
    q = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    P = Q @ Q.T
    P = (P + P.T) / 2

    n_real = n - n_bool - n_nonneg
    x0 = np.concatenate([
        rng.integers(0, 2, size=n_bool).astype(float),
        np.abs(rng.standard_normal(n_nonneg)),
        rng.standard_normal(n_real),
    ])
    sets = [FiniteSet([0, 1])] * n_bool + [NonnegReals()] * n_nonneg + [Reals()] * n_real
    problem = Problem.create(P, q, -unconstrained_minimum(P, q), A, A @ x0, sets)
    logger.debug('random MIQP n=%d m=%d seed=%d', n, m, seed)
    return problem, x0
