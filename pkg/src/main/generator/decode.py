import logging
import math

import numpy as np

from src.main.model.problem import FiniteSet, Problem
from src.main.solver.errors import DimensionError

logger = logging.getLogger(__name__)

CONSTELLATION = (-3.0, -1.0, 1.0, 3.0)
# Gray labels: neighbouring symbols differ in one bit
GRAY = np.array([[0, 0], [0, 1], [1, 1], [1, 0]])
SYMBOL_POWER = 5.0


def noise_variance(n, snr_db):
    """Per received component: signal power n * 5 over 10^(snr/10)."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return SYMBOL_POWER * n / 10 ** (snr_db / 10)


def gen_signal_decode(n, p_dim, snr_db=8.0, seed=0):
    """
    Maximum-likelihood decoding as a canonical problem

    Parameters
    ----------
    n: int - transmitted symbols
    p_dim: int - received components, p_dim >= n
    snr_db: float - inf for noiseless data

    Returns
    -------
    Tuple - (Problem, x_true, y) with objective(x) = ||Hx - y||^2
    """
    if n < 1 or p_dim < n:
        raise DimensionError(f'need 1 <= n <= p_dim, got n={n}, p_dim={p_dim}')
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((p_dim, n))
    x_true = rng.choice(CONSTELLATION, size=n)
    sigma = math.sqrt(noise_variance(n, snr_db))
    y = H @ x_true + sigma * rng.standard_normal(p_dim)

    P = 2 * H.T @ H
    P = (P + P.T) / 2
    problem = Problem.create(P, -2 * H.T @ y, float(y @ y), sets=[FiniteSet(CONSTELLATION)] * n)
    logger.debug('decoding instance n=%d p=%d snr=%.1f dB', n, p_dim, snr_db)
    return problem, x_true, y


def _labels(x):
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(CONSTELLATION, x)
    idx = np.minimum(idx, len(CONSTELLATION) - 1)
    if not np.array_equal(np.asarray(CONSTELLATION)[idx], x):
        raise ValueError('entries must belong to the constellation {-3, -1, 1, 3}')
    return GRAY[idx]


def bit_error_rate(x_hat, x_true):
    """Fraction of Gray-coded bits (2 per symbol) that differ."""
    if np.shape(x_hat) != np.shape(x_true):
        raise DimensionError(f'length mismatch {np.shape(x_hat)} vs {np.shape(x_true)}')
    bits_hat, bits_true = _labels(x_hat), _labels(x_true)
    if bits_true.size == 0:
        return 0.0
    return float(np.mean(bits_hat != bits_true))
