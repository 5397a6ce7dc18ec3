import logging

import attrs
import numpy as np
import scipy.linalg

from src.main.solver.errors import NcadmmError

logger = logging.getLogger(__name__)

MODES = ('none', 'l1', 'l2')
_ALIASES = {'row_l1': 'l1', 'row_l2': 'l2'}


def _positive_vector(value):
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


@attrs.frozen(eq=False)
class Scaling:
    """Diagonals of E (m entries, rows of A) and F (n entries, variables)."""

    e: np.ndarray = attrs.field(converter=_positive_vector)
    f: np.ndarray = attrs.field(converter=_positive_vector)

    @e.validator
    @f.validator
    def _check(self, attribute, value):
        if value.size and not (np.all(np.isfinite(value)) and np.all(value > 0)):
            raise ValueError(f'scaling {attribute.name} must be positive and finite')

    @classmethod
    def identity(cls, m, n):
        return cls(e=np.ones(m), f=np.ones(n))

    def is_identity(self):
        return bool(np.all(self.e == 1.0) and np.all(self.f == 1.0))


def normalize_mode(mode):
    mode = _ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f'unknown precondition mode {mode!r}, expected one of {MODES}')
    return mode


def compute_scaling(p, mode='l2'):
    """
    Row normalization of A

    Parameters
    ----------
    p: Problem
    mode: str - 'none', 'l1' or 'l2' ('row_l1'/'row_l2' accepted)

    Returns
    -------
    Scaling - e_i = 1 / ||a_i|| in the chosen norm (1 for zero rows), f = 1
    """
    mode = normalize_mode(mode)
    if mode == 'none' or p.m == 0:
        return Scaling.identity(p.m, p.n)
    norms = np.linalg.norm(p.A, ord=1 if mode == 'l1' else 2, axis=1)
    zero = norms == 0
    if zero.any():
        logger.debug('rows %s of A are zero, leaving them unscaled', np.flatnonzero(zero).tolist())
    e = np.where(zero, 1.0, 1.0 / np.where(zero, 1.0, norms))
    return Scaling(e=e, f=np.ones(p.n))


def effective_condition_number(M):
    """Largest over smallest nonzero singular value; nonzero means > 1e-12 * largest."""
    sigma = scipy.linalg.svdvals(np.asarray(M, dtype=float))
    if sigma.size == 0 or sigma[0] == 0:
        raise NcadmmError('effective condition number of a zero matrix is undefined')
    nonzero = sigma[sigma > 1e-12 * sigma[0]]
    return float(sigma[0] / nonzero[-1])
