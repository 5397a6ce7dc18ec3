'''
Quasi-definite KKT systems

1. assemble: [[P + rho F^2, A'E], [EA, -(1/rho) I]]
2. factor: unpivoted LDL' in natural order
3. solve: forward, diagonal and backward substitution
4. solve_equality_qp: minimize (1/2)x'Px + q'x subject to Ax = b
5. KktCache: factorizations keyed by (P, A, scaling, rho)
'''
import hashlib
import logging
import threading
from collections import OrderedDict

import attrs
import numpy as np
import scipy.linalg

from src.main.solver.errors import DimensionError, InfeasibleError, SingularKktError
from src.main.solver.preconditioner import compute_scaling, normalize_mode

logger = logging.getLogger(__name__)

EQUALITY_QP_REGULARIZATION = 1e-9

_counter_lock = threading.Lock()
_factorizations = 0


def factorization_count():
    """Number of ADMM KKT factorizations performed by this process."""
    return _factorizations


def _count_factorization():
    global _factorizations
    with _counter_lock:
        _factorizations += 1


def _readonly(value):
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


@attrs.frozen(eq=False)
class KktFactorization:
    n: int
    m: int
    rho: float
    L: np.ndarray = attrs.field(converter=_readonly)
    d: np.ndarray = attrs.field(converter=_readonly)
    fingerprint: str

    def inertia(self):
        return int(np.sum(self.d > 0)), int(np.sum(self.d < 0))

    def matches(self, fingerprint):
        return self.fingerprint == fingerprint

    def reconstruct(self):
        return (self.L * self.d) @ self.L.T


def fingerprint(*arrays, rho=None):
    digest = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr, dtype=float)
        digest.update(str(arr.shape).encode())
        digest.update(arr.tobytes())
    digest.update(repr(rho).encode())
    return digest.hexdigest()


def assemble(P, A, scaling, rho):
    if not rho > 0:
        raise ValueError(f'rho must be positive, got {rho}')
    P = np.asarray(P, dtype=float)
    A = np.asarray(A, dtype=float)
    n, m = P.shape[0], A.shape[0]
    if A.shape[1] != n or scaling.e.shape != (m,) or scaling.f.shape != (n,):
        raise DimensionError(f'inconsistent KKT blocks: P {P.shape}, A {A.shape}, '
                             f'e {scaling.e.shape}, f {scaling.f.shape}')
    EA = scaling.e[:, None] * A
    K = np.empty((n + m, n + m))
    K[:n, :n] = P + np.diag(rho * scaling.f ** 2)
    K[n:, :n] = EA
    K[:n, n:] = EA.T
    K[n:, n:] = -np.eye(m) / rho
    return K


def _ldl(K):
    size = K.shape[0]
    L = np.eye(size)
    d = np.empty(size)
    tol = 1e-12 * float(np.max(np.abs(K))) if size else 0.0
    for j in range(size):
        ld = L[j, :j] * d[:j]
        d[j] = K[j, j] - ld @ L[j, :j]
        if abs(d[j]) < tol or d[j] == 0.0:
            raise SingularKktError(f'numerically singular KKT (pivot {j} is {d[j]:.3g})')
        if j + 1 < size:
            L[j + 1:, j] = (K[j + 1:, j] - L[j + 1:, :j] @ ld) / d[j]
    return L, d


def factor(K, expected_n, expected_m, rho=None, fingerprint_=None, counted=True):
    """
    Unpivoted LDL' factorization

    Parameters
    ----------
    K: symmetric (n+m)x(n+m) matrix
    expected_n: int - size of the leading (positive definite) block
    expected_m: int - size of the trailing (negative definite) block
    counted: bool - include in factorization_count()

    Returns
    -------
    KktFactorization
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (expected_n + expected_m, expected_n + expected_m):
        raise DimensionError(f'KKT matrix shape {K.shape} != n+m={expected_n + expected_m}')
    L, d = _ldl(K)
    if counted:
        _count_factorization()
    fac = KktFactorization(n=expected_n, m=expected_m, rho=rho, L=L, d=d,
                           fingerprint=fingerprint_ or fingerprint(K))
    if fac.inertia() != (expected_n, expected_m):
        logger.warning('KKT inertia %s differs from the quasi-definite (%d, %d)',
                       fac.inertia(), expected_n, expected_m)
    return fac


def solve(fac, rhs):
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (fac.n + fac.m,):
        raise DimensionError(f'rhs has shape {rhs.shape}, expected ({fac.n + fac.m},)')
    y = scipy.linalg.solve_triangular(fac.L, rhs, lower=True, unit_diagonal=True, check_finite=False)
    y /= fac.d
    return scipy.linalg.solve_triangular(fac.L, y, lower=True, trans='T', unit_diagonal=True,
                                         check_finite=False)


class EqualityQp(object):
    """
    Regularized KKT factorization of one (P, A) pair

    Any number of (q, b) right-hand sides can be solved against it, so a
    sequence of subproblems sharing P and A factors once.
    """

    def __init__(self, P, A):
        P = np.asarray(P, dtype=float)
        A = np.asarray(A, dtype=float).reshape(-1, P.shape[0])
        n, m = P.shape[0], A.shape[0]
        eps = EQUALITY_QP_REGULARIZATION
        self.n, self.m = n, m
        self.exact = np.zeros((n + m, n + m))
        self.exact[:n, :n] = P
        self.exact[n:, :n] = A
        self.exact[:n, n:] = A.T
        regularized = self.exact.copy()
        regularized[:n, :n] += eps * np.eye(n)
        regularized[n:, n:] -= eps * np.eye(m)
        self.fac = factor(regularized, n, m, counted=False)

    def solve(self, q, b, tol=1e-6, refine_steps=1):
        """Primal-dual solution (x, nu) with P x + q + A' nu = 0 and Ax = b."""
        rhs = np.concatenate([-np.asarray(q, dtype=float), np.asarray(b, dtype=float)])
        sol = solve(self.fac, rhs)
        for _ in range(refine_steps):
            sol += solve(self.fac, rhs - self.exact @ sol)

        error = np.linalg.norm(self.exact @ sol - rhs) / (1.0 + np.linalg.norm(rhs))
        if not error <= tol:
            raise InfeasibleError(f'equality-constrained QP has inconsistent constraints '
                                  f'(relative KKT residual {error:.3g})')
        return sol[:self.n], sol[self.n:]


def equality_qp(P, q, A, b, tol=1e-6, refine_steps=1):
    """Primal-dual solution (x, nu) of the equality QP, with P x + q + A' nu = 0."""
    return EqualityQp(P, A).solve(q, b, tol=tol, refine_steps=refine_steps)


def solve_equality_qp(P, q, A, b, refine_steps=1):
    """
    Minimize (1/2)x'Px + q'x subject to Ax = b

    Uses the regularized KKT matrix [[P + eps I, A'], [A, -eps I]] with
    eps = 1e-9 and refine_steps rounds (one by default) of iterative
    refinement against the exact system.

    Returns
    -------
    ndarray - minimizer x
    """
    x, _ = equality_qp(P, q, A, b, refine_steps=refine_steps)
    return x


class KktCache(object):
    """
    Scalings and factorizations keyed by (P, A, precondition mode, rho)

    Problems that differ only in q, b and the sets share one entry, so a
    sequence of such instances pays for a single factorization.
    """

    def __init__(self, maxsize=16):
        self.maxsize = maxsize
        self.hits = 0
        self.misses = 0
        self._entries = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._entries)

    def clear(self):
        with self._lock:
            self._entries.clear()

    def get_or_factor(self, p, mode, rho):
        """
        Returns
        -------
        Tuple - (Scaling, KktFactorization, hit)
        """
        mode = normalize_mode(mode)
        key = fingerprint(p.P, p.A, rho=(mode, float(rho)))
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                self.hits += 1
                scaling, fac = self._entries[key]
                return scaling, fac, True

            scaling = compute_scaling(p, mode)
            K = assemble(p.P, p.A, scaling, rho)
            fac = factor(K, p.n, p.m, rho=float(rho),
                         fingerprint_=fingerprint(p.P, p.A, scaling.e, scaling.f, rho=float(rho)))
            self.misses += 1
            self._entries[key] = (scaling, fac)
            if len(self._entries) > self.maxsize:
                self._entries.popitem(last=False)
            logger.debug('factored KKT system of size %d (cache misses %d)', p.n + p.m, self.misses)
            return scaling, fac, False


DEFAULT_CACHE = KktCache()
