'''
Switched-mode power converter control

1. ConverterParams: circuit values, horizon and cost weights
2. circuit_dynamics: zero-order-hold discretization (G, H) of the circuit ODE
3. gen_power_converter: canonical problem with cyclic switching differences
4. simulate: canonical point of a periodic switch sequence
'''
import logging
import math

import attrs
import numpy as np
import scipy.linalg

from src.main.model.problem import FiniteSet, NonnegReals, Problem, Reals
from src.main.solver import kkt
from src.main.solver.errors import DimensionError

logger = logging.getLogger(__name__)

STATE = ('i1', 'v1', 'i2', 'v2')
SWITCH_LEVELS = (-1.0, 0.0, 1.0)


def default_waveform(T, amplitude=5.0):
    t = np.arange(T + 1)
    return amplitude * np.sin(2 * np.pi * t / T)


def _positive(instance, attribute, value):
    if not value > 0:
        raise ValueError(f'{attribute.name} must be positive, got {value}')


def _non_negative(instance, attribute, value):
    if value < 0:
        raise ValueError(f'{attribute.name} must be >= 0, got {value}')


@attrs.frozen(eq=False)
class ConverterParams:
    L1: float = attrs.field(default=10e-6, validator=_positive)
    C1: float = attrs.field(default=1e-6, validator=_positive)
    L2: float = attrs.field(default=10e-6, validator=_positive)
    C2: float = attrs.field(default=10e-6, validator=_positive)
    R: float = attrs.field(default=1.0, validator=_positive)
    V_dc: float = attrs.field(default=10.0, validator=_positive)
    h: float = attrs.field(default=0.5e-6, validator=_positive)
    T: int = attrs.field(default=100, validator=_positive)
    lam: float = attrs.field(default=1.5, validator=_non_negative)
    mu: float = attrs.field(default=0.1, validator=_non_negative)
    v_des: np.ndarray = attrs.field(default=None)

    def __attrs_post_init__(self):
        v_des = default_waveform(self.T) if self.v_des is None else np.array(self.v_des, dtype=float)
        if v_des.shape != (self.T + 1,):
            raise DimensionError(f'v_des must have T+1={self.T + 1} entries, got {v_des.shape}')
        v_des.setflags(write=False)
        object.__setattr__(self, 'v_des', v_des)


def continuous_model(cp):
    """State matrix A_c and input vector B_c for state (i1, v1, i2, v2) and switch input u."""
    load = 0.0 if math.isinf(cp.R) else 1.0 / (cp.R * cp.C2)
    A_c = np.array([
        [0.0, -1.0 / cp.L1, 0.0, -1.0 / cp.L1],
        [1.0 / cp.C1, 0.0, -1.0 / cp.C1, 0.0],
        [0.0, 1.0 / cp.L2, 0.0, 0.0],
        [1.0 / cp.C2, 0.0, 0.0, -load],
    ])
    B_c = np.array([cp.V_dc / cp.L1, 0.0, 0.0, 0.0])
    return A_c, B_c


def circuit_dynamics(cp):
    """
    Zero-order-hold discretization with step h

    Returns
    -------
    Tuple - (G 4x4, H 4x1) read off exp([[A_c, B_c], [0, 0]] h)
    """
    A_c, B_c = continuous_model(cp)
    augmented = np.zeros((5, 5))
    augmented[:4, :4] = A_c
    augmented[:4, 4] = B_c
    E = scipy.linalg.expm(augmented * cp.h)
    return E[:4, :4], E[:4, 4:5]


@attrs.frozen
class ConverterLayout:
    """Coordinates: xi_0..xi_T (4 each), then u, a, p, n (T each)."""

    T: int

    @property
    def n(self):
        return 4 * (self.T + 1) + 4 * self.T

    def xi(self, t, component=None):
        base = 4 * t
        if component is None:
            return np.arange(base, base + 4)
        return base + STATE.index(component)

    def block(self, name):
        order = ('u', 'a', 'p', 'n')
        start = 4 * (self.T + 1) + order.index(name) * self.T
        return np.arange(start, start + self.T)

    def states(self):
        return np.arange(4 * (self.T + 1))

    def names(self):
        labels = [(c, t) for t in range(self.T + 1) for c in STATE]
        return labels + [(name, t) for name in ('u', 'a', 'p', 'n') for t in range(self.T)]

    def decode(self, x):
        x = np.asarray(x, dtype=float)
        traj = x[self.states()].reshape(self.T + 1, 4)
        out = {c: traj[:, k] for k, c in enumerate(STATE)}
        out.update({name: x[self.block(name)] for name in ('u', 'a', 'p', 'n')})
        return out


def _dynamics_rows(layout, G, H, n_cols, u_cols):
    T = layout.T
    A = np.zeros((4 * T + 4, n_cols))
    for t in range(T):
        rows = slice(4 * t, 4 * t + 4)
        A[rows, layout.xi(t + 1)] = np.eye(4)
        A[rows, layout.xi(t)] = -G
        A[rows, u_cols[t]] = -H[:, 0]
    A[4 * T:, layout.xi(0)] = np.eye(4)
    A[4 * T:, layout.xi(T)] = -np.eye(4)
    return A


def least_squares_trajectory(cp, G=None, H=None):
    """Tracking-only optimum over real-valued u; returns the stacked states xi^ls."""
    if G is None:
        G, H = circuit_dynamics(cp)
    layout = ConverterLayout(cp.T)
    T = cp.T
    n_states = 4 * (T + 1)
    n = n_states + T
    u_cols = np.arange(n_states, n)
    P = np.zeros((n, n))
    q = np.zeros(n)
    v2 = [layout.xi(t, 'v2') for t in range(T + 1)]
    P[v2, v2] = 2.0
    q[v2] = -2.0 * cp.v_des
    A = _dynamics_rows(layout, G, H, n, u_cols)
    x = kkt.solve_equality_qp(P, q, A, np.zeros(A.shape[0]), refine_steps=3)
    return x[:n_states]


def gen_power_converter(cp, xi_ls=None):
    """
    Canonical form of the converter control problem

    Parameters
    ----------
    cp: ConverterParams
    xi_ls: optional precomputed least-squares states (computed when omitted)

    Returns
    -------
    Tuple - (Problem, ConverterLayout, xi_ls)
    """
    G, H = circuit_dynamics(cp)
    if xi_ls is None:
        xi_ls = least_squares_trajectory(cp, G, H)
    T = cp.T
    layout = ConverterLayout(T)
    n = layout.n
    u, a, p, neg = (layout.block(name) for name in ('u', 'a', 'p', 'n'))

    dynamics = _dynamics_rows(layout, G, H, n, u)
    hinge = np.zeros((2 * T, n))
    for t in range(T):
        previous = u[(t - 1) % T]
        # a - d - p = 0 and a + d - n = 0 with d = u_t - u_{t-1}
        hinge[2 * t, [a[t], p[t]]] = [1.0, -1.0]
        hinge[2 * t + 1, [a[t], neg[t]]] = [1.0, -1.0]
        for row, sign in ((2 * t, -1.0), (2 * t + 1, 1.0)):
            hinge[row, u[t]] += sign
            hinge[row, previous] -= sign
    A = np.vstack([dynamics, hinge])
    b = np.zeros(A.shape[0])

    states = layout.states()
    v2 = [layout.xi(t, 'v2') for t in range(T + 1)]
    P = np.zeros((n, n))
    q = np.zeros(n)
    P[states, states] = 2.0 * cp.mu
    q[states] = -2.0 * cp.mu * xi_ls
    P[v2, v2] += 2.0
    q[v2] -= 2.0 * cp.v_des
    q[a] = cp.lam
    r = float(cp.v_des @ cp.v_des + cp.mu * xi_ls @ xi_ls)

    sets = ([Reals()] * len(states) + [FiniteSet(SWITCH_LEVELS)] * T
            + [NonnegReals()] * (3 * T))
    logger.debug('power converter problem with T=%d (n=%d, m=%d)', T, n, A.shape[0])
    return Problem.create(P, q, r, A, b, sets), layout, xi_ls


def periodic_states(cp, u, G=None, H=None):
    """States xi_0..xi_T of the periodic orbit driven by the switch sequence u."""
    if G is None:
        G, H = circuit_dynamics(cp)
    u = np.asarray(u, dtype=float)
    T = cp.T
    drive = np.zeros(4)
    for t in range(T):
        drive = G @ drive + H[:, 0] * u[t]
    xi = np.empty((T + 1, 4))
    xi[0] = np.linalg.solve(np.eye(4) - np.linalg.matrix_power(G, T), drive)
    for t in range(T):
        xi[t + 1] = G @ xi[t] + H[:, 0] * u[t]
    return xi


def simulate(cp, u, G=None, H=None):
    """Canonical point for a switch sequence: periodic states, u, and tight hinge slacks."""
    layout = ConverterLayout(cp.T)
    u = np.asarray(u, dtype=float)
    if u.shape != (cp.T,):
        raise DimensionError(f'u must have T={cp.T} entries, got {u.shape}')
    xi = periodic_states(cp, u, G, H)
    d = u - np.roll(u, 1)
    x = np.zeros(layout.n)
    x[layout.states()] = xi.ravel()
    x[layout.block('u')] = u
    x[layout.block('a')] = np.abs(d)
    x[layout.block('p')] = np.abs(d) - d
    x[layout.block('n')] = np.abs(d) + d
    return x


def direct_objective(cp, x, xi_ls):
    """Cost of a canonical point evaluated term by term."""
    layout = ConverterLayout(cp.T)
    parts = layout.decode(x)
    xi = np.asarray(x)[layout.states()]
    tracking = np.sum((parts['v2'] - cp.v_des) ** 2)
    return float(tracking + cp.lam * np.sum(parts['a']) + cp.mu * np.sum((xi - xi_ls) ** 2))
