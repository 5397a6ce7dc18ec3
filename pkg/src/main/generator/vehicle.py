'''
Hybrid vehicle energy management

1. VehicleParams: cost coefficients, limits and the demand trajectory
2. synthetic_demand: seeded smooth demand profile
3. gen_hybrid_vehicle: canonical problem and its variable layout
4. witness: feasible physical trajectory for given params
'''
import logging

import attrs
import numpy as np

from src.main.model.problem import FiniteSet, Interval, NonnegReals, Problem, Reals
from src.main.solver.errors import DimensionError

logger = logging.getLogger(__name__)

VARIABLES = ('P_batt', 'P_eng', 'z', 'E_next', 's', 'c', 'w', 'h')
ROWS_PER_STEP = 4


def synthetic_demand(T, P_max=1.0, seed=0):
    """Two sinusoids plus clipped noise, kept within [0, 2 P_max]."""
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    phase = rng.uniform(0, 2 * np.pi)
    noise = np.clip(rng.normal(scale=0.1 * P_max, size=T), -0.2 * P_max, 0.2 * P_max)
    demand = P_max * (0.8 + 0.5 * np.sin(2 * np.pi * t / 60) + 0.3 * np.sin(2 * np.pi * t / 15 + phase))
    return np.clip(demand + noise, 0.0, 2 * P_max)


def _non_negative(instance, attribute, value):
    if value < 0:
        raise ValueError(f'{attribute.name} must be >= 0, got {value}')


def _demand(value):
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


@attrs.frozen(eq=False)
class VehicleParams:
    demand: np.ndarray = attrs.field(converter=_demand)
    alpha: float = attrs.field(default=1.0, validator=_non_negative)
    beta: float = attrs.field(default=10.0, validator=_non_negative)
    gamma: float = attrs.field(default=1.5, validator=_non_negative)
    delta: float = attrs.field(default=10.0, validator=_non_negative)
    eta: float = attrs.field(default=0.1, validator=_non_negative)
    tau: float = 5.0
    P_max: float = 1.0
    E_max: float = 200.0
    E_0: float = 200.0
    z_init: int = 0

    def __attrs_post_init__(self):
        if self.demand.ndim != 1 or self.demand.size == 0:
            raise DimensionError('demand must be a nonempty vector')
        if not 0 <= self.E_0 <= self.E_max:
            raise ValueError(f'E_0 must lie in [0, E_max], got {self.E_0}')
        if self.z_init not in (0, 1):
            raise ValueError(f'z_init must be 0 or 1, got {self.z_init}')
        if not (self.tau > 0 and self.P_max > 0):
            raise ValueError('tau and P_max must be positive')

    @property
    def T(self):
        return self.demand.shape[0]

    @classmethod
    def synthetic(cls, T, seed=0, **kwargs):
        return cls(demand=synthetic_demand(T, kwargs.get('P_max', 1.0), seed), **kwargs)


@attrs.frozen
class VehicleLayout:
    """Canonical coordinate of every physical variable: 8 consecutive slots per time step."""

    T: int

    @property
    def n(self):
        return len(VARIABLES) * self.T

    def index(self, name, t):
        if not 0 <= t < self.T:
            raise IndexError(f'time step {t} outside [0, {self.T})')
        return len(VARIABLES) * t + VARIABLES.index(name)

    def indices(self, name):
        return np.arange(self.T) * len(VARIABLES) + VARIABLES.index(name)

    def names(self):
        return [(name, t) for t in range(self.T) for name in VARIABLES]

    def decode(self, x):
        """Per-variable trajectories of a canonical point."""
        x = np.asarray(x, dtype=float)
        return {name: x[self.indices(name)] for name in VARIABLES}


def gen_hybrid_vehicle(vp):
    """
    Canonical form of the hybrid vehicle problem

    Parameters
    ----------
    vp: VehicleParams

    Returns
    -------
    Tuple - (Problem, VehicleLayout)
    """
    T = vp.T
    layout = VehicleLayout(T)
    n, m = layout.n, ROWS_PER_STEP * T
    P = np.zeros((n, n))
    q = np.zeros(n)
    A = np.zeros((m, n))
    b = np.zeros(m)
    sets = []
    for t in range(T):
        sets.extend([Reals(), Interval(0.0, vp.P_max), FiniteSet([0, 1]), Interval(0.0, vp.E_max),
                     NonnegReals(), NonnegReals(), NonnegReals(), NonnegReals()])
        i = {name: layout.index(name, t) for name in VARIABLES}
        row = ROWS_PER_STEP * t

        # battery: E_{t+1} - E_t + tau P_batt = 0
        A[row, i['E_next']] = 1.0
        A[row, i['P_batt']] = vp.tau
        if t:
            A[row, layout.index('E_next', t - 1)] = -1.0
        else:
            b[row] = vp.E_0

        # demand: P_batt + P_eng - s = P_des
        A[row + 1, [i['P_batt'], i['P_eng'], i['s']]] = [1.0, 1.0, -1.0]
        b[row + 1] = vp.demand[t]

        # engine on/off: P_eng - P_max z + c = 0
        A[row + 2, [i['P_eng'], i['z'], i['c']]] = [1.0, -vp.P_max, 1.0]

        # turn-on hinge: z_t - z_{t-1} - w + h = 0
        A[row + 3, [i['z'], i['w'], i['h']]] = [1.0, -1.0, 1.0]
        if t:
            A[row + 3, layout.index('z', t - 1)] = -1.0
        else:
            b[row + 3] = vp.z_init

        P[i['P_eng'], i['P_eng']] = 2 * vp.alpha
        q[i['P_eng']] = vp.beta
        q[i['z']] = vp.gamma
        q[i['w']] = vp.delta

    last = layout.index('E_next', T - 1)
    P[last, last] += 2 * vp.eta
    q[last] -= 2 * vp.eta * vp.E_max
    r = vp.eta * vp.E_max ** 2
    logger.debug('hybrid vehicle problem with T=%d (n=%d, m=%d)', T, n, m)
    return Problem.create(P, q, r, A, b, sets), layout


def witness(vp):
    """
    Physical trajectory satisfying every equality

    The engine runs at full power whenever the battery is below half
    charge, charging with whatever the demand leaves over; otherwise the
    battery covers the demand alone.
    """
    layout = VehicleLayout(vp.T)
    x = np.zeros(layout.n)
    energy, z_prev = vp.E_0, vp.z_init
    for t in range(vp.T):
        demand = vp.demand[t]
        z = 1 if energy < vp.E_max / 2 else 0
        P_eng = vp.P_max * z
        P_batt = demand - P_eng
        if z:
            P_batt = max(P_batt, (energy - vp.E_max) / vp.tau)
        values = {
            'P_batt': P_batt,
            'P_eng': P_eng,
            'z': z,
            'E_next': energy - vp.tau * P_batt,
            's': P_batt + P_eng - demand,
            'c': 0.0,
            'w': max(z - z_prev, 0),
            'h': max(z_prev - z, 0),
        }
        for name, value in values.items():
            x[layout.index(name, t)] = value
        energy, z_prev = values['E_next'], z
    return x
