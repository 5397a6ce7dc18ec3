'''
Instance generators

1. gen miqp: random mixed-Boolean QP with a feasible witness
2. gen vehicle: hybrid vehicle energy management
3. gen converter: switched-mode power converter control
4. gen decode: constellation decoding

Each writes the problem JSON and a sidecar <name>.meta.json.
'''
import json
import os

import click
import numpy as np

from src.main.generator.converter import ConverterParams, gen_power_converter, simulate
from src.main.generator.decode import gen_signal_decode
from src.main.generator.random_miqp import gen_random_miqp
from src.main.generator.vehicle import VARIABLES, VehicleParams, gen_hybrid_vehicle, witness
from src.main.helper import exit_codes
from src.main.model.problem import describe, dump_problem


def meta_path(out_path):
    root, ext = os.path.splitext(out_path)
    return (root if ext == '.json' else out_path) + '.meta.json'


def _listed(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {key: _listed(item) for key, item in value.items()}
    return value


def write_instance(problem, out_path, meta):
    dump_problem(problem, out_path)
    sidecar = meta_path(out_path)
    meta = dict(meta, summary=describe(problem))
    with open(sidecar, 'w') as fh:
        json.dump(_listed(meta), fh, sort_keys=True)
    click.echo(json.dumps({'problem': out_path, 'meta': sidecar}, sort_keys=True))


@click.group('gen')
def gen_group():
    """Generate example instances."""


@gen_group.command('miqp')
@click.option('--n', 'n', type=int, default=10, show_default=True)
@click.option('--m', 'm', type=int, default=3, show_default=True)
@click.option('--bool', 'n_bool', type=int, default=5, show_default=True)
@click.option('--nonneg', 'n_nonneg', type=int, default=0, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), required=True)
@exit_codes
def gen_miqp(n, m, n_bool, n_nonneg, seed, out_path):
    """Random mixed-Boolean QP."""
    problem, x0 = gen_random_miqp(n, m, n_bool, n_nonneg, seed)
    write_instance(problem, out_path, {'example': 'miqp', 'seed': seed, 'witness': x0})


@gen_group.command('vehicle')
@click.option('--T', 'T', type=int, default=4, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True, help='demand trajectory seed')
@click.option('--delta', type=float, default=10.0, show_default=True)
@click.option('--eta', type=float, default=0.1, show_default=True)
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), required=True)
@exit_codes
def gen_vehicle(T, seed, delta, eta, out_path):
    """Hybrid vehicle energy management over T steps."""
    params = VehicleParams.synthetic(T, seed=seed, delta=delta, eta=eta)
    problem, layout = gen_hybrid_vehicle(params)
    write_instance(problem, out_path, {
        'example': 'vehicle',
        'seed': seed,
        'demand': params.demand,
        'index_map': {name: layout.indices(name) for name in VARIABLES},
        'witness': witness(params),
    })


@gen_group.command('converter')
@click.option('--T', 'T', type=int, default=6, show_default=True)
@click.option('--h', type=float, default=0.5e-6, show_default=True, help='discretization step (s)')
@click.option('--lam', type=float, default=1.5, show_default=True, help='switching penalty')
@click.option('--mu', type=float, default=0.1, show_default=True, help='regularization weight')
@click.option('--R', 'R', type=float, default=1.0, show_default=True, help='load (ohm)')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), required=True)
@exit_codes
def gen_converter(T, h, lam, mu, R, out_path):
    """Power converter switching over T steps."""
    params = ConverterParams(T=T, h=h, lam=lam, mu=mu, R=R)
    problem, layout, xi_ls = gen_power_converter(params)
    index_map = {name: [layout.xi(t, name) for t in range(T + 1)] for name in ('i1', 'v1', 'i2', 'v2')}
    index_map.update({name: layout.block(name) for name in ('u', 'a', 'p', 'n')})
    write_instance(problem, out_path, {
        'example': 'converter',
        'v_des': params.v_des,
        'xi_ls': xi_ls,
        'index_map': index_map,
        'witness': simulate(params, np.zeros(T)),
    })


@gen_group.command('decode')
@click.option('--n', 'n', type=int, default=40, show_default=True)
@click.option('--p', 'p_dim', type=int, default=200, show_default=True)
@click.option('--snr', type=float, default=8.0, show_default=True, help='dB')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), required=True)
@exit_codes
def gen_decode(n, p_dim, snr, seed, out_path):
    """Constellation decoding with n symbols and p received components."""
    problem, x_true, y = gen_signal_decode(n, p_dim, snr, seed)
    write_instance(problem, out_path, {'example': 'decode', 'seed': seed, 'snr_db': snr,
                                       'x_true': x_true, 'y': y})
