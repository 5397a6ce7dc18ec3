'''
Benchmark suites

1. miqp-oracle: random mixed-Boolean QPs against the enumeration oracle
2. decode-vs-rlx: constellation decoding against relax-and-round
3. convex-convergence: equality-constrained QPs against the exact solve
4. vehicle: hybrid vehicle instances against the oracle
5. converter: power converter instances against the oracle
6. rho-sweep: raw feasible-point discovery (no iterate polishing) on random MIQPs for several rho

Instance i of every suite uses seed + i; rows come out in instance order.
'''
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from src.main.config import (THREADS, ConverterConfig, DecodeConfig, MiqpConfig, VehicleConfig,
                             resolve_threads)
from src.main.generator.converter import ConverterParams, gen_power_converter
from src.main.generator.decode import bit_error_rate, gen_signal_decode
from src.main.generator.random_miqp import gen_random_miqp
from src.main.generator.vehicle import VehicleParams, gen_hybrid_vehicle
from src.main.helper import FEASIBLE, exit_codes, timed
from src.main.model.bench import BenchRow, write_bench_csv
from src.main.model.problem import Problem, objective
from src.main.solver.admm import Settings, relax_and_round, solve
from src.main.solver.kkt import KktCache, solve_equality_qp
from src.main.solver.oracle import enumerate_solve, optimality_gap

RHO_GRID = (0.1, 0.5, 2.5)
ORACLE_POLISH_TOL = 1e-8


def _oracle_row(suite, index, seed, problem, settings):
    solution, ms = timed(solve)(problem, settings, cache=KktCache())
    oracle = enumerate_solve(problem)
    gap = None
    if solution.found_feasible and oracle.feasible:
        gap = optimality_gap(problem, solution.best_x, oracle)
    return BenchRow(suite, index, seed, settings.rho, solution.best_objective, oracle.objective, gap,
                    solution.best_residual, float(solution.found_feasible), wall_ms=ms)


def _oracle_summary(suite, rows):
    gaps = [row.gap for row in rows if row.gap is not None]
    feasible = float(np.mean([row.feasible for row in rows]))
    within = float(np.mean([g <= 0.10 for g in gaps])) if gaps else 0.0
    exact = float(np.mean([g <= 1e-6 for g in gaps])) if gaps else 0.0
    text = f'feasible={feasible:.4f};gap_le_0.10={within:.4f};gap_zero={exact:.4f}'
    return BenchRow(suite, 'summary', gap=min(gaps, default=None), feasible=feasible, summary=text)


def _oracle_settings(config, seed, **overrides):
    return Settings.from_config(config, seed=seed, threads=1, polish=True,
                                polish_eps_tol=ORACLE_POLISH_TOL, **overrides)


def miqp_oracle(index, seed, options):
    problem, _ = gen_random_miqp(options['n'], options['m'], options['n_bool'], options['n_nonneg'], seed)
    return _oracle_row('miqp-oracle', index, seed, problem, _oracle_settings(MiqpConfig, seed))


def vehicle(index, seed, options):
    problem, _ = gen_hybrid_vehicle(VehicleParams.synthetic(options['T'], seed=seed))
    return _oracle_row('vehicle', index, seed, problem, _oracle_settings(VehicleConfig, seed))


def converter(index, seed, options):
    rng = np.random.default_rng(seed)
    t = np.arange(options['T'] + 1)
    v_des = 5.0 * np.sin(2 * np.pi * t / options['T'] + rng.uniform(0, 2 * np.pi))
    params = ConverterParams(T=options['T'], v_des=v_des)
    problem, _, _ = gen_power_converter(params)
    return _oracle_row('converter', index, seed, problem, _oracle_settings(ConverterConfig, seed))


def decode_vs_rlx(index, seed, options):
    problem, x_true, _ = gen_signal_decode(options['n'], options['p'], options['snr'], seed)
    settings = Settings.from_config(DecodeConfig, seed=seed, threads=1)
    solution, ms = timed(solve)(problem, settings, cache=KktCache())
    rlx = relax_and_round(problem, settings, cache=KktCache())
    return BenchRow('decode-vs-rlx', index, seed, settings.rho, solution.best_objective, rlx.best_objective,
                    solution.best_objective - rlx.best_objective, solution.best_residual,
                    float(solution.found_feasible), bit_error_rate(solution.best_x, x_true),
                    bit_error_rate(rlx.best_x, x_true), ms)


def decode_summary(suite, rows):
    wins = float(np.mean([row.f_admm <= row.f_ref + 1e-9 for row in rows]))
    ber_admm = float(np.mean([row.ber_admm for row in rows]))
    ber_rlx = float(np.mean([row.ber_ref for row in rows]))
    text = f'admm_le_rlx={wins:.4f};mean_ber_admm={ber_admm:.6f};mean_ber_rlx={ber_rlx:.6f}'
    return BenchRow(suite, 'summary', ber_admm=ber_admm, ber_ref=ber_rlx, feasible=wins, summary=text)


def random_equality_qp(seed, max_n=20, max_m=10):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    m = int(rng.integers(1, min(n - 1, max_m) + 1))
    Q = rng.standard_normal((n, 2 * n))
    P = Q @ Q.T
    A = rng.standard_normal((m, n))
    b = A @ rng.standard_normal(n)
    return Problem.create((P + P.T) / 2, rng.standard_normal(n), 0.0, A, b)


def convex_convergence(index, seed, options):
    problem = random_equality_qp(seed)
    settings = Settings(iters=2000, restarts=1, eps_tol=1e-6, seed=seed, threads=1)
    solution, ms = timed(solve)(problem, settings, cache=KktCache())
    x_ref = solve_equality_qp(problem.P, problem.q, problem.A, problem.b)
    f_ref = objective(problem, x_ref)
    return BenchRow('convex-convergence', index, seed, settings.rho, solution.best_objective, f_ref,
                    abs(solution.best_objective - f_ref), solution.best_residual,
                    float(solution.found_feasible), wall_ms=ms)


def convex_summary(suite, rows):
    worst_residual = max(row.residual for row in rows)
    worst_gap = max(row.gap for row in rows)
    text = f'max_residual={worst_residual:.3g};max_abs_gap={worst_gap:.3g}'
    return BenchRow(suite, 'summary', gap=worst_gap, residual=worst_residual, summary=text)


def rho_sweep(index, seed, options):
    problem, _ = gen_random_miqp(options['n'], options['m'], options['n_bool'], options['n_nonneg'], seed)
    rows = []
    for rho in RHO_GRID:
        settings = Settings.from_config(MiqpConfig, rho=rho, seed=seed, threads=1, polish_iterates=False)
        solution, ms = timed(solve)(problem, settings, cache=KktCache())
        rows.append(BenchRow('rho-sweep', index, seed, rho, solution.best_objective, gap=None,
                             residual=solution.best_residual, feasible=float(solution.found_feasible),
                             wall_ms=ms))
    return rows


def rho_summary(suite, rows):
    summary = []
    for rho in RHO_GRID:
        chosen = [row for row in rows if row.rho == rho]
        rate = float(np.mean([row.feasible for row in chosen]))
        found = [row.f_admm for row in chosen if row.feasible]
        mean = float(np.mean(found)) if found else math.nan
        summary.append(BenchRow(suite, 'summary', rho=rho, f_admm=mean, feasible=rate,
                                summary=f'rho={rho};feasible_rate={rate:.4f}'))
    return summary


SUITES = {
    'miqp-oracle': (miqp_oracle, _oracle_summary, 100),
    'decode-vs-rlx': (decode_vs_rlx, decode_summary, 200),
    'convex-convergence': (convex_convergence, convex_summary, 100),
    'vehicle': (vehicle, _oracle_summary, 10),
    'converter': (converter, _oracle_summary, 3),
    'rho-sweep': (rho_sweep, rho_summary, 100),
}


def run_suite(suite, instances=None, seed=0, threads=1, **options):
    """
    Per-instance rows in instance order followed by the summary row(s)

    Parameters
    ----------
    suite: str - key of SUITES
    instances: int - defaults to the suite's own count
    """
    instance_fn, summary_fn, default_count = SUITES[suite]
    count = default_count if instances is None else instances
    defaults = {'n': 10, 'm': 3, 'n_bool': 5, 'n_nonneg': 0, 'p': 200, 'snr': 8.0, 'T': None}
    if suite == 'decode-vs-rlx':
        defaults['n'] = 40
    defaults['T'] = 6 if suite == 'converter' else 4
    defaults.update({key: value for key, value in options.items() if value is not None})

    def run(index):
        return instance_fn(index, seed + index, defaults)

    workers = min(resolve_threads(threads), max(count, 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(count)))
    else:
        results = [run(index) for index in range(count)]
    rows = [row for result in results for row in (result if isinstance(result, list) else [result])]
    summary = summary_fn(suite, rows) if rows else []
    return rows + (summary if isinstance(summary, list) else [summary])


@click.command('bench')
@click.argument('suite', type=click.Choice(sorted(SUITES)))
@click.option('--instances', type=int, help='number of seeded instances')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--threads', type=int, default=THREADS, show_default=True)
@click.option('--n', 'n', type=int)
@click.option('--m', 'm', type=int)
@click.option('--bool', 'n_bool', type=int)
@click.option('--nonneg', 'n_nonneg', type=int)
@click.option('--p', 'p', type=int)
@click.option('--snr', type=float)
@click.option('--T', 'T', type=int)
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), help='CSV path, stdout when omitted')
@click.option('--trajectory', 'trajectory_path', type=click.Path(dir_okay=False),
              help='vehicle/converter: physical trajectory of instance 0')
@exit_codes
def bench_cmd(suite, instances, seed, threads, n, m, n_bool, n_nonneg, p, snr, T, out_path, trajectory_path):
    """Run a seeded benchmark suite and write its CSV."""
    rows = run_suite(suite, instances, seed, threads, n=n, m=m, n_bool=n_bool, n_nonneg=n_nonneg, p=p,
                     snr=snr, T=T)
    if out_path:
        with open(out_path, 'w', newline='') as fh:
            write_bench_csv(rows, fh)
    else:
        write_bench_csv(rows, sys.stdout)
    if trajectory_path and suite in ('vehicle', 'converter'):
        write_trajectory(suite, seed, T, trajectory_path)
    return FEASIBLE


def write_trajectory(suite, seed, T, path):
    """Decoded best point of instance 0 with one row per time step."""
    if suite == 'vehicle':
        problem, layout = gen_hybrid_vehicle(VehicleParams.synthetic(T or 4, seed=seed))
        settings = Settings.from_config(VehicleConfig, seed=seed, threads=1)
    else:
        problem, layout, _ = gen_power_converter(ConverterParams(T=T or 6))
        settings = Settings.from_config(ConverterConfig, seed=seed, threads=1)
    solution = solve(problem, settings, cache=KktCache())
    if solution.best_x is None:
        raise ValueError(f'no feasible point for the {suite} trajectory')
    columns = layout.decode(solution.best_x)
    length = max(len(values) for values in columns.values())
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(['t'] + list(columns))
        for t in range(length):
            writer.writerow([t] + [values[t] if t < len(values) else '' for values in columns.values()])
