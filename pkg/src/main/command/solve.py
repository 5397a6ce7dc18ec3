'''
Solve command

1. solve a problem file with the multi-start heuristic
2. optionally write the per-iteration trace CSV
'''
import json

import click

from src.main.config import PRESETS
from src.main.helper import FEASIBLE, NO_FEASIBLE_POINT, exit_codes
from src.main.model.problem import load_problem
from src.main.model.solution import check_document, solution_document, write_trace_csv
from src.main.solver.admm import Settings, solve
from src.main.solver.kkt import KktCache
from src.main.solver.preconditioner import MODES


@click.command('solve')
@click.argument('problem_path', type=click.Path(dir_okay=False))
@click.option('--preset', type=click.Choice(sorted(PRESETS)), default='default', show_default=True)
@click.option('--rho', type=float, help='ADMM step parameter')
@click.option('--iters', type=int, help='iterations per restart')
@click.option('--restarts', type=int)
@click.option('--tol', type=float, help='feasibility tolerance on ||Ax - b||')
@click.option('--seed', type=int)
@click.option('--precondition', type=click.Choice(MODES))
@click.option('--polish/--no-polish', default=None)
@click.option('--polish-tol', type=float, help='tighter tolerance the polished point must meet')
@click.option('--polish-iterates/--no-polish-iterates', default=None,
              help='solve the convex remainder of every visited discrete assignment')
@click.option('--literal-dual-update', is_flag=True, help='dual update against the previous iterate')
@click.option('--threads', type=int, help='restart workers, 0 for one per CPU')
@click.option('--trace', 'trace_path', type=click.Path(dir_okay=False), help='per-iteration CSV')
@click.option('--timing', is_flag=True, help='report wall_ms instead of null')
@exit_codes
def solve_cmd(problem_path, preset, rho, iters, restarts, tol, seed, precondition, polish, polish_tol, polish_iterates,
              literal_dual_update, threads, trace_path, timing):
    """
    Solve a problem JSON file

    Returns
    -------
    int - 0 when a feasible point was found, 2 otherwise
    """
    problem = load_problem(problem_path)
    settings = Settings.from_config(
        PRESETS[preset], rho=rho, iters=iters, restarts=restarts, eps_tol=tol, seed=seed,
        precondition=precondition, polish=polish, polish_eps_tol=polish_tol, polish_iterates=polish_iterates,
        literal_dual_update=literal_dual_update or None, threads=threads,
        trace=bool(trace_path) or None)
    solution = solve(problem, settings, cache=KktCache())
    if trace_path:
        write_trace_csv(solution.traces, trace_path)
    document = check_document(solution_document(solution, timing=timing))
    click.echo(json.dumps(document, sort_keys=True))
    return FEASIBLE if solution.found_feasible else NO_FEASIBLE_POINT
