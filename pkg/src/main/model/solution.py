import csv
import json
import math

import attrs
import jsonschema
import numpy as np
from marshmallow import Schema, fields

from src.main.config import SOLUTION_SCHEMA_PATH


def _optional_array(value):
    if value is None:
        return None
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


@attrs.frozen
class TraceRow:
    restart: int
    k: int
    objective: float
    residual: float
    best_so_far: float


@attrs.frozen(eq=False)
class Solution:
    """
    Outcome of a heuristic solve

    best_x is None only when nothing feasible (and, for relax-and-round,
    nothing at all) was produced. closest_residual is the smallest residual
    seen by any projected iterate, feasible or not.
    """

    best_x: np.ndarray = attrs.field(converter=_optional_array)
    best_objective: float = math.inf
    best_residual: float = math.inf
    found_feasible: bool = False
    restarts: int = 0
    iterations: int = 0
    factorizations: int = 0
    wall_ms: float = 0.0
    setup_ms: float = 0.0
    polished: bool = False
    closest_residual: float = math.inf
    traces: tuple = attrs.field(default=(), converter=tuple)


def _finite_or_none(value):
    return float(value) if value is not None and math.isfinite(value) else None


class SolutionSchema(Schema):
    status = fields.Function(lambda s: 'feasible' if s.found_feasible else 'no_feasible_point')
    objective = fields.Function(
        lambda s: _finite_or_none(s.best_objective) if s.best_x is not None else None)
    residual = fields.Function(
        lambda s: _finite_or_none(s.best_residual if s.best_x is not None else s.closest_residual))
    x = fields.Function(lambda s: None if s.best_x is None else [float(v) for v in s.best_x])
    restarts = fields.Int()
    iterations = fields.Int()
    factorizations = fields.Int()
    polished = fields.Bool()
    wall_ms = fields.Float()


class TraceRowSchema(Schema):
    restart = fields.Int()
    k = fields.Int()
    objective = fields.Float()
    residual = fields.Float()
    best_so_far = fields.Float()


TRACE_COLUMNS = ('restart', 'k', 'objective', 'residual', 'best_so_far')


def solution_document(solution, timing=False):
    """JSON-ready dict; wall_ms is null unless timing is requested so output stays reproducible."""
    data = SolutionSchema().dump(solution)
    data['wall_ms'] = round(float(solution.wall_ms), 3) if timing else None
    return data


def check_document(data):
    with open(SOLUTION_SCHEMA_PATH) as fh:
        jsonschema.validate(data, json.load(fh))
    return data


def dump_solution(solution, fh, timing=False):
    data = check_document(solution_document(solution, timing=timing))
    json.dump(data, fh, sort_keys=True)
    fh.write('\n')
    return data


def write_trace_csv(traces, path):
    rows = TraceRowSchema(many=True).dump(traces)
    with open(path, 'w', newline='') as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return len(rows)
