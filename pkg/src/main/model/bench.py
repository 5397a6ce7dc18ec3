import csv
import math

import attrs
from marshmallow import Schema, fields, post_dump

BENCH_COLUMNS = ('suite', 'instance', 'seed', 'rho', 'f_admm', 'f_ref', 'gap', 'residual', 'feasible',
                 'ber_admm', 'ber_ref', 'wall_ms', 'summary')


@attrs.frozen
class BenchRow:
    suite: str
    instance: object
    seed: int = None
    rho: float = None
    f_admm: float = None
    f_ref: float = None
    gap: float = None
    residual: float = None
    feasible: float = None
    ber_admm: float = None
    ber_ref: float = None
    wall_ms: float = None
    summary: str = None


class BenchRowSchema(Schema):
    suite = fields.Str()
    instance = fields.Raw()
    seed = fields.Int(allow_none=True)
    rho = fields.Float(allow_none=True)
    f_admm = fields.Float(allow_none=True)
    f_ref = fields.Float(allow_none=True)
    gap = fields.Float(allow_none=True)
    residual = fields.Float(allow_none=True)
    feasible = fields.Float(allow_none=True)
    ber_admm = fields.Float(allow_none=True)
    ber_ref = fields.Float(allow_none=True)
    wall_ms = fields.Float(allow_none=True)
    summary = fields.Str(allow_none=True)

    @post_dump
    def blank_missing(self, data, **kwargs):
        # empty CSV cells for missing or non-finite values
        return {key: '' if value is None or (isinstance(value, float) and not math.isfinite(value)) else value
                for key, value in data.items()}


def write_bench_csv(rows, fh):
    writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator='\n')
    writer.writeheader()
    writer.writerows(BenchRowSchema(many=True).dump(rows))
