import json
import sys
import time
from functools import wraps

import click
from marshmallow import ValidationError

from src.main.solver.errors import NcadmmError

FEASIBLE = 0
INPUT_ERROR = 1
NO_FEASIBLE_POINT = 2


def report_error(message):
    click.echo(json.dumps({'error': message}, sort_keys=True), err=True)
    return INPUT_ERROR


def exit_codes(fn):
    """
    Turn a command's return value or input error into the process exit code

    Input errors print {"error": ...} on stderr and exit 1; the command's
    own return value (0 or 2) is used otherwise.
    """
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except ValidationError as e:
            code = report_error(e.messages)
        except (NcadmmError, OSError, ValueError) as e:
            code = report_error(str(e))
        sys.exit(code or FEASIBLE)

    return wrapper


def timed(fn):
    """Return (result, elapsed milliseconds)."""
    @wraps(fn)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        return result, (time.perf_counter() - start) * 1e3

    return wrapper
