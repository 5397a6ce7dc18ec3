import logging
import sys

import click

from src.main.config import LOG_LEVEL
from src.main.helper import INPUT_ERROR


class ExitCodeGroup(click.Group):
    """Usage errors exit with the input-error code instead of click's default 2."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(INPUT_ERROR)
        except click.Abort:
            click.echo('Aborted!', err=True)
            sys.exit(INPUT_ERROR)


@click.group(cls=ExitCodeGroup)
@click.option('--log-level', default=LOG_LEVEL, show_default=True,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False))
def cli(log_level):
    """Nonconvex ADMM heuristic for mixed-integer quadratic programs."""
    logging.basicConfig(level=log_level.upper(), stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s', force=True)
