import os

# Define the application directory
BASE_DIR = os.path.abspath(os.path.dirname(__file__))

SCHEMA_DIR = os.path.join(BASE_DIR, 'schema')
SOLUTION_SCHEMA_PATH = os.path.join(SCHEMA_DIR, 'solution.schema.json')

THREADS = int(os.getenv('NCADMM_THREADS', '0'))
LOG_LEVEL = os.getenv('NCADMM_LOG_LEVEL', 'WARNING')
SEED = int(os.getenv('NCADMM_SEED', '0'))


def resolve_threads(threads):
    """0 means one worker per CPU."""
    if threads and threads > 0:
        return threads
    return os.cpu_count() or 1


class Config(object):
    RHO = 1.0
    ITERS = 200
    RESTARTS = 10
    EPS_TOL = 1e-4
    PRECONDITION = 'l2'
    POLISH = False
    POLISH_EPS_TOL = None
    POLISH_ITERATES = True
    LITERAL_DUAL_UPDATE = False
    THREADS = THREADS
    SEED = SEED


class MiqpConfig(Config):
    RHO = 0.5
    ITERS = 200
    RESTARTS = 10


class VehicleConfig(Config):
    RHO = 0.4
    ITERS = 1000
    RESTARTS = 5
    EPS_TOL = 1e-4


class ConverterConfig(Config):
    RHO = 2.7
    ITERS = 500
    RESTARTS = 3


class DecodeConfig(Config):
    ITERS = 10
    RESTARTS = 1


class TestingConfig(Config):
    THREADS = 1
    SEED = 0


PRESETS = {
    'default': Config,
    'miqp': MiqpConfig,
    'vehicle': VehicleConfig,
    'converter': ConverterConfig,
    'decode': DecodeConfig,
}
