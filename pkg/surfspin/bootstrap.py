import importlib.util
import logging
import math
import os
from os import path

from surfspin.errors import ConfigurationError
from surfspin.logs import format_logs, add_file_handler, root_logger
from surfspin.storage import SimulationCache
from surfspin.storage.base import CacheStoragePlugin

log = logging.getLogger(__name__)

HERE = path.dirname(path.abspath(__file__))
CONFIG_TEMPLATE = path.join(HERE, 'config-template.py')
OUTPUT_DIR_ENV = 'SURFSPIN_OUTPUT_DIR'


class ShallowConfig(object):
    """ Bare settings namespace, used when no config file is given. """
    pass


def run_config_defaults(config):
    if not hasattr(config, 'GAMMA_E'):
        config.GAMMA_E = None  # None keeps the built-in constant
    if not hasattr(config, 'GAMMA_N'):
        config.GAMMA_N = None
    if not hasattr(config, 'J0'):
        config.J0 = None
    if not hasattr(config, 'HBAR'):
        config.HBAR = None
    if not hasattr(config, 'ENSEMBLE_MIN_RADIUS'):
        config.ENSEMBLE_MIN_RADIUS = 2.0
    if not hasattr(config, 'ENSEMBLE_MAX_RADIUS'):
        config.ENSEMBLE_MAX_RADIUS = 5000.0
    if not hasattr(config, 'FIELD_TILT'):
        config.FIELD_TILT = math.acos(1 / math.sqrt(3))
    if not hasattr(config, 'FIELD_AZIMUTH'):
        config.FIELD_AZIMUTH = math.pi / 4
    if not hasattr(config, 'DEPTH_MAX'):
        config.DEPTH_MAX = 1.0e4
    if not hasattr(config, 'QUAD_RTOL'):
        config.QUAD_RTOL = 1e-6
    if not hasattr(config, 'QUAD_MAX_LEVELS'):
        config.QUAD_MAX_LEVELS = 20
    if not hasattr(config, 'PI_EQUIVALENTS'):
        config.PI_EQUIVALENTS = None  # None keeps sequences.PI_EQUIVALENTS
    if not hasattr(config, 'ENVELOPE_COEFFS'):
        config.ENVELOPE_COEFFS = 'filter'
    if not hasattr(config, 'CLUSTER_MAX_SPINS'):
        config.CLUSTER_MAX_SPINS = 10
    if not hasattr(config, 'T1RHO_PREFACTOR'):
        config.T1RHO_PREFACTOR = 0.5
    if not hasattr(config, 'HOPPING_ALPHA'):
        config.HOPPING_ALPHA = 5.0
    if not hasattr(config, 'HOPPING_BETA'):
        config.HOPPING_BETA = 1.0
    if not hasattr(config, 'HOPPING_KAPPA'):
        config.HOPPING_KAPPA = 0.31
    if not hasattr(config, 'FIT_MAX_NFEV'):
        config.FIT_MAX_NFEV = 500
    if not hasattr(config, 'FIT_XTOL'):
        config.FIT_XTOL = 1e-8
    if not hasattr(config, 'FIT_STARTS'):
        config.FIT_STARTS = 5
    if not hasattr(config, 'DENSITY_NEIGHBORS'):
        config.DENSITY_NEIGHBORS = 5
    if not hasattr(config, 'DENSITY_REALIZATIONS'):
        config.DENSITY_REALIZATIONS = 500
    if not hasattr(config, 'THREADS'):
        config.THREADS = 1
    if not hasattr(config, 'STORAGE'):
        config.STORAGE = 'Memory'
    if not hasattr(config, 'STORAGE_CONFIG'):
        config.STORAGE_CONFIG = {}
    if not hasattr(config, 'DATA_DIR'):
        config.DATA_DIR = path.join(path.expanduser('~'), '.surfspin')
    if not hasattr(config, 'OUTPUT_DIR'):
        config.OUTPUT_DIR = os.environ.get(OUTPUT_DIR_ENV, os.getcwd())
    if not hasattr(config, 'LOG_LEVEL'):
        config.LOG_LEVEL = logging.INFO
    if not hasattr(config, 'LOG_FILE'):
        config.LOG_FILE = None
    if not hasattr(config, 'LOG_COLOR_THEME'):
        config.LOG_COLOR_THEME = 'light'
    if config.ENVELOPE_COEFFS not in ('filter', 'published'):
        raise ConfigurationError("ENVELOPE_COEFFS must be 'filter' or 'published', got %r."
                                 % config.ENVELOPE_COEFFS)
    if int(config.THREADS) < 1:
        raise ConfigurationError('THREADS must be at least 1, got %r.' % config.THREADS)
    return config


def get_config(config_path=None):
    """
    Load a config module from `config_path` and fill in the defaults.

    :param config_path: path of a python file, None for built-in defaults only.
    """
    if config_path is None:
        return run_config_defaults(ShallowConfig())
    if not path.exists(config_path):
        raise ConfigurationError('I cannot find the config file %s. You can use the template %s as a base.'
                                 % (config_path, CONFIG_TEMPLATE))
    name = path.splitext(path.basename(config_path))[0]
    spec = importlib.util.spec_from_file_location('surfspin_config_%s' % name, config_path)
    module = importlib.util.module_from_spec(spec)
    try:
        spec.loader.exec_module(module)
    except Exception as e:
        raise ConfigurationError('I could not import your config from %s: %s' % (config_path, e))
    config = ShallowConfig()
    config.__dict__.update({k: v for k, v in vars(module).items() if k.isupper()})
    log.info('Config %s loaded.' % config_path)
    return run_config_defaults(config)


def apply_overrides(config, overrides):
    """ Command line values win over the file, None means the flag was not given. """
    for key, value in overrides.items():
        if value is not None:
            log.debug('Override %s = %r' % (key, value))
            setattr(config, key, value)
    return config


def resolved_config(config) -> dict:
    """ All settings as a plain dictionary for the run manifest. """
    return {k: v for k, v in sorted(vars(config).items()) if k.isupper()}


def setup_logging(config):
    format_logs(theme_color=config.LOG_COLOR_THEME)
    if config.LOG_FILE:
        add_file_handler(config.LOG_FILE)
    root_logger.setLevel(config.LOG_LEVEL)


def get_storage_plugin(config) -> CacheStoragePlugin:
    if config.STORAGE == 'Memory':
        from surfspin.storage.memory import MemoryStoragePlugin
        return MemoryStoragePlugin(config)
    if config.STORAGE == 'Shelf':
        from surfspin.storage.shelf import ShelfStoragePlugin
        return ShelfStoragePlugin(config)
    raise ConfigurationError("Unknown STORAGE %r, choose 'Memory' or 'Shelf'." % config.STORAGE)


def open_cache(config, namespace: str = 'simulations') -> SimulationCache:
    plugin = get_storage_plugin(config)
    log.info("Simulation cache: %s storage, namespace '%s'." % (config.STORAGE, namespace))
    return SimulationCache(plugin, namespace)
