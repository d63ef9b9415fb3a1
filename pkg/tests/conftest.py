import pytest

from surfspin.bootstrap import ShallowConfig, run_config_defaults
from surfspin.hopping import HoppingParams
from surfspin.inference import DEFAULT_OMEGA_L
from surfspin.noise import NoiseModel

# fitted parameters of the shallow NV system the models were calibrated on
REFERENCE_W = 4.40
REFERENCE_TAU = 14.6
REFERENCE_J1 = 0.71


@pytest.fixture
def reference_noise():
    return NoiseModel(REFERENCE_W, REFERENCE_TAU, DEFAULT_OMEGA_L)


@pytest.fixture
def hopping_params():
    return HoppingParams()


@pytest.fixture
def config(tmpdir):
    config = ShallowConfig()
    config.DATA_DIR = str(tmpdir.join('data'))
    config.OUTPUT_DIR = str(tmpdir.join('out'))
    config.STORAGE = 'Memory'
    return run_config_defaults(config)


@pytest.fixture
def out_dir(tmpdir):
    return str(tmpdir.join('out'))
