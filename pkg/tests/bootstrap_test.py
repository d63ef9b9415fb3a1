import logging
import math

import pytest

from surfspin import bootstrap
from surfspin.bootstrap import (CONFIG_TEMPLATE, ShallowConfig, apply_overrides, get_config, get_storage_plugin,
                                open_cache, resolved_config, run_config_defaults)
from surfspin.errors import ConfigurationError
from surfspin.storage.memory import MemoryStoragePlugin
from surfspin.storage.shelf import ShelfStoragePlugin


def test_defaults():
    config = get_config()
    assert config.ENVELOPE_COEFFS == 'filter'
    assert config.THREADS == 1
    assert config.STORAGE == 'Memory'
    assert config.FIELD_TILT == pytest.approx(math.acos(1 / math.sqrt(3)))
    assert config.T1RHO_PREFACTOR == 0.5
    assert config.PI_EQUIVALENTS is None


def test_output_dir_from_the_environment(monkeypatch, tmpdir):
    monkeypatch.setenv(bootstrap.OUTPUT_DIR_ENV, str(tmpdir))
    assert run_config_defaults(ShallowConfig()).OUTPUT_DIR == str(tmpdir)


def test_the_template_is_a_valid_config():
    config = get_config(CONFIG_TEMPLATE)
    assert config.ENVELOPE_COEFFS in ('filter', 'published')
    assert config.HOPPING_KAPPA > 0


def test_config_file_values_win(tmpdir):
    path = tmpdir.join('config.py')
    path.write("ENVELOPE_COEFFS = 'published'\nTHREADS = 3\nlowercase = 'ignored'\n")
    config = get_config(str(path))
    assert config.ENVELOPE_COEFFS == 'published'
    assert config.THREADS == 3
    assert not hasattr(config, 'lowercase')
    assert config.HOPPING_ALPHA == 5.0


@pytest.mark.parametrize('source', ["ENVELOPE_COEFFS = 'guess'\n", "THREADS = 0\n", "import nonexistent_module\n"])
def test_bad_config_files(tmpdir, source):
    path = tmpdir.join('bad.py')
    path.write(source)
    with pytest.raises(ConfigurationError):
        get_config(str(path))


def test_missing_config_file(tmpdir):
    with pytest.raises(ConfigurationError):
        get_config(str(tmpdir.join('absent.py')))


def test_overrides_skip_missing_flags():
    config = apply_overrides(get_config(), {'THREADS': 4, 'LOG_LEVEL': None})
    assert config.THREADS == 4
    assert config.LOG_LEVEL == logging.INFO


def test_resolved_config_is_sorted_and_upper_case():
    settings = resolved_config(get_config())
    assert list(settings) == sorted(settings)
    assert all(key.isupper() for key in settings)


def test_storage_selection(config):
    assert isinstance(get_storage_plugin(config), MemoryStoragePlugin)
    config.STORAGE = 'Shelf'
    assert isinstance(get_storage_plugin(config), ShelfStoragePlugin)
    config.STORAGE = 'Redis'
    with pytest.raises(ConfigurationError):
        get_storage_plugin(config)


def test_open_cache(config):
    with open_cache(config, 'bootstrap-test') as cache:
        cache['k'] = 'v'
        assert cache.namespace == 'bootstrap-test'
