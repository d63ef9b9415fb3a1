""" Cache of averaged cluster simulations, keyed by the parameters that produced them. """
import hashlib
import json
import logging
from collections.abc import MutableMapping
from typing import Callable, Dict, Mapping, Optional, Sequence

import numpy as np

from surfspin.errors import SurfSpinError

log = logging.getLogger(__name__)


class CacheError(SurfSpinError):
    pass


class CacheAlreadyOpenError(CacheError):
    pass


class CacheNotOpenError(CacheError):
    pass


def parameter_key(parameters: Mapping) -> str:
    """ SHA-256 of the canonical JSON of `parameters`, equal parameter sets give equal keys. """
    text = json.dumps(parameters, sort_keys=True, default=str, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


class SimulationCache(MutableMapping):
    """
    Mapping over one namespace of a cache storage, usable as a context manager.

    `fetch`, `store` and `cached` address entries by their parameter set and convert the stored
    float lists back to arrays.

    :param storage_plugin: a CacheStoragePlugin, or None to open later with `open`.
    """

    def __init__(self, storage_plugin=None, namespace: str = 'simulations'):
        self._store = None
        self.namespace = None
        self.hits = 0
        self.misses = 0
        if storage_plugin is not None:
            self.open(storage_plugin, namespace)

    def open(self, storage_plugin, namespace: str):
        if self._store is not None:
            raise CacheAlreadyOpenError("Cache '%s' is already open." % self.namespace)
        self._store = storage_plugin.open(namespace)
        self.namespace = namespace
        log.debug("Opened cache '%s' holding %d entries" % (namespace, len(self._store)))

    def close(self):
        if self._store is None:
            raise CacheNotOpenError('The cache was never opened.')
        self._store.close()
        self._store = None
        log.debug("Closed cache '%s': %d hits, %d misses" % (self.namespace, self.hits, self.misses))

    def _backend(self):
        if self._store is None:
            raise CacheNotOpenError('The cache is not open.')
        return self._store

    def __getitem__(self, key):
        return self._backend().get(key)

    def __setitem__(self, key, value):
        self._backend().put(key, value)

    def __delitem__(self, key):
        self._backend().discard(key)

    def __iter__(self):
        return iter(self._backend().keys())

    def __len__(self):
        return len(self._backend())

    def __contains__(self, key):
        try:
            self._backend().get(key)
        except KeyError:
            return False
        return True

    def fetch(self, parameters: Mapping) -> Optional[Dict[str, np.ndarray]]:
        """ Arrays stored for `parameters`, None on a miss. """
        try:
            stored = self[parameter_key(parameters)]
        except KeyError:
            self.misses += 1
            return None
        self.hits += 1
        return {name: np.asarray(values, dtype=float) for name, values in stored.items()}

    def store(self, parameters: Mapping, arrays: Mapping[str, Sequence[float]]) -> str:
        key = parameter_key(parameters)
        self[key] = {name: [float(v) for v in values] for name, values in arrays.items()}
        return key

    def cached(self, parameters: Mapping,
               compute: Callable[[], Mapping[str, Sequence[float]]]) -> Dict[str, np.ndarray]:
        """ The stored arrays for `parameters`, computing and storing them first on a miss. """
        arrays = self.fetch(parameters)
        if arrays is not None:
            log.info("Reusing a cached simulation from '%s'." % self.namespace)
            return arrays
        computed = compute()
        self.store(parameters, computed)
        return {name: np.asarray(values, dtype=float) for name, values in computed.items()}

    def __enter__(self):
        return self

    def __exit__(self, type, value, traceback):
        self.close()
