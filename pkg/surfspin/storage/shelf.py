import logging
import os
import shelve
from typing import Any

from surfspin.storage.base import CacheStorage, CacheStoragePlugin

log = logging.getLogger(__name__)


class ShelfStorage(CacheStorage):
    """ A shelve file, synced after every put. """

    def __init__(self, filename: str):
        self.filename = filename
        self.shelf = shelve.open(filename, protocol=4)

    def get(self, key: str) -> Any:
        return self.shelf[key]

    def put(self, key: str, value: Any) -> None:
        self.shelf[key] = value
        self.shelf.sync()

    def discard(self, key: str) -> None:
        del self.shelf[key]

    def keys(self):
        return list(self.shelf.keys())

    def __len__(self) -> int:
        return len(self.shelf)

    def close(self) -> None:
        self.shelf.close()


class ShelfStoragePlugin(CacheStoragePlugin):
    """ One shelf per namespace in STORAGE_CONFIG['basedir'], DATA_DIR by default. """

    def __init__(self, config):
        super().__init__(config)
        self.directory = self.settings.get('basedir') or config.DATA_DIR

    def open(self, namespace: str) -> CacheStorage:
        os.makedirs(self.directory, exist_ok=True)
        filename = os.path.join(self.directory, '%s.cache' % namespace)
        log.debug('Opening shelf %s' % filename)
        return ShelfStorage(filename)
