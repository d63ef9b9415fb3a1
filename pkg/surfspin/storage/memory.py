""" Cache kept in the process, shared by every open of the same namespace and lost at exit. """
from typing import Any, Dict

from surfspin.storage.base import CacheStorage, CacheStoragePlugin

_NAMESPACES = {}  # type: Dict[str, Dict[str, Any]]


class MemoryStorage(CacheStorage):

    def __init__(self, entries: Dict[str, Any]):
        self.entries = entries

    def get(self, key: str) -> Any:
        return self.entries[key]

    def put(self, key: str, value: Any) -> None:
        self.entries[key] = value

    def discard(self, key: str) -> None:
        del self.entries[key]

    def keys(self):
        return list(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


class MemoryStoragePlugin(CacheStoragePlugin):

    def open(self, namespace: str) -> CacheStorage:
        return MemoryStorage(_NAMESPACES.setdefault(namespace, {}))
