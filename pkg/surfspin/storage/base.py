from abc import ABC, abstractmethod
from typing import Any, Iterable


class CacheStorage(ABC):
    """
    One namespace of stored simulation results.

    Keys are parameter digests, values are plain python data (dicts of float lists).
    """

    @abstractmethod
    def get(self, key: str) -> Any:
        """ The value stored for key, KeyError when there is none. """

    @abstractmethod
    def put(self, key: str, value: Any) -> None:
        pass

    @abstractmethod
    def discard(self, key: str) -> None:
        """ Remove key, KeyError when there is none. """

    @abstractmethod
    def keys(self) -> Iterable[str]:
        pass

    def __len__(self) -> int:
        return sum(1 for _ in self.keys())

    def close(self) -> None:
        pass


class CacheStoragePlugin(ABC):
    """
    Opens namespaced storages. `STORAGE_CONFIG` from the config holds back end settings.
    """

    def __init__(self, config):
        self.settings = dict(getattr(config, 'STORAGE_CONFIG', None) or {})

    @abstractmethod
    def open(self, namespace: str) -> CacheStorage:
        pass
