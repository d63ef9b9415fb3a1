# coding: utf-8
""" Relaxation of dipolar coupled surface electron spins probed by a shallow NV centre. """
import logging

from .version import VERSION

__version__ = VERSION

__all__ = ['VERSION', '__version__']

log = logging.getLogger(__name__)
