#!/usr/bin/env python

import os
import sys

from setuptools import setup, find_packages

py_version = sys.version_info[:2]

if py_version < (3, 8):
    raise RuntimeError('surfspin requires Python 3.8 or later')

VERSION_FILE = os.path.join('surfspin', 'version.py')

deps = ['setuptools',
        'numpy>=1.17',  # SeedSequence and the Generator API
        'scipy>=1.2',
        'jinja2',
        'colorlog',
        ]

src_root = os.curdir


def read_version():
    """
    Read directly the surfspin/version.py and gives the version without loading surfspin.
    :return: surfspin.version.VERSION
    """

    variables = {}
    with open(VERSION_FILE) as f:
        exec(compile(f.read(), 'version.py', 'exec'), variables)
    return variables['VERSION']


def read(fname, encoding='ascii'):
    return open(os.path.join(os.path.dirname(__file__), fname), 'r', encoding=encoding).read()


if __name__ == "__main__":

    VERSION = read_version()

    changes = read('CHANGES.rst', 'utf8')

    if changes.find(VERSION) == -1:
        raise Exception('You forgot to put a release note in CHANGES.rst ?!')

    packages = find_packages(src_root, include=['surfspin', 'surfspin.*'])

    setup(
        name="surfspin",
        version=VERSION,
        packages=packages,
        entry_points={
            'console_scripts': [
                'surfspin = surfspin.cli:main',
            ]
        },

        install_requires=deps,
        tests_require=['pytest', 'mock'],
        package_data={
            'surfspin': ['config-template.py',
                         'templates/*.txt',
                         'templates/*.svg',
                         ],
        },

        description="Noise, decoherence and spin transport models for NV-probed surface electron spins.",
        long_description=''.join([read('README.rst', 'utf8'), '\n\n', changes]),
        license="GPL",
        keywords="nv center surface spins decoherence dynamical decoupling spin diffusion",
        classifiers=[
            "Development Status :: 4 - Beta",
            "Topic :: Scientific/Engineering :: Physics",
            "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
            "Operating System :: OS Independent",
            "Programming Language :: Python :: 3",
            "Programming Language :: Python :: 3.8",
            "Programming Language :: Python :: 3.9",
            "Programming Language :: Python :: 3.10",
        ],
        src_root=src_root,
        platforms='any',
    )
