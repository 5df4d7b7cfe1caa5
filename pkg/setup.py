#!/usr/bin/env python

from setuptools import find_packages, setup

setup(
    description="Probabilistic Symmetry Breaking for Finite Groups",
    name="symbreak",
    packages=find_packages(),
    install_requires=[
        "gitpython",
        "netCDF4",
        "networkx",
        "numpy",
        "pyyaml",
        "scipy",
    ],
)
