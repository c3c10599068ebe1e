#!/usr/bin/env python
from setuptools import setup
import acer_harness  # For accessing __version__ in __init__.py

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name="acer_harness",
    packages=["acer_harness"],
    version=acer_harness.__version__,
    license="MIT",
    description="Single-timescale actor-critic with evolving reward: simulator, exact oracles and rate experiments",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords=["actor-critic", "reinforcement learning", "temporal difference", "reward shaping", "mdp"],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.7",
        "python-dateutil>=2.7.0",
    ],
    entry_points={
        "console_scripts": ["acer-harness=acer_harness.acer_control:main"],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
)
