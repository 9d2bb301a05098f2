"""Benchmark and experiment front end: config, testbed, runners, CLI."""

from .config import ConfigError, ExperimentConfig, make_family_factory
from .testbed import TestbedSpectrum, default_testbed, spectrum_values, testbed_generate

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "make_family_factory",
    "TestbedSpectrum",
    "default_testbed",
    "spectrum_values",
    "testbed_generate",
]
