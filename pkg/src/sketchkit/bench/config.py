"""Experiment configuration: flat key-value files with CLI overrides.

A config file holds one ``key = value`` pair per line (``#`` comments
allowed); command-line flags override file values.  Every key is
validated against the subcommand's declared options before any
computation runs, and unknown keys are rejected by name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from ..sketch import (
    GaussianTM,
    KhatriRaoTM,
    SparseColTM,
    SparseIIDTM,
    SparseRttTM,
    SparseStackTM,
    SparseUniformTM,
)

__all__ = [
    "ConfigError",
    "Option",
    "ExperimentConfig",
    "parse_config_file",
    "resolve_options",
    "make_family_factory",
    "FAMILY_NAMES",
    "int_list",
    "float_list",
]

FAMILY_NAMES = (
    "gaussian",
    "sparsestack",
    "sparseuniform",
    "sparseiid",
    "sparsecol",
    "sparsertt",
    "khatri-rao",
)


class ConfigError(ValueError):
    """Invalid experiment configuration (bad key, bad value)."""


def int_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(v) for v in text]
    return [int(part) for part in str(text).split(",") if part.strip()]


def float_list(text) -> list[float]:
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(part) for part in str(text).split(",") if part.strip()]


@dataclass(frozen=True)
class Option:
    name: str
    type: Callable[[str], Any]
    default: Any
    help: str
    required: bool = False


class ExperimentConfig:
    """Validated option values for one subcommand run."""

    def __init__(self, command: str, values: dict):
        self.command = command
        self._values = values

    def __getattr__(self, name):
        try:
            return self._values[name.replace("_", "-")]
        except KeyError:
            raise AttributeError(name)

    def as_dict(self) -> dict:
        return dict(self._values)


def parse_config_file(path: str) -> dict:
    """Read a flat key-value file into a raw string dict."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" in text:
                key, _, value = text.partition("=")
            else:
                parts = text.split(None, 1)
                if len(parts) != 2:
                    raise ConfigError(f"line {lineno}: expected 'key value' or 'key = value'")
                key, value = parts
            raw[key.strip()] = value.strip()
    return raw


def resolve_options(
    command: str, options: list[Option], file_values: dict, cli_values: dict
) -> ExperimentConfig:
    """Merge file and CLI values against the declared options.

    CLI values win over file values; unknown file keys are rejected
    with the offending key named.
    """
    by_name = {opt.name: opt for opt in options}
    unknown = sorted(set(file_values) - set(by_name))
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    merged: dict[str, Any] = {}
    for opt in options:
        if opt.name in cli_values and cli_values[opt.name] is not None:
            value = cli_values[opt.name]
        elif opt.name in file_values:
            try:
                value = opt.type(file_values[opt.name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {opt.name!r}: {exc}")
        else:
            value = opt.default
        if value is None and opt.required:
            raise ConfigError(f"missing required option {opt.name!r} for {command}")
        merged[opt.name] = value
    return ExperimentConfig(command, merged)


def _kr_shape(d: int, d0: int) -> tuple[int, int]:
    """Tensor order and padded dimension for a Khatri-Rao map over d coordinates."""
    ell = max(1, int(math.ceil(math.log(d, d0))))
    while d0**ell < d:
        ell += 1
    return ell, d0**ell


def make_family_factory(name: str, *, field: str = "real", zeta: int = 4, xi: int | None = None,
                        transform: str | None = None, diagonal: str | None = None,
                        base: str = "real_spherical", d0: int = 2):
    """Build a `factory(d, k, seed) -> TestMatrix` closure for a family name.

    The Khatri-Rao factory requires d to be a power of the base
    dimension; callers embedding general data should pad first.
    """
    if name not in FAMILY_NAMES:
        raise ConfigError(f"unknown family {name!r}; choose from {FAMILY_NAMES}")

    if name == "gaussian":
        return lambda d, k, seed: GaussianTM(d, k, field, seed)
    if name == "sparsestack":
        def factory(d, k, seed):
            if k % zeta:
                raise ConfigError(f"sparsestack needs zeta | k, got k={k}, zeta={zeta}")
            return SparseStackTM(d, zeta, k // zeta, field=field, seed=seed)
        return factory
    if name == "sparseuniform":
        return lambda d, k, seed: SparseUniformTM(d, k, zeta, field=field, seed=seed)
    if name == "sparseiid":
        return lambda d, k, seed: SparseIIDTM(d, k, float(zeta), field=field, seed=seed)
    if name == "sparsecol":
        return lambda d, k, seed: SparseColTM(
            d, k, xi if xi is not None else max(1, int(np.ceil(1.5 * np.log(max(2, k))))),
            field=field, seed=seed,
        )
    if name == "sparsertt":
        return lambda d, k, seed: SparseRttTM(
            d, k, xi, transform, diagonal=diagonal, field=field, seed=seed
        )

    def kr_factory(d, k, seed):
        ell, padded = _kr_shape(d, d0)
        if padded != d:
            raise ConfigError(
                f"khatri-rao needs d to be a power of d0={d0}; pad the data to {padded}"
            )
        return KhatriRaoTM(d0, ell, k, base, seed=seed)

    return kr_factory
