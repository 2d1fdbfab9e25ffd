"""Experiment configuration: defaults, INI files, and key=value overrides.

Each experiment kind gets its own frozen dataclass of plain values; the
defaults reproduce the desk-scale study.  Values come, in increasing
precedence, from the dataclass defaults, an INI file section named after the
experiment, and ``--set key=value`` overrides.  ``config_hash`` digests the
semantic fields (everything except ``workers``) so runs can be matched up
later.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
import typing
from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class ConvergenceConfig:
    """Empirical reservoir Grams vs. their deterministic kernel limit."""

    seeds: tuple[int, ...] = (0, 1, 2)
    algorithms: tuple[str, ...] = ("rc", "src")
    activations: tuple[str, ...] = ("erf", "rff")
    sigma_r2_grid: tuple[float, ...] = (0.25, 1.0, 4.0)
    sigma_i2: float = 0.02
    sigma_b2: float = 0.0
    sizes: tuple[int, ...] = (64, 128, 256, 512, 1024, 2048, 4096, 8192)
    n_series: int = 50
    series_len: int = 10
    series_dim: int = 50
    record_at: tuple[int, ...] = (2, 5, 10)
    redraw_modes: tuple[int, ...] = (0,)
    workers: int = 1


@dataclass(frozen=True)
class PredictConfig:
    """Closed-loop forecasting of a saved chaotic dataset."""

    dataset: str = ""
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9)
    algorithms: tuple[str, ...] = ("rc", "src", "rk")
    activation: str = "erf"
    size: int = 3996
    train_len: int = 10000
    warmup: int = 100
    tau: int = 50
    rk_train_windows: int = 2000
    sigma_i2: float = 0.16
    sigma_r2: float = 0.81
    sigma_b2: float = 0.16
    concat_scale: float = 1.1
    alpha: float = 1e-2
    input_gain: float = 1.0
    horizon: int = 600
    warm_len: int = 500
    test_blocks: int = 4
    normalizer_len: int = 1000
    workers: int = 1


@dataclass(frozen=True)
class StabilityConfig:
    """Sensitivity of reservoir trajectories and kernel recursions to inits."""

    dataset: str = ""
    sigma_r2_grid: tuple[float, ...] = (0.49, 1.0, 2.25)
    sigma_i2: float = 0.01
    size: int = 512
    # keep the probe drive low-dimensional: wide common drives synchronize
    # the perturbed copies and hide the chaotic regime entirely
    input_dim: int = 5
    horizon: int = 100
    n_seeds: int = 100
    activation: str = "erf"
    rk_sigma_r2_grid: tuple[float, ...] = (0.25, 0.49, 1.0)
    rk_tau: int = 50
    rk_windows: int = 40
    workers: int = 1


@dataclass(frozen=True)
class TimingConfig:
    """Wall-clock comparison of the three pipelines, phase by phase."""

    dataset: str = ""
    sizes: tuple[int, ...] = (1948, 3996, 8092)
    algorithms: tuple[str, ...] = ("rc", "src", "rk")
    phases: tuple[str, ...] = ("forward", "train", "predict")
    forward_steps: int = 2000
    train_len: int = 4000
    warmup: int = 100
    tau: int = 50
    rk_train_windows: int = 2000
    repeats: int = 5
    horizon: int = 100
    activation: str = "erf"
    sigma_i2: float = 0.16
    sigma_r2: float = 0.81
    sigma_b2: float = 0.16
    concat_scale: float = 1.1
    alpha: float = 1e-2
    input_gain: float = 1.0
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class RecDirectConfig:
    """Closed-loop feedback vs. one-shot stacked-horizon readouts."""

    dataset: str = ""
    seeds: tuple[int, ...] = (0, 1, 2)
    size: int = 1948
    activation: str = "erf"
    train_len: int = 3000
    warmup: int = 100
    sigma_i2: float = 0.16
    sigma_r2: float = 0.81
    sigma_b2: float = 0.16
    concat_scale: float = 1.1
    alpha: float = 1e-2
    input_gain: float = 1.0
    horizon: int = 100
    warm_len: int = 100
    normalizer_len: int = 1000
    workers: int = 1


@dataclass(frozen=True)
class SimulateKsConfig:
    """Generate and save a Kuramoto-Sivashinsky dataset."""

    domain: float = 100.0
    grid: int = 100
    dt: float = 0.25
    subsample: int = 1
    transient: int = 1000
    seed: int = 0
    steps: int = 20000
    lyapunov_probes: int = 3
    lyapunov_horizon: int = 12000
    filename: str = "dataset.rskd"
    csv_rows: int = 0
    workers: int = 1


CONFIG_TYPES: dict[str, type] = {
    "convergence": ConvergenceConfig,
    "predict": PredictConfig,
    "stability": StabilityConfig,
    "timing": TimingConfig,
    "recdirect": RecDirectConfig,
    "simulate-ks": SimulateKsConfig,
}

_NON_SEMANTIC = {"workers"}


def _parse_scalar(raw: str, ftype, key: str):
    raw = raw.strip()
    try:
        if ftype is int:
            return int(raw)
        if ftype is float:
            return float(raw)
        if ftype is str:
            return raw
    except ValueError:
        raise ConfigError(f"option {key!r}: cannot parse {raw!r} as {ftype.__name__}") from None
    raise ConfigError(f"option {key!r} has unsupported type {ftype!r}")


def _parse_value(raw: str, ftype, key: str):
    origin = typing.get_origin(ftype)
    if origin is tuple:
        elem = typing.get_args(ftype)[0]
        raw = raw.strip()
        if not raw:
            return ()
        return tuple(_parse_scalar(part, elem, key) for part in raw.split(","))
    return _parse_scalar(raw, ftype, key)


def _apply(kind: str, values: dict, key: str, raw: str, hints: dict) -> None:
    if key not in hints:
        raise ConfigError(f"unknown option {key!r} for experiment {kind!r}")
    values[key] = _parse_value(raw, hints[key], key)


def load_config(kind: str, path: str | None = None, overrides=()):
    """Build the config for ``kind`` from defaults, an INI file, and --set pairs."""
    if kind not in CONFIG_TYPES:
        raise ConfigError(f"unknown experiment {kind!r}; expected one of {sorted(CONFIG_TYPES)}")
    cls = CONFIG_TYPES[kind]
    hints = typing.get_type_hints(cls)
    values: dict = {}

    if path:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        for section in cp.sections():
            if section not in CONFIG_TYPES:
                raise ConfigError(f"{path}: unknown section [{section}]")
        merged: dict[str, str] = dict(cp.defaults())
        if cp.has_section(kind):
            merged.update(dict(cp.items(kind)))
        for key, raw in merged.items():
            _apply(kind, values, key, raw, hints)

    for pair in overrides:
        key, sep, raw = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        _apply(kind, values, key.strip(), raw, hints)

    return cls(**values)


def semantic_dict(kind: str, cfg) -> dict:
    """Config as plain data with non-semantic fields removed."""
    d = {k: v for k, v in dataclasses.asdict(cfg).items() if k not in _NON_SEMANTIC}
    d["experiment"] = kind
    return d


def config_hash(kind: str, cfg) -> str:
    blob = json.dumps(semantic_dict(kind, cfg), sort_keys=True, default=list)
    return hashlib.sha256(blob.encode()).hexdigest()
