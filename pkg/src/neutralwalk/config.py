"""TOML experiment files.

Every key is optional.  A missing key takes the documented default, so an
empty file describes the standard 16-task, 32-vehicle experiment.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .experiments import DEFAULT_ALPHAS, DEFAULT_FLEET_SIZES, DEFAULT_MASTER_SEED, DEFAULT_RUNS
from .explorer import DEFAULT_MAX_STEPS
from .genotypes import ConfigError, FleetConfig, ModelKind

MODEL_CHOICES = ("redundant", "degenerate", "both")


@dataclass(frozen=True)
class ExperimentConfig:
    fleet: FleetConfig = field(default_factory=FleetConfig)
    models: Tuple[ModelKind, ...] = (ModelKind.DEGENERATE, ModelKind.REDUNDANT)
    alpha: Union[int, float] = 5
    max_steps: int = DEFAULT_MAX_STEPS
    runs: int = DEFAULT_RUNS
    seed: int = DEFAULT_MASTER_SEED
    fleet_sizes: Tuple[int, ...] = DEFAULT_FLEET_SIZES
    alphas: Tuple[Union[int, float], ...] = DEFAULT_ALPHAS


_FLEET_KEYS = {f.name: f for f in fields(FleetConfig)}
_FLEET_TYPES = {
    "task_count": int,
    "fleet_size": int,
    "base_fleet_size": int,
    "capacity": int,
    "model": str,
    "mutation_mode": str,
    "init_state_max": int,
    "degenerate_init": str,
    "init_mode": str,
    "transfers": bool,
    "identity": str,
    "threshold_reference": str,
    "adapt_from": str,
    "max_sweeps": int,
}
_RUN_TYPES = {
    "alpha": (int, float),
    "max_steps": int,
    "runs": int,
    "seed": int,
    "fleet_sizes": list,
    "alphas": list,
}


def _check_type(key: str, value, expected) -> None:
    # bool is an int subclass; keep them apart
    if isinstance(value, bool) and expected is not bool and expected != (int, float):
        raise ConfigError(f"{key}: expected {_type_name(expected)}, got a boolean")
    if isinstance(value, bool) and expected == (int, float):
        raise ConfigError(f"{key}: expected a number, got a boolean")
    if not isinstance(value, expected):
        raise ConfigError(f"{key}: expected {_type_name(expected)}, got {type(value).__name__}")


def _type_name(expected) -> str:
    if isinstance(expected, tuple):
        return "a number"
    return {int: "an integer", str: "a string", bool: "a boolean", list: "a list"}[expected]


def config_from_mapping(data: dict) -> ExperimentConfig:
    fleet_kwargs = {}
    run_kwargs = {}
    models = ExperimentConfig.models
    for key, value in data.items():
        if key in _FLEET_TYPES:
            _check_type(key, value, _FLEET_TYPES[key])
            if key == "model":
                if value not in MODEL_CHOICES:
                    raise ConfigError(f"model: {value!r} is not one of {', '.join(MODEL_CHOICES)}")
                if value == "both":
                    continue
                models = (ModelKind(value),)
            fleet_kwargs[key] = value
        elif key in _RUN_TYPES:
            _check_type(key, value, _RUN_TYPES[key])
            run_kwargs[key] = value
        else:
            raise ConfigError(f"{key}: unknown key")

    for key in ("fleet_sizes", "alphas"):
        if key in run_kwargs:
            items = run_kwargs[key]
            kind = int if key == "fleet_sizes" else (int, float)
            for item in items:
                _check_type(f"{key}[]", item, kind)
            run_kwargs[key] = tuple(items)
    for key in ("max_steps", "runs"):
        if key in run_kwargs and run_kwargs[key] < 1:
            raise ConfigError(f"{key}: must be at least 1, got {run_kwargs[key]}")
    if run_kwargs.get("alpha", 0) < 0:
        raise ConfigError(f"alpha: must be non-negative, got {run_kwargs['alpha']}")
    if "seed" in run_kwargs and not 0 <= run_kwargs["seed"] < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")

    # a two-model config is validated against each model
    checked = [FleetConfig(**{**fleet_kwargs, "model": m}) for m in models]
    return ExperimentConfig(fleet=checked[0], models=tuple(models), **run_kwargs)


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})") from None
    return config_from_mapping(data)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if hasattr(value, "value"):
        value = value.value
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(config: ExperimentConfig) -> str:
    """TOML text that :func:`parse_config` reads back to ``config``."""
    lines = []
    for name in _FLEET_KEYS:
        value = getattr(config.fleet, name)
        if name == "model":
            value = "both" if len(config.models) > 1 else config.models[0].value
        if value is None:
            continue
        lines.append(f"{name} = {_toml_value(value)}")
    for name in ("alpha", "max_steps", "runs", "seed", "fleet_sizes", "alphas"):
        lines.append(f"{name} = {_toml_value(getattr(config, name))}")
    return "\n".join(lines) + "\n"


def default_config(models: Optional[Tuple[ModelKind, ...]] = None) -> ExperimentConfig:
    if models is None:
        return ExperimentConfig()
    return ExperimentConfig(fleet=FleetConfig(model=models[0]), models=tuple(models))
