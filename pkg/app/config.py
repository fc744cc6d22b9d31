"""Configuration management.

Training configuration comes from, in increasing priority:

1. `TrainConfig` defaults
2. a named profile (`desk`)
3. a KEY=VALUE config file
4. `--set key=value` overrides

Files are parsed with `dotenv_values`; nothing is read from or written to
the process environment. Keys are flat: `aug_noise_std` addresses
`aug.noise_std`, `vae_epochs` addresses `vae.epochs`.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

from dotenv import dotenv_values
from pydantic import ValidationError as PydanticValidationError

from app import __version__
from app.exceptions import ConfigError
from app.models.training import AugmentConfig, TrainConfig, VaeConfig

TOOL_VERSION = __version__

DEFAULT_OUT_DIR = Path("runs")

NESTED_PREFIXES: dict[str, type] = {
    "aug": AugmentConfig,
    "vae": VaeConfig,
}

# MLPs trained from scratch on the default scenario need a larger step than
# the 3e-4 of the reference protocol to converge within a desk-scale budget.
# Coordinate dropout pushes clean known samples towards the class junction,
# so the desk profile augments with noise only.
PROFILES: dict[str, dict[str, str]] = {
    "reference": {},
    "desk": {
        "total_epochs": "80",
        "warmup_epochs": "40",
        "lr": "0.05",
        "batch_size": "32",
        "aug_drop_prob": "0.0",
        "vae_epochs": "300",
        "vae_lr": "0.01",
    },
}

DEFAULT_SEEDS = [0, 1, 2, 3, 4]


def parse_overrides(items: Iterable[str]) -> dict[str, str]:
    """`["lr=0.1", "aug_noise_std=0"]` → `{"lr": "0.1", "aug_noise_std": "0"}`."""
    out: dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Override '{item}' is not of the form key=value")
        out[key.strip()] = value.strip()
    return out


def _nest(flat: Mapping[str, Optional[str]]) -> dict[str, Any]:
    nested: dict[str, Any] = {}
    for key, value in flat.items():
        if value is None:
            raise ConfigError(f"Key '{key}' has no value")
        if key in TrainConfig.model_fields and key not in NESTED_PREFIXES:
            nested[key] = value
            continue
        prefix, _, field = key.partition("_")
        model = NESTED_PREFIXES.get(prefix)
        if model is None or field not in model.model_fields:
            raise ConfigError(f"Unknown configuration key '{key}'", details={"key": key})
        nested.setdefault(prefix, {})[field] = value
    return nested


def load_train_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, str]] = None,
    profile: Optional[str] = None,
) -> TrainConfig:
    """Resolve a TrainConfig.

    Raises:
        ConfigError: Unknown profile, missing file, unknown key or invalid value
    """
    flat: dict[str, Optional[str]] = {}
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"Unknown profile '{profile}'", details={"choices": sorted(PROFILES)})
        flat.update(PROFILES[profile])
    if path is not None:
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}", details={"path": str(path)})
        flat.update(dotenv_values(path))
    flat.update(overrides or {})

    try:
        return TrainConfig(**_nest(flat))
    except PydanticValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"Invalid configuration value for '{location}': {first['msg']}") from e


def flatten_config(config: TrainConfig) -> dict[str, str]:
    """Inverse of the key mapping used by `load_train_config`."""
    flat: dict[str, str] = {}
    for key, value in config.model_dump().items():
        if key in NESTED_PREFIXES:
            for field, inner in value.items():
                flat[f"{key}_{field}"] = _format_value(inner)
        else:
            flat[key] = _format_value(value)
    return flat


def write_config_file(config: TrainConfig, path: Path) -> None:
    """Write a config file that `load_train_config` reads back to `config`."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={value}" for key, value in flatten_config(config).items()]
    path.write_text("\n".join(lines) + "\n")


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)
