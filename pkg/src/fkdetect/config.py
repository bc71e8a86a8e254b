"""Run configuration with layered precedence.

Values resolve as: built-in defaults, then a JSON config file, then
``FKDETECT_*`` environment variables, then explicit command-line flags.
Later layers win only for keys they actually set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping


class ConfigError(ValueError):
    """Raised for unreadable config files or malformed values."""


@dataclass
class RunConfig:
    db: str = ""
    backend: str = "heuristic"
    script: str = ""
    base_url: str = ""
    model: str = "default"
    temperature: float = 0.0
    concurrency: int = 4
    max_ucc_arity: int = 4
    sample_rows: int = 5
    mask: bool = True
    cache_dir: str = ""
    api_key_env: str = "FKDETECT_API_KEY"
    out: str = ""
    truth: str = ""
    pred: str = ""


_ENV_KEYS = {
    "FKDETECT_BACKEND": "backend",
    "FKDETECT_SCRIPT": "script",
    "FKDETECT_BASE_URL": "base_url",
    "FKDETECT_MODEL": "model",
    "FKDETECT_TEMPERATURE": "temperature",
    "FKDETECT_CONCURRENCY": "concurrency",
    "FKDETECT_MAX_UCC_ARITY": "max_ucc_arity",
    "FKDETECT_SAMPLE_ROWS": "sample_rows",
    "FKDETECT_MASK": "mask",
    "FKDETECT_CACHE_DIR": "cache_dir",
    "FKDETECT_API_KEY_ENV": "api_key_env",
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(name: str, value: Any) -> Any:
    kind = _FIELD_TYPES[name]
    try:
        if kind == "bool":
            if isinstance(value, bool):
                return value
            word = str(value).strip().lower()
            if word in ("true", "1", "yes", "on"):
                return True
            if word in ("false", "0", "no", "off"):
                return False
            raise ValueError(value)
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc


def load_run_config(
    cli_values: Mapping[str, Any] | None = None,
    config_path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
) -> RunConfig:
    """Merge all configuration layers into one RunConfig."""
    merged: dict[str, Any] = {}
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {config_path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {config_path} must hold a JSON object")
        for name, value in raw.items():
            if name not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {name!r}")
            merged[name] = _convert(name, value)
    env = os.environ if env is None else env
    for var, name in _ENV_KEYS.items():
        if var in env:
            merged[name] = _convert(name, env[var])
    for name, value in (cli_values or {}).items():
        if value is None:
            continue
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown option {name!r}")
        merged[name] = _convert(name, value)
    config = RunConfig(**merged)
    _check(config)
    return config


def _check(config: RunConfig) -> None:
    if config.backend not in ("heuristic", "scripted", "http"):
        raise ConfigError(f"unknown backend {config.backend!r}")
    if config.backend == "scripted" and not config.script:
        raise ConfigError("scripted backend requires a script path")
    if config.backend == "http" and not config.base_url:
        raise ConfigError("http backend requires a base URL")
    if config.concurrency < 1:
        raise ConfigError(f"concurrency must be >= 1, got {config.concurrency}")
    if config.max_ucc_arity < 1:
        raise ConfigError(f"max_ucc_arity must be >= 1, got {config.max_ucc_arity}")
    if config.sample_rows < 0:
        raise ConfigError(f"sample_rows must be >= 0, got {config.sample_rows}")
