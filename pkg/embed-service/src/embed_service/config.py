"""Service configuration from a YAML file plus environment overrides.

Precedence, lowest to highest: built-in defaults, config file keys,
environment variables (ENDPOINT_PORT, MODEL_DIR), command-line flags.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .registry import DEFAULT_SPECS, ModelSpec

ENV_PORT = "ENDPOINT_PORT"
ENV_MODEL_DIR = "MODEL_DIR"

_KNOWN_KEYS = {
    "host",
    "port",
    "model_dir",
    "max_batch",
    "eager_load",
    "load_delay_s",
    "models",
}


class ConfigError(ValueError):
    """The configuration cannot produce a runnable service."""


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    model_dir: str | None = None
    max_batch: int = 256
    eager_load: tuple[str, ...] = ()
    load_delay_s: float = 0.0
    models: tuple[ModelSpec, ...] = DEFAULT_SPECS

    def validate(self) -> None:
        if not (0 <= self.port <= 65535):
            raise ConfigError(f"port must be in 0..65535, got {self.port}")
        if self.max_batch < 1:
            raise ConfigError(f"max_batch must be at least 1, got {self.max_batch}")
        if self.load_delay_s < 0:
            raise ConfigError(f"load_delay_s must not be negative, got {self.load_delay_s}")
        if not self.models:
            raise ConfigError("no models configured")
        ids = [s.model_id for s in self.models]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate model_id in models")


def _parse_models(obj, context: str) -> tuple[ModelSpec, ...]:
    if not isinstance(obj, dict) or not obj:
        raise ConfigError(f"{context}: models must be a non-empty mapping")
    specs = []
    for model_id, entry in obj.items():
        if not isinstance(entry, dict) or "dim" not in entry:
            raise ConfigError(
                f"{context}: model {model_id!r} needs a mapping with a 'dim' key"
            )
        unknown = set(entry) - {"dim", "checkpoint"}
        if unknown:
            raise ConfigError(f"{context}: model {model_id!r}: unknown keys {sorted(unknown)}")
        try:
            dim = int(entry["dim"])
        except (TypeError, ValueError):
            raise ConfigError(
                f"{context}: model {model_id!r}: dim must be an integer"
            ) from None
        checkpoint = str(entry.get("checkpoint", f"local/{model_id}"))
        specs.append(ModelSpec(str(model_id), dim, checkpoint))
    return tuple(specs)


def load_service_config(path=None) -> ServiceConfig:
    """Build the effective config from an optional file and the environment."""
    obj: dict = {}
    if path is not None:
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            loaded = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        obj = loaded
        unknown = set(obj) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")

    kwargs: dict = {}
    if "host" in obj:
        kwargs["host"] = str(obj["host"])
    if "port" in obj:
        try:
            kwargs["port"] = int(obj["port"])
        except (TypeError, ValueError):
            raise ConfigError(f"port must be an integer, got {obj['port']!r}") from None
    if "model_dir" in obj and obj["model_dir"] is not None:
        kwargs["model_dir"] = str(obj["model_dir"])
    if "max_batch" in obj:
        try:
            kwargs["max_batch"] = int(obj["max_batch"])
        except (TypeError, ValueError):
            raise ConfigError(f"max_batch must be an integer, got {obj['max_batch']!r}") from None
    if "eager_load" in obj:
        eager = obj["eager_load"]
        if not isinstance(eager, list) or not all(isinstance(m, str) for m in eager):
            raise ConfigError("eager_load must be a list of model ids")
        kwargs["eager_load"] = tuple(eager)
    if "load_delay_s" in obj:
        try:
            kwargs["load_delay_s"] = float(obj["load_delay_s"])
        except (TypeError, ValueError):
            raise ConfigError(
                f"load_delay_s must be a number, got {obj['load_delay_s']!r}"
            ) from None
    if "models" in obj:
        kwargs["models"] = _parse_models(obj["models"], str(path))

    env_port = os.environ.get(ENV_PORT)
    if env_port is not None:
        try:
            kwargs["port"] = int(env_port)
        except ValueError:
            raise ConfigError(f"{ENV_PORT} must be an integer, got {env_port!r}") from None
    env_model_dir = os.environ.get(ENV_MODEL_DIR)
    if env_model_dir is not None:
        kwargs["model_dir"] = env_model_dir

    config = ServiceConfig(**kwargs)
    config.validate()
    return config
