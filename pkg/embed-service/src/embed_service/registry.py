"""Model registration, lazy loading, and the loaded-encoder cache."""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .encoders import HashedNgramEncoder


class UnknownModel(Exception):
    """Requested model id is not registered."""

    def __init__(self, model_id: str):
        super().__init__(f"unknown model: {model_id!r}")
        self.model_id = model_id


@dataclass(frozen=True)
class ModelSpec:
    """One registry entry: how to build an encoder and what it must emit."""

    model_id: str
    dim: int
    checkpoint: str


DEFAULT_SPECS = (
    ModelSpec("use", 512, "builtin/use-v1"),
    ModelSpec("roberta-large", 1024, "builtin/roberta-large-v1"),
    ModelSpec("xlm-roberta", 768, "builtin/xlm-roberta-v1"),
    ModelSpec("paraphrase-distilroberta", 768, "builtin/paraphrase-distilroberta-v1"),
)


def _dir_specs(model_dir: Path) -> list[ModelSpec]:
    """Read per-model override files: <model_id>.json with dim/checkpoint."""
    if not model_dir.is_dir():
        raise ValueError(f"model dir {model_dir} is not a directory")
    specs = []
    for path in sorted(model_dir.glob("*.json")):
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read model file {path}: {exc}") from exc
        if not isinstance(data, dict) or "dim" not in data:
            raise ValueError(f"model file {path} must be an object with a 'dim' key")
        model_id = path.stem
        specs.append(
            ModelSpec(
                model_id=model_id,
                dim=int(data["dim"]),
                checkpoint=str(data.get("checkpoint", f"{model_dir.name}/{model_id}")),
            )
        )
    return specs


class ModelRegistry:
    """Thread-safe mapping of model ids to lazily constructed encoders.

    A model directory may override registered entries or add new ones,
    one <model_id>.json file each. All work for a model (first-use
    construction and inference) runs under that model's lock, so
    concurrent requests build each encoder exactly once and per-model
    inference is serialized.
    """

    def __init__(self, specs=DEFAULT_SPECS, model_dir=None, load_delay_s: float = 0.0):
        self._specs: dict[str, ModelSpec] = {s.model_id: s for s in specs}
        if model_dir is not None:
            for spec in _dir_specs(Path(model_dir)):
                self._specs[spec.model_id] = spec
        self._load_delay_s = load_delay_s
        self._encoders: dict[str, HashedNgramEncoder] = {}
        self._mutex = threading.Lock()
        self._model_locks = {model_id: threading.Lock() for model_id in self._specs}

    @property
    def model_ids(self) -> tuple[str, ...]:
        """Registered ids in registration order."""
        return tuple(self._specs)

    @property
    def loaded(self) -> frozenset[str]:
        """Ids whose encoders are currently in memory."""
        with self._mutex:
            return frozenset(self._encoders)

    def spec(self, model_id: str) -> ModelSpec:
        try:
            return self._specs[model_id]
        except KeyError:
            raise UnknownModel(model_id) from None

    def load(self, model_id: str) -> None:
        """Bring one model into memory now instead of on first request."""
        with self._lock_for(model_id):
            self._ensure_loaded(model_id)

    def encode_batch(self, model_id: str, sentences) -> list[list[float]]:
        """Embed a batch, loading the model first if needed."""
        with self._lock_for(model_id):
            encoder = self._ensure_loaded(model_id)
            return encoder.encode_batch(sentences)

    def _lock_for(self, model_id: str) -> threading.Lock:
        try:
            return self._model_locks[model_id]
        except KeyError:
            raise UnknownModel(model_id) from None

    def _ensure_loaded(self, model_id: str) -> HashedNgramEncoder:
        """Return the encoder, building it if absent. Caller holds its lock."""
        with self._mutex:
            cached = self._encoders.get(model_id)
        if cached is not None:
            return cached
        spec = self._specs[model_id]
        if self._load_delay_s > 0.0:
            # Stand-in for checkpoint reads; lets clients observe the
            # loading window that real model startup would have.
            time.sleep(self._load_delay_s)
        encoder = HashedNgramEncoder(spec.model_id, spec.dim, spec.checkpoint)
        with self._mutex:
            self._encoders[model_id] = encoder
        return encoder
