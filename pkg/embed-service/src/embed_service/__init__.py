"""HTTP sidecar serving deterministic sentence embeddings.

Exposes pretrained-encoder-shaped models over POST /embed, GET /models,
and GET /health for the round-trip quality-estimation toolkit (or any
other client of the same protocol).
"""
from .app import EmbedServer, make_server
from .config import ConfigError, ServiceConfig, load_service_config
from .encoders import HashedNgramEncoder, text_features
from .registry import DEFAULT_SPECS, ModelRegistry, ModelSpec, UnknownModel

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DEFAULT_SPECS",
    "EmbedServer",
    "HashedNgramEncoder",
    "ModelRegistry",
    "ModelSpec",
    "ServiceConfig",
    "UnknownModel",
    "load_service_config",
    "make_server",
    "text_features",
]
