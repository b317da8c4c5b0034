"""HTTP surface of the encoder sidecar.

Endpoints: POST /embed, GET /models, GET /health. One thread per
request; anything touching a single model is serialized inside the
registry, and there is no other shared mutable state. Vector components
are rounded to 8 significant decimal digits before serialization so a
logged response replays bit-identically anywhere.

Eagerly listed models load on a background thread after the socket is
bound; /health answers 503 until they are all in memory, then 200.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import ConfigError, ServiceConfig, load_service_config
from .registry import ModelRegistry, UnknownModel

log = logging.getLogger(__name__)


def round_significant(value: float) -> float:
    """Round one component to 8 significant decimal digits."""
    return float(f"{value:.8g}")


class EmbedServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.registry = ModelRegistry(
            config.models, config.model_dir, config.load_delay_s
        )
        missing = [m for m in config.eager_load if m not in self.registry.model_ids]
        if missing:
            raise ConfigError(f"eager_load names unregistered models: {missing}")
        super().__init__((config.host, config.port), _Handler)
        self._eager_ready = threading.Event()
        if config.eager_load:
            threading.Thread(
                target=self._load_eager, args=(tuple(config.eager_load),), daemon=True
            ).start()
        else:
            self._eager_ready.set()

    @property
    def ready(self) -> bool:
        return self._eager_ready.is_set()

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def _load_eager(self, model_ids: tuple[str, ...]) -> None:
        for model_id in model_ids:
            self.registry.load(model_id)
            log.info("loaded %s", model_id)
        self._eager_ready.set()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: EmbedServer

    def log_message(self, format, *args):
        log.debug("%s " + format, self.address_string(), *args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            if self.server.ready:
                self._send(200, {"status": "ok"})
            else:
                self._send(503, {"status": "loading", "error": "models still loading"})
        elif self.path == "/models":
            registry = self.server.registry
            self._send(
                200,
                {
                    "models": list(registry.model_ids),
                    "checkpoints": {
                        model_id: registry.spec(model_id).checkpoint
                        for model_id in registry.model_ids
                    },
                    "loaded": sorted(registry.loaded),
                },
            )
        else:
            self._send(404, {"error": f"no route for GET {self.path}"})

    def do_POST(self):
        if self.path != "/embed":
            self._send(404, {"error": f"no route for POST {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            request = json.loads(self.rfile.read(length))
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "body must be a JSON object"})
            return
        status, payload = self._embed(request)
        self._send(status, payload)

    def _embed(self, request) -> tuple[int, dict]:
        if not isinstance(request, dict):
            return 400, {"error": "body must be a JSON object"}
        model_id = request.get("model")
        sentences = request.get("sentences")
        if not isinstance(model_id, str):
            return 400, {"error": "request needs a string 'model'"}
        if not isinstance(sentences, list) or not all(
            isinstance(s, str) for s in sentences
        ):
            return 400, {"error": "request needs 'sentences': a list of strings"}
        max_batch = self.server.config.max_batch
        if len(sentences) > max_batch:
            return 413, {
                "error": f"batch too large: {len(sentences)} sentences, limit {max_batch}"
            }
        registry = self.server.registry
        try:
            vectors = registry.encode_batch(model_id, sentences)
        except UnknownModel:
            return 404, {"error": "unknown model"}
        except Exception as exc:
            log.exception("inference failure for %s", model_id)
            return 500, {"error": f"inference failure: {exc}"}
        return 200, {
            "model": model_id,
            "dim": registry.spec(model_id).dim,
            "vectors": [[round_significant(v) for v in vec] for vec in vectors],
        }


def make_server(config: ServiceConfig) -> EmbedServer:
    """Bind a server; with port 0 the OS picks one (see server.url)."""
    return EmbedServer(config)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-service",
        description="Serve sentence embeddings over the /embed HTTP protocol.",
    )
    parser.add_argument("--config", help="service configuration file (YAML)")
    parser.add_argument("--host", help="bind address (overrides config)")
    parser.add_argument("--port", type=int, help="bind port (overrides config)")
    parser.add_argument("--verbose", action="store_true", help="log request detail")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_service_config(args.config)
        overrides = {}
        if args.host is not None:
            overrides["host"] = args.host
        if args.port is not None:
            overrides["port"] = args.port
        if overrides:
            from dataclasses import replace

            config = replace(config, **overrides)
            config.validate()
        server = make_server(config)
    except ConfigError as exc:
        print(f"embed-service: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"embed-service: cannot bind: {exc}", file=sys.stderr)
        return 1

    print(f"serving on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
