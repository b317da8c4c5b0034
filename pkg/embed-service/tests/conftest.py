import threading

import pytest

from embed_service.app import make_server
from embed_service.config import ServiceConfig


@pytest.fixture
def run_server():
    """Factory starting live servers on ephemeral ports; yields base URLs.

    Every server is shut down at teardown, so tests can start as many
    differently configured instances as they need.
    """
    running = []

    def _start(**config_kwargs) -> str:
        config = ServiceConfig(port=0, **config_kwargs)
        server = make_server(config)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        running.append((server, thread))
        return server.url

    yield _start

    for server, thread in running:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
