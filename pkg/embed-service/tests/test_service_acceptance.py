"""Acceptance gate for the encoder sidecar, one printed line.

Exercises the live HTTP service through the same client machinery the
evaluation pipeline uses, so a pass means the two packages interoperate.
"""
import math
from contextlib import contextmanager

import httpx
import pytest

from rtqe.embeddings import EmbeddingBackend, cosine_similarity, embed_batch


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def _criterion(name: str):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"\nFAIL  {name}")
            raise
        with capsys.disabled():
            print(f"\nPASS  {name}")
    return _criterion


class TestProtocolConformance:
    def test_protocol_conformance(self, criterion, run_server):
        name = (
            "protocol conformance: /embed response shape, gateway self-cosine "
            "1.0 (1e-6), use dim 512, repeated requests bit-identical"
        )
        with criterion(name):
            url = run_server()

            # Response shape straight off the wire
            request = {"model": "use", "sentences": ["hello", "round trip"]}
            response = httpx.post(f"{url}/embed", json=request)
            assert response.status_code == 200
            body = response.json()
            assert body["model"] == "use"
            assert body["dim"] == 512
            assert len(body["vectors"]) == len(request["sentences"])
            for row in body["vectors"]:
                assert len(row) == body["dim"]
                assert all(isinstance(v, float) and math.isfinite(v) for v in row)

            # Same sentence fetched twice through the pipeline's own
            # client: cosine between the two fetches must be 1.
            backend = EmbeddingBackend(kind="http", model_id="use", locator=url)
            first = embed_batch(backend, ["the quick brown fox"])[0]
            second = embed_batch(backend, ["the quick brown fox"])[0]
            assert first.dim == 512
            assert abs(cosine_similarity(first, second).value - 1.0) <= 1e-6

            # Repeated identical requests are identical byte for byte
            again = httpx.post(f"{url}/embed", json=request)
            assert again.content == response.content
