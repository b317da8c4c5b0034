"""Sentence-embedding access and cosine similarity.

Embeddings come from pluggable backends: a precomputed JSONL store on disk
or an HTTP encoder service speaking the POST /embed protocol. Vectors are
keyed by the SHA-256 of NFC-normalized sentence text so a store survives
dataset reordering and is reusable across runs.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .errors import DataError, TransportError
from .util import sentence_key

log = logging.getLogger(__name__)

BACKEND_FILE = "file"
BACKEND_HTTP = "http"

MAX_BATCH_SIZE = 512


class DimensionMismatch(DataError):
    pass


class ZeroVector(DataError):
    pass


class DimInconsistency(DataError):
    pass


class MissingEmbedding(DataError):
    def __init__(self, key: str):
        super().__init__(f"no stored embedding for sentence key {key}")
        self.key = key


class StoreParseError(DataError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dim: int
    model_id: str

    def __post_init__(self):
        if self.dim <= 0 or len(self.values) != self.dim:
            raise ValueError(
                f"dim {self.dim} does not match {len(self.values)} values"
            )
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError(f"non-finite component {v!r}")


@dataclass(frozen=True)
class EmbeddingBackend:
    """Locator for one embedding source.

    kind "file" reads a JSONL store at `locator`; kind "http" POSTs to the
    /embed endpoint of the service at `locator`, chunking requests by
    batch_size with at most max_in_flight chunks on the wire at once.
    """

    kind: str
    model_id: str
    locator: str
    batch_size: int = 32
    max_in_flight: int = 4

    def __post_init__(self):
        if self.kind not in (BACKEND_FILE, BACKEND_HTTP):
            raise ValueError(f"unknown backend kind: {self.kind!r}")
        if not 1 <= self.batch_size <= MAX_BATCH_SIZE:
            raise ValueError(f"batch_size must be in [1, {MAX_BATCH_SIZE}]")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    pair_id: int
    model_id: str

    def __post_init__(self):
        if not -1.0 <= self.value <= 1.0:
            raise ValueError(f"similarity {self.value} outside [-1, 1]")


def cosine_similarity(
    a: EmbeddingVector, b: EmbeddingVector, pair_id: int = -1
) -> SimilarityScore:
    """Dot product over the product of Euclidean norms, clamped to [-1, 1].

    The dot product accumulates left to right in index order, which makes
    the result bit-identical under argument swap.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dim {a.dim} vs {b.dim}")
    dot = 0.0
    for x, y in zip(a.values, b.values):
        dot += x * y
    sq_a = sum(x * x for x in a.values)
    sq_b = sum(y * y for y in b.values)
    if sq_a == 0.0 or sq_b == 0.0:
        raise ZeroVector("cosine undefined for an all-zero vector")
    # sqrt of the product rather than the product of sqrts: for a == b the
    # denominator is then sqrt(dot^2) and the ratio exactly 1.
    value = max(-1.0, min(1.0, dot / math.sqrt(sq_a * sq_b)))
    model_id = a.model_id if a.model_id == b.model_id else f"{a.model_id}+{b.model_id}"
    return SimilarityScore(value, pair_id, model_id)


def load_embedding_store(path) -> dict[str, EmbeddingVector]:
    """Read a JSONL embedding store into a key -> vector mapping.

    Every line holds {"key", "model", "dim", "values"}. All lines must
    agree on dim; duplicate keys keep the last occurrence and log a
    warning. An empty file is a valid empty store.
    """
    store: dict[str, EmbeddingVector] = {}
    expected_dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise StoreParseError(lineno, f"invalid JSON: {exc.msg}") from exc
            try:
                key = obj["key"]
                model = obj["model"]
                dim = obj["dim"]
                values = obj["values"]
            except (KeyError, TypeError) as exc:
                raise StoreParseError(lineno, f"missing field: {exc}") from exc
            if expected_dim is None:
                expected_dim = dim
            elif dim != expected_dim:
                raise DimInconsistency(
                    f"line {lineno}: dim {dim} differs from store dim {expected_dim}"
                )
            try:
                vector = EmbeddingVector(tuple(float(v) for v in values), dim, model)
            except (ValueError, TypeError) as exc:
                raise StoreParseError(lineno, str(exc)) from exc
            if key in store:
                log.warning("duplicate embedding key %s at line %d, keeping last", key, lineno)
            store[key] = vector
    return store


def _post_embed(client: httpx.Client, url: str, model_id: str, chunk: list[str]):
    try:
        response = client.post(url, json={"model": model_id, "sentences": chunk})
    except httpx.TransportError as exc:
        raise TransportError(f"embed transport failure: {exc}") from exc
    if response.status_code != 200:
        raise TransportError(
            f"embed request failed with status {response.status_code}",
            status=response.status_code,
            body=response.text,
        )
    try:
        payload = response.json()
        dim = payload["dim"]
        vectors = payload["vectors"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise TransportError(
            f"malformed embed response: {exc}", status=200, body=response.text
        ) from exc
    if len(vectors) != len(chunk):
        raise TransportError(
            f"embed response has {len(vectors)} vectors for {len(chunk)} sentences",
            status=200,
            body=response.text,
        )
    return dim, vectors


def embed_batch(
    backend: EmbeddingBackend,
    sentences: list[str],
    transport: httpx.BaseTransport | None = None,
) -> list[EmbeddingVector]:
    """Embed sentences through the given backend, preserving input order.

    File backends look every sentence up by content key and fail on the
    first absence. HTTP backends chunk by batch_size, post chunks with at
    most max_in_flight concurrently, and reassemble results in input
    order. All returned vectors must share one dimension.
    """
    if not sentences:
        raise ValueError("sentences must be non-empty")

    if backend.kind == BACKEND_FILE:
        store = load_embedding_store(backend.locator)
        out = []
        for text in sentences:
            key = sentence_key(text)
            if key not in store:
                raise MissingEmbedding(key)
            out.append(store[key])
        dims = {v.dim for v in out}
        if len(dims) > 1:
            raise DimInconsistency(f"store returned mixed dims {sorted(dims)}")
        return out

    url = backend.locator.rstrip("/") + "/embed"
    chunks = [
        sentences[i : i + backend.batch_size]
        for i in range(0, len(sentences), backend.batch_size)
    ]
    with httpx.Client(transport=transport, timeout=30.0) as client:
        if len(chunks) == 1:
            results = [_post_embed(client, url, backend.model_id, chunks[0])]
        else:
            with ThreadPoolExecutor(max_workers=backend.max_in_flight) as pool:
                results = list(
                    pool.map(
                        lambda c: _post_embed(client, url, backend.model_id, c),
                        chunks,
                    )
                )

    dims = {dim for dim, _ in results}
    if len(dims) > 1:
        raise DimInconsistency(f"backend returned mixed dims {sorted(dims)}")
    out = []
    for (dim, vectors), chunk in zip(results, chunks):
        for text, values in zip(chunk, vectors):
            try:
                out.append(
                    EmbeddingVector(tuple(float(v) for v in values), dim, backend.model_id)
                )
            except (ValueError, TypeError) as exc:
                raise TransportError(
                    f"invalid vector for {text[:40]!r}: {exc}", status=200
                ) from exc
    return out


def save_embedding_store(path, vectors: dict[str, EmbeddingVector]) -> None:
    """Write a key -> vector mapping as a JSONL embedding store."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in vectors:
            v = vectors[key]
            fh.write(
                json.dumps(
                    {"key": key, "model": v.model_id, "dim": v.dim, "values": list(v.values)},
                    ensure_ascii=False,
                )
                + "\n"
            )
