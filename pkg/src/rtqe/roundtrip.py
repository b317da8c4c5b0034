"""Back-translation of MT output through a pluggable translation client.

Three client kinds cover the practical range: "identity" echoes its input
(the degenerate round trip where forward output is copied straight back),
"file" replays translations recorded in a TSV store, and "http" talks to
any service speaking the POST /translate protocol. A persistent cache
keyed by content hash makes repeat runs free.
"""
from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .dataset import QEDataset
from .errors import DataError, TransportError
from .util import sentence_key

CLIENT_IDENTITY = "identity"
CLIENT_FILE = "file"
CLIENT_HTTP = "http"

SOURCE_CACHE = "cache"
SOURCE_FRESH = "fresh"

WARN_EMPTY_BACK_TRANSLATION = "empty_back_translation"


class FileClientMiss(DataError):
    def __init__(self, key: str, detail: str = ""):
        message = f"no stored translation for text hash {key}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class MTClient:
    """Translation client locator.

    For the http kind, chunks of batch_size texts are posted with at most
    max_in_flight requests outstanding; failed chunks are retried up to
    max_retries times with exponential backoff (backoff_base seconds,
    doubling). The identity kind ignores locator and language codes.
    """

    kind: str
    locator: str = ""
    batch_size: int = 32
    max_retries: int = 3
    max_in_flight: int = 2
    backoff_base: float = 1.0

    def __post_init__(self):
        if self.kind not in (CLIENT_IDENTITY, CLIENT_FILE, CLIENT_HTTP):
            raise ValueError(f"unknown client kind: {self.kind!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must be >= 0")

    @property
    def client_id(self) -> str:
        if self.kind == CLIENT_IDENTITY:
            return CLIENT_IDENTITY
        return f"{self.kind}:{self.locator}"


@dataclass(frozen=True)
class RoundTripResult:
    record_id: int
    back_translation: str
    source: str
    client_id: str
    warnings: tuple[str, ...] = ()


class TranslationCache:
    """Mapping (client_id, from_lang, to_lang, text hash) -> translated text.

    With a path, existing entries are loaded up front and every new entry
    is appended to the file as a JSON line, so a crash loses nothing that
    was already translated. Without a path the cache is memory-only.
    """

    def __init__(self, path=None):
        self._path = path
        self._entries: dict[tuple[str, str, str, str], str] = {}
        self._lock = threading.Lock()
        if path is not None:
            self._load(path)

    def _load(self, path) -> None:
        try:
            fh = open(path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    obj = json.loads(raw)
                    entry = (obj["client"], obj["from"], obj["to"], obj["key"])
                    self._entries[entry] = obj["text"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise DataError(f"{path}: bad cache line {lineno}: {exc}") from exc

    @property
    def persisted(self) -> bool:
        return self._path is not None

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, client_id: str, from_lang: str, to_lang: str, key: str) -> str | None:
        return self._entries.get((client_id, from_lang, to_lang, key))

    def put(self, client_id: str, from_lang: str, to_lang: str, key: str, text: str) -> None:
        with self._lock:
            self._entries[(client_id, from_lang, to_lang, key)] = text
            if self._path is not None:
                line = json.dumps(
                    {"client": client_id, "from": from_lang, "to": to_lang,
                     "key": key, "text": text},
                    ensure_ascii=False,
                )
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")


def _load_file_store(path) -> dict[tuple[str, str, str], str]:
    store: dict[tuple[str, str, str], str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(
                    f"{path}: line {lineno}: expected 4 tab-separated fields, got {len(parts)}"
                )
            from_lang, to_lang, source_text, translated = parts
            store[(from_lang, to_lang, sentence_key(source_text))] = translated
    return store


def _post_translate(
    client: httpx.Client,
    url: str,
    spec: MTClient,
    chunk: list[str],
    from_lang: str,
    to_lang: str,
) -> list[str]:
    attempt = 0
    while True:
        try:
            response = client.post(
                url, json={"from": from_lang, "to": to_lang, "texts": chunk}
            )
            if response.status_code == 200:
                payload = response.json()
                texts = payload["texts"]
                if len(texts) != len(chunk):
                    raise TransportError(
                        f"translate response has {len(texts)} texts for {len(chunk)} inputs",
                        status=200,
                        body=response.text,
                    )
                return [str(t) for t in texts]
            error = TransportError(
                f"translate request failed with status {response.status_code}",
                status=response.status_code,
                body=response.text,
            )
        except httpx.TransportError as exc:
            error = TransportError(f"translate transport failure: {exc}")
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            error = TransportError(f"malformed translate response: {exc}", status=200)
        if attempt >= spec.max_retries:
            raise error
        time.sleep(spec.backoff_base * (2 ** attempt))
        attempt += 1


def translate_batch(
    client: MTClient,
    texts: list[str],
    from_lang: str,
    to_lang: str,
    transport: httpx.BaseTransport | None = None,
) -> list[str]:
    """Translate texts in order through the given client.

    Identity returns the inputs verbatim. The file client looks each text
    up by content hash in its TSV store. The http client chunks, retries,
    and reassembles in input order.
    """
    if not texts:
        raise ValueError("texts must be non-empty")

    if client.kind == CLIENT_IDENTITY:
        return list(texts)

    if client.kind == CLIENT_FILE:
        store = _load_file_store(client.locator)
        out = []
        for text in texts:
            key = sentence_key(text)
            entry = store.get((from_lang, to_lang, key))
            if entry is None:
                raise FileClientMiss(key)
            out.append(entry)
        return out

    url = client.locator.rstrip("/") + "/translate"
    chunks = [
        texts[i : i + client.batch_size]
        for i in range(0, len(texts), client.batch_size)
    ]
    with httpx.Client(transport=transport, timeout=60.0) as http:
        if len(chunks) == 1:
            results = [_post_translate(http, url, client, chunks[0], from_lang, to_lang)]
        else:
            with ThreadPoolExecutor(max_workers=client.max_in_flight) as pool:
                results = list(
                    pool.map(
                        lambda c: _post_translate(http, url, client, c, from_lang, to_lang),
                        chunks,
                    )
                )
    return [text for chunk in results for text in chunk]


def round_trip(
    client: MTClient,
    ds: QEDataset,
    cache: TranslationCache,
    transport: httpx.BaseTransport | None = None,
) -> list[RoundTripResult]:
    """Back-translate every record's translation to the dataset's source language.

    The cache is consulted before the client and fresh responses are
    written back, so a second run over the same dataset issues no client
    calls. Results are returned in record order. Errors from the client
    carry the range of record ids in the failed batch.
    """
    from_lang = ds.target_lang
    to_lang = ds.source_lang
    client_id = client.client_id

    keys = [sentence_key(r.translation) for r in ds.records]
    cached: dict[int, str] = {}
    miss_ids: list[int] = []
    for record, key in zip(ds.records, keys):
        hit = cache.get(client_id, from_lang, to_lang, key)
        if hit is None:
            miss_ids.append(record.id)
        else:
            cached[record.id] = hit

    fresh: dict[int, str] = {}
    if miss_ids:
        by_id = {r.id: r for r in ds.records}
        miss_texts = [by_id[i].translation for i in miss_ids]
        lo, hi = miss_ids[0], miss_ids[-1]
        try:
            translated = translate_batch(client, miss_texts, from_lang, to_lang, transport)
        except FileClientMiss as exc:
            raise FileClientMiss(exc.key, detail=f"records {lo}..{hi}") from exc
        except TransportError as exc:
            raise TransportError(
                f"records {lo}..{hi}: {exc.args[0]}", status=exc.status, body=exc.body
            ) from exc
        for record_id, text in zip(miss_ids, translated):
            fresh[record_id] = text
            cache.put(client_id, from_lang, to_lang, sentence_key(by_id[record_id].translation), text)

    results = []
    for record in ds.records:
        if record.id in cached:
            text, source = cached[record.id], SOURCE_CACHE
        else:
            text, source = fresh[record.id], SOURCE_FRESH
        warnings = () if text else (WARN_EMPTY_BACK_TRANSLATION,)
        results.append(RoundTripResult(record.id, text, source, client_id, warnings))
    return results
