"""Hashing helpers shared by caches, embedding stores, and run manifests."""
from __future__ import annotations

import hashlib
import json
import unicodedata


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def sentence_key(text: str) -> str:
    """SHA-256 hex digest of the NFC-normalized sentence text."""
    return hashlib.sha256(nfc(text).encode("utf-8")).hexdigest()


def canonical_hash(obj) -> str:
    """Short stable digest of a JSON-serializable object.

    Keys are sorted so logically equal objects hash equal regardless of
    construction order.
    """
    blob = json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]
