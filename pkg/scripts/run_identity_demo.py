#!/usr/bin/env python3
"""Run the whole pipeline on synthetic data with no external services.

The MT client is the identity echo, and embeddings come from a local
JSONL store filled with vectors derived from sentence content hashes, so
the demo is deterministic and fully offline. It runs the pipeline twice:
the second pass shows every stage being reused from the first.

Usage: python scripts/run_identity_demo.py [--out demo_run] [--records 120]
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import yaml

from rtqe.cli import main as rtqe_main
from rtqe.embeddings import EmbeddingVector, save_embedding_store
from rtqe.util import sentence_key

sys.path.insert(0, str(Path(__file__).resolve().parent))
from make_synthetic_dataset import generate_dataset  # noqa: E402

from rtqe.dataset import serialize_qe_tsv  # noqa: E402

DEMO_MODEL = "demo"
DEMO_DIM = 16


def content_vector(text: str) -> EmbeddingVector:
    """Deterministic stand-in embedding: digest bytes scaled to [-0.5, 0.5]."""
    digest = hashlib.sha256((DEMO_MODEL + ":" + text).encode("utf-8")).digest()
    values = tuple(b / 255.0 - 0.5 for b in digest[:DEMO_DIM])
    return EmbeddingVector(values=values, dim=DEMO_DIM, model_id=DEMO_MODEL)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("demo_run"))
    parser.add_argument("--records", type=int, default=120)
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    dataset = generate_dataset(args.records, annotators=3, seed=args.seed)
    dataset_path = args.out / "dataset.tsv"
    dataset_path.write_text(serialize_qe_tsv(dataset), encoding="utf-8")

    # The identity client echoes the translation column, so the score
    # stage compares original vs translation; both columns need vectors.
    store = {}
    for record in dataset.records:
        for text in (record.original, record.translation):
            store[sentence_key(text)] = content_vector(text)
    store_path = args.out / "embeddings.jsonl"
    save_embedding_store(store_path, store)

    config = {
        "dataset": {"path": "dataset.tsv", "source_lang": "en", "target_lang": "de"},
        "mt_client": {"kind": "identity"},
        "embeddings": [
            {"kind": "file", "model_id": DEMO_MODEL, "locator": "embeddings.jsonl"}
        ],
        "metrics": ["bleu", "chrf", "ter", "tf_cosine", f"embed_cosine:{DEMO_MODEL}"],
        "output_dir": "run",
    }
    config_path = args.out / "config.yaml"
    config_path.write_text(yaml.safe_dump(config, sort_keys=False), encoding="utf-8")

    print(f"== first run ({args.records} records)")
    code = rtqe_main(["run", "--config", str(config_path)])
    if code != 0:
        return code
    print("== second run (everything reused)")
    code = rtqe_main(["run", "--config", str(config_path)])
    if code != 0:
        return code

    report = (args.out / "run" / "report.txt").read_text(encoding="utf-8")
    print("== report")
    print(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
