#!/usr/bin/env python3
"""Generate a synthetic sentence-level QE dataset in the 6-column TSV dialect.

Each row gets a hidden quality level. The "translation" column is the
original sentence with a number of word-level edits proportional to how
bad the quality is, and every simulated annotator scores the row near
100 * quality with personal bias and noise. Z-scores are computed per
annotator over the whole file, the same way DA campaigns normalize them.

High-quality rows come out with translation == original, which is what
the identity MT client needs to produce perfect round trips, so a file
from this script exercises the full score range of a demo run.
"""
from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from rtqe.analysis import z_normalize
from rtqe.dataset import QEDataset, QERecord, serialize_qe_tsv

WORD_POOL = """
    the a this that some every house river garden bridge market lantern
    signal winter copper violin engine harbor meadow letter mirror often
    quietly nearly almost never again carries follows watches repairs
    paints opens closes borrows returns described finished old new bright
    narrow heavy gentle sudden distant hollow pale second third northern
    wooden iron glass stone door window road path tower clock bell boat
""".split()

EDIT_OPS = ("replace", "drop", "duplicate", "swap")


def perturb(words: list[str], edits: int, rng: random.Random) -> list[str]:
    """Apply word-level edits; the result is never emptied below one word."""
    out = list(words)
    for _ in range(edits):
        op = rng.choice(EDIT_OPS)
        if op == "drop" and len(out) > 1:
            out.pop(rng.randrange(len(out)))
        elif op == "duplicate":
            i = rng.randrange(len(out))
            out.insert(i, out[i])
        elif op == "swap" and len(out) > 1:
            i = rng.randrange(len(out) - 1)
            out[i], out[i + 1] = out[i + 1], out[i]
        else:
            out[rng.randrange(len(out))] = rng.choice(WORD_POOL)
    return out


def generate_dataset(records: int, annotators: int, seed: int) -> QEDataset:
    if records < 2:
        raise ValueError("need at least 2 records to z-normalize annotator scores")
    rng = random.Random(seed)
    biases = [rng.gauss(0.0, 4.0) for _ in range(annotators)]

    originals: list[str] = []
    translations: list[str] = []
    raw_columns: list[list[float]] = [[] for _ in range(annotators)]
    for _ in range(records):
        quality = rng.uniform(0.25, 1.0)
        words = [rng.choice(WORD_POOL) for _ in range(rng.randint(4, 12))]
        edits = round((1.0 - quality) * len(words) * 0.8)
        originals.append(" ".join(words))
        translations.append(" ".join(perturb(words, edits, rng)))
        for j in range(annotators):
            score = 100.0 * quality + biases[j] + rng.gauss(0.0, 7.0)
            raw_columns[j].append(float(round(min(100.0, max(0.0, score)))))

    z_columns = [z_normalize(column).values for column in raw_columns]
    rows = []
    for i in range(records):
        raw = tuple(raw_columns[j][i] for j in range(annotators))
        z = tuple(z_columns[j][i] for j in range(annotators))
        rows.append(
            QERecord(
                id=i,
                original=originals[i],
                translation=translations[i],
                raw_scores=raw,
                mean_score=sum(raw) / len(raw),
                z_scores=z,
                z_mean=sum(z) / len(z),
            )
        )
    return QEDataset("en", "de", tuple(rows))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--records", type=int, default=200)
    parser.add_argument("--annotators", type=int, default=3)
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--out", type=Path, default=Path("synthetic_qe.tsv"))
    args = parser.parse_args(argv)

    dataset = generate_dataset(args.records, args.annotators, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(serialize_qe_tsv(dataset), encoding="utf-8")

    echoes = sum(1 for r in dataset.records if r.original == r.translation)
    print(f"wrote {len(dataset)} records to {args.out} ({echoes} verbatim copies)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
