"""Shared fixtures: CSV dumps, embedding files, and random generators."""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np
import pytest

from supportbench.metrics import EmbeddingTable

CSV_HEADER = (
    "tweet_id",
    "author_id",
    "inbound",
    "created_at",
    "text",
    "response_tweet_id",
    "in_response_to_tweet_id",
)

# One customer/support corpus used across harness and corpus tests:
# dialog 1: plain Q/A (Oct 10)
# dialog 3: Q/A, follow-up Q, redirect answer (Oct 25)
# dialog 7: exact duplicate of dialog 1's question (Nov 5)
# dialog 9: unrelated password question (Nov 6, the newest answer)
FIXTURE_ROWS = [
    (1, "cust1", "True", "Tue Oct 10 10:00:00 +0000 2017",
     "My phone won't turn on, help!", "2", ""),
    (2, "AcmeHelp", "False", "Tue Oct 10 10:05:00 +0000 2017",
     "Try holding the power button for ten seconds.", "", "1"),
    (3, "cust2", "True", "Wed Oct 25 09:00:00 +0000 2017",
     "The app keeps crashing on launch", "4", ""),
    (4, "AcmeHelp", "False", "Wed Oct 25 09:04:00 +0000 2017",
     "Please reinstall the app and retry.", "5", "3"),
    (5, "cust2", "True", "Wed Oct 25 09:30:00 +0000 2017",
     "Still crashing after reinstall", "6", "4"),
    (6, "AcmeHelp", "False", "Wed Oct 25 09:41:00 +0000 2017",
     "Could you DM us your account id?", "", "5"),
    (7, "cust3", "True", "Sun Nov 05 12:00:00 +0000 2017",
     "My phone won't turn on, help!", "8", ""),
    (8, "AcmeHelp", "False", "Sun Nov 05 12:09:00 +0000 2017",
     "Try holding the power button for ten seconds.", "", "7"),
    (9, "cust4", "True", "Mon Nov 06 08:00:00 +0000 2017",
     "How do I reset my password?", "10", ""),
    (10, "AcmeHelp", "False", "Mon Nov 06 08:02:00 +0000 2017",
     "Use the forgot password link on the sign in page.", "", "9"),
]

FIXTURE_BRAND = "AcmeHelp"


def write_csv(path: Path, rows, header=CSV_HEADER) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


@pytest.fixture
def fixture_csv(tmp_path) -> Path:
    return write_csv(tmp_path / "dump.csv", FIXTURE_ROWS)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


# --- embedding helpers --------------------------------------------------------

# The two-word table used by the worked examples: a=(1,0), b=(0,1).
AB_VECTORS = {"a": [1.0, 0.0], "b": [0.0, 1.0]}


def make_table(vectors: dict[str, list[float]]) -> EmbeddingTable:
    dim = len(next(iter(vectors.values())))
    return EmbeddingTable(dim, {w: np.array(v, dtype=np.float64) for w, v in vectors.items()})


@pytest.fixture
def ab_table() -> EmbeddingTable:
    return make_table(AB_VECTORS)


def write_text_embeddings(path: Path, vectors: dict[str, list[float]], header=False) -> Path:
    lines = []
    if header:
        dim = len(next(iter(vectors.values())))
        lines.append(f"{len(vectors)} {dim}")
    for word, values in vectors.items():
        lines.append(word + " " + " ".join(repr(float(v)) for v in values))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_binary_embeddings(path: Path, vectors: dict[str, list[float]]) -> Path:
    dim = len(next(iter(vectors.values())))
    with open(path, "wb") as fh:
        fh.write(f"{len(vectors)} {dim}\n".encode("ascii"))
        for word, values in vectors.items():
            fh.write(word.encode("utf-8") + b" ")
            fh.write(struct.pack(f"<{dim}f", *[float(v) for v in values]))
            fh.write(b"\n")
    return path


def random_vectors(rng: np.random.Generator, words, dim: int) -> dict[str, list[float]]:
    return {w: [float(x) for x in rng.normal(size=dim)] for w in words}


def coverage_vectors_for(texts, dim=8, seed=7) -> dict[str, list[float]]:
    """A table covering every non-placeholder token of the given texts."""
    from supportbench.normalize import normalize_text

    words: set[str] = set()
    for text in texts:
        words.update(normalize_text(text))
    words = {w for w in words if not (w.startswith("<") and w.endswith(">"))}
    gen = np.random.default_rng(seed)
    return {w: [float(x) for x in gen.normal(size=dim)] for w in sorted(words)}
