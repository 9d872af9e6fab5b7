"""The five response-quality measures and the embedding table behind them.

Word-overlap measures: BLEU@2 (unigram+bigram modified precision with
brevity penalty) and ROUGE-L (longest-common-subsequence F1). Semantic
measures over pretrained word vectors: Embedding Average, Greedy
Matching, and Vector Extrema, all compared by cosine.

Out-of-table tokens are skipped by the semantic measures. When a side has
no in-table tokens at all, the pair scores 0 and is flagged "uncovered";
corpus means for the semantic measures are taken over covered pairs only,
with the uncovered count reported separately. Placeholder tokens such as
<url> are always treated as out-of-table. All scores live in [0,1] (or
[-1,1] for cosines) internally; scaling by 100 happens only at report
rendering time.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError, EmbeddingFormatError
from .normalize import SPECIALS

_SPECIALS_SET = frozenset(SPECIALS)


class EmbeddingTable:
    """Immutable word → vector map with a single fixed dimension."""

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        self.dimension = dimension
        self._vectors = vectors

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def __getitem__(self, word: str) -> np.ndarray:
        return self._vectors[word]

    def get(self, word: str) -> np.ndarray | None:
        return self._vectors.get(word)


def load_embeddings(
    source: str | Path | io.IOBase, fmt: str = "text"
) -> EmbeddingTable:
    """Load a word-vector file in the text or packed binary layout.

    Text: an optional ``count dim`` header line, then ``word v1 ... vd``
    per line. Binary: ``count dim\\n`` header, then per entry the word,
    a space, and dim little-endian float32 values. Duplicate words keep
    their first occurrence. Vectors are stored as float64.
    """
    if fmt == "text":
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                return _load_text(fh)
        stream = source
        if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)):
            stream = io.TextIOWrapper(stream, encoding="utf-8")
        return _load_text(stream)
    if fmt == "binary":
        if isinstance(source, (str, Path)):
            with open(source, "rb") as fh:
                return _load_binary(fh)
        return _load_binary(source)
    raise ConfigError(f"unknown embedding format {fmt!r}: expected 'text' or 'binary'")


def _load_text(fh) -> EmbeddingTable:
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    start_line = 1
    first = fh.readline()
    if not first:
        raise EmbeddingFormatError(1, "embedding file is empty")
    parts = first.split()
    if len(parts) == 2 and all(p.isdigit() for p in parts):
        # "count dim" header; the declared dimension binds the whole file.
        dimension = int(parts[1])
        start_line = 2
    else:
        _add_text_vector(vectors, parts, 1, dimension)
        if parts:
            dimension = len(parts) - 1
        start_line = 2
    for lineno, line in enumerate(fh, start=start_line):
        parts = line.split()
        if not parts:
            continue
        _add_text_vector(vectors, parts, lineno, dimension)
        if dimension is None:
            dimension = len(parts) - 1
    if not vectors:
        raise EmbeddingFormatError(start_line, "no vectors found")
    assert dimension is not None
    return EmbeddingTable(dimension, vectors)


def _add_text_vector(
    vectors: dict[str, np.ndarray],
    parts: list[str],
    lineno: int,
    dimension: int | None,
) -> None:
    if len(parts) < 2:
        raise EmbeddingFormatError(lineno, "expected 'word v1 ... vd'")
    word, values = parts[0], parts[1:]
    if dimension is not None and len(values) != dimension:
        raise EmbeddingFormatError(
            lineno, f"vector has {len(values)} values, expected {dimension}"
        )
    try:
        vec = np.array([float(v) for v in values], dtype=np.float64)
    except ValueError:
        raise EmbeddingFormatError(lineno, "non-numeric vector value") from None
    if word not in vectors:
        vectors[word] = vec


def _load_binary(fh) -> EmbeddingTable:
    header = b""
    while not header.endswith(b"\n"):
        ch = fh.read(1)
        if not ch:
            raise EmbeddingFormatError(1, "truncated binary header")
        header += ch
        if len(header) > 128:
            raise EmbeddingFormatError(1, "binary header too long")
    try:
        count_s, dim_s = header.split()
        count, dimension = int(count_s), int(dim_s)
    except ValueError:
        raise EmbeddingFormatError(1, "expected 'count dim' binary header") from None
    if count < 1 or dimension < 1:
        raise EmbeddingFormatError(1, "count and dim must be positive")
    vectors: dict[str, np.ndarray] = {}
    for entry in range(1, count + 1):
        word_bytes = b""
        while True:
            ch = fh.read(1)
            if not ch:
                raise EmbeddingFormatError(entry, "truncated binary entry")
            if ch == b" ":
                break
            if ch != b"\n":  # writers often pad entries with newlines
                word_bytes += ch
        raw = fh.read(4 * dimension)
        if len(raw) != 4 * dimension:
            raise EmbeddingFormatError(entry, "truncated binary vector")
        word = word_bytes.decode("utf-8", errors="replace")
        if word not in vectors:
            vectors[word] = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return EmbeddingTable(dimension, vectors)


# --- word-overlap measures --------------------------------------------------


def _ngram_counts(tokens: Sequence[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def _clipped_matches(
    candidate: Sequence[str], reference: Sequence[str], n: int
) -> tuple[int, int]:
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    matched = sum(min(c, ref.get(g, 0)) for g, c in cand.items())
    total = sum(cand.values())
    return matched, total


def bleu2(
    candidates: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    mode: str = "corpus",
) -> float:
    """BLEU with unigrams and bigrams only.

    Corpus mode pools the modified precisions p1 and p2 over all pairs,
    takes their geometric mean with equal weights, and applies the
    brevity penalty min(1, e^(1-r/c)). Sentence mode (a per-pair
    diagnostic) averages per-pair scores computed the same way except
    that p2 gets add-one smoothing.
    """
    if mode not in ("corpus", "sentence"):
        raise ConfigError(f"unknown bleu2 mode {mode!r}")
    if len(candidates) != len(references):
        raise DataError(
            f"candidate/reference count mismatch: {len(candidates)} vs {len(references)}"
        )
    if not candidates:
        raise DataError("bleu2 needs at least one candidate/reference pair")
    if mode == "sentence":
        scores = [
            _bleu2_single(c, r, smooth=True) for c, r in zip(candidates, references)
        ]
        return math.fsum(scores) / len(scores)
    m1 = t1 = m2 = t2 = 0
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        a, b = _clipped_matches(cand, ref, 1)
        m1, t1 = m1 + a, t1 + b
        a, b = _clipped_matches(cand, ref, 2)
        m2, t2 = m2 + a, t2 + b
        cand_len += len(cand)
        ref_len += len(ref)
    return _combine_bleu(m1, t1, m2, t2, cand_len, ref_len, smooth=False)


def _bleu2_single(candidate, reference, smooth: bool) -> float:
    m1, t1 = _clipped_matches(candidate, reference, 1)
    m2, t2 = _clipped_matches(candidate, reference, 2)
    return _combine_bleu(m1, t1, m2, t2, len(candidate), len(reference), smooth)


def _combine_bleu(
    m1: int, t1: int, m2: int, t2: int, cand_len: int, ref_len: int, smooth: bool
) -> float:
    if cand_len == 0 or t1 == 0 or m1 == 0:
        return 0.0
    p1 = m1 / t1
    if smooth:
        p2 = (m2 + 1) / (t2 + 1)
    else:
        if t2 == 0 or m2 == 0:
            return 0.0
        p2 = m2 / t2
    if p2 == 0.0:
        return 0.0
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.sqrt(p1 * p2)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Longest-common-subsequence F1 between candidate and reference."""
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 2.0 * precision * recall / (precision + recall)


# --- semantic measures ------------------------------------------------------


def _side_vectors(tokens: Sequence[str], table: EmbeddingTable) -> list[np.ndarray]:
    """In-table vectors for a side; placeholders always count as OOV."""
    return [
        table[tok] for tok in tokens if tok not in _SPECIALS_SET and tok in table
    ]


def is_covered(tokens: Sequence[str], table: EmbeddingTable) -> bool:
    """True when at least one non-placeholder token has a vector."""
    return any(tok not in _SPECIALS_SET and tok in table for tok in tokens)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


def embedding_average(
    candidate: Sequence[str], reference: Sequence[str], table: EmbeddingTable
) -> float:
    """Cosine between the mean in-table vectors of the two sides."""
    cand = _side_vectors(candidate, table)
    ref = _side_vectors(reference, table)
    if not cand or not ref:
        return 0.0
    return _cosine(np.mean(cand, axis=0), np.mean(ref, axis=0))


def greedy_directional(
    u1: Sequence[str], u2: Sequence[str], table: EmbeddingTable
) -> float:
    """Mean over u1 tokens of the best cosine against any u2 token.

    Token weights are uniform. Out-of-table tokens are skipped on both
    sides; an empty side scores 0 under the uncovered policy.
    """
    left = _side_vectors(u1, table)
    right = _side_vectors(u2, table)
    if not left or not right:
        return 0.0
    total = math.fsum(max(_cosine(v, w) for w in right) for v in left)
    return total / len(left)


def greedy_matching(
    u1: Sequence[str], u2: Sequence[str], table: EmbeddingTable
) -> float:
    """Average of the two directional greedy scores (symmetric)."""
    return 0.5 * (
        greedy_directional(u1, u2, table) + greedy_directional(u2, u1, table)
    )


def extrema_vector(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Per-coordinate signed extreme: the max unless |min| beats it."""
    if len(vectors) == 0:
        raise DataError("extrema_vector needs at least one vector")
    stacked = np.stack(vectors)
    maxs = stacked.max(axis=0)
    mins = stacked.min(axis=0)
    return np.where(maxs >= np.abs(mins), maxs, mins)


def vector_extrema(
    candidate: Sequence[str], reference: Sequence[str], table: EmbeddingTable
) -> float:
    """Cosine between the extrema vectors of the two sides."""
    cand = _side_vectors(candidate, table)
    ref = _side_vectors(reference, table)
    if not cand or not ref:
        return 0.0
    return _cosine(extrema_vector(cand), extrema_vector(ref))


# --- per-pair and corpus-level scoring ---------------------------------------


@dataclass(frozen=True)
class PairScores:
    candidate: tuple[str, ...]
    reference: tuple[str, ...]
    bleu2: float
    rouge_l: float
    embedding_average: float
    greedy_matching: float
    vector_extrema: float
    uncovered: bool


@dataclass(frozen=True)
class CorpusScores:
    bleu2: float
    rouge_l: float
    embedding_average: float
    greedy_matching: float
    vector_extrema: float
    pair_count: int
    covered_count: int
    uncovered_count: int


METRIC_NAMES = (
    "bleu2",
    "rouge_l",
    "embedding_average",
    "greedy_matching",
    "vector_extrema",
)


def score_pair(
    candidate: Sequence[str], reference: Sequence[str], table: EmbeddingTable
) -> PairScores:
    """All five measures for one pair; BLEU@2 in its smoothed sentence mode."""
    covered = is_covered(candidate, table) and is_covered(reference, table)
    return PairScores(
        candidate=tuple(candidate),
        reference=tuple(reference),
        bleu2=bleu2([candidate], [reference], mode="sentence"),
        rouge_l=rouge_l(candidate, reference),
        embedding_average=embedding_average(candidate, reference, table),
        greedy_matching=greedy_matching(candidate, reference, table),
        vector_extrema=vector_extrema(candidate, reference, table),
        uncovered=not covered,
    )


def evaluate_pairs(
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]], table: EmbeddingTable
) -> tuple[list[PairScores], CorpusScores]:
    """Score every (candidate, reference) pair and aggregate corpus means.

    The corpus BLEU@2 is pooled (corpus mode) over all pairs and ROUGE-L
    is the mean over all pairs; the three semantic means cover only pairs
    whose both sides have at least one in-table token.
    """
    if not pairs:
        raise DataError("cannot evaluate an empty pair sequence")
    per_pair = [score_pair(cand, ref, table) for cand, ref in pairs]
    covered = [p for p in per_pair if not p.uncovered]

    def covered_mean(metric: str) -> float:
        if not covered:
            return 0.0
        return math.fsum(getattr(p, metric) for p in covered) / len(covered)

    corpus = CorpusScores(
        bleu2=bleu2([c for c, _ in pairs], [r for _, r in pairs], mode="corpus"),
        rouge_l=math.fsum(p.rouge_l for p in per_pair) / len(per_pair),
        embedding_average=covered_mean("embedding_average"),
        greedy_matching=covered_mean("greedy_matching"),
        vector_extrema=covered_mean("vector_extrema"),
        pair_count=len(per_pair),
        covered_count=len(covered),
        uncovered_count=len(per_pair) - len(covered),
    )
    return per_pair, corpus
