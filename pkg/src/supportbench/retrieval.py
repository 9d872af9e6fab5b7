"""Inverted-index BM25 responder over dialog tuples.

Each training tuple is indexed as one document whose text is the
normalized concatenation of its context and question. Two fields are
built from the same token stream — unigrams and word 3-gram shingles —
and a query scores against both, with the two field scores summed at
equal weight. The answer stored with the best-scoring document is the
responder's reply.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import DialogTuple
from .errors import ConfigError, DataError
from .normalize import SPECIALS, normalize_text

UNIGRAM = "unigram"
TRIGRAM = "trigram"
FIELDS = (UNIGRAM, TRIGRAM)

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

INDEX_FORMAT = "supportbench-bm25-index"
INDEX_VERSION = 1

# Classic English stop set used when the "english" analysis chain is on.
STOPWORDS = frozenset(
    """a an and are as at be but by for if in into is it no not of on or
    such that the their then there these they this to was will with""".split()
)


@dataclass(frozen=True)
class IndexedDocument:
    doc_id: int
    question_tokens: tuple[str, ...]
    answer: str
    unigram_tf: Counter
    trigram_tf: Counter
    length_uni: int
    length_tri: int

    def length(self, fld: str) -> int:
        return self.length_uni if fld == UNIGRAM else self.length_tri

    def tf(self, fld: str) -> Counter:
        return self.unigram_tf if fld == UNIGRAM else self.trigram_tf


@dataclass(frozen=True)
class RankedAnswer:
    answer: str
    doc_id: int
    score: float


def s_stem(word: str) -> str:
    """Light plural stemmer: the three-suffix S-removal rules.

    Each suffix class is terminal — a word matching one of the exception
    endings is returned unchanged rather than handed to the next rule.
    """
    if len(word) > 4 and word.endswith("ies"):
        if word.endswith(("eies", "aies")):
            return word
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("es"):
        if word.endswith(("aes", "ees", "oes")):
            return word
        return word[:-1]
    if len(word) > 2 and word.endswith("s"):
        if word.endswith(("us", "ss")):
            return word
        return word[:-1]
    return word


def analyze(tokens: Sequence[str], analysis: str) -> list[str]:
    """Apply the index's analysis chain to normalized tokens.

    "standard" keeps tokens as they are; "english" removes stopwords and
    applies the light plural stemmer to purely alphabetic tokens.
    Placeholder tokens always pass through untouched.
    """
    if analysis == "standard":
        return list(tokens)
    if analysis != "english":
        raise ConfigError(f"unknown analysis chain {analysis!r}")
    out: list[str] = []
    for tok in tokens:
        if tok in SPECIALS:
            out.append(tok)
            continue
        if tok in STOPWORDS:
            continue
        out.append(s_stem(tok) if tok.isalpha() else tok)
    return out


def make_shingles(tokens: Sequence[str], n: int = 3) -> list[str]:
    """Contiguous word n-grams joined with underscores; empty when short."""
    if len(tokens) < n:
        return []
    return ["_".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


class Bm25Index:
    """Immutable after construction; safe for concurrent readers."""

    def __init__(self, k1: float, b: float, analysis: str):
        self.k1 = k1
        self.b = b
        self.analysis = analysis
        self.documents: dict[int, IndexedDocument] = {}
        self.postings: dict[str, dict[str, list[tuple[int, int]]]] = {
            UNIGRAM: {},
            TRIGRAM: {},
        }
        self.avg_dl: dict[str, float] = {UNIGRAM: 0.0, TRIGRAM: 0.0}

    @property
    def doc_count(self) -> int:
        return len(self.documents)

    def df(self, fld: str, term: str) -> int:
        plist = self.postings[fld].get(term)
        return len(plist) if plist else 0

    def idf(self, fld: str, term: str) -> float:
        df = self.df(fld, term)
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def _add_document(self, doc: IndexedDocument) -> None:
        self.documents[doc.doc_id] = doc
        for fld in FIELDS:
            field_postings = self.postings[fld]
            for term, tf in doc.tf(fld).items():
                field_postings.setdefault(term, []).append((doc.doc_id, tf))

    def _finalize(self) -> None:
        n = self.doc_count
        for fld in FIELDS:
            total = sum(d.length(fld) for d in self.documents.values())
            self.avg_dl[fld] = total / n if n else 0.0

    def analyze_query(self, context: str, question: str) -> list[str]:
        """Normalize and analyze a context-augmented question."""
        glued = (context + " " + question) if context else question
        return analyze(normalize_text(glued), self.analysis)


def _index_tokens(tokens: Sequence[str]) -> tuple[Counter, Counter]:
    return Counter(tokens), Counter(make_shingles(tokens))


def build_index(
    train: Sequence[DialogTuple],
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    analysis: str = "standard",
) -> Bm25Index:
    """Index every training tuple once, both fields, statistics included."""
    if not train:
        raise DataError("cannot build a retrieval index from an empty training set")
    analyze([], analysis)  # validates the analysis name up front
    index = Bm25Index(k1=k1, b=b, analysis=analysis)
    for doc_id, t in enumerate(train):
        tokens = index.analyze_query(t.context, t.question)
        uni_tf, tri_tf = _index_tokens(tokens)
        index._add_document(
            IndexedDocument(
                doc_id=doc_id,
                question_tokens=tuple(tokens),
                answer=t.answer,
                unigram_tf=uni_tf,
                trigram_tf=tri_tf,
                length_uni=sum(uni_tf.values()),
                length_tri=sum(tri_tf.values()),
            )
        )
    index._finalize()
    return index


def _term_score(index: Bm25Index, fld: str, term: str, tf: int, dl: int) -> float:
    avg = index.avg_dl[fld]
    if tf == 0 or avg == 0.0:
        return 0.0
    norm = index.k1 * (1.0 - index.b + index.b * dl / avg)
    return index.idf(fld, term) * tf * (index.k1 + 1.0) / (tf + norm)


def bm25_score(index: Bm25Index, query_tokens: Sequence[str], doc_id: int) -> float:
    """Score one document against a query, summing both fields.

    ``query_tokens`` are normalized unigram tokens; the index's analysis
    chain is applied here, and the 3-gram query terms are derived from the
    analyzed unigrams. Query terms are counted with multiplicity: a term
    occurring twice in the query contributes twice.
    """
    if doc_id not in index.documents:
        raise DataError(f"unknown doc_id {doc_id}")
    doc = index.documents[doc_id]
    analyzed = analyze(query_tokens, index.analysis)
    score = 0.0
    for fld, terms in ((UNIGRAM, analyzed), (TRIGRAM, make_shingles(analyzed))):
        tf_map = doc.tf(fld)
        dl = doc.length(fld)
        for term in terms:
            score += _term_score(index, fld, term, tf_map.get(term, 0), dl)
    return score


def respond(
    index: Bm25Index, context: str, question: str, k: int = 1
) -> list[RankedAnswer]:
    """Top-k stored answers for a context-augmented question.

    Ranking is score-descending with ties broken by ascending doc_id.
    Returns an empty list when no indexed document shares a term with the
    query; the caller decides the fallback.
    """
    if k < 1:
        raise ConfigError("k must be at least 1")
    analyzed = index.analyze_query(context, question)
    scores: dict[int, float] = {}
    for fld, terms in ((UNIGRAM, analyzed), (TRIGRAM, make_shingles(analyzed))):
        field_postings = index.postings[fld]
        for term in terms:
            plist = field_postings.get(term)
            if not plist:
                continue
            for doc_id, tf in plist:
                doc = index.documents[doc_id]
                contribution = _term_score(index, fld, term, tf, doc.length(fld))
                scores[doc_id] = scores.get(doc_id, 0.0) + contribution
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [
        RankedAnswer(answer=index.documents[doc_id].answer, doc_id=doc_id, score=score)
        for doc_id, score in ranked
    ]


# --- persistence ------------------------------------------------------------


def save_index(index: Bm25Index, path: str | Path) -> None:
    """Write the index as versioned JSON; save→load round-trips losslessly."""
    payload = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "params": {"k1": index.k1, "b": index.b, "analysis": index.analysis},
        "doc_count": index.doc_count,
        "avg_dl": {fld: index.avg_dl[fld] for fld in FIELDS},
        "documents": [
            {
                "doc_id": doc.doc_id,
                "question_tokens": list(doc.question_tokens),
                "answer": doc.answer,
            }
            for doc in index.documents.values()
        ],
        "postings": {
            fld: {term: [[d, tf] for d, tf in plist] for term, plist in field.items()}
            for fld, field in index.postings.items()
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_index(path: str | Path) -> Bm25Index:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataError(f"{path}: not a valid index file ({err.msg})") from None
    if payload.get("format") != INDEX_FORMAT:
        raise DataError(f"{path}: not a {INDEX_FORMAT} file")
    if payload.get("version") != INDEX_VERSION:
        raise DataError(
            f"{path}: unsupported index version {payload.get('version')!r}"
        )
    params = payload["params"]
    index = Bm25Index(
        k1=float(params["k1"]), b=float(params["b"]), analysis=str(params["analysis"])
    )

    tf_maps: dict[str, dict[int, Counter]] = {UNIGRAM: {}, TRIGRAM: {}}
    for fld in FIELDS:
        for term, plist in payload["postings"][fld].items():
            index.postings[fld][term] = [(int(d), int(tf)) for d, tf in plist]
            for d, tf in plist:
                tf_maps[fld].setdefault(int(d), Counter())[term] = int(tf)

    for entry in payload["documents"]:
        doc_id = int(entry["doc_id"])
        uni_tf = tf_maps[UNIGRAM].get(doc_id, Counter())
        tri_tf = tf_maps[TRIGRAM].get(doc_id, Counter())
        index.documents[doc_id] = IndexedDocument(
            doc_id=doc_id,
            question_tokens=tuple(entry["question_tokens"]),
            answer=str(entry["answer"]),
            unigram_tf=uni_tf,
            trigram_tf=tri_tf,
            length_uni=sum(uni_tf.values()),
            length_tri=sum(tri_tf.values()),
        )
    index._finalize()

    if index.doc_count != int(payload["doc_count"]):
        raise DataError(f"{path}: document count does not match the stored header")
    for fld in FIELDS:
        stored = float(payload["avg_dl"][fld])
        if abs(stored - index.avg_dl[fld]) > 1e-9:
            raise DataError(f"{path}: stored {fld} length statistics are inconsistent")
    return index
