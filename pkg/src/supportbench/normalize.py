"""Tweet-aware tokenization, token rewriting, and vocabulary handling.

Plain word tokenizers mangle tweets, so the tokenizer here keeps URLs,
@-mentions, #-hashtags, and common emoticons intact as single tokens while
splitting everything else on whitespace and punctuation. Contraction
suffixes ('ll, 'd, n't, ...) come out as their own tokens so that a
data-driven rewrite table can map them to literary forms. URLs, mentions,
and hashtags are then collapsed to the placeholder tokens <url>, <user>,
and <hashtag>.
"""

from __future__ import annotations

import re
from collections import Counter
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, DataError

# Special tokens. Always members of any vocabulary and never counted
# against its size budget.
UNK = "<unk>"
URL_TOKEN = "<url>"
USER_TOKEN = "<user>"
HASHTAG_TOKEN = "<hashtag>"
PAD = "<pad>"
BOS = "<s>"
EOS = "</s>"
SPECIALS: tuple[str, ...] = (UNK, URL_TOKEN, USER_TOKEN, HASHTAG_TOKEN, PAD, BOS, EOS)

_URL = r"(?:https?://|www\.)\S*[^\s.,!?;:)\]\"']"
_MENTION = r"[@＠][A-Za-z0-9_]+"
_HASHTAG = r"#\w+"
# Western emoticons, both orientations, plus hearts.
_EMOTICON = (
    r"<3+"
    r"|[<>]?[:;=8xX][\-o*']?[)\](\[dDpP/\\}{@|3oO*]+"
    r"|[)\](\[dD/\\}{@|]+[\-o*']?[:;=8xX][<>]?"
)

_TOKEN_RE = re.compile(
    r"</?[A-Za-z][A-Za-z0-9_]*>"  # placeholder tags survive re-tokenization
    rf"|{_URL}"
    rf"|{_MENTION}"
    rf"|{_HASHTAG}"
    rf"|{_EMOTICON}"
    r"|\w+(?=n't\b)"  # contraction stems: don't -> do + n't
    r"|n't\b"
    r"|'[A-Za-z]+"  # 're, 've, 'bout, possessive 's
    r"|\d+(?:[.,:]\d+)+"  # decimals, times, grouped numbers
    r"|\w+"
    r"|[^\w\s]",  # any leftover symbol, one token each
    re.UNICODE,
)

# Recognizers for whole tokens, used by the placeholder substitution and by
# downstream checks. Anchored via fullmatch.
URL_RE = re.compile(r"(?:https?://|www\.)\S+")
MENTION_RE = re.compile(r"[@＠][A-Za-z0-9_]+")
HASHTAG_RE = re.compile(r"#\w+")


def tokenize(raw: str) -> list[str]:
    """Split raw tweet text into lowercase tokens.

    URLs, @-mentions, #-hashtags, emoticons, and <...> placeholder tags are
    kept whole; words and punctuation are separated. Empty input yields an
    empty list.
    """
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(raw)]


def load_rewrites(path: str | Path | None = None) -> dict[str, str]:
    """Load a two-column TSV rewrite table (surface -> replacement).

    Lines starting with ``#`` and blank lines are skipped. Without a path,
    the table bundled with the package is used.
    """
    if path is None:
        text = (
            resources.files("supportbench").joinpath("data/rewrites.tsv").read_text("utf-8")
        )
    else:
        text = Path(path).read_text("utf-8")
    table: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise DataError(f"rewrite table line {lineno}: expected 'surface<TAB>replacement'")
        table[parts[0]] = parts[1]
    return table


_DEFAULT_REWRITES: dict[str, str] | None = None


def default_rewrites() -> dict[str, str]:
    """The packaged contraction and slang table, loaded once."""
    global _DEFAULT_REWRITES
    if _DEFAULT_REWRITES is None:
        _DEFAULT_REWRITES = load_rewrites()
    return _DEFAULT_REWRITES


def normalize_tokens(
    tokens: Sequence[str], rewrites: dict[str, str] | None = None
) -> list[str]:
    """Rewrite shorthand tokens and collapse URLs, mentions, and hashtags.

    Contractions and slang are mapped through the rewrite table; URL tokens
    become <url>, @-mentions <user>, and #-hashtags <hashtag>. The function
    is idempotent: placeholders and already-rewritten words pass through
    unchanged.
    """
    if rewrites is None:
        rewrites = default_rewrites()
    out: list[str] = []
    for tok in tokens:
        if tok in rewrites:
            out.append(rewrites[tok])
        elif URL_RE.fullmatch(tok):
            out.append(URL_TOKEN)
        elif MENTION_RE.fullmatch(tok):
            out.append(USER_TOKEN)
        elif HASHTAG_RE.fullmatch(tok):
            out.append(HASHTAG_TOKEN)
        else:
            out.append(tok)
    return out


def normalize_text(raw: str, rewrites: dict[str, str] | None = None) -> list[str]:
    """tokenize followed by normalize_tokens, the common full path."""
    return normalize_tokens(tokenize(raw), rewrites)


class Vocabulary:
    """Top-N word table with special symbols outside the budget.

    ``words`` are frequency-descending; membership covers words and
    specials. Instances are immutable after construction and safe to share
    across threads.
    """

    def __init__(self, words: Iterable[str], size_limit: int):
        self.words: tuple[str, ...] = tuple(words)
        self.size_limit = size_limit
        self.specials: tuple[str, ...] = SPECIALS
        if len(self.words) > size_limit:
            raise ConfigError(
                f"vocabulary holds {len(self.words)} words, over the limit {size_limit}"
            )
        self._members = frozenset(self.words) | frozenset(self.specials)

    def __contains__(self, token: str) -> bool:
        return token in self._members

    def __len__(self) -> int:
        return len(self.words)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.words == other.words
            and self.size_limit == other.size_limit
        )

    def save(self, path: str | Path) -> None:
        """Write one token per line: the specials block, then the words."""
        lines = list(self.specials) + list(self.words)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = tuple(lines[: len(SPECIALS)])
        if header != SPECIALS:
            raise DataError(
                f"vocabulary file {path}: expected specials header {list(SPECIALS)}"
            )
        words = [line for line in lines[len(SPECIALS) :] if line]
        return cls(words, size_limit=max(len(words), 1))


def build_vocabulary(corpus: Iterable[Sequence[str]], n: int) -> Vocabulary:
    """Collect the n most frequent tokens across the corpus.

    Ordering is frequency-descending with ties broken by first occurrence
    in the corpus, which makes the result deterministic for a fixed corpus
    ordering. Special tokens are skipped while counting since they are
    members regardless.
    """
    if n < 1:
        raise ConfigError("vocabulary size must be at least 1")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    position = 0
    for seq in corpus:
        for tok in seq:
            position += 1
            if tok in SPECIALS:
                continue
            counts[tok] += 1
            if tok not in first_seen:
                first_seen[tok] = position
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    return Vocabulary(ranked[:n], size_limit=n)


def apply_vocabulary(tokens: Sequence[str], vocab: Vocabulary) -> list[str]:
    """Replace every out-of-vocabulary token with <unk>, length preserved."""
    return [tok if tok in vocab else UNK for tok in tokens]
