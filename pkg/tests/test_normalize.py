"""Tokenizer, rewrite table, and vocabulary behavior."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from supportbench.errors import ConfigError, DataError
from supportbench.normalize import (
    HASHTAG_RE,
    MENTION_RE,
    SPECIALS,
    URL_RE,
    Vocabulary,
    apply_vocabulary,
    build_vocabulary,
    load_rewrites,
    normalize_text,
    normalize_tokens,
    tokenize,
)


class TestTokenize:
    def test_mention_and_punctuation(self):
        assert tokenize("Thanks @AppleSupport!") == ["thanks", "@applesupport", "!"]

    def test_url_kept_intact(self):
        assert tokenize("see https://t.co/x") == ["see", "https://t.co/x"]

    def test_empty_input(self):
        assert tokenize("") == []

    def test_contraction_split(self):
        assert tokenize("don't") == ["do", "n't"]
        assert tokenize("We're") == ["we", "'re"]
        assert tokenize("I'll go") == ["i", "'ll", "go"]

    def test_hashtag_and_emoticons(self):
        assert tokenize("fixed #help :) <3") == ["fixed", "#help", ":)", "<3"]

    def test_placeholder_tags_survive(self):
        assert tokenize("<url> and <user>") == ["<url>", "and", "<user>"]

    def test_trailing_punctuation_not_in_url(self):
        assert tokenize("go to https://t.co/x.") == ["go", "to", "https://t.co/x", "."]

    def test_decimal_numbers(self):
        assert tokenize("at 10.5 or 22:10") == ["at", "10.5", "or", "22:10"]

    def test_lowercasing(self):
        assert tokenize("HELLO World") == ["hello", "world"]

    @given(st.text(max_size=200))
    def test_tokens_never_contain_whitespace(self, text):
        for token in tokenize(text):
            assert token == token.lower()
            assert not any(ch.isspace() for ch in token)


class TestNormalizeTokens:
    def test_contraction_rewrite(self):
        assert normalize_tokens(["we", "'re", "here"]) == ["we", "are", "here"]

    def test_placeholder_substitution(self):
        assert normalize_tokens(["https://t.co/x", "@applesupport", "#help"]) == [
            "<url>",
            "<user>",
            "<hashtag>",
        ]

    def test_idempotent_on_placeholders(self):
        assert normalize_tokens(["<url>"]) == ["<url>"]

    def test_all_default_rewrites(self):
        pairs = {
            "'ll": "will",
            "'d": "would",
            "'re": "are",
            "'ve": "have",
            "n't": "not",
            "'bout": "about",
            "'til": "until",
        }
        for surface, replacement in pairs.items():
            assert normalize_tokens([surface]) == [replacement]

    def test_full_path(self):
        assert normalize_text("We won't visit www.shop.example today") == [
            "we",
            "wo",
            "not",
            "visit",
            "<url>",
            "today",
        ]

    @given(st.text(max_size=200))
    def test_idempotence(self, text):
        once = normalize_tokens(tokenize(text))
        assert normalize_tokens(once) == once

    @given(st.text(max_size=200))
    def test_no_raw_urls_or_mentions_remain(self, text):
        for token in normalize_tokens(tokenize(text)):
            assert not URL_RE.fullmatch(token)
            assert not MENTION_RE.fullmatch(token)
            assert not HASHTAG_RE.fullmatch(token)


class TestRewriteTable:
    def test_packaged_table(self):
        table = load_rewrites()
        assert table["'re"] == "are"
        assert len(table) == 7

    def test_custom_table(self, tmp_path):
        path = tmp_path / "rw.tsv"
        path.write_text("# comment\ngonna\tgoing to\n", encoding="utf-8")
        table = load_rewrites(path)
        assert table == {"gonna": "going to"}

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "rw.tsv"
        path.write_text("only-one-column\n", encoding="utf-8")
        with pytest.raises(DataError, match="line 1"):
            load_rewrites(path)


class TestVocabulary:
    def test_frequency_order(self):
        vocab = build_vocabulary([["a", "b", "a"]], 1)
        assert vocab.words == ("a",)

    def test_tie_break_by_first_occurrence(self):
        vocab = build_vocabulary([["a", "b"], ["b", "c"], ["b"]], 2)
        assert vocab.words == ("b", "a")

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            build_vocabulary([], 5)
        with pytest.raises(DataError):
            build_vocabulary([[]], 5)

    def test_invalid_size(self):
        with pytest.raises(ConfigError):
            build_vocabulary([["a"]], 0)

    def test_specials_not_counted_or_budgeted(self):
        vocab = build_vocabulary([["<url>", "<url>", "x"]], 1)
        assert vocab.words == ("x",)
        assert "<url>" in vocab

    def test_oov_replacement(self):
        vocab = build_vocabulary([["hello"]], 8)
        assert apply_vocabulary(["hello", "zzzxq"], vocab) == ["hello", "<unk>"]

    def test_specials_always_in_vocab(self):
        vocab = build_vocabulary([["hello"]], 8)
        assert apply_vocabulary(["<url>"], vocab) == ["<url>"]

    def test_counted_replacement(self):
        vocab = build_vocabulary([["a", "b", "c"]], 3)
        tokens = ["a", "q", "b", "w", "c", "e", "a", "b", "c", "a"]
        replaced = apply_vocabulary(tokens, vocab)
        assert len(replaced) == len(tokens)
        assert replaced.count("<unk>") == 3

    def test_deterministic(self):
        corpus = [["b", "a", "b"], ["c", "a"]]
        assert build_vocabulary(corpus, 3) == build_vocabulary(corpus, 3)

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocabulary([["b", "a", "b"]], 2)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert tuple(lines[: len(SPECIALS)]) == SPECIALS
        assert lines[len(SPECIALS) :] == ["b", "a"]
        loaded = Vocabulary.load(path)
        assert loaded.words == vocab.words

    def test_load_rejects_missing_header(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("just\nwords\n", encoding="utf-8")
        with pytest.raises(DataError, match="header"):
            Vocabulary.load(path)

    @given(
        st.lists(
            st.lists(st.sampled_from(["a", "b", "c", "d", "<url>"]), max_size=6),
            max_size=6,
        ),
        st.lists(st.sampled_from(["a", "b", "c", "d", "e", "<url>"]), max_size=10),
    )
    def test_apply_vocabulary_properties(self, corpus, tokens):
        flat = [tok for seq in corpus for tok in seq if tok not in SPECIALS]
        if not flat:
            return
        vocab = build_vocabulary(corpus, 2)
        out = apply_vocabulary(tokens, vocab)
        assert len(out) == len(tokens)
        allowed = set(vocab.words) | set(SPECIALS)
        assert set(out) <= allowed
