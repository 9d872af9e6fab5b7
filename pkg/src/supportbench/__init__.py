"""supportbench: a benchmark harness for customer-support response bots.

The pipeline: build dialog datasets from raw tweet dumps (corpus),
normalize tweet text (normalize), answer questions with a BM25 retrieval
responder (retrieval), score any responder's answers with five
word-overlap and semantic measures (metrics), and orchestrate everything
from the command line (harness, cli).
"""

from .corpus import (
    Dialog,
    DialogTuple,
    SplitConfig,
    Tweet,
    extract_dialog_tuples,
    filter_redirects,
    parse_tweet_stream,
    temporal_split,
    thread_conversations,
)
from .errors import (
    ConfigError,
    CoverageError,
    DataError,
    EmbeddingFormatError,
    EmptySplitError,
    RowParseError,
    SupportBenchError,
)
from .metrics import (
    EmbeddingTable,
    bleu2,
    embedding_average,
    extrema_vector,
    greedy_directional,
    greedy_matching,
    load_embeddings,
    rouge_l,
    score_pair,
    vector_extrema,
)
from .normalize import (
    SPECIALS,
    Vocabulary,
    apply_vocabulary,
    build_vocabulary,
    normalize_text,
    normalize_tokens,
    tokenize,
)
from .retrieval import Bm25Index, RankedAnswer, bm25_score, build_index, respond

__version__ = "0.1.0"

__all__ = [
    "Bm25Index",
    "ConfigError",
    "CoverageError",
    "DataError",
    "Dialog",
    "DialogTuple",
    "EmbeddingFormatError",
    "EmbeddingTable",
    "EmptySplitError",
    "RankedAnswer",
    "RowParseError",
    "SPECIALS",
    "SplitConfig",
    "SupportBenchError",
    "Tweet",
    "Vocabulary",
    "apply_vocabulary",
    "bleu2",
    "bm25_score",
    "build_index",
    "build_vocabulary",
    "embedding_average",
    "extract_dialog_tuples",
    "extrema_vector",
    "filter_redirects",
    "greedy_directional",
    "greedy_matching",
    "load_embeddings",
    "normalize_text",
    "normalize_tokens",
    "parse_tweet_stream",
    "respond",
    "rouge_l",
    "score_pair",
    "temporal_split",
    "thread_conversations",
    "tokenize",
    "vector_extrema",
    "__version__",
]
