"""Pipeline orchestration: prepare, respond-ir, evaluate, and report.

Each function backs one CLI subcommand but is importable on its own. All
artifacts are UTF-8 text with fixed key order and no timestamps, so a
rerun over identical inputs produces byte-identical files.

The exchange format between responders and the evaluator is a JSONL file
of ResponseRecords. Any external system — including the neural baselines
— can join the benchmark by writing that file; nothing else is shared.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import (
    DEFAULT_REDIRECT_PATTERNS,
    SplitConfig,
    extract_dialog_tuples,
    filter_redirects,
    format_timestamp,
    parse_tweet_stream,
    read_tuples_jsonl,
    temporal_split,
    thread_conversations,
    write_tuples_jsonl,
)
from .errors import ConfigError, CoverageError, DataError
from .metrics import (
    METRIC_NAMES,
    EmbeddingTable,
    evaluate_pairs,
    load_embeddings,
)
from .normalize import Vocabulary, build_vocabulary, normalize_text
from .retrieval import DEFAULT_B, DEFAULT_K1, build_index, respond

logger = logging.getLogger("supportbench.harness")

IR_SYSTEM_NAME = "ir-bm25"

REPORT_FORMAT = "supportbench-report"
REPORT_VERSION = 1

METRIC_LABELS = {
    "bleu2": "BLEU@2",
    "rouge_l": "ROUGE-L",
    "embedding_average": "Embedding Average",
    "greedy_matching": "Greedy Matching",
    "vector_extrema": "Vector Extrema",
}


@dataclass(frozen=True)
class ResponseRecord:
    dialog_id: int
    turn_index: int
    context: str
    question: str
    gold_answer: str
    response: str
    system: str


@dataclass(frozen=True)
class EvaluationReport:
    system: str
    fingerprint: str
    pair_count: int
    covered_count: int
    uncovered_count: int
    scores_x100: dict[str, float]
    per_pair_file: str


# --- response JSONL interchange ----------------------------------------------


def response_to_record(r: ResponseRecord) -> dict:
    return {
        "dialog_id": r.dialog_id,
        "turn_index": r.turn_index,
        "context": r.context,
        "question": r.question,
        "gold_answer": r.gold_answer,
        "response": r.response,
        "system": r.system,
    }


def response_from_record(record: dict, where: str = "") -> ResponseRecord:
    try:
        return ResponseRecord(
            dialog_id=int(record["dialog_id"]),
            turn_index=int(record["turn_index"]),
            context=str(record["context"]),
            question=str(record["question"]),
            gold_answer=str(record["gold_answer"]),
            response=str(record["response"]),
            system=str(record["system"]),
        )
    except KeyError as err:
        raise DataError(f"response record{where} is missing key {err}") from None


def write_responses_jsonl(path: str | Path, records: Iterable[ResponseRecord]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(response_to_record(r), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_responses_jsonl(path: str | Path) -> list[ResponseRecord]:
    records: list[ResponseRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path} line {lineno}: invalid JSON ({err.msg})") from None
            records.append(response_from_record(record, where=f" at {path} line {lineno}"))
    if not records:
        raise DataError(f"{path}: no response records found")
    return records


# --- prepare ------------------------------------------------------------------


def prepare(
    csv_path: str | Path,
    brand: str,
    cfg: SplitConfig,
    out_dir: str | Path,
    redirect_patterns: Sequence[str] = DEFAULT_REDIRECT_PATTERNS,
) -> dict:
    """Run parse → thread → extract → filter → split and write both splits.

    Writes train.jsonl, test.jsonl, and stats.json into ``out_dir`` and
    returns the stats mapping. Malformed CSV rows are skipped and counted.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    bad_rows: list[str] = []

    def on_row_error(err):
        bad_rows.append(str(err))
        logger.warning("skipping malformed %s", err)

    tweets = parse_tweet_stream(csv_path, on_error=on_row_error)
    dialogs = thread_conversations(tweets, brand)
    if not dialogs:
        raise DataError(f"no dialogs found for brand {brand!r}")
    tuples = [t for d in dialogs for t in extract_dialog_tuples(d)]
    kept, removed = filter_redirects(tuples, redirect_patterns)
    train, test = temporal_split(kept, cfg)

    write_tuples_jsonl(out / "train.jsonl", train)
    write_tuples_jsonl(out / "test.jsonl", test)

    turn_counts = [len(d.turns) for d in dialogs]
    stats = {
        "brand": brand,
        "dialogs": len(dialogs),
        "turns_per_dialog": {
            "min": min(turn_counts),
            "max": max(turn_counts),
            "mean": round(sum(turn_counts) / len(turn_counts), 4),
        },
        "tuples_extracted": len(tuples),
        "redirects_removed": removed,
        "tuples_kept": len(kept),
        "tuples_in_windows": len(train) + len(test),
        "train_tuples": len(train),
        "test_tuples": len(test),
        "train_window_days": cfg.train_window_days,
        "test_window_days": cfg.test_window_days,
        "latest_answer_time": format_timestamp(max(t.answer_time for t in kept)),
        "bad_rows": len(bad_rows),
    }
    with open(out / "stats.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(stats, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return stats


# --- respond-ir -----------------------------------------------------------------


def respond_ir(
    train_path: str | Path,
    test_path: str | Path,
    out_path: str | Path,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    analysis: str = "standard",
    fallback: str = "",
) -> dict:
    """Index the train split and answer every test tuple with BM25.

    Emits one ResponseRecord per test tuple, bijective with the test
    split; ``fallback`` is used whenever retrieval returns nothing.
    """
    train = read_tuples_jsonl(train_path)
    if not train:
        raise DataError(f"{train_path}: train split is empty")
    test = read_tuples_jsonl(test_path)
    if not test:
        raise DataError(f"{test_path}: test split is empty")

    index = build_index(train, k1=k1, b=b, analysis=analysis)
    records: list[ResponseRecord] = []
    fallbacks = 0
    for t in test:
        ranked = respond(index, t.context, t.question, k=1)
        if ranked:
            answer = ranked[0].answer
        else:
            answer = fallback
            fallbacks += 1
        records.append(
            ResponseRecord(
                dialog_id=t.dialog_id,
                turn_index=t.turn_index,
                context=t.context,
                question=t.question,
                gold_answer=t.answer,
                response=answer,
                system=IR_SYSTEM_NAME,
            )
        )
    write_responses_jsonl(out_path, records)
    return {"responses": len(records), "fallbacks": fallbacks}


# --- evaluate -------------------------------------------------------------------


def _check_coverage(
    records: Sequence[ResponseRecord], test_path: str | Path | None
) -> None:
    seen: set[tuple[int, int]] = set()
    duplicates: list[tuple[int, int]] = []
    for r in records:
        key = (r.dialog_id, r.turn_index)
        if key in seen:
            duplicates.append(key)
        seen.add(key)
    if duplicates:
        shown = ", ".join(str(k) for k in sorted(duplicates)[:5])
        raise CoverageError(
            f"duplicate (dialog_id, turn_index) keys in responses: {shown}"
        )
    if test_path is None:
        return
    test = read_tuples_jsonl(test_path)
    expected = {(t.dialog_id, t.turn_index): t.answer for t in test}
    missing = sorted(set(expected) - seen)
    extra = sorted(seen - set(expected))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing keys: {', '.join(str(k) for k in missing[:5])}")
        if extra:
            parts.append(f"unexpected keys: {', '.join(str(k) for k in extra[:5])}")
        raise CoverageError("responses do not cover the test split: " + "; ".join(parts))
    for r in records:
        if expected[(r.dialog_id, r.turn_index)] != r.gold_answer:
            raise CoverageError(
                f"gold answer mismatch against the test split at "
                f"({r.dialog_id}, {r.turn_index})"
            )


def config_fingerprint(
    records: Sequence[ResponseRecord], table: EmbeddingTable
) -> str:
    """Hash of the evaluation's test keys, gold answers, and metric settings.

    Embedded in every report so that score rows coming from different
    splits or metric configurations cannot be compared by accident.
    """
    pair_digest = sorted(
        [
            r.dialog_id,
            r.turn_index,
            hashlib.sha256(r.gold_answer.encode("utf-8")).hexdigest()[:12],
        ]
        for r in records
    )
    payload = {
        "pairs": pair_digest,
        "metrics": {
            "bleu2_mode": "corpus",
            "rouge_l": "lcs-f1",
            "semantic": "cosine-oov-skip",
            "embedding_dim": table.dimension,
            "embedding_words": len(table),
        },
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _safe_name(system: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", system) or "system"


def evaluate(
    responses_path: str | Path,
    embeddings_path: str | Path,
    out_dir: str | Path,
    emb_format: str = "text",
    test_path: str | Path | None = None,
) -> EvaluationReport:
    """Score a responses file with all five measures and write the report.

    Writes pairs-<system>.jsonl (per-pair diagnostics, raw scores) and
    report-<system>.json (corpus means ×100) into ``out_dir``. When
    ``test_path`` is given, the responses must cover that split exactly.
    """
    records = read_responses_jsonl(responses_path)
    systems = {r.system for r in records}
    if len(systems) > 1:
        raise DataError(
            f"responses mix systems {sorted(systems)}; evaluate one system at a time"
        )
    system = records[0].system
    _check_coverage(records, test_path)

    table = load_embeddings(embeddings_path, fmt=emb_format)
    pairs = [
        (normalize_text(r.response), normalize_text(r.gold_answer)) for r in records
    ]
    per_pair, corpus = evaluate_pairs(pairs, table)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    safe = _safe_name(system)
    pairs_name = f"pairs-{safe}.jsonl"
    with open(out / pairs_name, "w", encoding="utf-8", newline="\n") as fh:
        for r, p in zip(records, per_pair):
            row = {
                "dialog_id": r.dialog_id,
                "turn_index": r.turn_index,
                "bleu2": p.bleu2,
                "rouge_l": p.rouge_l,
                "embedding_average": p.embedding_average,
                "greedy_matching": p.greedy_matching,
                "vector_extrema": p.vector_extrema,
                "uncovered": p.uncovered,
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    report = EvaluationReport(
        system=system,
        fingerprint=config_fingerprint(records, table),
        pair_count=corpus.pair_count,
        covered_count=corpus.covered_count,
        uncovered_count=corpus.uncovered_count,
        scores_x100={name: getattr(corpus, name) * 100.0 for name in METRIC_NAMES},
        per_pair_file=pairs_name,
    )
    payload = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "system": report.system,
        "fingerprint": report.fingerprint,
        "pair_count": report.pair_count,
        "covered_count": report.covered_count,
        "uncovered_count": report.uncovered_count,
        "scores_x100": {name: report.scores_x100[name] for name in METRIC_NAMES},
        "per_pair_file": report.per_pair_file,
    }
    with open(out / f"report-{safe}.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return report


def load_report(path: str | Path) -> EvaluationReport:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataError(f"{path}: not a valid report file ({err.msg})") from None
    if payload.get("format") != REPORT_FORMAT:
        raise DataError(f"{path}: not a {REPORT_FORMAT} file")
    if payload.get("version") != REPORT_VERSION:
        raise DataError(f"{path}: unsupported report version {payload.get('version')!r}")
    try:
        return EvaluationReport(
            system=str(payload["system"]),
            fingerprint=str(payload["fingerprint"]),
            pair_count=int(payload["pair_count"]),
            covered_count=int(payload["covered_count"]),
            uncovered_count=int(payload["uncovered_count"]),
            scores_x100={name: float(payload["scores_x100"][name]) for name in METRIC_NAMES},
            per_pair_file=str(payload.get("per_pair_file", "")),
        )
    except KeyError as err:
        raise DataError(f"{path}: report is missing key {err}") from None


# --- report ---------------------------------------------------------------------


def format_score(value_x100: float) -> str:
    return f"{value_x100:.2f}"


def render_text_table(reports: Sequence[EvaluationReport]) -> str:
    headers = ["System"] + [METRIC_LABELS[name] for name in METRIC_NAMES]
    rows = [
        [r.system] + [format_score(r.scores_x100[name]) for name in METRIC_NAMES]
        for r in reports
    ]
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in rows)) for i in range(len(headers))
    ]
    lines = []
    header_cells = [headers[0].ljust(widths[0])] + [
        headers[i].rjust(widths[i]) for i in range(1, len(headers))
    ]
    lines.append("  ".join(header_cells).rstrip())
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [
            row[i].rjust(widths[i]) for i in range(1, len(row))
        ]
        lines.append("  ".join(cells).rstrip())
    lines.append("")
    for r in reports:
        lines.append(
            f"# {r.system}: pairs={r.pair_count} covered={r.covered_count} "
            f"uncovered={r.uncovered_count} fingerprint={r.fingerprint}"
        )
    return "\n".join(lines) + "\n"


def render_csv_table(reports: Sequence[EvaluationReport]) -> str:
    lines = ["system," + ",".join(METRIC_NAMES)]
    for r in reports:
        lines.append(
            r.system
            + ","
            + ",".join(format_score(r.scores_x100[name]) for name in METRIC_NAMES)
        )
    return "\n".join(lines) + "\n"


def report(report_paths: Sequence[str | Path], out_dir: str | Path) -> dict:
    """Render loaded reports as aligned text, CSV, and score figures.

    Rows keep the input order. All inputs must share one config
    fingerprint; comparing runs from different splits or metric settings
    is refused rather than silently mixed.
    """
    if not report_paths:
        raise ConfigError("report needs at least one input file")
    reports = [load_report(p) for p in report_paths]
    fingerprints = {r.fingerprint for r in reports}
    if len(fingerprints) > 1:
        raise DataError(
            "reports carry different config fingerprints and are not comparable: "
            + ", ".join(sorted(fingerprints))
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = render_text_table(reports)
    csv_text = render_csv_table(reports)
    (out / "report.txt").write_text(text, encoding="utf-8")
    (out / "report.csv").write_text(csv_text, encoding="utf-8")

    from .figures import render_score_figures

    figure_paths = render_score_figures(reports, out)
    return {
        "text": text,
        "txt_path": out / "report.txt",
        "csv_path": out / "report.csv",
        "figures": figure_paths,
    }


# --- vocab ----------------------------------------------------------------------


def build_vocab_file(
    train_path: str | Path, out_path: str | Path, size: int = 8192
) -> Vocabulary:
    """Build the top-N vocabulary over the train split and save it.

    The counted stream per tuple is the normalized context-augmented
    question followed by the normalized answer, in split order, so the
    result is deterministic for a fixed train file.
    """
    train = read_tuples_jsonl(train_path)
    if not train:
        raise DataError(f"{train_path}: train split is empty")

    def streams():
        for t in train:
            glued = (t.context + " " + t.question) if t.context else t.question
            yield normalize_text(glued)
            yield normalize_text(t.answer)

    vocab = build_vocabulary(streams(), size)
    vocab.save(out_path)
    return vocab
