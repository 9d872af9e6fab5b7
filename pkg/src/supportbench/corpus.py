"""Tweet dump parsing, conversation threading, and dataset construction.

The pipeline here goes: stream a raw CSV dump into Tweet records, thread
the reply links into per-conversation Dialogs for one support brand,
flatten each dialog into (context, question, answer) tuples, drop tuples
whose answer redirects the customer to another channel, and split what is
left into train and test sets by answer time.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from .errors import ConfigError, DataError, EmptySplitError, RowParseError

logger = logging.getLogger("supportbench.corpus")

CSV_COLUMNS = (
    "tweet_id",
    "author_id",
    "inbound",
    "created_at",
    "text",
    "response_tweet_id",
    "in_response_to_tweet_id",
)

_CREATED_AT_FORMAT = "%a %b %d %H:%M:%S %z %Y"

DEFAULT_REDIRECT_PATTERNS: tuple[str, ...] = (
    "dm us",
    "direct message",
    "send us a dm",
    "dm your",
)


@dataclass(frozen=True)
class Tweet:
    tweet_id: int
    author_id: str
    inbound: bool
    created_at: datetime
    text: str
    in_response_to: int | None = None


@dataclass(frozen=True)
class Dialog:
    dialog_id: int
    turns: tuple[Tweet, ...]
    brand: str


@dataclass(frozen=True)
class DialogTuple:
    dialog_id: int
    turn_index: int
    context: str
    question: str
    answer: str
    answer_time: datetime


@dataclass(frozen=True)
class SplitConfig:
    train_window_days: int = 60
    test_window_days: int = 5
    brand: str = ""

    def __post_init__(self) -> None:
        if not self.train_window_days > self.test_window_days > 0:
            raise ConfigError(
                "split windows must satisfy train_window_days > test_window_days > 0, "
                f"got train={self.train_window_days} test={self.test_window_days}"
            )


def _parse_created_at(value: str) -> datetime:
    return datetime.strptime(value, _CREATED_AT_FORMAT).astimezone(timezone.utc)


def _parse_tweet_id(value: str) -> int:
    value = value.strip()
    try:
        return int(value)
    except ValueError:
        # Tolerate integral floats ("123.0") from spreadsheet re-exports.
        as_float = float(value)
        if not as_float.is_integer():
            raise ValueError(value)
        return int(as_float)


def parse_tweet_stream(
    source: str | Path | io.IOBase,
    on_error: Callable[[RowParseError], None] | None = None,
) -> Iterator[Tweet]:
    """Stream Tweet records out of a customer-support CSV dump.

    ``source`` may be a path or an open text/byte stream. Rows are parsed
    lazily. A malformed row raises RowParseError unless ``on_error`` is
    given, in which case the error is handed to it and the row is skipped,
    letting the caller choose between aborting and counting bad rows.
    The multi-valued ``response_tweet_id`` column is ignored; threading
    relies on ``in_response_to_tweet_id`` alone.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            yield from _parse_rows(fh, on_error)
    else:
        stream: io.IOBase = source
        if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)):
            stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")
        yield from _parse_rows(stream, on_error)


def _parse_rows(
    fh, on_error: Callable[[RowParseError], None] | None
) -> Iterator[Tweet]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("CSV source is empty: missing header row") from None
    positions: dict[str, int] = {}
    for name in CSV_COLUMNS:
        try:
            positions[name] = header.index(name)
        except ValueError:
            raise DataError(f"CSV header is missing required column '{name}'") from None

    for row in reader:
        line = reader.line_num
        try:
            yield _parse_row(row, positions, line)
        except RowParseError as err:
            if on_error is None:
                raise
            on_error(err)


def _parse_row(row: list[str], positions: dict[str, int], line: int) -> Tweet:
    def cell(column: str) -> str:
        idx = positions[column]
        if idx >= len(row):
            raise RowParseError(line, "value is missing", column=column)
        return row[idx]

    # Surface truncated rows in schema order, so the first absent column
    # (not the first one this parser happens to touch) is the one named.
    for column in CSV_COLUMNS:
        cell(column)

    try:
        tweet_id = _parse_tweet_id(cell("tweet_id"))
    except ValueError as err:
        raise RowParseError(line, f"not an integer id: {err}", column="tweet_id")

    inbound_raw = cell("inbound").strip().lower()
    if inbound_raw == "true":
        inbound = True
    elif inbound_raw == "false":
        inbound = False
    else:
        raise RowParseError(
            line, f"expected True or False, got {cell('inbound')!r}", column="inbound"
        )

    try:
        created_at = _parse_created_at(cell("created_at"))
    except ValueError:
        raise RowParseError(
            line, f"unparseable timestamp {cell('created_at')!r}", column="created_at"
        )

    parent_raw = cell("in_response_to_tweet_id").strip()
    parent: int | None = None
    if parent_raw:
        try:
            parent = _parse_tweet_id(parent_raw)
        except ValueError:
            raise RowParseError(
                line,
                f"not an integer id: {parent_raw!r}",
                column="in_response_to_tweet_id",
            )
        if parent == tweet_id:
            raise RowParseError(
                line,
                "tweet claims to respond to itself",
                column="in_response_to_tweet_id",
            )

    return Tweet(
        tweet_id=tweet_id,
        author_id=cell("author_id"),
        inbound=inbound,
        created_at=created_at,
        text=cell("text"),
        in_response_to=parent,
    )


def thread_conversations(tweets: Iterable[Tweet], brand: str) -> list[Dialog]:
    """Assemble reply chains into Dialogs involving ``brand`` as responder.

    The reply links form a forest: every tweet belongs to at most one
    dialog. Tweets whose parent id is absent from the dump become roots of
    their own dialogs; reply cycles are discarded with a warning. A dialog
    is kept only if it has at least two turns, starts with a customer
    (inbound) turn, and contains at least one support turn authored by
    ``brand``. Turns are ordered chronologically; dialogs whose reply links
    run against the clock (a reply timestamped before its parent) are
    discarded with a warning.
    """
    order: list[Tweet] = []
    by_id: dict[int, Tweet] = {}
    for tweet in tweets:
        if tweet.tweet_id in by_id:
            raise DataError(f"duplicate tweet_id {tweet.tweet_id} in dump")
        by_id[tweet.tweet_id] = tweet
        order.append(tweet)

    # Resolve each tweet's root, detecting cycles along the way. root_of
    # maps tweet_id -> (root_id, depth); cyclic chains map to None.
    root_of: dict[int, tuple[int, int] | None] = {}
    for tweet in order:
        if tweet.tweet_id in root_of:
            continue
        path: list[int] = []
        on_path: set[int] = set()
        current = tweet.tweet_id
        cyclic = False
        root_id = -1
        base_depth = 0  # depth of path[-1] once the walk stops
        while True:
            prior = root_of.get(current, ...)
            if prior is not ...:
                if prior is None:
                    cyclic = True
                else:
                    root_id, parent_depth = prior
                    base_depth = parent_depth + 1
                break
            if current in on_path:
                logger.warning(
                    "discarding cyclic reply chain involving tweet %d (%d tweets)",
                    current,
                    len(path),
                )
                cyclic = True
                break
            path.append(current)
            on_path.add(current)
            parent = by_id[current].in_response_to
            if parent is None or parent not in by_id:
                root_id = current
                root_of[current] = (current, 0)
                path.pop()
                base_depth = 1
                break
            current = parent
        if cyclic:
            for node in path:
                root_of[node] = None
            continue
        # Unwind: the deepest remaining path entry hangs just below the
        # resolved node, and each step back toward the start adds a level.
        for offset, node in enumerate(reversed(path)):
            root_of[node] = (root_id, base_depth + offset)

    groups: dict[int, list[tuple[Tweet, int]]] = {}
    for tweet in order:
        resolution = root_of[tweet.tweet_id]
        if resolution is None:
            continue
        root_id, depth = resolution
        groups.setdefault(root_id, []).append((tweet, depth))

    brand_lower = brand.lower()
    dialogs: list[Dialog] = []
    for root_id, members in groups.items():
        turns = tuple(
            t
            for t, _depth in sorted(
                members, key=lambda pair: (pair[0].created_at, pair[1], pair[0].tweet_id)
            )
        )
        if len(turns) < 2:
            continue
        position = {t.tweet_id: i for i, t in enumerate(turns)}
        inverted = False
        for i, turn in enumerate(turns):
            parent = turn.in_response_to
            if parent is not None and parent in position and position[parent] >= i:
                inverted = True
                break
        if inverted:
            logger.warning(
                "discarding conversation rooted at %d: reply timestamped before its parent",
                root_id,
            )
            continue
        if not turns[0].inbound:
            logger.debug("dropping support-initiated conversation rooted at %d", root_id)
            continue
        if not any(
            not t.inbound and t.author_id.lower() == brand_lower for t in turns
        ):
            continue
        dialogs.append(Dialog(dialog_id=root_id, turns=turns, brand=brand))
    return dialogs


def extract_dialog_tuples(dialog: Dialog) -> list[DialogTuple]:
    """Flatten a dialog into (context, question, answer) tuples.

    One tuple is produced per support (non-inbound) turn that directly
    answers a customer (inbound) turn. The context is every turn strictly
    before the question, oldest first, joined with single spaces; it is
    empty exactly when the question opens the dialog.
    """
    position: dict[int, int] = {t.tweet_id: i for i, t in enumerate(dialog.turns)}
    tuples: list[DialogTuple] = []
    for i, turn in enumerate(dialog.turns):
        if turn.inbound or turn.in_response_to is None:
            continue
        parent_pos = position.get(turn.in_response_to)
        if parent_pos is None:
            continue
        question = dialog.turns[parent_pos]
        if not question.inbound:
            continue
        context = " ".join(t.text for t in dialog.turns[:parent_pos])
        tuples.append(
            DialogTuple(
                dialog_id=dialog.dialog_id,
                turn_index=i,
                context=context,
                question=question.text,
                answer=turn.text,
                answer_time=turn.created_at,
            )
        )
    return tuples


def filter_redirects(
    tuples: Sequence[DialogTuple],
    patterns: Sequence[str] = DEFAULT_REDIRECT_PATTERNS,
) -> tuple[list[DialogTuple], int]:
    """Drop tuples whose answer redirects to another support channel.

    ``patterns`` are case-insensitive regular expressions searched inside
    the answer text. Returns the kept tuples and the number removed.
    """
    if not patterns:
        raise ConfigError("redirect pattern list must not be empty")
    try:
        compiled = [re.compile(p, re.IGNORECASE) for p in patterns]
    except re.error as err:
        raise ConfigError(f"invalid redirect pattern: {err}") from None
    kept = [
        t for t in tuples if not any(rx.search(t.answer) for rx in compiled)
    ]
    return kept, len(tuples) - len(kept)


def temporal_split(
    tuples: Sequence[DialogTuple], cfg: SplitConfig
) -> tuple[list[DialogTuple], list[DialogTuple]]:
    """Split tuples into (train, test) windows anchored at the newest answer.

    With T_max the latest answer_time, the test set holds answers in
    (T_max − test_window, T_max] and the train set answers in
    (T_max − train_window, T_max − test_window]; anything older is dropped.
    Every train time therefore strictly precedes every test time.
    """
    if not tuples:
        raise EmptySplitError("cannot split an empty tuple sequence")
    t_max = max(t.answer_time for t in tuples)
    test_floor = t_max - timedelta(days=cfg.test_window_days)
    train_floor = t_max - timedelta(days=cfg.train_window_days)
    train = [t for t in tuples if train_floor < t.answer_time <= test_floor]
    test = [t for t in tuples if test_floor < t.answer_time <= t_max]
    if not train:
        raise EmptySplitError(
            "train split is empty: no answers inside the train window"
        )
    if not test:
        raise EmptySplitError("test split is empty: no answers inside the test window")
    return train, test


# --- DialogTuple JSONL interchange -----------------------------------------


def format_timestamp(moment: datetime) -> str:
    return moment.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(value: str) -> datetime:
    text = value.replace("Z", "+00:00") if value.endswith("Z") else value
    try:
        moment = datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"unparseable ISO-8601 timestamp {value!r}") from None
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc)


def tuple_to_record(t: DialogTuple) -> dict:
    return {
        "dialog_id": t.dialog_id,
        "turn_index": t.turn_index,
        "context": t.context,
        "question": t.question,
        "answer": t.answer,
        "answer_time": format_timestamp(t.answer_time),
    }


def tuple_from_record(record: dict, where: str = "") -> DialogTuple:
    try:
        return DialogTuple(
            dialog_id=int(record["dialog_id"]),
            turn_index=int(record["turn_index"]),
            context=str(record["context"]),
            question=str(record["question"]),
            answer=str(record["answer"]),
            answer_time=parse_timestamp(record["answer_time"]),
        )
    except KeyError as err:
        raise DataError(f"dialog tuple record{where} is missing key {err}") from None


def write_tuples_jsonl(path: str | Path, tuples: Iterable[DialogTuple]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tuples:
            fh.write(json.dumps(tuple_to_record(t), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_tuples_jsonl(path: str | Path) -> list[DialogTuple]:
    tuples: list[DialogTuple] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path} line {lineno}: invalid JSON ({err.msg})") from None
            tuples.append(tuple_from_record(record, where=f" at {path} line {lineno}"))
    return tuples
