"""Question/answer dataset ingestion.

The native format is line-delimited JSON with the keys used by HC3 exports::

    {"question": "...", "human_answers": ["...", ...], "chatgpt_answers": [...]}

``human_answer`` (a single string) is accepted as well, and an optional
``topic`` (or ``source``) field is carried through.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from ..core import RoutingError

log = logging.getLogger(__name__)


class ParseError(RoutingError, ValueError):
    code = "ParseError"


@dataclass(frozen=True)
class DatasetEntry:
    question: str
    human_answer: str | None = None
    topic: str | None = None

    def __post_init__(self) -> None:
        if not self.question:
            raise ValueError("question must be nonempty")


def _entry_from_record(record) -> DatasetEntry:
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    question = record.get("question")
    if not isinstance(question, str) or not question.strip():
        raise ValueError('record has no "question"')
    answer = record.get("human_answer")
    answers = record.get("human_answers")
    if answer is None and isinstance(answers, list):
        answer = next((a for a in answers if isinstance(a, str) and a.strip()), None)
    topic = record.get("topic", record.get("source"))
    return DatasetEntry(question.strip(), answer, None if topic is None else str(topic))


def ingest_dataset(path: str | Path, format: str = "jsonl", strict: bool = False) -> list[DatasetEntry]:
    """Read a dataset file.

    In lenient mode (default) malformed lines are logged with their line
    number and skipped. In strict mode the first malformed line, or an empty
    file, raises ``ParseError``.
    """
    if format not in ("jsonl", "hc3"):
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")

    entries: list[DatasetEntry] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                entries.append(_entry_from_record(json.loads(line)))
            except ValueError as exc:
                if strict:
                    raise ParseError(f"{path}:{lineno}: {exc}") from None
                log.warning("%s:%d: skipped malformed record: %s", path, lineno, exc)
    if strict and not entries:
        raise ParseError(f"{path}: no records")
    return entries
