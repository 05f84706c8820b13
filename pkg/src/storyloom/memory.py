"""Requirement memory: past requirements with their decided scenario texts.

The pool is a single append-only file of JSON lines (no server, no schema
setup). Each record holds the requirement text and the natural-language
scenario texts the user settled on. Retrieval is bag-of-words Jaccard
similarity over both texts' token sets; ties go to the most recent record.
"""

from __future__ import annotations

import csv
import json
import string
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable

from .errors import StoreUnreadable, StoreWriteFailed

STORE_FILENAME = "memory_pool.store"

# ASCII punctuation is removed outright, then the text splits on whitespace.
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(text: str) -> set[str]:
    """Lowercase, strip punctuation, split on whitespace, dedupe."""
    return set(text.lower().translate(_PUNCT_TABLE).split())


def jaccard(tokens_a: set[str], tokens_b: set[str]) -> float:
    """|A∩B| / |A∪B|, defined as 0.0 when both sets are empty."""
    if not tokens_a and not tokens_b:
        return 0.0
    return len(tokens_a & tokens_b) / len(tokens_a | tokens_b)


@dataclass(frozen=True, slots=True)
class MemoryItem:
    id: int
    feature_text: str
    scenarios: tuple[str, ...]
    created_at: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "feature_text": self.feature_text,
            "scenarios": list(self.scenarios),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MemoryItem":
        return cls(
            id=int(data["id"]),
            feature_text=data["feature_text"],
            scenarios=tuple(data["scenarios"]),
            created_at=data["created_at"],
        )


@dataclass(frozen=True, slots=True)
class MatchResult:
    item: MemoryItem
    score: float


class MemoryPool:
    """Single-file store of :class:`MemoryItem` records.

    Records are never deduplicated or rewritten: every recorded session
    appends one line. Writes are serialized by a lock; readers work on
    immutable snapshots.
    """

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._items: list[MemoryItem] = []
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        try:
            raw = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StoreUnreadable(f"cannot read memory store {self.path}: {exc}") from exc
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                self._items.append(MemoryItem.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise StoreUnreadable(
                    f"memory store {self.path} line {lineno} is corrupt: {exc}"
                ) from exc

    def __len__(self) -> int:
        return len(self._items)

    def items(self) -> tuple[MemoryItem, ...]:
        return tuple(self._items)

    def record(self, feature_text: str, scenarios: Iterable[str]) -> MemoryItem:
        """Append one record and make it durable before returning."""
        scenario_list = tuple(scenarios)
        if not feature_text.strip():
            raise ValueError("feature_text must be non-empty")
        if not scenario_list or any(not s.strip() for s in scenario_list):
            raise ValueError("scenarios must be non-empty strings")
        with self._lock:
            item = MemoryItem(
                id=len(self._items) + 1,
                feature_text=feature_text,
                scenarios=scenario_list,
                created_at=datetime.now(timezone.utc).isoformat(),
            )
            line = json.dumps(item.to_dict(), ensure_ascii=False)
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fp:
                    fp.write(line + "\n")
                    fp.flush()
            except OSError as exc:
                raise StoreWriteFailed(f"cannot append to {self.path}: {exc}") from exc
            self._items.append(item)
            return item

    def best_match(self, nl: str, threshold: float) -> MatchResult | None:
        """Highest-scoring record at or above threshold, most recent on ties."""
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("threshold must be within [0, 1]")
        snapshot = self._items[:]
        if not snapshot:
            return None
        query = tokenize(nl)
        best = max(
            (MatchResult(item, jaccard(query, tokenize(item.feature_text))) for item in snapshot),
            key=lambda m: (m.score, m.item.id),
        )
        if best.score >= threshold:
            return best
        return None

    def dump_csv(self, fp: IO[str]) -> None:
        writer = csv.writer(fp)
        writer.writerow(["id", "feature_text", "scenario_count"])
        for item in self._items:
            writer.writerow([item.id, item.feature_text, len(item.scenarios)])
