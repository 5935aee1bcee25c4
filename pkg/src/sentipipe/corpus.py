"""Comment records, CSV ingestion, deduplication and stratified splitting."""

from __future__ import annotations

import csv
import enum
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

log = logging.getLogger(__name__)

RAW_COLUMNS = ["comment_id", "video_id", "author", "published_at", "like_count", "lang_hint", "text"]
LABELED_COLUMNS = RAW_COLUMNS + ["clean_text", "compound", "label"]


class CorpusError(Exception):
    pass


class Label(enum.IntEnum):
    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: str) -> "Label":
        try:
            return cls[value.strip().upper()]
        except KeyError:
            raise CorpusError(f"unknown label {value!r}") from None


@dataclass(frozen=True)
class RawComment:
    id: str
    video_id: str
    author: str
    published_at: datetime
    like_count: int
    lang_hint: str | None
    text: str


@dataclass(frozen=True)
class CleanComment:
    id: str
    clean_text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, id: str, clean_text: str) -> "CleanComment":
        return cls(id, clean_text, tuple(clean_text.split()))


@dataclass(frozen=True)
class LabeledComment:
    clean: CleanComment
    label: Label
    compound: float
    raw: RawComment | None = None

    @property
    def id(self) -> str:
        return self.clean.id


@dataclass
class DatasetSplit:
    train: list[LabeledComment]
    val: list[LabeledComment]
    test: list[LabeledComment]
    seed: int
    ratios: tuple[float, float, float]


@dataclass
class LoadResult:
    """Records read from a CSV plus the number of skipped rows."""

    comments: list = field(default_factory=list)
    skipped: int = 0

    def __iter__(self):
        return iter(self.comments)

    def __len__(self):
        return len(self.comments)

    def __getitem__(self, i):
        return self.comments[i]


def _parse_ts(value: str) -> datetime:
    value = value.strip()
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    return datetime.fromisoformat(value)


def _parse_raw(row: dict) -> RawComment:
    text = row.get("text")
    if text is None or not text.strip():
        raise ValueError("empty text")
    cid = row["comment_id"]
    if not cid:
        raise ValueError("empty comment_id")
    likes = int(row["like_count"] or 0)
    if likes < 0:
        raise ValueError("negative like_count")
    return RawComment(
        id=cid,
        video_id=row["video_id"] or "",
        author=row["author"] or "",
        published_at=_parse_ts(row["published_at"]),
        like_count=likes,
        lang_hint=row["lang_hint"] or None,
        text=text,
    )


def _read_rows(path, required):
    if not os.path.exists(path):
        raise CorpusError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise CorpusError(f"{path}: missing required column(s) {', '.join(missing)}")
        yield from reader


def load_comments_csv(path) -> LoadResult:
    """Read raw comments in file order, skipping (and counting) malformed rows."""
    out = LoadResult()
    seen = set()
    for lineno, row in enumerate(_read_rows(path, RAW_COLUMNS), start=2):
        try:
            if None in row or any(row[c] is None for c in RAW_COLUMNS):
                raise ValueError("wrong number of fields")
            rc = _parse_raw(row)
            if rc.id in seen:
                raise ValueError(f"duplicate id {rc.id}")
        except (ValueError, KeyError) as e:
            log.warning("%s:%d skipped (%s)", path, lineno, e)
            out.skipped += 1
            continue
        seen.add(rc.id)
        out.comments.append(rc)
    if not out.comments:
        raise CorpusError(f"{path}: no valid rows")
    return out


def _dedupe_key(text: str) -> str:
    return " ".join(text.split()).casefold()


def deduplicate(comments):
    seen = set()
    out = []
    for c in comments:
        key = _dedupe_key(c.text)
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def _floor(x: float) -> int:
    # guards against 0.1 * 10 landing at 0.99999
    return math.floor(x + 1e-9)


def stratified_split(data, ratios=(0.8, 0.1, 0.1), seed: int = 0) -> DatasetSplit:
    """Per-class shuffle, then take floor(n*r_test) and floor(n*r_val); the rest trains.

    Deterministic for a fixed (data order, ratios, seed). Each partition keeps
    the input order of its members.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    by_class: dict[Label, list[int]] = {}
    for i, item in enumerate(data):
        by_class.setdefault(item.label, []).append(i)
    rng = np.random.default_rng(seed)
    assign = {}
    for label in sorted(by_class):
        idx = by_class[label]
        if len(idx) < 3:
            raise CorpusError(f"class {label.slug} has {len(idx)} members; need at least 3 to stratify")
        n = len(idx)
        order = [idx[j] for j in rng.permutation(n)]
        n_test = _floor(n * ratios[2])
        n_val = _floor(n * ratios[1])
        for j, i in enumerate(order):
            assign[i] = 2 if j < n_test else 1 if j < n_test + n_val else 0
    parts = ([], [], [])
    for i, item in enumerate(data):
        parts[assign[i]].append(item)
    return DatasetSplit(parts[0], parts[1], parts[2], seed=seed, ratios=ratios)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def save_labeled_csv(data, path) -> None:
    """Write labeled comments; raw columns are left blank where no raw record is attached."""
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise CorpusError(f"cannot write {path}: directory does not exist")
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(LABELED_COLUMNS)
        for item in data:
            raw = item.raw
            raw_cols = [item.id, "", "", "", "", "", ""] if raw is None else _raw_cols(raw)
            w.writerow(raw_cols + [item.clean.clean_text, _fmt_float(item.compound), item.label.slug])


def load_labeled_csv(path) -> LoadResult:
    out = LoadResult()
    for lineno, row in enumerate(_read_rows(path, LABELED_COLUMNS), start=2):
        try:
            if None in row or any(row[c] is None for c in LABELED_COLUMNS):
                raise ValueError("wrong number of fields")
            raw = _parse_raw(row) if row["text"] else None
            clean = CleanComment.from_text(row["comment_id"], row["clean_text"])
            compound = float(row["compound"])
            if not -1.0 <= compound <= 1.0:
                raise ValueError("compound out of range")
            out.comments.append(LabeledComment(clean, Label.parse(row["label"]), compound, raw))
        except (ValueError, KeyError, CorpusError) as e:
            log.warning("%s:%d skipped (%s)", path, lineno, e)
            out.skipped += 1
    return out


CLEAN_COLUMNS = RAW_COLUMNS + ["clean_text"]


def _raw_cols(raw: RawComment) -> list[str]:
    return [raw.id, raw.video_id, raw.author, raw.published_at.isoformat(), str(raw.like_count),
            raw.lang_hint or "", raw.text]


def save_clean_csv(pairs, path) -> None:
    """Write (RawComment, CleanComment) pairs: the raw columns plus ``clean_text``."""
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise CorpusError(f"cannot write {path}: directory does not exist")
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CLEAN_COLUMNS)
        for raw, clean in pairs:
            w.writerow(_raw_cols(raw) + [clean.clean_text])


def load_clean_csv(path) -> list[tuple[RawComment, CleanComment]]:
    out = []
    for lineno, row in enumerate(_read_rows(path, CLEAN_COLUMNS), start=2):
        try:
            raw = _parse_raw(row)
        except (ValueError, KeyError) as e:
            raise CorpusError(f"{path}:{lineno}: {e}") from None
        out.append((raw, CleanComment.from_text(raw.id, row["clean_text"] or "")))
    return out
