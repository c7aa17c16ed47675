"""Post ingestion: parsing, hashtag normalization, stoplist filtering, day binning."""

from __future__ import annotations

import csv
import io
import json
import logging
import unicodedata
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator

logger = logging.getLogger(__name__)


GENERIC_HASHTAGS = (
    "expomilano",
    "expo",
    "milano",
    "milan",
    "expomilano2015",
    "milanoexpo2015",
    "expo2015milano",
    "euexpo2015",
    "e015",
    "tim2go",
    "news",
)

# fraction of malformed records above which parsing aborts
MAX_MALFORMED_FRACTION = 0.5


class PostFormatError(ValueError):
    """Raised when an input stream is mostly malformed."""


@dataclass(frozen=True)
class PostRecord:
    user: str
    time: datetime
    hashtags: tuple[str, ...]

    def __post_init__(self):
        if not self.user:
            raise ValueError("user id must be non-empty")
        if self.time.tzinfo is None:
            raise ValueError("time must be timezone-aware")
        if len(set(self.hashtags)) != len(self.hashtags):
            raise ValueError(f"duplicate hashtags in {self.hashtags!r}")


@dataclass
class ParsedPosts:
    records: list[PostRecord]
    skipped: int = 0
    samples: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.records) + self.skipped


def normalize_hashtag(tag: str) -> str:
    tag = unicodedata.normalize("NFC", tag.strip()).lstrip("#").lower()
    # lowercasing can leave decomposed sequences
    return unicodedata.normalize("NFC", tag)


def normalize_hashtags(tags: Iterable[str]) -> tuple[str, ...]:
    """Normalize and deduplicate, keeping first-seen order."""
    out: dict[str, None] = {}
    for t in tags:
        n = normalize_hashtag(t)
        if n:
            out.setdefault(n, None)
    return tuple(out)


def parse_time(value) -> datetime:
    """ISO-8601 string or integer epoch seconds -> UTC datetime truncated to seconds."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, int):
        ts = datetime.fromtimestamp(value, tz=timezone.utc)
    elif isinstance(value, str):
        s = value.strip()
        if s.lstrip("-").isdigit():
            ts = datetime.fromtimestamp(int(s), tz=timezone.utc)
        else:
            if s.endswith(("Z", "z")):
                s = s[:-1] + "+00:00"
            ts = datetime.fromisoformat(s)
            if ts.tzinfo is None:
                ts = ts.replace(tzinfo=timezone.utc)
            ts = ts.astimezone(timezone.utc)
    else:
        raise ValueError(f"unsupported time value {value!r}")
    return ts.replace(microsecond=0)


def _make_record(user, time, hashtags) -> PostRecord:
    if not isinstance(user, str) or not user.strip():
        raise ValueError("missing or empty user")
    if time is None:
        raise ValueError("missing time")
    if isinstance(hashtags, str):
        hashtags = hashtags.split()
    if not isinstance(hashtags, list) or not all(isinstance(h, str) for h in hashtags):
        raise ValueError("hashtags must be a list of strings")
    return PostRecord(user.strip(), parse_time(time), normalize_hashtags(hashtags))


def _iter_jsonl(text: IO[str]) -> Iterator[tuple[int, object]]:
    for lineno, line in enumerate(text, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("not a JSON object")
            yield lineno, _make_record(obj.get("user"), obj.get("time"), obj.get("hashtags"))
        except (ValueError, TypeError, OverflowError) as exc:
            yield lineno, exc


def _iter_csv(text: IO[str]) -> Iterator[tuple[int, object]]:
    reader = csv.DictReader(text)
    missing = {"user", "time", "hashtags"} - set(reader.fieldnames or ())
    if missing:
        raise PostFormatError(f"CSV header lacks columns: {sorted(missing)}")
    for row in reader:
        try:
            if row.get("hashtags") is None:
                raise ValueError("missing hashtags")
            yield reader.line_num, _make_record(row.get("user"), row.get("time") or None, row["hashtags"])
        except (ValueError, TypeError, OverflowError) as exc:
            yield reader.line_num, exc


def parse_posts(source: IO[bytes], fmt: str = "jsonl") -> ParsedPosts:
    """Parse a byte stream of posts in ``jsonl`` or ``csv`` format.

    Malformed records are skipped and counted. If more than half of the
    records are malformed a :class:`PostFormatError` carrying sample
    diagnostics is raised. I/O failures propagate as ``OSError``.
    """
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    text = io.TextIOWrapper(source, encoding="utf-8", newline="" if fmt == "csv" else None)
    rows = _iter_csv(text) if fmt == "csv" else _iter_jsonl(text)
    result = ParsedPosts(records=[])
    try:
        for lineno, item in rows:
            if isinstance(item, PostRecord):
                result.records.append(item)
            else:
                result.skipped += 1
                if len(result.samples) < 5:
                    result.samples.append(f"line {lineno}: {item}")
    except UnicodeDecodeError as exc:
        raise PostFormatError(f"stream is not valid UTF-8: {exc}") from exc
    finally:
        text.detach()
    if result.total and result.skipped / result.total > MAX_MALFORMED_FRACTION:
        raise PostFormatError(
            f"{result.skipped}/{result.total} records malformed; e.g. " + "; ".join(result.samples)
        )
    if result.skipped:
        logger.warning("skipped %d malformed records", result.skipped)
    return result


def read_posts(path, fmt: str | None = None) -> ParsedPosts:
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    with open(path, "rb") as fh:
        return parse_posts(fh, fmt)


def write_posts_jsonl(records: Iterable[PostRecord], fh: IO[str]) -> None:
    for r in records:
        obj = {"user": r.user, "time": r.time.strftime("%Y-%m-%dT%H:%M:%SZ"), "hashtags": list(r.hashtags)}
        fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class Stoplist:
    query_keywords: frozenset[str] = frozenset()
    generic: frozenset[str] = frozenset()

    def __post_init__(self):
        for tag in self.query_keywords | self.generic:
            if tag != normalize_hashtag(tag) or not tag:
                raise ValueError(f"stoplist entry {tag!r} is not normalized")

    @classmethod
    def default(cls, query_keywords: Iterable[str] = ("expo2015",)) -> "Stoplist":
        """The 11 generic event hashtags plus the given query keywords.

        ``noexpo`` is kept by default because it is analysed as a topic.
        """
        return cls(frozenset(query_keywords), frozenset(GENERIC_HASHTAGS))

    @classmethod
    def from_lines(cls, lines: Iterable[str], query_keywords: Iterable[str] = ()) -> "Stoplist":
        generic = set()
        for line in lines:
            if line.startswith("# ") or not line.strip():
                continue
            tag = normalize_hashtag(line)
            if tag:
                generic.add(tag)
        return cls(frozenset(normalize_hashtag(q) for q in query_keywords), frozenset(generic))

    @classmethod
    def from_file(cls, path, query_keywords: Iterable[str] = ()) -> "Stoplist":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, query_keywords)

    @property
    def all(self) -> frozenset[str]:
        return self.query_keywords | self.generic


def default_stoplist_text() -> str:
    return resources.files("tdcomm").joinpath("data/stoplist_default.txt").read_text(encoding="utf-8")


def apply_stoplist(records: Iterable[PostRecord], stoplist: Stoplist) -> tuple[list[PostRecord], int]:
    """Remove stoplisted hashtags; drop records left without any. Returns (kept, n_dropped)."""
    banned = stoplist.all
    kept, dropped = [], 0
    for r in records:
        tags = tuple(t for t in r.hashtags if t not in banned)
        if not tags:
            dropped += 1
            continue
        kept.append(r if len(tags) == len(r.hashtags) else PostRecord(r.user, r.time, tags))
    return kept, dropped


@dataclass(frozen=True)
class DayBinning:
    epoch_day0: date
    n_days: int
    utc_offset: timedelta = timedelta(0)

    def day_index(self, t: datetime) -> int:
        return ((t + self.utc_offset).date() - self.epoch_day0).days

    def day_date(self, index: int) -> date:
        return self.epoch_day0 + timedelta(days=index)


def parse_utc_offset(text: str) -> timedelta:
    """'+02:00' / '-0530' / 'Z' -> timedelta."""
    text = text.strip()
    if text in ("Z", "z", "UTC", ""):
        return timedelta(0)
    sign = -1 if text[0] == "-" else 1
    body = text.lstrip("+-").replace(":", "")
    if not body.isdigit() or len(body) not in (2, 4):
        raise ValueError(f"bad UTC offset {text!r}")
    hours, minutes = int(body[:2]), int(body[2:] or 0)
    return sign * timedelta(hours=hours, minutes=minutes)


def bin_by_day(
    records: Iterable[PostRecord],
    start: date,
    end: date,
    utc_offset: timedelta = timedelta(0),
) -> tuple[DayBinning, list[list[PostRecord]]]:
    """Split records into daily layers over the inclusive window [start, end].

    Day boundaries are calendar days at the given fixed UTC offset. Records
    outside the window are discarded.
    """
    if start > end:
        raise ValueError(f"inverted window: {start} > {end}")
    binning = DayBinning(start, (end - start).days + 1, utc_offset)
    days: list[list[PostRecord]] = [[] for _ in range(binning.n_days)]
    for r in records:
        d = binning.day_index(r.time)
        if 0 <= d < binning.n_days:
            days[d].append(r)
    return binning, days

