"""Post/corpus ingestion, normalization, term filtering, and sampling.

Ingestion is record-by-record and never aborts on a bad record: undecodable
bytes, malformed JSON, and missing fields are tallied as warnings and the
record is skipped. Archived social-media dumps reliably contain mojibake, so
surviving it is part of the contract.
"""

from __future__ import annotations

import csv
import io
import json
import random
import unicodedata
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import IO, Any, Iterable, Iterator, Mapping

from slangtriage.matching import DEFAULT_POLICY, MatchPolicy, MultiPatternMatcher

SUPPORTED_FORMATS = ("jsonl", "csv")


class IngestError(Exception):
    """Raised when the input stream as a whole cannot be read."""


def normalize(text: str) -> str:
    """Canonicalize text for matching: unicode NFC plus whitespace collapse.

    Runs of whitespace (including NBSP and friends) become a single space and
    the ends are trimmed. Case and punctuation are untouched; case handling
    belongs to the matcher. Idempotent.
    """
    return " ".join(unicodedata.normalize("NFC", text).split())


@dataclass(frozen=True)
class Post:
    """One social-media text item."""

    id: str
    text: str
    created_at: str | None = None
    source: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "created_at": self.created_at,
            "source": self.source,
            "meta": dict(self.meta),
        }


@dataclass
class Provenance:
    """How a corpus was derived: source, ingestion time, and filter history."""

    source: str = ""
    ingested_at: str = ""
    filters: list[str] = field(default_factory=list)
    warnings: int = 0

    def derive(self, filter_descriptor: str) -> "Provenance":
        return Provenance(
            source=self.source,
            ingested_at=self.ingested_at,
            filters=self.filters + [filter_descriptor],
            warnings=self.warnings,
        )


class Corpus:
    """Immutable ordered collection of posts with unique ids."""

    def __init__(self, posts: Iterable[Post], provenance: Provenance | None = None):
        self._posts: list[Post] = []
        self._by_id: dict[str, Post] = {}
        for post in posts:
            if post.id in self._by_id:
                raise ValueError(f"duplicate post id {post.id!r}")
            self._by_id[post.id] = post
            self._posts.append(post)
        self.provenance = provenance or Provenance()

    @property
    def posts(self) -> tuple[Post, ...]:
        return tuple(self._posts)

    def ids(self) -> list[str]:
        return [p.id for p in self._posts]

    def get(self, post_id: str) -> Post | None:
        return self._by_id.get(post_id)

    def __len__(self) -> int:
        return len(self._posts)

    def __iter__(self) -> Iterator[Post]:
        return iter(self._posts)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._by_id


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _post_from_json_line(line: str, default_source: str) -> Post:
    rec = json.loads(line)
    if not isinstance(rec, dict):
        raise ValueError("record is not an object")
    post_id = rec.get("id")
    text = rec.get("text")
    if not isinstance(post_id, str) or not post_id:
        raise ValueError("missing or empty id")
    if not isinstance(text, str):
        raise ValueError("missing text")
    text = normalize(text)
    if not text:
        raise ValueError("text empty after normalization")
    created = rec.get("created_at")
    meta = rec.get("meta") or {}
    if not isinstance(meta, dict):
        raise ValueError("meta is not an object")
    return Post(
        id=post_id,
        text=text,
        created_at=created if isinstance(created, str) else None,
        source=rec.get("source") or default_source,
        meta=meta,
    )


def iter_jsonl_posts(stream: IO[bytes], source: str = "") -> Iterator[tuple[Post | None, str | None]]:
    """Yield ``(post, None)`` per valid line or ``(None, warning)`` per bad one.

    Decoding is strict UTF-8 per line so one mojibake record cannot poison
    the rest of the stream. Memory use is bounded by line length.
    """
    for lineno, raw in enumerate(stream, start=1):
        raw = raw.strip(b"\r\n")
        if not raw.strip():
            continue
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            yield None, f"line {lineno}: undecodable bytes ({exc.reason})"
            continue
        try:
            yield _post_from_json_line(line, source), None
        except (ValueError, json.JSONDecodeError) as exc:
            yield None, f"line {lineno}: {exc}"


def _iter_csv_posts(stream: IO[bytes], source: str) -> Iterator[tuple[Post | None, str | None]]:
    text_stream = io.TextIOWrapper(stream, encoding="utf-8", errors="replace", newline="")
    reader = csv.DictReader(text_stream)
    if reader.fieldnames is None or "id" not in reader.fieldnames or "text" not in reader.fieldnames:
        raise IngestError("csv input must have 'id' and 'text' columns")
    for rowno, row in enumerate(reader, start=2):
        post_id = (row.get("id") or "").strip()
        text = normalize(row.get("text") or "")
        if not post_id or not text:
            yield None, f"row {rowno}: missing id or text"
            continue
        yield Post(id=post_id, text=text, source=(row.get("source") or source)), None


def ingest(stream: IO[bytes], format: str = "jsonl", source: str = "") -> Corpus:
    """Read a byte stream into a corpus, skipping and tallying bad records.

    Duplicate ids keep their first position but take the last record's
    content; each duplicate counts as one warning.
    """
    if format not in SUPPORTED_FORMATS:
        raise IngestError(f"unsupported format {format!r}; expected one of {SUPPORTED_FORMATS}")
    records = iter_jsonl_posts(stream, source) if format == "jsonl" else _iter_csv_posts(stream, source)

    by_id: dict[str, Post] = {}
    warnings = 0
    for post, warning in records:
        if post is None:
            warnings += 1
            continue
        if post.id in by_id:
            warnings += 1
        by_id[post.id] = post

    provenance = Provenance(source=source, ingested_at=_utcnow(), warnings=warnings)
    return Corpus(by_id.values(), provenance)


def export_jsonl(corpus: Corpus, stream: IO[str]) -> None:
    for post in corpus:
        stream.write(json.dumps(post.to_record(), ensure_ascii=False) + "\n")


def filter_by_term(corpus: Corpus, term: str, policy: MatchPolicy = DEFAULT_POLICY) -> Corpus:
    """Sub-corpus of posts whose text contains ``term`` under ``policy``."""
    if not term or not normalize(term):
        raise ValueError("term must be nonempty")
    matcher = MultiPatternMatcher([normalize(term)], policy)
    provenance = corpus.provenance.derive(f"term={term!r} policy={policy.describe()}")
    return Corpus((p for p in corpus if matcher.search(p.text)), provenance)


def filter_posts(posts: Iterable[Post], matcher: MultiPatternMatcher) -> Iterator[Post]:
    """Streaming filter used by the CLI so corpus size never hits memory."""
    for post in posts:
        if matcher.search(post.text):
            yield post


def sample(corpus: Corpus, n: int, seed: int) -> Corpus:
    """Uniform random subset of size ``n``, shuffled, deterministic per seed."""
    if n < 0 or n > len(corpus):
        raise ValueError(f"sample size {n} out of range for corpus of {len(corpus)}")
    picked = random.Random(seed).sample(list(corpus.posts), n)
    provenance = corpus.provenance.derive(f"sample n={n} seed={seed}")
    return Corpus(picked, provenance)


def with_meta(post: Post, **extra: Any) -> Post:
    """Copy of ``post`` with additional meta entries."""
    merged = dict(post.meta)
    merged.update(extra)
    return replace(post, meta=merged)
