"""Manual-labeling sessions: stratified sampling, recording, export.

A session is built from a prediction set but deliberately forgets it: items
carry only post id and text, shuffled, so annotators never see machine
labels. Take-all strata default to everything except confident negatives;
negatives are sampled by seeded fraction or count. Building a session twice
from the same inputs and seed yields a byte-identical document.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import time
from dataclasses import dataclass, field
from typing import IO, Iterable

from slangtriage.corpus import Corpus
from slangtriage.evaluator import AgreementReport, agreement
from slangtriage.labels import SEMANTIC_LABELS, Label, PredictionSet, parse_label, write_gold

DEFAULT_TAKE_ALL = frozenset(
    {
        Label.OPIOID_RELATED,
        Label.UNSURE,
        Label.CONTENT_RESTRICTION_ERROR,
        Label.API_ERROR,
    }
)

SKIP = "skip"


@dataclass(frozen=True)
class SamplingPolicy:
    """Which predictions to annotate: keep whole strata, sample the rest."""

    take_all_of: frozenset[Label] = DEFAULT_TAKE_ALL
    negative_fraction: float | None = None
    negative_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        has_fraction = self.negative_fraction is not None
        has_count = self.negative_count is not None
        if has_fraction == has_count:
            raise ValueError("set exactly one of negative_fraction / negative_count")
        if has_fraction and not (0.0 <= self.negative_fraction <= 1.0):
            raise ValueError("negative_fraction must be in [0, 1]")
        if has_count and self.negative_count < 0:
            raise ValueError("negative_count must be >= 0")

    def as_dict(self) -> dict:
        return {
            "take_all_of": sorted(lb.value for lb in self.take_all_of),
            "negative_fraction": self.negative_fraction,
            "negative_count": self.negative_count,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SamplingPolicy":
        take_all = obj.get("take_all_of")
        return cls(
            take_all_of=(
                frozenset(parse_label(v) for v in take_all) if take_all is not None else DEFAULT_TAKE_ALL
            ),
            negative_fraction=obj.get("negative_fraction"),
            negative_count=obj.get("negative_count"),
            seed=int(obj.get("seed", 0)),
        )


@dataclass(frozen=True)
class SessionItem:
    post_id: str
    text: str


@dataclass
class Response:
    post_id: str
    annotator: str
    label: Label | None  # None means skipped
    status: str  # "labeled" | "skipped"
    recorded_at: float
    audit: list[str] = field(default_factory=list)


@dataclass
class AnnotationSession:
    session_id: str
    items: list[SessionItem]
    policy: SamplingPolicy
    # current response per (post_id, annotator); full history in each audit
    responses: dict[tuple[str, str], Response] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {item.post_id: i for i, item in enumerate(self.items)}
        if len(self._index) != len(self.items):
            raise ValueError("session items contain duplicate post ids")

    # --- labeling ----------------------------------------------------------

    def record_label(
        self,
        post_id: str,
        annotator: str,
        label: Label | str,
        now: float | None = None,
    ) -> Response:
        """Store one judgment; relabeling overwrites and appends an audit note."""
        if post_id not in self._index:
            raise ValueError(f"post {post_id!r} is not part of this session")
        if not annotator:
            raise ValueError("annotator id must be nonempty")
        skipped = label == SKIP
        if not skipped:
            if isinstance(label, str):
                label = parse_label(label)
            if label not in SEMANTIC_LABELS:
                raise ValueError(f"annotation labels must be semantic, got {label.value!r}")
        timestamp = time.time() if now is None else now
        key = (post_id, annotator)
        previous = self.responses.get(key)
        value = SKIP if skipped else label.value
        response = Response(
            post_id=post_id,
            annotator=annotator,
            label=None if skipped else label,
            status="skipped" if skipped else "labeled",
            recorded_at=timestamp,
            audit=(previous.audit if previous else []) + [value],
        )
        self.responses[key] = response
        return response

    def next_pending(self, annotator: str) -> SessionItem | None:
        """First item this annotator has not answered (labels and skips both
        count as answered)."""
        for item in self.items:
            if (item.post_id, annotator) not in self.responses:
                return item
        return None

    def progress(self, annotator: str) -> tuple[int, int]:
        answered = sum(1 for (pid, a) in self.responses if a == annotator)
        return answered, len(self.items)

    def annotators(self) -> list[str]:
        return sorted({a for (_, a) in self.responses})

    # --- export ------------------------------------------------------------

    def export_gold(self, annotator: str) -> list[tuple[str, Label]]:
        """Labeled (not skipped) items in session order."""
        rows: list[tuple[str, Label]] = []
        for item in self.items:
            response = self.responses.get((item.post_id, annotator))
            if response is not None and response.status == "labeled":
                rows.append((item.post_id, response.label))
        if not rows:
            raise ValueError(f"annotator {annotator!r} has no labeled items")
        return rows

    def agreement_between(self, a: str, b: str) -> AgreementReport:
        """Agreement over items labeled by both annotators, in session order."""
        seq_a: list[Label] = []
        seq_b: list[Label] = []
        for item in self.items:
            ra = self.responses.get((item.post_id, a))
            rb = self.responses.get((item.post_id, b))
            if ra and rb and ra.status == "labeled" and rb.status == "labeled":
                seq_a.append(ra.label)
                seq_b.append(rb.label)
        return agreement(seq_a, seq_b)

    # --- persistence -------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "session_id": self.session_id,
            "policy": self.policy.as_dict(),
            "items": [{"post_id": it.post_id, "text": it.text} for it in self.items],
            "responses": [
                {
                    "post_id": r.post_id,
                    "annotator": r.annotator,
                    "label": None if r.label is None else r.label.value,
                    "status": r.status,
                    "recorded_at": r.recorded_at,
                    "audit": r.audit,
                }
                for r in self.responses.values()
            ],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "AnnotationSession":
        session = cls(
            session_id=doc["session_id"],
            items=[SessionItem(post_id=it["post_id"], text=it["text"]) for it in doc["items"]],
            policy=SamplingPolicy.from_dict(doc.get("policy") or {"negative_fraction": 1.0}),
        )
        for rec in doc.get("responses", []):
            response = Response(
                post_id=rec["post_id"],
                annotator=rec["annotator"],
                label=parse_label(rec["label"]) if rec.get("label") else None,
                status=rec["status"],
                recorded_at=rec.get("recorded_at", 0.0),
                audit=list(rec.get("audit", [])),
            )
            session.responses[(response.post_id, response.annotator)] = response
        return session

    def summary(self) -> dict:
        return {
            "session_id": self.session_id,
            "n_items": len(self.items),
            "annotators": {a: self.progress(a)[0] for a in self.annotators()},
        }


def _session_id(policy: SamplingPolicy, item_ids: Iterable[str]) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps(policy.as_dict(), sort_keys=True).encode("utf-8"))
    for post_id in item_ids:
        digest.update(b"\x00" + post_id.encode("utf-8"))
    return digest.hexdigest()[:12]


def build_session(
    predictions: PredictionSet,
    corpus: Corpus,
    policy: SamplingPolicy,
) -> AnnotationSession:
    """Stratified session: every post whose (original) prediction is in the
    take-all set, plus a seeded sample of the remainder, shuffled.

    Stratification reads the shadow label when present so that error
    categories keep their stratum even after resolve_errors.
    """
    missing = [p.id for p in corpus if p.id not in predictions]
    if missing:
        raise ValueError(f"{len(missing)} corpus posts have no prediction (first: {missing[0]!r})")

    keep: list[str] = []
    rest: list[str] = []
    for post in corpus:
        label = predictions.get(post.id).raw_label
        (keep if label in policy.take_all_of else rest).append(post.id)

    rng = random.Random(policy.seed)
    if policy.negative_count is not None:
        n = policy.negative_count
        if n > len(rest):
            raise ValueError(f"negative_count {n} exceeds available {len(rest)}")
    else:
        n = int(len(rest) * policy.negative_fraction + 1e-9)
    sampled = rng.sample(rest, n) if n else []

    chosen = keep + sampled
    rng.shuffle(chosen)
    items = [SessionItem(post_id=pid, text=corpus.get(pid).text) for pid in chosen]
    return AnnotationSession(
        session_id=_session_id(policy, chosen),
        items=items,
        policy=policy,
    )


def save_session(session: AnnotationSession, path: str) -> None:
    """Atomic single-document write (temp file + rename)."""
    doc = json.dumps(session.to_document(), ensure_ascii=False, indent=1, sort_keys=True)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(doc + "\n")
    os.replace(tmp, path)


def load_session(path: str) -> AnnotationSession:
    with open(path, "r", encoding="utf-8") as fh:
        return AnnotationSession.from_document(json.load(fh))


def write_gold_csv(rows: list[tuple[str, Label]], stream: IO[str]) -> None:
    write_gold(stream, rows)
