"""Label vocabulary and prediction containers shared across the toolkit."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator, Mapping


class Label(str, Enum):
    """Topical judgment for one post.

    The first three values are semantic labels; the last two mark
    adjudication failures and never come from a human annotator.
    """

    OPIOID_RELATED = "opioid-related"
    NOT_OPIOID_RELATED = "not-opioid-related"
    UNSURE = "unsure"
    CONTENT_RESTRICTION_ERROR = "content-restriction-error"
    API_ERROR = "api-error"

    def __str__(self) -> str:  # keep wire form when interpolated
        return self.value


SEMANTIC_LABELS = frozenset(
    {Label.OPIOID_RELATED, Label.NOT_OPIOID_RELATED, Label.UNSURE}
)
ERROR_LABELS = frozenset({Label.CONTENT_RESTRICTION_ERROR, Label.API_ERROR})


def parse_label(value: str) -> Label:
    try:
        return Label(value)
    except ValueError:
        raise ValueError(f"unknown label {value!r}") from None


@dataclass
class Prediction:
    """One predictor judgment for one post.

    ``shadow_label`` preserves the raw adjudication outcome (including error
    categories) after errors have been folded into a binary-ready label.
    """

    post_id: str
    label: Label
    shadow_label: Label | None = None
    transcript_ref: str | None = None

    @property
    def raw_label(self) -> Label:
        """The label as originally produced, before any error folding."""
        return self.shadow_label if self.shadow_label is not None else self.label


@dataclass
class PredictionSet:
    """All predictions of one predictor over a corpus, keyed by post id."""

    predictor_id: str
    entries: dict[str, Prediction] = field(default_factory=dict)

    def add(self, prediction: Prediction) -> None:
        self.entries[prediction.post_id] = prediction

    def get(self, post_id: str) -> Prediction | None:
        return self.entries.get(post_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self.entries

    def __iter__(self) -> Iterator[Prediction]:
        return iter(self.entries.values())

    def labels(self) -> dict[str, Label]:
        return {p.post_id: p.label for p in self}

    def to_jsonl(self, stream: IO[str]) -> None:
        for p in self:
            stream.write(
                json.dumps(
                    {
                        "post_id": p.post_id,
                        "label": p.label.value,
                        "shadow_label": p.shadow_label.value if p.shadow_label else None,
                        "predictor_id": self.predictor_id,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    @classmethod
    def from_jsonl(cls, stream: IO[str], predictor_id: str | None = None) -> "PredictionSet":
        result: PredictionSet | None = None
        for line in stream:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            rec_predictor = rec.get("predictor_id") or predictor_id or "unknown"
            if result is None:
                result = cls(predictor_id=predictor_id or rec_predictor)
            shadow = rec.get("shadow_label")
            result.add(
                Prediction(
                    post_id=rec["post_id"],
                    label=parse_label(rec["label"]),
                    shadow_label=parse_label(shadow) if shadow else None,
                )
            )
        return result if result is not None else cls(predictor_id=predictor_id or "unknown")


def read_gold(stream: IO[str]) -> dict[str, Label]:
    """Read a gold label file (CSV ``post_id,label``) into an ordered map.

    Only semantic labels are legal in gold data.
    """
    reader = csv.reader(stream)
    gold: dict[str, Label] = {}
    for row in reader:
        if not row or (row[0] == "post_id" and len(gold) == 0):
            continue
        if len(row) < 2:
            raise ValueError(f"malformed gold row: {row!r}")
        label = parse_label(row[1].strip())
        if label not in SEMANTIC_LABELS:
            raise ValueError(f"gold label must be semantic, got {label.value!r}")
        gold[row[0]] = label
    return gold


def write_gold(stream: IO[str], labels: Mapping[str, Label] | Iterable[tuple[str, Label]]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["post_id", "label"])
    items = labels.items() if isinstance(labels, Mapping) else labels
    for post_id, label in items:
        writer.writerow([post_id, label.value])
