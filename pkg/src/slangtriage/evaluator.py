"""Confusion matrices, binarized/macro metrics, baselines, and agreement.

Conventions that matter and are easy to get wrong:

* Undefined metrics are ``None``, never 0 or NaN. Precision is undefined
  when there are no predicted positives, recall when there are no actual
  positives, F1 when either input is undefined. An all-negative baseline
  therefore reports precision and F1 as undefined, not zero.
* Binarization maps unsure to not-opioid-related on both axes.
* Confusion rows use the original (shadow) prediction, so provider error
  categories stay visible even after they were folded to negative for
  scoring.
* Partial gold sets are routine: predictions without a gold label are
  excluded from the matrix and reported as a count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from slangtriage.labels import (
    ERROR_LABELS,
    SEMANTIC_LABELS,
    Label,
    PredictionSet,
)

PRED_ROWS: tuple[Label, ...] = (
    Label.OPIOID_RELATED,
    Label.NOT_OPIOID_RELATED,
    Label.UNSURE,
    Label.CONTENT_RESTRICTION_ERROR,
    Label.API_ERROR,
)
GOLD_COLS: tuple[Label, ...] = (
    Label.OPIOID_RELATED,
    Label.NOT_OPIOID_RELATED,
    Label.UNSURE,
)

_RANK_VALUE = {
    Label.NOT_OPIOID_RELATED: 0,
    Label.UNSURE: 1,
    Label.OPIOID_RELATED: 2,
}


class MissingPredictionError(ValueError):
    def __init__(self, missing: list[str]):
        self.missing = missing
        preview = ", ".join(missing[:5])
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        super().__init__(f"gold items without predictions: {preview}{more}")


def binarize(label: Label) -> bool:
    """True iff topical. Unsure counts as negative. Semantic labels only."""
    if label in ERROR_LABELS:
        raise ValueError(f"cannot binarize error label {label.value!r}; resolve errors first")
    return label is Label.OPIOID_RELATED


@dataclass
class ConfusionMatrix3:
    """5x3 count table: predicted label rows x manual label columns.

    The last two rows hold provider error categories and are all zero for
    lexicon or human predictors.
    """

    counts: dict[tuple[Label, Label], int] = field(default_factory=dict)
    n_excluded: int = 0

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], n_excluded: int = 0) -> "ConfusionMatrix3":
        """Build from a list of 3 or 5 rows in the standard row/column order."""
        if len(rows) not in (3, 5):
            raise ValueError("expected 3 or 5 rows")
        cm = cls(n_excluded=n_excluded)
        for pred, row in zip(PRED_ROWS, rows):
            if len(row) != 3:
                raise ValueError("each row needs 3 columns")
            for gold, count in zip(GOLD_COLS, row):
                if count < 0:
                    raise ValueError("counts must be nonnegative")
                if count:
                    cm.counts[(pred, gold)] = count
        return cm

    def add(self, pred: Label, gold: Label, n: int = 1) -> None:
        if gold not in GOLD_COLS:
            raise ValueError(f"gold label must be semantic, got {gold.value!r}")
        key = (pred, gold)
        self.counts[key] = self.counts.get(key, 0) + n

    def cell(self, pred: Label, gold: Label) -> int:
        return self.counts.get((pred, gold), 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def row_sum(self, pred: Label) -> int:
        return sum(self.cell(pred, g) for g in GOLD_COLS)

    def col_sum(self, gold: Label) -> int:
        return sum(self.cell(p, gold) for p in PRED_ROWS)

    def rows(self) -> list[list[int]]:
        return [[self.cell(p, g) for g in GOLD_COLS] for p in PRED_ROWS]

    @property
    def error_total(self) -> int:
        return sum(self.row_sum(p) for p in PRED_ROWS if p in ERROR_LABELS)

    def fold_errors(self) -> "ConfusionMatrix3":
        """Move error rows into the not-opioid-related row (scoring policy)."""
        folded = ConfusionMatrix3(n_excluded=self.n_excluded)
        for (pred, gold), n in self.counts.items():
            target = Label.NOT_OPIOID_RELATED if pred in ERROR_LABELS else pred
            folded.add(target, gold, n)
        return folded

    def scaled(self, k: int) -> "ConfusionMatrix3":
        if k <= 0:
            raise ValueError("scale factor must be positive")
        out = ConfusionMatrix3(n_excluded=self.n_excluded)
        for key, n in self.counts.items():
            out.counts[key] = n * k
        return out


def confusion(predictions: PredictionSet, gold: Mapping[str, Label]) -> ConfusionMatrix3:
    """Count (original prediction, gold) pairs over the gold-labeled subset."""
    missing = [pid for pid in gold if pid not in predictions]
    if missing:
        raise MissingPredictionError(sorted(missing))
    cm = ConfusionMatrix3()
    for pred in predictions:
        gold_label = gold.get(pred.post_id)
        if gold_label is None:
            cm.n_excluded += 1
            continue
        cm.add(pred.raw_label, gold_label)
    return cm


def _div(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def _f1(precision: float | None, recall: float | None) -> float | None:
    if precision is None or recall is None:
        return None
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class BinaryMetrics:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def binary_metrics(cm: ConfusionMatrix3) -> BinaryMetrics:
    """Binarize both axes and score. Error rows count as negative predictions."""
    tp = cm.cell(Label.OPIOID_RELATED, Label.OPIOID_RELATED)
    fp = cm.row_sum(Label.OPIOID_RELATED) - tp
    positives = cm.col_sum(Label.OPIOID_RELATED)
    fn = positives - tp
    total = cm.total
    tn = total - tp - fp - fn
    precision = _div(tp, tp + fp)
    recall = _div(tp, positives)
    return BinaryMetrics(
        accuracy=_div(tp + tn, total),
        precision=precision,
        recall=recall,
        f1=_f1(precision, recall),
    )


@dataclass(frozen=True)
class MacroMetrics:
    accuracy: float | None
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def as_dict(self) -> dict[str, float | None]:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }


def macro_metrics(cm: ConfusionMatrix3) -> MacroMetrics:
    """Unweighted mean of one-vs-rest metrics over the three semantic classes.

    Requires error rows already folded (see ConfusionMatrix3.fold_errors).
    A per-class metric that is undefined contributes 0 to the mean; that
    convention is deliberate and local to this function.
    """
    if cm.error_total:
        raise ValueError("macro metrics need error rows folded to not-opioid-related first")
    precisions: list[float] = []
    recalls: list[float] = []
    f1s: list[float] = []
    diagonal = 0
    for cls in GOLD_COLS:
        tp = cm.cell(cls, cls)
        diagonal += tp
        p = _div(tp, cm.row_sum(cls))
        r = _div(tp, cm.col_sum(cls))
        f = _f1(p, r)
        precisions.append(p or 0.0)
        recalls.append(r or 0.0)
        f1s.append(f or 0.0)
    return MacroMetrics(
        accuracy=_div(diagonal, cm.total),
        macro_precision=sum(precisions) / 3,
        macro_recall=sum(recalls) / 3,
        macro_f1=sum(f1s) / 3,
    )


def baseline(kind: str, gold: Mapping[str, Label] | Iterable[Label]) -> BinaryMetrics:
    """Degenerate strategies: label everything topical, or nothing.

    ``include_all`` has recall 1 and precision equal to prevalence;
    ``exclude_all`` has recall 0 and undefined precision/F1.
    """
    labels = list(gold.values()) if isinstance(gold, Mapping) else list(gold)
    if not labels:
        raise ValueError("gold set is empty")
    positives = sum(1 for lb in labels if binarize(lb))
    total = len(labels)
    if kind == "include_all":
        precision = _div(positives, total)
        recall = _div(positives, positives)
        return BinaryMetrics(
            accuracy=_div(positives, total),
            precision=precision,
            recall=recall,
            f1=_f1(precision, recall),
        )
    if kind == "exclude_all":
        recall = 0.0 if positives else None
        return BinaryMetrics(
            accuracy=_div(total - positives, total),
            precision=None,
            recall=recall,
            f1=None,
        )
    raise ValueError(f"unknown baseline kind {kind!r}")


# --- agreement statistics ---------------------------------------------------


def _check_pair(a: Sequence[Label], b: Sequence[Label], min_len: int) -> None:
    if len(a) != len(b):
        raise ValueError(f"sequences differ in length: {len(a)} vs {len(b)}")
    if len(a) < min_len:
        raise ValueError(f"need at least {min_len} aligned items")
    for seq in (a, b):
        for lb in seq:
            if lb not in SEMANTIC_LABELS:
                raise ValueError(f"agreement inputs must be semantic labels, got {lb.value!r}")


def _kappa_from_pairs(pairs: list[tuple[object, object]]) -> tuple[float | None, float, float]:
    n = len(pairs)
    p_o = sum(1 for x, y in pairs if x == y) / n
    freq_a: dict[object, int] = {}
    freq_b: dict[object, int] = {}
    for x, y in pairs:
        freq_a[x] = freq_a.get(x, 0) + 1
        freq_b[y] = freq_b.get(y, 0) + 1
    p_e = sum(freq_a[k] * freq_b.get(k, 0) for k in freq_a) / (n * n)
    if p_e == 1.0:
        return None, p_o, p_e
    return (p_o - p_e) / (1.0 - p_e), p_o, p_e


def cohens_kappa(a: Sequence[Label], b: Sequence[Label], mode: str = "3class") -> float | None:
    """Chance-corrected agreement; None when chance agreement is total."""
    _check_pair(a, b, 1)
    if mode == "3class":
        pairs: list[tuple[object, object]] = list(zip(a, b))
    elif mode == "binarized":
        pairs = [(binarize(x), binarize(y)) for x, y in zip(a, b)]
    else:
        raise ValueError(f"unknown kappa mode {mode!r}")
    kappa, _, _ = _kappa_from_pairs(pairs)
    return kappa


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties sharing the mean of their rank block."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # block [i, j] shares ranks i+1 .. j+1
        shared = (i + j + 2) / 2
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    if vx == 0 or vy == 0:
        return None
    return cov / math.sqrt(vx * vy)


def spearman(a: Sequence[Label], b: Sequence[Label]) -> float | None:
    """Rank correlation over the 0/1/2 ordering not < unsure < related.

    Ties get average ranks. None when either sequence is constant.
    """
    _check_pair(a, b, 2)
    xs = [_RANK_VALUE[lb] for lb in a]
    ys = [_RANK_VALUE[lb] for lb in b]
    return _pearson(average_ranks(xs), average_ranks(ys))


@dataclass(frozen=True)
class AgreementReport:
    n_items: int
    kappa_3class: float | None
    kappa_binarized: float | None
    spearman_rho: float | None
    p_o: float
    p_e: float

    def as_dict(self) -> dict[str, float | int | None]:
        return {
            "n_items": self.n_items,
            "kappa_3class": self.kappa_3class,
            "kappa_binarized": self.kappa_binarized,
            "spearman_rho": self.spearman_rho,
            "p_o": self.p_o,
            "p_e": self.p_e,
        }


def agreement(a: Sequence[Label], b: Sequence[Label]) -> AgreementReport:
    """Full report on one aligned pair of annotator label sequences."""
    _check_pair(a, b, 2)
    kappa3, p_o, p_e = _kappa_from_pairs(list(zip(a, b)))
    return AgreementReport(
        n_items=len(a),
        kappa_3class=kappa3,
        kappa_binarized=cohens_kappa(a, b, "binarized"),
        spearman_rho=spearman(a, b),
        p_o=p_o,
        p_e=p_e,
    )


# --- report assembly ---------------------------------------------------------


def evaluate(predictions: PredictionSet, gold: Mapping[str, Label]) -> dict:
    """One-stop report: matrix with error rows, binarized + macro metrics,
    and both degenerate baselines over the same gold subset."""
    cm = confusion(predictions, gold)
    scored_gold = {pid: lb for pid, lb in gold.items()}
    return {
        "predictor_id": predictions.predictor_id,
        "n_scored": cm.total,
        "n_excluded_predictions": cm.n_excluded,
        "confusion": {
            "pred_rows": [p.value for p in PRED_ROWS],
            "gold_cols": [g.value for g in GOLD_COLS],
            "rows": cm.rows(),
        },
        "binarized": binary_metrics(cm).as_dict(),
        "macro": macro_metrics(cm.fold_errors()).as_dict(),
        "baselines": {
            "include_all": baseline("include_all", scored_gold).as_dict(),
            "exclude_all": baseline("exclude_all", scored_gold).as_dict(),
        },
    }


def _fmt(value: float | int | None) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, int):
        return str(value)
    return f"{value:.3f}"


def render_report(report: dict) -> str:
    """Plain-text table for terminals."""
    lines = [f"predictor: {report['predictor_id']}"]
    lines.append(f"scored items: {report['n_scored']}  (predictions without gold: {report['n_excluded_predictions']})")
    cols = report["confusion"]["gold_cols"]
    width = max(len(r) for r in report["confusion"]["pred_rows"]) + 2
    header = " " * width + "  ".join(f"{c:>22}" for c in cols)
    lines.append(header)
    for name, row in zip(report["confusion"]["pred_rows"], report["confusion"]["rows"]):
        lines.append(f"{name:<{width}}" + "  ".join(f"{n:>22}" for n in row))
    for block in ("binarized", "macro"):
        parts = "  ".join(f"{k}={_fmt(v)}" for k, v in report[block].items())
        lines.append(f"{block}: {parts}")
    for kind, metrics in report["baselines"].items():
        parts = "  ".join(f"{k}={_fmt(v)}" for k, v in metrics.items())
        lines.append(f"baseline {kind}: {parts}")
    return "\n".join(lines)
