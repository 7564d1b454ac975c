"""Confusion-matrix validation of attribute classifiers.

Truth may come from annotated datasets or from prompt-specified attributes
of controlled generations; either way it is a record set joined on image_id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .records import AttributeRecord
from .schemes import AggregationMap, CategoryScheme, resolve_attribute


class ValidationError(ValueError):
    """Raised when confusion-matrix inputs are unusable."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix, rows = truth, columns = prediction."""

    scheme: CategoryScheme
    counts: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self) -> None:
        k = len(self.scheme)
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValidationError(
                f"counts must be {k}x{k} for scheme {self.scheme.name}"
            )
        if any(c < 0 for row in self.counts for c in row):
            raise ValidationError("counts must be non-negative")
        total = sum(c for row in self.counts for c in row)
        if total != self.n:
            raise ValidationError(f"n={self.n} but entries sum to {total}")

    def to_dict(self) -> dict[str, object]:
        return {
            "scheme": self.scheme.name,
            "categories": list(self.scheme.categories),
            "counts": [list(row) for row in self.counts],
            "n": self.n,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        """Aligned truth-by-prediction table."""
        labels = self.scheme.categories
        width = max(len(lab) for lab in labels)
        width = max(width, max(len(str(c)) for row in self.counts for c in row))
        header = " " * (width + 2) + " ".join(f"{lab:>{width}}" for lab in labels)
        lines = [header]
        for lab, row in zip(labels, self.counts):
            cells = " ".join(f"{c:>{width}}" for c in row)
            lines.append(f"{lab:>{width}}  {cells}")
        return "\n".join(lines)


def confusion_matrix(
    truth: Sequence[AttributeRecord],
    predicted: Sequence[AttributeRecord],
    attribute: str,
    aggregation: AggregationMap | None = None,
) -> tuple[ConfusionMatrix, list[str]]:
    """Count truth-vs-prediction pairs joined on image_id.

    Returns the matrix plus the ids present in only one side (excluded).
    The attribute name is report-facing (e.g. race4): storage labels are
    aggregated on the fly, or through an explicit ``aggregation`` override.
    """
    storage, agg = resolve_attribute(attribute)
    if aggregation is not None:
        if aggregation.source != storage:
            raise ValidationError(
                f"aggregation source {aggregation.source.name} does not match "
                f"storage scheme {storage.name}"
            )
        agg = aggregation
    scheme = agg.target if agg is not None else storage
    kind = storage.attribute_kind

    def label_of(rec: AttributeRecord) -> str:
        value = rec.attribute(kind)
        if value is None:
            raise ValidationError(
                f"record {rec.image_id!r} lacks attribute {kind!r}"
            )
        return agg.apply(value) if agg is not None else value

    truth_by_id = {rec.image_id: rec for rec in truth}
    pred_by_id = {rec.image_id: rec for rec in predicted}
    matched = sorted(set(truth_by_id) & set(pred_by_id))
    unmatched = sorted(set(truth_by_id) ^ set(pred_by_id))
    if not matched:
        raise ValidationError("no image_ids shared between truth and predictions")

    k = len(scheme)
    counts = [[0] * k for _ in range(k)]
    for image_id in matched:
        t = scheme.index(label_of(truth_by_id[image_id]))
        p = scheme.index(label_of(pred_by_id[image_id]))
        counts[t][p] += 1
    cm = ConfusionMatrix(
        scheme=scheme,
        counts=tuple(tuple(row) for row in counts),
        n=len(matched),
    )
    return cm, unmatched


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.n <= 0:
        raise ValidationError("empty confusion matrix")
    return sum(cm.counts[i][i] for i in range(len(cm.scheme))) / cm.n


def per_class_recall(cm: ConfusionMatrix) -> tuple[float | None, ...]:
    """Diagonal over row sums; None where a class has no truth samples."""
    if cm.n <= 0:
        raise ValidationError("empty confusion matrix")
    out: list[float | None] = []
    for i, row in enumerate(cm.counts):
        total = sum(row)
        out.append(row[i] / total if total > 0 else None)
    return tuple(out)


def merge_confusion(cm: ConfusionMatrix, mapping: AggregationMap) -> ConfusionMatrix:
    """Fold rows and columns through an aggregation map; n is preserved."""
    if mapping.source != cm.scheme:
        raise ValidationError(
            f"aggregation source {mapping.source.name} does not match "
            f"matrix scheme {cm.scheme.name}"
        )
    target = mapping.target
    k = len(target)
    counts = [[0] * k for _ in range(k)]
    for i, src_row in enumerate(cm.scheme.categories):
        ti = target.index(mapping.apply(src_row))
        for j, src_col in enumerate(cm.scheme.categories):
            tj = target.index(mapping.apply(src_col))
            counts[ti][tj] += cm.counts[i][j]
    return ConfusionMatrix(
        scheme=target,
        counts=tuple(tuple(row) for row in counts),
        n=cm.n,
    )
