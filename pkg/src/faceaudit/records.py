"""Canonical per-image attribute records: parsing, validation, filtering.

The JSONL schema (field names below) is the cross-language contract every
upstream extractor must emit and every downstream audit consumes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

from .schemes import (
    AGE5,
    ATTRACT3,
    EMOTION8,
    GENDER2,
    RACE5,
    AggregationMap,
    SchemeError,
)

MODEL_ORIGINS = ("western", "chinese", "other")
PROMPT_LANGUAGES = ("en", "zh", "other")

CSV_FIELDS = (
    "image_id",
    "model",
    "model_origin",
    "prompt_emotion",
    "prompt_language",
    "gender",
    "race",
    "age",
    "attractiveness",
)


class RecordError(ValueError):
    """Raised when a record violates the schema contract."""


@dataclass(frozen=True)
class AttributeRecord:
    """One generated image's labels plus generation metadata."""

    image_id: str
    model: str
    model_origin: str
    prompt_emotion: str
    prompt_language: str
    gender: str
    race: str
    age: str
    attractiveness: str | None = None
    confidences: dict[str, float] | None = None
    extra: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.image_id:
            raise RecordError("image_id must be non-empty")
        if self.model_origin not in MODEL_ORIGINS:
            raise RecordError(f"unknown model_origin {self.model_origin!r}")
        if self.prompt_language not in PROMPT_LANGUAGES:
            raise RecordError(f"unknown prompt_language {self.prompt_language!r}")
        for label, scheme in (
            (self.prompt_emotion, EMOTION8),
            (self.gender, GENDER2),
            (self.race, RACE5),
            (self.age, AGE5),
        ):
            if label not in scheme:
                raise RecordError(
                    f"unknown category {label!r} for {scheme.name}"
                )
        if self.attractiveness is not None and self.attractiveness not in ATTRACT3:
            raise RecordError(
                f"unknown category {self.attractiveness!r} for attract3"
            )
        if self.confidences is not None:
            for key, prob in self.confidences.items():
                if not (0.0 <= prob <= 1.0):
                    raise RecordError(
                        f"confidence for {key!r} outside [0, 1]: {prob}"
                    )

    def attribute(self, kind: str) -> str | None:
        """Return the stored label for an attribute kind (gender/race/age/...)."""
        if kind == "gender":
            return self.gender
        if kind == "race":
            return self.race
        if kind == "age":
            return self.age
        if kind == "attractiveness":
            return self.attractiveness
        if kind == "emotion":
            return self.prompt_emotion
        raise RecordError(f"unknown attribute kind {kind!r}")

    def to_dict(self) -> dict[str, object]:
        out: dict[str, object] = {
            "image_id": self.image_id,
            "model": self.model,
            "model_origin": self.model_origin,
            "prompt_emotion": self.prompt_emotion,
            "prompt_language": self.prompt_language,
            "gender": self.gender,
            "race": self.race,
            "age": self.age,
        }
        if self.attractiveness is not None:
            out["attractiveness"] = self.attractiveness
        if self.confidences is not None:
            out["confidences"] = dict(self.confidences)
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class Diagnostic:
    """Line-level rejection reason produced while parsing a record file."""

    line: int
    reason: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.reason}"


class StrictParseError(RecordError):
    """A diagnostic occurred while parsing in strict mode."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(f"strict mode: {diagnostic}")
        self.diagnostic = diagnostic


def record_from_dict(data: dict[str, object]) -> AttributeRecord:
    """Build a validated record from a parsed JSON object.

    Unknown fields are preserved in ``extra`` and ignored by the engine.
    """
    known = {name: data[name] for name in CSV_FIELDS if name in data}
    confidences = data.get("confidences")
    if confidences is not None and not isinstance(confidences, dict):
        raise RecordError("confidences must be an object")
    extra = {
        k: v
        for k, v in data.items()
        if k not in CSV_FIELDS and k != "confidences"
    }
    missing = [
        name
        for name in CSV_FIELDS
        if name != "attractiveness" and name not in known
    ]
    if missing:
        raise RecordError(f"missing required fields: {', '.join(missing)}")
    return AttributeRecord(
        image_id=str(known["image_id"]),
        model=str(known["model"]),
        model_origin=str(known["model_origin"]),
        prompt_emotion=str(known["prompt_emotion"]),
        prompt_language=str(known["prompt_language"]),
        gender=str(known["gender"]),
        race=str(known["race"]),
        age=str(known["age"]),
        attractiveness=(
            str(known["attractiveness"])
            if known.get("attractiveness") not in (None, "")
            else None
        ),
        confidences=confidences,
        extra=extra,
    )


def _parse_jsonl(stream: TextIO) -> Iterable[tuple[int, AttributeRecord | Diagnostic]]:
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, Diagnostic(lineno, f"invalid JSON: {exc.msg}")
            continue
        if not isinstance(data, dict):
            yield lineno, Diagnostic(lineno, "line is not a JSON object")
            continue
        try:
            yield lineno, record_from_dict(data)
        except (RecordError, SchemeError) as exc:
            yield lineno, Diagnostic(lineno, str(exc))


def _parse_csv(stream: TextIO) -> Iterable[tuple[int, AttributeRecord | Diagnostic]]:
    reader = csv.DictReader(stream)
    # DictReader consumes the header as line 1; data starts at line 2.
    for lineno, row in enumerate(reader, start=2):
        data: dict[str, object] = {
            k: v for k, v in row.items() if k is not None and v not in (None, "")
        }
        try:
            yield lineno, record_from_dict(data)
        except (RecordError, SchemeError) as exc:
            yield lineno, Diagnostic(lineno, str(exc))


def parse_records(
    source: str | Path | TextIO,
    *,
    fmt: str | None = None,
    strict: bool = False,
) -> tuple[list[AttributeRecord], list[Diagnostic]]:
    """Parse a JSONL or CSV record file.

    Format is auto-detected from the file extension unless ``fmt`` forces
    one of ``jsonl``/``csv``. Malformed lines become diagnostics and are
    skipped; in strict mode the first diagnostic raises ``StrictParseError``.
    """
    close = False
    if isinstance(source, (str, Path)):
        path = Path(source)
        if fmt is None:
            fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
        try:
            stream: TextIO = path.open("r", encoding="utf-8")
        except OSError as exc:
            raise RecordError(f"cannot read {path}: {exc}") from exc
        close = True
    else:
        stream = source
        if fmt is None:
            fmt = "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise RecordError(f"unknown record format {fmt!r}")

    accepted: list[tuple[int, AttributeRecord]] = []
    diagnostics: list[Diagnostic] = []
    try:
        parser = _parse_jsonl if fmt == "jsonl" else _parse_csv
        for lineno, item in parser(stream):
            if isinstance(item, Diagnostic):
                if strict:
                    raise StrictParseError(item)
                diagnostics.append(item)
            else:
                accepted.append((lineno, item))
    finally:
        if close:
            stream.close()

    seen: set[tuple[str, str]] = set()
    records: list[AttributeRecord] = []
    for lineno, rec in accepted:
        key = (rec.model, rec.image_id)
        if key in seen:
            diag = Diagnostic(
                lineno, f"duplicate (model, image_id) pair {key!r}"
            )
            if strict:
                raise StrictParseError(diag)
            diagnostics.append(diag)
        else:
            seen.add(key)
            records.append(rec)
    return records, diagnostics


def write_jsonl(records: Iterable[AttributeRecord], stream: TextIO) -> None:
    for rec in records:
        stream.write(json.dumps(rec.to_dict(), sort_keys=True))
        stream.write("\n")


def write_csv(records: Iterable[AttributeRecord], stream: TextIO) -> None:
    """CSV alternative; absent attractiveness becomes an empty cell."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for rec in records:
        writer.writerow(
            [
                rec.image_id,
                rec.model,
                rec.model_origin,
                rec.prompt_emotion,
                rec.prompt_language,
                rec.gender,
                rec.race,
                rec.age,
                rec.attractiveness or "",
            ]
        )


def serialize_records(records: Iterable[AttributeRecord], fmt: str = "jsonl") -> str:
    buf = io.StringIO()
    if fmt == "jsonl":
        write_jsonl(records, buf)
    elif fmt == "csv":
        write_csv(records, buf)
    else:
        raise RecordError(f"unknown record format {fmt!r}")
    return buf.getvalue()


def aggregate_label(label: str, mapping: AggregationMap) -> str:
    """Relabel one category through an aggregation map."""
    return mapping.apply(label)


def aggregate_records(
    records: Iterable[AttributeRecord], mapping: AggregationMap
) -> list[str]:
    """Relabel the mapped attribute of every record into the target scheme.

    Records themselves always store the fine taxonomy; this returns one
    target-scheme label per record, preserving multiplicity.
    """
    kind = mapping.source.attribute_kind
    out = []
    for rec in records:
        value = rec.attribute(kind)
        if value is None:
            raise RecordError(
                f"record {rec.image_id!r} lacks attribute {kind!r}"
            )
        out.append(mapping.apply(value))
    return out


def filter_records(
    records: Iterable[AttributeRecord],
    selector: dict[str, str] | None = None,
    **kwargs: str,
) -> list[AttributeRecord]:
    """Select records matching every present selector field, in stable order.

    Recognized fields: model, model_origin, prompt_emotion, prompt_language.
    """
    sel = dict(selector or {})
    sel.update(kwargs)
    allowed = {"model", "model_origin", "prompt_emotion", "prompt_language"}
    unknown = set(sel) - allowed
    if unknown:
        raise RecordError(f"unknown selector fields {sorted(unknown)}")
    if "model_origin" in sel and sel["model_origin"] not in MODEL_ORIGINS:
        raise RecordError(f"unknown model_origin {sel['model_origin']!r}")
    if "prompt_emotion" in sel and sel["prompt_emotion"] not in EMOTION8:
        raise RecordError(f"unknown category {sel['prompt_emotion']!r} for emotion8")
    if "prompt_language" in sel and sel["prompt_language"] not in PROMPT_LANGUAGES:
        raise RecordError(f"unknown prompt_language {sel['prompt_language']!r}")
    return [
        rec
        for rec in records
        if all(getattr(rec, name) == value for name, value in sel.items())
    ]
