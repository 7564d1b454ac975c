"""The extraction pipeline: decode, classify, map, emit.

Output ordering is deterministic: images are processed in sorted relative
path order, so the same inputs always produce byte-identical JSONL and skip
logs. Records carry only labels and metadata; no metrics are computed here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .classifiers import get_classifier
from .manifest import ExtractionManifest, ManifestError, validate_maps

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


@dataclass(frozen=True)
class SkipEntry:
    """One image excluded from the output, with the reason why."""

    filename: str
    reason: str

    def __str__(self) -> str:
        return f"{self.filename}\t{self.reason}"


@dataclass(frozen=True)
class ExtractionResult:
    records: list[dict[str, object]]
    skips: list[SkipEntry]


def _iter_image_files(image_dir: Path) -> list[Path]:
    return sorted(
        p
        for p in image_dir.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def extract(manifest: ExtractionManifest) -> ExtractionResult:
    """Run one extraction: every image becomes a record or a logged skip.

    A missing classifier backend or an incomplete bucket map is fatal; an
    image that cannot be decoded, or in which no face is found, is skipped
    and logged, and processing continues.
    """
    classifier = get_classifier(manifest.classifier_config)
    validate_maps(manifest, classifier)

    files = _iter_image_files(manifest.image_dir)
    if not files:
        raise ManifestError(f"no images found under {manifest.image_dir}")

    records: list[dict[str, object]] = []
    skips: list[SkipEntry] = []
    for path in files:
        rel = str(path.relative_to(manifest.image_dir))
        meta = manifest.metadata_for(rel)
        try:
            with Image.open(path) as img:
                img.load()
                labels = classifier.classify(img)
        except (UnidentifiedImageError, OSError) as exc:
            skips.append(SkipEntry(rel, f"undecodable image: {exc}"))
            continue
        if labels is None:
            skips.append(SkipEntry(rel, "no face detected"))
            continue
        record: dict[str, object] = {
            "image_id": Path(rel).as_posix(),
            "model": meta.model,
            "model_origin": meta.model_origin,
            "prompt_emotion": meta.prompt_emotion,
            "prompt_language": meta.prompt_language,
            "gender": manifest.gender_map[labels.gender],
            "race": manifest.race_map[labels.race],
            "age": manifest.age_bucket_map[labels.age],
            "confidences": {"gender": labels.gender_confidence},
        }
        if manifest.attractiveness_map:
            record["attractiveness"] = manifest.attractiveness_map[
                labels.attractiveness
            ]
        records.append(record)
    return ExtractionResult(records=records, skips=skips)


def write_outputs(
    result: ExtractionResult, out_path: str | Path, skip_log: str | Path | None
) -> None:
    """Write the record JSONL (sorted keys) and, optionally, the skip log."""
    out_path = Path(out_path)
    lines = [json.dumps(rec, sort_keys=True) for rec in result.records]
    out_path.write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )
    if skip_log is not None:
        Path(skip_log).write_text(
            "".join(f"{entry}\n" for entry in result.skips), encoding="utf-8"
        )
