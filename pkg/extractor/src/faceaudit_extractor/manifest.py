"""Extraction manifests: where the images are, what they are, how to label them.

All category mapping lives here as data. The manifest supplies total maps
from each classifier-native bucket set to the record taxonomy; code never
hardcodes a bucket correspondence.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .schema import (
    AGE_LABELS,
    ATTRACT_LABELS,
    EMOTION_LABELS,
    GENDER_LABELS,
    MODEL_ORIGINS,
    PROMPT_LANGUAGES,
    RACE_LABELS,
)

SIDECAR_FIELDS = (
    "filename",
    "model",
    "model_origin",
    "prompt_emotion",
    "prompt_language",
)


class ManifestError(ValueError):
    """Raised when a manifest is malformed or internally inconsistent."""


@dataclass(frozen=True)
class ImageMetadata:
    """Generation metadata for one image, keyed by filename in the sidecar."""

    model: str
    model_origin: str
    prompt_emotion: str
    prompt_language: str

    def __post_init__(self) -> None:
        if not self.model:
            raise ManifestError("model must be non-empty")
        if self.model_origin not in MODEL_ORIGINS:
            raise ManifestError(f"unknown model_origin {self.model_origin!r}")
        if self.prompt_emotion not in EMOTION_LABELS:
            raise ManifestError(f"unknown prompt_emotion {self.prompt_emotion!r}")
        if self.prompt_language not in PROMPT_LANGUAGES:
            raise ManifestError(
                f"unknown prompt_language {self.prompt_language!r}"
            )


@dataclass(frozen=True)
class ExtractionManifest:
    """Validated description of one extraction run."""

    image_dir: Path
    metadata: dict[str, ImageMetadata]
    classifier_config: dict[str, object]
    gender_map: dict[str, str]
    race_map: dict[str, str]
    age_bucket_map: dict[str, str]
    attractiveness_map: dict[str, str] = field(default_factory=dict)

    def metadata_for(self, filename: str) -> ImageMetadata:
        try:
            return self.metadata[filename]
        except KeyError:
            raise ManifestError(
                f"image {filename!r} has no metadata entry"
            ) from None


def _check_total_map(
    name: str,
    mapping: dict[str, str],
    native: tuple[str, ...],
    targets: tuple[str, ...],
) -> None:
    """A bucket map must cover every native bucket and hit only valid labels."""
    missing = [b for b in native if b not in mapping]
    if missing:
        raise ManifestError(f"{name} misses native buckets {missing}")
    unknown = sorted(set(mapping) - set(native))
    if unknown:
        raise ManifestError(f"{name} maps unknown native buckets {unknown}")
    bad = sorted({t for t in mapping.values() if t not in targets})
    if bad:
        raise ManifestError(f"{name} targets unknown record labels {bad}")


def _load_sidecar(path: Path) -> dict[str, ImageMetadata]:
    try:
        stream = path.open("r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ManifestError(f"cannot read sidecar {path}: {exc}") from exc
    with stream:
        reader = csv.DictReader(stream)
        if reader.fieldnames is None or set(SIDECAR_FIELDS) - set(reader.fieldnames):
            raise ManifestError(
                f"sidecar {path} must have columns {', '.join(SIDECAR_FIELDS)}"
            )
        out: dict[str, ImageMetadata] = {}
        for lineno, row in enumerate(reader, start=2):
            filename = (row.get("filename") or "").strip()
            if not filename:
                raise ManifestError(f"sidecar {path} line {lineno}: empty filename")
            if filename in out:
                raise ManifestError(
                    f"sidecar {path} line {lineno}: duplicate filename {filename!r}"
                )
            out[filename] = ImageMetadata(
                model=row["model"].strip(),
                model_origin=row["model_origin"].strip(),
                prompt_emotion=row["prompt_emotion"].strip(),
                prompt_language=row["prompt_language"].strip(),
            )
    return out


def _layout_metadata(
    image_dir: Path, layout: dict[str, object]
) -> dict[str, ImageMetadata]:
    """Derive metadata from a ``<model>/<emotion>/image.png`` directory layout."""
    origins = layout.get("model_origins")
    if not isinstance(origins, dict):
        raise ManifestError("layout metadata requires a model_origins object")
    language = layout.get("prompt_language", "en")
    if not isinstance(language, str):
        raise ManifestError("layout prompt_language must be a string")
    out: dict[str, ImageMetadata] = {}
    for path in sorted(image_dir.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(image_dir)
        if len(rel.parts) != 3:
            raise ManifestError(
                f"layout mode expects <model>/<emotion>/<image>, got {rel}"
            )
        model, emotion = rel.parts[0], rel.parts[1]
        if model not in origins:
            raise ManifestError(f"model {model!r} missing from model_origins")
        out[str(rel)] = ImageMetadata(
            model=model,
            model_origin=str(origins[model]),
            prompt_emotion=emotion,
            prompt_language=language,
        )
    return out


def load_manifest(path: str | Path) -> ExtractionManifest:
    """Parse and validate a JSON manifest; relative paths resolve beside it."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ManifestError(f"manifest {path} must be a JSON object")

    base = path.parent

    image_dir_raw = data.get("image_dir")
    if not isinstance(image_dir_raw, str) or not image_dir_raw:
        raise ManifestError("manifest requires an image_dir string")
    image_dir = (base / image_dir_raw).resolve()
    if not image_dir.is_dir():
        raise ManifestError(f"image_dir {image_dir} is not a directory")

    sidecar = data.get("sidecar")
    layout = data.get("layout")
    if (sidecar is None) == (layout is None):
        raise ManifestError(
            "manifest must supply exactly one of sidecar or layout metadata"
        )
    if sidecar is not None:
        if not isinstance(sidecar, str):
            raise ManifestError("sidecar must be a path string")
        metadata = _load_sidecar((base / sidecar).resolve())
    else:
        if not isinstance(layout, dict):
            raise ManifestError("layout must be an object")
        metadata = _layout_metadata(image_dir, layout)

    classifier_config = data.get("classifier")
    if not isinstance(classifier_config, dict):
        raise ManifestError("manifest requires a classifier object")

    maps: dict[str, dict[str, str]] = {}
    for key, required in (
        ("gender_map", True),
        ("race_map", True),
        ("age_bucket_map", True),
        ("attractiveness_map", False),
    ):
        raw = data.get(key)
        if raw is None:
            if required:
                raise ManifestError(f"manifest requires {key}")
            maps[key] = {}
            continue
        if not isinstance(raw, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in raw.items()
        ):
            raise ManifestError(f"{key} must map strings to strings")
        maps[key] = dict(raw)

    manifest = ExtractionManifest(
        image_dir=image_dir,
        metadata=metadata,
        classifier_config=classifier_config,
        gender_map=maps["gender_map"],
        race_map=maps["race_map"],
        age_bucket_map=maps["age_bucket_map"],
        attractiveness_map=maps["attractiveness_map"],
    )
    return manifest


def validate_maps(manifest: ExtractionManifest, classifier) -> None:
    """Check every bucket map is total over the classifier's native buckets."""
    _check_total_map(
        "gender_map", manifest.gender_map, classifier.native_genders, GENDER_LABELS
    )
    _check_total_map(
        "race_map", manifest.race_map, classifier.native_races, RACE_LABELS
    )
    _check_total_map(
        "age_bucket_map", manifest.age_bucket_map, classifier.native_ages, AGE_LABELS
    )
    if manifest.attractiveness_map:
        _check_total_map(
            "attractiveness_map",
            manifest.attractiveness_map,
            classifier.native_attractiveness,
            ATTRACT_LABELS,
        )
