"""Face-attribute classifier backends.

A classifier exposes its *native* bucket vocabulary (typically finer than the
record taxonomy) and returns one :class:`NativeLabels` per detected face, or
``None`` when no face is found. Mapping native buckets to record labels is
the manifest's job, not the classifier's.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol

from PIL import Image

NATIVE_GENDERS = ("Male", "Female")
NATIVE_RACES = (
    "White",
    "Black",
    "East Asian",
    "Southeast Asian",
    "Indian",
    "Middle Eastern",
    "Latino_Hispanic",
)
NATIVE_AGES = (
    "0-2",
    "3-9",
    "10-19",
    "20-29",
    "30-39",
    "40-49",
    "50-59",
    "60-69",
    "70+",
)
NATIVE_ATTRACTIVENESS = ("low", "medium", "high")


class ClassifierUnavailableError(RuntimeError):
    """The configured classifier backend cannot be constructed."""


@dataclass(frozen=True)
class NativeLabels:
    """One face's labels in the classifier's native vocabulary."""

    gender: str
    race: str
    age: str
    attractiveness: str
    gender_confidence: float


class Classifier(Protocol):
    native_genders: tuple[str, ...]
    native_races: tuple[str, ...]
    native_ages: tuple[str, ...]
    native_attractiveness: tuple[str, ...]

    def classify(self, image: Image.Image) -> NativeLabels | None:
        """Label the most prominent face, or return None if none is found."""
        ...


class StubClassifier:
    """Deterministic stand-in for a real face-attribute model.

    Labels are derived from a SHA-256 digest of the decoded pixel data, so
    the same image always yields the same labels regardless of filename or
    location. A perfectly uniform image contains no structure to detect, so
    it is treated as having no face.
    """

    native_genders = NATIVE_GENDERS
    native_races = NATIVE_RACES
    native_ages = NATIVE_AGES
    native_attractiveness = NATIVE_ATTRACTIVENESS

    def classify(self, image: Image.Image) -> NativeLabels | None:
        pixels = image.convert("RGB").tobytes()
        if len(set(pixels[i : i + 3] for i in range(0, len(pixels), 3))) <= 1:
            return None
        digest = hashlib.sha256(pixels).digest()
        return NativeLabels(
            gender=NATIVE_GENDERS[digest[0] % len(NATIVE_GENDERS)],
            race=NATIVE_RACES[digest[1] % len(NATIVE_RACES)],
            age=NATIVE_AGES[digest[2] % len(NATIVE_AGES)],
            attractiveness=NATIVE_ATTRACTIVENESS[
                digest[3] % len(NATIVE_ATTRACTIVENESS)
            ],
            gender_confidence=round(0.5 + digest[4] / 512, 4),
        )


_BACKENDS: dict[str, type] = {"stub": StubClassifier}


def get_classifier(config: dict[str, object]) -> Classifier:
    """Construct the classifier named by ``config["name"]``.

    An unknown or uninstantiable backend is a fatal configuration error.
    """
    name = config.get("name")
    if not isinstance(name, str) or name not in _BACKENDS:
        raise ClassifierUnavailableError(
            f"classifier backend {name!r} is not available; "
            f"known backends: {', '.join(sorted(_BACKENDS))}"
        )
    return _BACKENDS[name]()
