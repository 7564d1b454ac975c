"""The downstream record taxonomy, restated as an output contract.

These label sets mirror the JSONL schema the audit engine ingests. They are
duplicated here on purpose: the contract is defined at the file-format
boundary, and this package must be installable without the engine present.
"""

from __future__ import annotations

GENDER_LABELS = ("male", "female")
RACE_LABELS = ("white", "black", "asian", "indian", "latino")
AGE_LABELS = ("0-9", "10-19", "20-39", "40-59", "60+")
ATTRACT_LABELS = ("low", "medium", "high")
EMOTION_LABELS = (
    "neutral",
    "happy",
    "sad",
    "angry",
    "surprised",
    "disgusted",
    "fearful",
    "unhappy",
)
MODEL_ORIGINS = ("western", "chinese", "other")
PROMPT_LANGUAGES = ("en", "zh", "other")
