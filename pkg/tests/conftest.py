from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def make_record(**overrides):
    """A valid record with overridable fields, for terse test construction."""
    from faceaudit.records import AttributeRecord

    defaults = dict(
        image_id="img-0",
        model="flux",
        model_origin="western",
        prompt_emotion="neutral",
        prompt_language="en",
        gender="male",
        race="white",
        age="20-39",
    )
    defaults.update(overrides)
    return AttributeRecord(**defaults)
