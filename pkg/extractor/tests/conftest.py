from __future__ import annotations

from pathlib import Path

import pytest


@pytest.fixture
def extractor_fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"
