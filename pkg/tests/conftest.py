"""Shared fixtures: shipped scenario paths and a temp-file scenario writer."""

from __future__ import annotations

from pathlib import Path

import pytest

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
CANONICAL = SCENARIOS / "canonical.xml"
MINIMAL = SCENARIOS / "minimal.xml"
FAULTY_PEER = SCENARIOS / "faulty_peer.xml"


@pytest.fixture
def write_scenario(tmp_path):
    """Write an XML string to a temp file and return its path."""
    def _write(text: str, name: str = "scenario.xml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
