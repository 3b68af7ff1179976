"""Shared helpers for the narrative scripts."""

import os
from pathlib import Path


def output_dir() -> Path:
    """Directory for artefacts; ``DIFFCAL_NOTEBOOK_OUT`` overrides the default."""
    out = Path(os.environ.get("DIFFCAL_NOTEBOOK_OUT", Path(__file__).with_name("output")))
    out.mkdir(parents=True, exist_ok=True)
    return out
