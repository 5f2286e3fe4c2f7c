"""Suggested starting checkpoints per task and language.

This is reference data, not a restriction: `fine_tune` accepts any local
checkpoint directory or hub name. The registry just names the encoders we
found worth trying first for each task, so configs can point at them by
a short name.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .config import TASKS, ValidationError

LANGUAGES = ("english", "spanish")


@lru_cache(maxsize=1)
def _load() -> dict:
    text = resources.files("probexport.data").joinpath("checkpoints.json").read_text("utf-8")
    return json.loads(text)


def known_checkpoints(task: str, language: str = "english") -> tuple[str, ...]:
    """Checkpoint names suggested for a task/language pair."""
    if task not in TASKS:
        raise ValidationError(f"task must be one of {list(TASKS)}, got {task!r}")
    if language not in LANGUAGES:
        raise ValidationError(f"language must be one of {list(LANGUAGES)}, got {language!r}")
    return tuple(_load()[task][language])
