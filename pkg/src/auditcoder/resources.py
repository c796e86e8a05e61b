"""Access to the packaged seed data: lexicons, rules, code table."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .lexicon import LexiconStore, load_directory


def data_dir() -> Path:
    return Path(resources.files("auditcoder") / "data")  # type: ignore[arg-type]


def lexicon_dir() -> Path:
    return data_dir() / "lexicons"


def rules_path() -> Path:
    return data_dir() / "rules" / "starter.rules"


def code_table_path() -> Path:
    return data_dir() / "code_table.csv"


def alternatives_path() -> Path:
    return data_dir() / "alternatives.txt"


def default_store() -> LexiconStore:
    return load_directory(lexicon_dir())
