"""Pipeline configuration: resource paths plus the tunable knobs.

Config files are plain INI with two sections:

    [paths]
    lexicon_dir = lexicons
    rules = rules/starter.rules
    code_table = code_table.csv
    alternatives = alternatives.txt      ; optional
    approvals = approvals.txt            ; optional

    [tuning]
    spell_distance1_len = 5
    spell_distance2_len = 8
    modifier_window = 6
    default_uncertainty = FIRE_FLAGGED

Relative paths resolve against the config file's own directory, so a
config can travel with its data. Every tunable is echoed into result
version labels so outputs stay attributable to their settings.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path

from . import resources
from .evaluation import AlternativeTable, RecodeApprovals, load_alternatives, load_approvals
from .lexicon import LexiconStore, load_directory
from .records import CodeTable, load_code_table
from .rules import RuleSet, UncertaintyPolicy, compile_rules


class ConfigError(Exception):
    pass


_PATH_KEYS = {"lexicon_dir", "rules", "code_table", "alternatives", "approvals"}
_TUNING_KEYS = {
    "spell_distance1_len",
    "spell_distance2_len",
    "modifier_window",
    "default_uncertainty",
}

ENV_VAR = "AUDIT_CONFIG"


@dataclass(frozen=True)
class PipelineConfig:
    lexicon_dir: Path
    rules_path: Path
    code_table_path: Path
    alternatives_path: Path | None = None
    approvals_path: Path | None = None
    spell_distance1_len: int = 5
    spell_distance2_len: int = 8
    modifier_window: int = 6
    default_uncertainty: UncertaintyPolicy = UncertaintyPolicy.FIRE_FLAGGED

    def __post_init__(self):
        for label, path in (
            ("lexicon_dir", self.lexicon_dir),
            ("rules", self.rules_path),
            ("code_table", self.code_table_path),
            ("alternatives", self.alternatives_path),
            ("approvals", self.approvals_path),
        ):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} path does not exist: {path}")
        if not (1 <= self.modifier_window <= 20):
            raise ConfigError(f"modifier_window must be 1..20, got {self.modifier_window}")
        if self.spell_distance1_len < 1:
            raise ConfigError("spell_distance1_len must be positive")
        if self.spell_distance2_len < self.spell_distance1_len:
            raise ConfigError(
                "spell_distance2_len must be >= spell_distance1_len "
                f"({self.spell_distance2_len} < {self.spell_distance1_len})"
            )

    # -- loaders ------------------------------------------------------

    def load_store(self) -> LexiconStore:
        return load_directory(self.lexicon_dir)

    def load_rules(self) -> RuleSet:
        return compile_rules(self.rules_path, default_uncertainty=self.default_uncertainty)

    def load_code_table(self) -> CodeTable:
        return load_code_table(self.code_table_path)

    def load_alternatives(self) -> AlternativeTable | None:
        if self.alternatives_path is None:
            return None
        return load_alternatives(self.alternatives_path)

    def load_approvals(self) -> RecodeApprovals | None:
        if self.approvals_path is None:
            return None
        return load_approvals(self.approvals_path)

    def classify_kwargs(self) -> dict:
        """Keyword arguments for classify_note / classify_corpus."""
        return {
            "modifier_window": self.modifier_window,
            "spell_distance1_len": self.spell_distance1_len,
            "spell_distance2_len": self.spell_distance2_len,
        }

    def version_labels(self) -> dict[str, str]:
        """Tunables as strings, for embedding in result version maps."""
        return {
            "spell_distance1_len": str(self.spell_distance1_len),
            "spell_distance2_len": str(self.spell_distance2_len),
            "modifier_window": str(self.modifier_window),
            "default_uncertainty": self.default_uncertainty.value,
        }


def _read_int(section, key: str, fallback: int, where: str) -> int:
    raw = section.get(key, None)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{where}: {key} must be an integer, got {raw!r}") from None


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path.name}: {exc}") from None

    for section in parser.sections():
        if section not in ("paths", "tuning"):
            raise ConfigError(f"{path.name}: unknown section [{section}]")
    paths = parser["paths"] if parser.has_section("paths") else {}
    tuning = parser["tuning"] if parser.has_section("tuning") else {}
    for key in paths:
        if key not in _PATH_KEYS:
            raise ConfigError(f"{path.name}: unknown key {key!r} in [paths]")
    for key in tuning:
        if key not in _TUNING_KEYS:
            raise ConfigError(f"{path.name}: unknown key {key!r} in [tuning]")

    base = path.resolve().parent

    def resolve(key: str) -> Path | None:
        raw = paths.get(key, None)
        if raw is None:
            return None
        return (base / raw).resolve() if not Path(raw).is_absolute() else Path(raw)

    lexicon_dir = resolve("lexicon_dir")
    rules_path = resolve("rules")
    code_table_path = resolve("code_table")
    if lexicon_dir is None or rules_path is None or code_table_path is None:
        missing = [
            k
            for k, v in (
                ("lexicon_dir", lexicon_dir),
                ("rules", rules_path),
                ("code_table", code_table_path),
            )
            if v is None
        ]
        raise ConfigError(f"{path.name}: [paths] missing required keys: {', '.join(missing)}")

    policy_raw = tuning.get("default_uncertainty", UncertaintyPolicy.FIRE_FLAGGED.value)
    try:
        policy = UncertaintyPolicy(policy_raw.upper())
    except ValueError:
        raise ConfigError(
            f"{path.name}: unknown default_uncertainty {policy_raw!r}"
        ) from None

    return PipelineConfig(
        lexicon_dir=lexicon_dir,
        rules_path=rules_path,
        code_table_path=code_table_path,
        alternatives_path=resolve("alternatives"),
        approvals_path=resolve("approvals"),
        spell_distance1_len=_read_int(tuning, "spell_distance1_len", 5, path.name),
        spell_distance2_len=_read_int(tuning, "spell_distance2_len", 8, path.name),
        modifier_window=_read_int(tuning, "modifier_window", 6, path.name),
        default_uncertainty=policy,
    )


def default_config() -> PipelineConfig:
    """Config over the packaged seed data, default tunables."""
    return PipelineConfig(
        lexicon_dir=resources.lexicon_dir(),
        rules_path=resources.rules_path(),
        code_table_path=resources.code_table_path(),
        alternatives_path=resources.alternatives_path(),
    )


def resolve_config(explicit: str | None = None) -> PipelineConfig:
    """Explicit path wins, then the AUDIT_CONFIG variable, then defaults."""
    if explicit:
        return load_config(explicit)
    env = os.environ.get(ENV_VAR)
    if env:
        return load_config(env)
    return default_config()
