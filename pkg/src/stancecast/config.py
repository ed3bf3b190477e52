"""Declarative pipeline configuration.

One JSON file drives every subcommand; command-line flags only override
individual keys. Validation happens before any output is touched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .learning.classifiers import FAMILIES

# Default period cutoffs for the Brexit subreddit case study: fifteen
# event-aligned intervals from late 2015 to early 2019.
BREXIT_PERIOD_CUTOFFS = (
    "2015-11-16", "2016-06-25", "2016-07-14", "2016-12-08", "2017-01-27",
    "2017-03-30", "2017-06-20", "2018-07-09", "2018-09-22", "2018-11-16",
    "2018-11-26", "2019-01-16", "2019-03-15", "2019-03-22", "2019-03-30",
    "2019-04-05",
)


class ConfigError(Exception):
    """The configuration file is missing, unreadable, or invalid."""


@dataclass
class LabelerParams:
    alpha: float = 1.0
    min_messages: int = 50
    extreme_fraction: float = 0.10
    lower_cutoff: float = 0.25
    upper_cutoff: float = 0.75
    rare_df: int = 5
    holdout_fraction: float = 0.2
    distinct_hashtags: bool = False


@dataclass
class FeatureParams:
    vocab_size: int = 100
    sets: tuple[str, ...] = ("FS0", "FS1", "FS2", "FS3", "FS4", "FS5")


@dataclass
class LearningParams:
    families: tuple[str, ...] = FAMILIES
    outer_k: int = 10
    inner_k: int = 5
    search_iters: int = 500
    group_by_user: bool = False
    per_transition: bool = False
    spaces: dict[str, dict] = field(default_factory=dict)


@dataclass
class SynthParams:
    n_users: int = 100
    n_periods: int = 4
    threads_per_period: int = 10
    participation: float = 1.0
    entries_per_user: int = 2
    words_per_entry: int = 8
    stance_word_prob: float = 0.6
    hashtag_prob: float = 0.25
    thread_focus: float = 0.5
    chain_bias: float = 0.0
    transition_strength: float = 1.0
    stance_vocab_size: int = 20
    common_vocab_size: int = 40
    period_seconds: int = 100_000
    start_time: int = 1_000_000


@dataclass
class PipelineConfig:
    input: Path
    output_dir: Path
    seed: int
    periods: tuple[str, ...] = BREXIT_PERIOD_CUTOFFS
    lexicon: Optional[Path] = None
    labeler: LabelerParams = field(default_factory=LabelerParams)
    features: FeatureParams = field(default_factory=FeatureParams)
    learning: LearningParams = field(default_factory=LearningParams)
    synth: SynthParams = field(default_factory=SynthParams)

    @classmethod
    def from_file(cls, path: str | Path, overrides: Optional[list[str]] = None) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        for override in overrides or []:
            _apply_override(raw, override)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        problems: list[str] = []
        seed = raw.get("seed")
        if not isinstance(seed, int) or isinstance(seed, bool):
            problems.append("'seed' is mandatory and must be an integer")
            seed = 0
        input_path = raw.get("input")
        if not isinstance(input_path, str) or not input_path:
            problems.append("'input' is mandatory and must be a path string")
            input_path = "corpus.jsonl"
        output_dir = raw.get("output_dir")
        if not isinstance(output_dir, str) or not output_dir:
            problems.append("'output_dir' is mandatory and must be a path string")
            output_dir = "out"
        periods = raw.get("periods", list(BREXIT_PERIOD_CUTOFFS))
        if (not isinstance(periods, list) or len(periods) < 2
                or not all(isinstance(p, str) for p in periods)):
            problems.append("'periods' must be a list of at least two ISO dates")
            periods = list(BREXIT_PERIOD_CUTOFFS)
        lexicon = raw.get("lexicon")
        if lexicon is not None and not isinstance(lexicon, str):
            problems.append("'lexicon' must be a path string or null")
            lexicon = None

        labeler = _section(raw, "labeler", LabelerParams, problems)
        features = _section(raw, "features", FeatureParams, problems,
                            coerce={"sets": tuple})
        learning = _section(raw, "learning", LearningParams, problems,
                            coerce={"families": tuple})
        synth = _section(raw, "synth", SynthParams, problems)

        for family in learning.families:
            if family not in FAMILIES:
                problems.append(f"unknown classifier family {family!r}")
        for set_id in features.sets:
            if set_id not in ("FS0", "FS1", "FS2", "FS3", "FS4", "FS5"):
                problems.append(f"unknown feature set {set_id!r}")
        if problems:
            raise ConfigError("invalid config: " + "; ".join(problems))
        return cls(
            input=Path(input_path),
            output_dir=Path(output_dir),
            seed=seed,
            periods=tuple(periods),
            lexicon=Path(lexicon) if lexicon else None,
            labeler=labeler,
            features=features,
            learning=learning,
            synth=synth,
        )

    def require_input(self) -> None:
        if not self.input.exists():
            raise ConfigError(f"input path does not exist: {self.input}")

    def require_lexicon(self) -> None:
        if self.lexicon is not None and not self.lexicon.exists():
            raise ConfigError(f"lexicon path does not exist: {self.lexicon}")


def _section(raw: dict, name: str, factory, problems: list[str], coerce: dict = ()):
    data = raw.get(name, {})
    if not isinstance(data, dict):
        problems.append(f"'{name}' must be a JSON object")
        return factory()
    known = {f.name for f in factory.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(data) - known
    if unknown:
        problems.append(f"unknown keys in '{name}': {sorted(unknown)}")
    kwargs: dict[str, Any] = {k: v for k, v in data.items() if k in known}
    for key, fn in (coerce or {}).items():
        if key in kwargs:
            kwargs[key] = fn(kwargs[key])
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"invalid '{name}' section: {exc}")
        return factory()


def _apply_override(raw: dict, override: str) -> None:
    """Apply a dotted `section.key=value` override; values parse as JSON."""
    if "=" not in override:
        raise ConfigError(f"override {override!r} is not of the form key=value")
    dotted, _, value_text = override.partition("=")
    try:
        value = json.loads(value_text)
    except json.JSONDecodeError:
        value = value_text
    target = raw
    parts = dotted.split(".")
    for part in parts[:-1]:
        target = target.setdefault(part, {})
        if not isinstance(target, dict):
            raise ConfigError(f"override {override!r} crosses a non-object key")
    target[parts[-1]] = value
