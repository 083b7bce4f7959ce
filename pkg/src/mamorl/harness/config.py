"""Experiment configuration files.

Grammar (one statement per line)::

    # comment            (also ``;``; full-line only)
    [section]            one of env, train, preference, experiment, eval
    key = value

Values are typed by the field they set: integers, floats (``1e-3`` is fine),
strings (bare, no quotes) and comma-separated lists for tuple fields
(``seeds = 0, 1, 2``). Keys before the first section header, unknown keys,
repeated keys, bad values and range or cross-field violations are rejected
with the offending line number. Missing keys keep their defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, get_type_hints

from ..envs import EnvConfig
from ..errors import ConfigError, ConfigParseError
from ..training import VARIANTS, PreferenceConfig, TrainConfig

SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class EvalConfig:
    n_states: int = 128
    grid_size: int = 11
    front_states: int = 16

    def __post_init__(self) -> None:
        if self.n_states < 1 or self.front_states < 1:
            raise ConfigError("n_states and front_states must be >= 1")
        if self.grid_size < 1:
            raise ConfigError("grid_size must be >= 1")


@dataclass(frozen=True)
class ExperimentSection:
    variants: tuple[str, ...] = ("aa", "ip", "scalarized")
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs"

    def __post_init__(self) -> None:
        if not self.variants:
            raise ConfigError("variants must not be empty")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; expected a subset of {VARIANTS}")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigError("variants must not repeat")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        for s in self.seeds:
            if not 0 <= s <= SEED_MAX:
                raise ConfigError(f"seed {s} is not a 64-bit unsigned integer")
        if not self.output_dir:
            raise ConfigError("output_dir must not be empty")


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    preference: PreferenceConfig = field(default_factory=PreferenceConfig)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self) -> None:
        check_case(self.preference.case, self.experiment.variants)

    @property
    def variants(self) -> tuple[str, ...]:
        return self.experiment.variants

    @property
    def seeds(self) -> tuple[int, ...]:
        return self.experiment.seeds

    @property
    def output_dir(self) -> str:
        return self.experiment.output_dir

    def replace(self, **sections: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **sections)


def check_case(case: str, variants) -> None:
    """Uniform-random preferences go with gp only; observation-driven ones with everything else."""
    if case == "random":
        bad = [v for v in variants if v != "gp"]
    else:
        bad = [v for v in variants if v == "gp"]
    if bad:
        raise ConfigError(f"preference case {case!r} is incompatible with variants {bad}")


SECTIONS: dict[str, type] = {
    "env": EnvConfig,
    "train": TrainConfig,
    "preference": PreferenceConfig,
    "experiment": ExperimentSection,
    "eval": EvalConfig,
}


def _convert(raw: str, hint: Any, key: str):
    text = raw.strip()
    if hint is int:
        try:
            return int(text, 10)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {text!r}") from None
    if hint is float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {text!r}") from None
    if hint is str:
        if not text:
            raise ConfigError(f"{key} expects a non-empty value")
        return text
    origin = getattr(hint, "__origin__", None)
    if origin is tuple:
        args = hint.__args__
        item = args[0]
        parts = [p for p in (s.strip() for s in text.split(",")) if p]
        values = tuple(_convert(p, item, key) for p in parts)
        if len(args) != 2 or args[1] is not Ellipsis:
            if len(values) != len(args):
                raise ConfigError(f"{key} expects {len(args)} comma-separated values, got {len(values)}")
        return values
    raise ConfigError(f"{key} has an unsupported type")  # pragma: no cover


def _hints(cls: type) -> dict[str, Any]:
    return get_type_hints(cls)


def parse_config(text: str) -> ExperimentConfig:
    """Parse experiment config text; raises :class:`ConfigParseError` with a line number."""
    entries: dict[str, list[tuple[int, str, Any]]] = {name: [] for name in SECTIONS}
    seen: dict[tuple[str, str], int] = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(f"malformed section header {line!r}", lineno)
            name = line[1:-1].strip()
            if name not in SECTIONS:
                raise ConfigParseError(f"unknown section [{name}]", lineno)
            section = name
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigParseError("key outside any [section]", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        hints = _hints(SECTIONS[section])
        if key not in hints:
            raise ConfigParseError(f"unknown key {key!r} in [{section}]", lineno)
        if (section, key) in seen:
            raise ConfigParseError(f"{key!r} already set on line {seen[section, key]}", lineno)
        seen[section, key] = lineno
        try:
            converted = _convert(value, hints[key], key)
        except ConfigError as exc:
            raise ConfigParseError(str(exc), lineno) from None
        entries[section].append((lineno, key, converted))

    built = {name: _build_section(cls, entries[name]) for name, cls in SECTIONS.items()}
    try:
        return ExperimentConfig(**built)
    except ConfigError as exc:
        lines = [ln for name in ("preference", "experiment") for ln, k, _ in entries[name] if k in ("case", "variants")]
        raise ConfigParseError(str(exc), max(lines) if lines else 0) from None


def _build_section(cls: type, items: list[tuple[int, str, Any]]):
    try:
        return cls(**{k: v for _, k, v in items})
    except ConfigError as exc:
        final = exc
    # Blame the last line whose assignment turned a valid prefix invalid.
    blame = items[-1][0]
    valid = True
    for n in range(len(items) + 1):
        try:
            cls(**{k: v for _, k, v in items[:n]})
            valid = True
        except ConfigError:
            if valid and n > 0:
                blame = items[n - 1][0]
            valid = False
    raise ConfigParseError(str(final), blame) from None


def _format(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(config: ExperimentConfig) -> str:
    """Text that :func:`parse_config` maps back to an equal config; every field is written."""
    out: list[str] = []
    for name in SECTIONS:
        out.append(f"[{name}]")
        section = getattr(config, name)
        for f in dataclasses.fields(section):
            out.append(f"{f.name} = {_format(getattr(section, f.name))}")
        out.append("")
    return "\n".join(out)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
