"""Experiment configuration: ``key = value`` text files.

Lines starting with ``#`` or ``;`` are comments.  Rates accept a ``bits`` or
``nats`` suffix (``rate = 1.5 bits``); a bare number is read as nats.  Keys
are validated against the chosen scenario so typos surface as configuration
errors that name the offending field.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

SCENARIOS = ("channel", "sc-channel", "bc", "mac", "compress", "se", "alloc", "wz", "gp")
COMMON_KEYS = frozenset({"scenario", "trials", "seed", "out"})
_REQUIRED = object()
REQUIRED = _REQUIRED  # sentinel default: the field must be present


def parse_rate(text: str, field_name: str = "rate") -> float:
    """``"1.5 bits"`` / ``"1.04 nats"`` / ``"1.04"`` to nats."""
    parts = str(text).strip().lower().split()
    try:
        if len(parts) == 1:
            for unit in ("bits", "nats", "bit", "nat"):
                if parts[0].endswith(unit) and len(parts[0]) > len(unit):
                    parts = [parts[0][: -len(unit)], unit]
                    break
        value = float(parts[0])
    except (IndexError, ValueError):
        raise ConfigError(f"{field_name}: cannot parse rate {text!r}", field_name) from None
    unit = parts[1] if len(parts) > 1 else "nats"
    if len(parts) > 2 or unit not in ("bits", "bit", "nats", "nat"):
        raise ConfigError(f"{field_name}: unit must be 'bits' or 'nats', got {text!r}", field_name)
    return value * math.log(2) if unit.startswith("bit") else value


@dataclass
class ExperimentConfig:
    """Scenario name plus raw values; typed access through the ``get_*`` helpers."""

    scenario: str
    values: dict = field(default_factory=dict)
    trials: int = 1
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}", "scenario")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be an integer >= 1", "trials")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")

    # -- typed access -----------------------------------------------------
    def has(self, key: str) -> bool:
        return key in self.values

    def _raw(self, key: str, default):
        if key in self.values:
            return self.values[key]
        if default is _REQUIRED:
            raise ConfigError(f"missing required field {key!r}", key)
        return default

    def get_str(self, key: str, default=None) -> str | None:
        v = self._raw(key, default)
        return None if v is None else str(v)

    def get_int(self, key: str, default=None) -> int | None:
        v = self._raw(key, default)
        if v is None or isinstance(v, int):
            return v
        try:
            f = float(v)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {v!r}", key) from None
        if not f.is_integer():
            raise ConfigError(f"{key}: expected an integer, got {v!r}", key)
        return int(f)

    def get_float(self, key: str, default=None) -> float | None:
        v = self._raw(key, default)
        if v is None or isinstance(v, float):
            return v
        try:
            f = float(v)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {v!r}", key) from None
        if not math.isfinite(f):
            raise ConfigError(f"{key}: must be finite", key)
        return f

    def get_rate(self, key: str, default=None) -> float | None:
        v = self._raw(key, default)
        return None if v is None else (v if isinstance(v, float) else parse_rate(v, key))

    def get_rates(self, key: str) -> list[float]:
        """Comma-separated list of rates."""
        raw = self.get_str(key, _REQUIRED)
        return [parse_rate(part, key) for part in raw.split(",") if part.strip()]

    def get_bool(self, key: str, default=None) -> bool | None:
        v = self._raw(key, default)
        if v is None or isinstance(v, bool):
            return v
        s = str(v).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {v!r}", key)

    def check_keys(self, allowed: frozenset) -> None:
        unknown = sorted(set(self.values) - allowed - COMMON_KEYS)
        if unknown:
            raise ConfigError(f"unknown field(s) for scenario {self.scenario!r}: {', '.join(unknown)}", unknown[0])


def parse_config_text(text: str, overrides: dict | None = None, scenario: str | None = None) -> ExperimentConfig:
    """Parse ``key = value`` text; ``overrides`` (e.g. CLI flags) win."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",), strict=True)
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}", "config") from None
    values = {}
    for sect in parser.sections():
        values.update(parser[sect])
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if scenario is not None:
        if "scenario" in values and values["scenario"] != scenario:
            raise ConfigError(f"config is for scenario {values['scenario']!r}, not {scenario!r}", "scenario")
        values["scenario"] = scenario
    if "scenario" not in values:
        raise ConfigError("missing required field 'scenario'", "scenario")
    probe = ExperimentConfig(values["scenario"], values)
    trials = probe.get_int("trials", 1)
    seed = probe.get_int("seed", 0)
    return ExperimentConfig(values["scenario"], values, trials, seed, values.get("out"))


def load_config(path: str | Path | None, overrides: dict | None = None, scenario: str | None = None) -> ExperimentConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}", "config") from None
    return parse_config_text(text, overrides, scenario)
