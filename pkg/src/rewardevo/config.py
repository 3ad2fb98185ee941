"""Run configuration: a sectioned key-value file read with :mod:`configparser`.

Sections mirror the dataclasses they fill (``[env]``, ``[learner]``,
``[observation]``, ``[evolution]``) plus ``[run]`` and ``[signals]``. Every
key is optional; unknown keys are rejected with their section named.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .env import ConfigError, EnvConfig, ObservationScheme
from .learner import LearnerConfig
from .population import IncrementMode
from .signals import BASELINE_IDS, RANDOM_ID, REGION_IDS, SignalError, parse_signal

CONFIG_HEADER = "# rewardevo-config v1"

# Desk-scale defaults: 1/20 of the published M and m, same 10:1 ratio and round count.
DESK_ENV = EnvConfig(field_width=24, field_height=15, paddle_height=5, paddle_inset=3)
DESK_SCHEME = ObservationScheme(x_bins=12, y_bins=3, paddle_bins=3)


@dataclass(frozen=True)
class EvoConfig:
    n_goals: int = 3
    initial_signals: int = 3
    burn_in: int = 50_000
    test_len: int = 10_000
    mutations_per_round: int = 2
    increment_mode: IncrementMode = IncrementMode.ADDITIVE
    max_rounds: int = 7
    master_seed: int = 0

    def validate(self) -> None:
        if not 1 <= self.n_goals <= 3:
            raise ConfigError("evolution.n_goals must be 1..3")
        for name in ("initial_signals", "burn_in", "test_len", "max_rounds"):
            if getattr(self, name) < 1:
                raise ConfigError(f"evolution.{name} must be positive")
        if self.mutations_per_round < 0:
            raise ConfigError("evolution.mutations_per_round must be >= 0")
        if self.test_len > self.burn_in:
            raise ConfigError("evolution.test_len must not exceed evolution.burn_in")

    @property
    def final_checkpoint(self) -> int:
        target = self.burn_in
        for _ in range(self.max_rounds):
            target = _advance(target, self)
        return target


def _advance(target: int, cfg: EvoConfig) -> int:
    from .population import advance_budget

    return advance_budget(target, cfg.burn_in, cfg.increment_mode)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "evolve"
    seed: int = 0
    workers: int = 0
    output: str = "out"
    env: EnvConfig = DESK_ENV
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    observation: ObservationScheme = DESK_SCHEME
    evolution: EvoConfig = field(default_factory=EvoConfig)
    grid_signals: tuple[str, ...] = REGION_IDS + BASELINE_IDS + (RANDOM_ID,)
    baseline_signals: tuple[str, ...] = BASELINE_IDS + (RANDOM_ID,)

    def validate(self) -> None:
        if self.mode not in ("evolve", "grid", "baseline"):
            raise ConfigError(f"run.mode: unknown mode {self.mode!r}")
        for section in ("env", "learner", "evolution"):
            try:
                getattr(self, section).validate()
            except ConfigError as exc:
                msg = str(exc)
                raise ConfigError(msg if msg.startswith(section + ".") else f"{section}: {msg}") from None
        for key, ids in (("grid", self.grid_signals), ("baselines", self.baseline_signals)):
            for sid in ids:
                try:
                    parse_signal(sid)
                except SignalError:
                    raise ConfigError(f"signals.{key}: invalid signal id {sid!r}") from None

    @property
    def n_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def with_overrides(self, **changes: Any) -> "RunConfig":
        evo_changes = {}
        if changes.get("seed") is not None:
            evo_changes["master_seed"] = changes["seed"]
        cfg = dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})
        if evo_changes:
            cfg = dataclasses.replace(cfg, evolution=dataclasses.replace(cfg.evolution, **evo_changes))
        return cfg


def _coerce(section: str, key: str, raw: str, template: Any) -> Any:
    raw = raw.strip()
    try:
        if isinstance(template, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(template, enum_types()):
            return type(template)(raw)
        if isinstance(template, int):
            return int(raw.replace("_", ""))
        if isinstance(template, float):
            return float(raw)
        if isinstance(template, tuple):
            return tuple(int(x) for x in raw.replace(",", " ").split())
        return raw
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None


def enum_types() -> tuple[type, ...]:
    return (IncrementMode,)


def _fill(section: str, base: Any, items: dict[str, str]) -> Any:
    known = {f.name for f in dataclasses.fields(base)}
    changes = {}
    for key, raw in items.items():
        if key not in known:
            raise ConfigError(f"{section}.{key}: unknown key")
        changes[key] = _coerce(section, key, raw, getattr(base, key))
    try:
        return dataclasses.replace(base, **changes)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def _ids(section: str, key: str, raw: str) -> tuple[str, ...]:
    ids = tuple(t for t in raw.replace(",", " ").split() if t)
    for sid in ids:
        try:
            parse_signal(sid)
        except SignalError:
            raise ConfigError(f"{section}.{key}: invalid signal id {sid!r}") from None
    return ids


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    sections = set(parser.sections())
    allowed = {"run", "env", "learner", "observation", "evolution", "signals"}
    extra = sections - allowed
    if extra:
        raise ConfigError(f"unknown section(s): {sorted(extra)}")

    cfg = RunConfig()
    changes: dict[str, Any] = {}
    if "run" in sections:
        run = dict(parser["run"])
        for key, raw in run.items():
            if key not in ("mode", "seed", "workers", "output"):
                raise ConfigError(f"run.{key}: unknown key")
            changes[key] = _coerce("run", key, raw, getattr(cfg, key))
    if "env" in sections:
        changes["env"] = _fill("env", cfg.env, dict(parser["env"]))
    if "learner" in sections:
        changes["learner"] = _fill("learner", cfg.learner, dict(parser["learner"]))
    if "observation" in sections:
        changes["observation"] = _fill("observation", cfg.observation, dict(parser["observation"]))
    if "evolution" in sections:
        changes["evolution"] = _fill("evolution", cfg.evolution, dict(parser["evolution"]))
    if "signals" in sections:
        for key, raw in dict(parser["signals"]).items():
            if key == "grid":
                changes["grid_signals"] = _ids("signals", key, raw)
            elif key == "baselines":
                changes["baseline_signals"] = _ids("signals", key, raw)
            else:
                raise ConfigError(f"signals.{key}: unknown key")
    cfg = dataclasses.replace(cfg, **changes)
    evo_keys = dict(parser["evolution"]) if "evolution" in sections else {}
    if "seed" in changes and "master_seed" not in evo_keys:
        cfg = dataclasses.replace(cfg, evolution=dataclasses.replace(cfg.evolution, master_seed=cfg.seed))
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def emit_config(cfg: RunConfig) -> str:
    """Write every key, so a saved config documents the effective defaults."""

    def section(name: str, obj: Any) -> list[str]:
        out = [f"[{name}]"]
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if isinstance(v, tuple):
                v = ", ".join(map(str, v))
            elif isinstance(v, IncrementMode):
                v = v.value
            out.append(f"{f.name} = {v}")
        return out + [""]

    lines = [CONFIG_HEADER, "[run]", f"mode = {cfg.mode}", f"seed = {cfg.seed}",
             f"workers = {cfg.workers}", f"output = {cfg.output}", ""]
    lines += section("env", cfg.env)
    lines += section("learner", cfg.learner)
    lines += section("observation", cfg.observation)
    lines += section("evolution", cfg.evolution)
    lines += ["[signals]", f"grid = {', '.join(cfg.grid_signals)}",
              f"baselines = {', '.join(cfg.baseline_signals)}", ""]
    return "\n".join(lines)
