"""Tabular Q-learning on discretized observations, with epsilon-greedy control.

The training loop is written out flat on purpose: it runs a few million
steps per experiment and attribute lookups dominate otherwise.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .env import (
    N_ACTIONS,
    ConfigError,
    EnvConfig,
    EnvState,
    Event,
    ObservationScheme,
    observe,
    reset,
    step,
)
from .goals import TestStats
from .signals import RewardSignal, SignalKind, emit_reward, parse_signal

Key = tuple[int, ...]


@dataclass(frozen=True)
class LearnerConfig:
    alpha: float = 0.3
    gamma: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 100_000
    eval_epsilon: float = 0.05
    backend: str = "tabular"
    approximator_widths: tuple[int, ...] = (32,)
    approx_lr: float = 0.01
    replay_capacity: int = 10_000
    batch_size: int = 32
    target_sync: int = 1_000
    learn_start: int = 500
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ConfigError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if not 0.0 <= self.eval_epsilon <= 1.0:
            raise ConfigError("eval_epsilon must be a probability")
        if self.epsilon_decay_steps < 0:
            raise ConfigError("epsilon_decay_steps must be >= 0")
        if self.backend not in ("tabular", "approximator"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ConfigError("replay_capacity must hold at least one batch")
        if self.target_sync < 1:
            raise ConfigError("target_sync must be >= 1")

    def epsilon(self, t: int) -> float:
        """Linear decay from ``epsilon_start`` to ``epsilon_end``."""
        if t >= self.epsilon_decay_steps:
            return self.epsilon_end
        frac = t / self.epsilon_decay_steps
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


@dataclass(frozen=True)
class Transition:
    obs_before: object
    action: int
    reward: float
    obs_after: object
    step_index: int = 0


def greedy(values: Sequence[float], rng: random.Random) -> int:
    """Argmax with ties broken uniformly at random."""
    best = max(values)
    tied = [a for a in range(len(values)) if values[a] == best]
    if len(tied) == 1:
        return tied[0]
    return tied[rng.randrange(len(tied))]


def select_action(q: dict[Key, list[float]], obs: Key, epsilon: float, rng: random.Random) -> int:
    if epsilon > 0.0 and rng.random() < epsilon:
        return rng.randrange(N_ACTIONS)
    values = q.get(obs)
    if values is None:
        return rng.randrange(N_ACTIONS)
    return greedy(values, rng)


def q_update(q: dict[Key, list[float]], t: Transition, alpha: float, gamma: float) -> dict[Key, list[float]]:
    """One Q-learning backup of ``t`` into ``q`` (in place; also returned)."""
    nxt = q.get(t.obs_after)
    future = max(nxt) if nxt is not None else 0.0
    row = q.get(t.obs_before)
    if row is None:
        row = q[t.obs_before] = [0.0] * N_ACTIONS
    row[t.action] += alpha * (t.reward + gamma * future - row[t.action])
    return q


def _run_policy(
    config: EnvConfig,
    scheme: ObservationScheme,
    q: dict[Key, list[float]] | None,
    n_steps: int,
    seed: int,
    epsilon: float,
) -> TestStats:
    """Play without learning; ``q=None`` plays uniformly at random."""
    rng = random.Random(seed)
    state = reset(config, seed)
    won = lost = 0
    intervals: list[int] = []
    last_point = 0
    get = q.get if q is not None else None
    for t in range(n_steps):
        if get is None or rng.random() < epsilon:
            a = rng.randrange(N_ACTIONS)
        else:
            values = get(observe(config, state, scheme))
            a = rng.randrange(N_ACTIONS) if values is None else greedy(values, rng)
        state = step(config, state, a)
        ev = state.last_event
        if ev is not Event.NONE:
            if ev is Event.AGENT_SCORED:
                won += 1
            else:
                lost += 1
            intervals.append(t + 1 - last_point)
            last_point = t + 1
    return TestStats(n_steps=n_steps, won=won, lost=lost, intervals=tuple(intervals), residual=n_steps - last_point)


@dataclass
class TabularLearner:
    """Q-table agent for one reward signal, with its own training environment."""

    signal: RewardSignal
    env_config: EnvConfig = field(default_factory=EnvConfig)
    config: LearnerConfig = field(default_factory=LearnerConfig)
    scheme: ObservationScheme = field(default_factory=ObservationScheme)
    q: dict[Key, list[float]] = field(default_factory=dict)
    steps: int = 0
    rng: random.Random = field(init=False, repr=False)
    state: EnvState = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.config.validate()
        self.env_config.validate()
        self.rng = random.Random(self.config.seed)
        self.state = reset(self.env_config, self.config.seed)

    @property
    def signal_id(self) -> str:
        return self.signal.id

    def train_steps(self, n_steps: int) -> list[int]:
        """Run ``n_steps`` of epsilon-greedy Q-learning; returns the reward per step."""
        if n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        cfg, ecfg, scheme, signal = self.config, self.env_config, self.scheme, self.signal
        q, rng = self.q, self.rng
        alpha, gamma = cfg.alpha, cfg.gamma
        eps_start, eps_end, decay = cfg.epsilon_start, cfg.epsilon_end, cfg.epsilon_decay_steps
        state = self.state
        key = observe(ecfg, state, scheme)
        rewards = [0] * n_steps
        t0 = self.steps
        for i in range(n_steps):
            t = t0 + i
            eps = eps_end if t >= decay else eps_start + (t / decay) * (eps_end - eps_start)
            row = q.get(key)
            if row is None or rng.random() < eps:
                a = rng.randrange(N_ACTIONS)
            else:
                a = greedy(row, rng)
            nxt = step(ecfg, state, a)
            r = emit_reward(signal, state, nxt, ecfg)
            nkey = observe(ecfg, nxt, scheme)
            if row is None:
                row = q[key] = [0.0, 0.0, 0.0]
            nrow = q.get(nkey)
            future = (nrow[0] if nrow[0] > nrow[1] else nrow[1]) if nrow is not None else 0.0
            if nrow is not None and nrow[2] > future:
                future = nrow[2]
            row[a] += alpha * (r + gamma * future - row[a])
            rewards[i] = r
            state, key = nxt, nkey
        self.state = state
        self.steps = t0 + n_steps
        return rewards

    def train_until(self, target: int) -> None:
        if target > self.steps:
            self.train_steps(target - self.steps)

    def test_run(self, n_steps: int, seed: int) -> TestStats:
        return _run_policy(self.env_config, self.scheme, self.q, n_steps, seed, self.config.eval_epsilon)

    # -- checkpoints -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "rewardevo-learner",
            "version": 1,
            "backend": "tabular",
            "signal": self.signal.id,
            "env": asdict(self.env_config),
            "learner": _config_dict(self.config),
            "scheme": asdict(self.scheme),
            "steps": self.steps,
            "rng": _rng_to_json(self.rng),
            "state": _state_to_json(self.state),
            "table": [[list(k), v] for k, v in sorted(self.q.items())],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TabularLearner":
        if data.get("format") != "rewardevo-learner" or data.get("backend") != "tabular":
            raise ValueError("not a tabular learner checkpoint")
        learner = cls(
            signal=parse_signal(data["signal"]),
            env_config=EnvConfig(**data["env"]),
            config=_config_from_dict(data["learner"]),
            scheme=ObservationScheme(**data["scheme"]),
        )
        learner.q = {tuple(k): [float(x) for x in v] for k, v in data["table"]}
        learner.steps = int(data["steps"])
        learner.rng.setstate(_rng_from_json(data["rng"]))
        learner.state = _state_from_json(data["state"])
        return learner

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "TabularLearner":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class RandomPolicy:
    """Uniform random play; nothing to train."""

    env_config: EnvConfig = field(default_factory=EnvConfig)
    steps: int = 0

    @property
    def signal_id(self) -> str:
        return "rand"

    def train_steps(self, n_steps: int) -> list[int]:
        self.steps += n_steps
        return [0] * n_steps

    def train_until(self, target: int) -> None:
        self.steps = max(self.steps, target)

    def test_run(self, n_steps: int, seed: int) -> TestStats:
        return _run_policy(self.env_config, ObservationScheme(), None, n_steps, seed, 1.0)


def test_run(learner, n_steps: int, seed: int) -> TestStats:
    return learner.test_run(n_steps, seed)


def train_steps(learner, n_steps: int) -> list[int]:
    return learner.train_steps(n_steps)


def make_learner(
    signal: RewardSignal,
    env_config: EnvConfig,
    config: LearnerConfig,
    scheme: ObservationScheme | None = None,
):
    """Learner for ``signal`` on the configured backend."""
    if signal.kind is SignalKind.RANDOM_POLICY:
        return RandomPolicy(env_config)
    if config.backend == "approximator":
        from .approximator import ApproxLearner

        return ApproxLearner(signal, env_config, config)
    return TabularLearner(signal, env_config, config, scheme or ObservationScheme())


def _config_dict(cfg: LearnerConfig) -> dict:
    d = asdict(cfg)
    d["approximator_widths"] = list(cfg.approximator_widths)
    return d


def _config_from_dict(d: dict) -> LearnerConfig:
    known = {f.name for f in fields(LearnerConfig)}
    d = {k: v for k, v in d.items() if k in known}
    if "approximator_widths" in d:
        d["approximator_widths"] = tuple(d["approximator_widths"])
    return LearnerConfig(**d)


def _rng_to_json(rng: random.Random) -> list:
    version, internal, gauss = rng.getstate()
    return [version, list(internal), gauss]


def _rng_from_json(data: list) -> tuple:
    version, internal, gauss = data
    return (version, tuple(internal), gauss)


def _state_to_json(s: EnvState) -> dict:
    return {
        "ball": [s.ball_x, s.ball_y, s.ball_vx, s.ball_vy],
        "paddles": [s.left_paddle_y, s.right_paddle_y],
        "step_count": s.step_count,
        "last_event": s.last_event.value,
        "history": list(s.ball_y_history),
        "serve_count": s.serve_count,
        "seed": s.seed,
    }


def _state_from_json(d: dict) -> EnvState:
    bx, by, vx, vy = d["ball"]
    lp, rp = d["paddles"]
    return EnvState(
        ball_x=bx, ball_y=by, ball_vx=vx, ball_vy=vy,
        left_paddle_y=lp, right_paddle_y=rp,
        step_count=d["step_count"], last_event=Event(d["last_event"]),
        ball_y_history=tuple(d["history"]), serve_count=d["serve_count"], seed=d["seed"],
    )


def q_bound(gamma: float) -> float:
    """Largest value a 0/1 reward can drive a zero-initialized entry to."""
    return 1.0 / (1.0 - gamma) if gamma < 1 else math.inf
