"""Small fully connected Q-network trained on the squared TD error.

One tanh hidden stack and a linear head with one output per action. The
gradient is written out by hand; :func:`td_loss` returns it flattened in the
same order as :func:`flatten`.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .env import FEATURE_DIM, N_ACTIONS, EnvConfig, EnvState, Event, features, reset, step
from .goals import TestStats
from .learner import LearnerConfig, Transition, _config_dict, _config_from_dict, greedy
from .signals import RewardSignal, emit_reward, parse_signal

Params = list[np.ndarray]  # [W0, b0, W1, b1, ...]; W has shape (fan_in, fan_out)


def init_params(widths: Sequence[int], n_in: int = FEATURE_DIM, n_out: int = N_ACTIONS, seed: int = 0) -> Params:
    rng = np.random.default_rng(seed)
    sizes = [n_in, *widths, n_out]
    params: Params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        params.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def flatten(params: Params) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def unflatten(vector: np.ndarray, like: Params) -> Params:
    out, i = [], 0
    for p in like:
        out.append(vector[i : i + p.size].reshape(p.shape).copy())
        i += p.size
    if i != vector.size:
        raise ValueError("parameter vector length does not match the network")
    return out


def forward(params: Params, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Q-values for a batch ``x`` of shape (B, n_in), and the layer activations."""
    acts = [x]
    h = x
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = h @ params[2 * i] + params[2 * i + 1]
        h = np.tanh(z) if i < n_layers - 1 else z
        acts.append(h)
    return h, acts


def q_values(params: Params, x: np.ndarray) -> np.ndarray:
    return forward(params, np.atleast_2d(x))[0]


def _batch_arrays(batch) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(batch, tuple) and len(batch) == 4:
        return batch
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    x = np.array([t.obs_before for t in batch], dtype=np.float64)
    a = np.array([t.action for t in batch], dtype=np.int64)
    r = np.array([t.reward for t in batch], dtype=np.float64)
    x2 = np.array([t.obs_after for t in batch], dtype=np.float64)
    return x, a, r, x2


def td_targets(target_params: Params, rewards: np.ndarray, next_obs: np.ndarray, gamma: float) -> np.ndarray:
    q_next, _ = forward(target_params, next_obs)
    return rewards + gamma * q_next.max(axis=1)


def td_loss(
    params: Params,
    batch: Sequence[Transition] | tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    gamma: float,
    target_params: Params | None = None,
) -> tuple[float, np.ndarray]:
    """Mean squared TD error and its gradient with respect to ``params``.

    Targets use ``target_params`` (``params`` when omitted) and are held
    constant, so no gradient flows through them.
    """
    x, a, r, x2 = _batch_arrays(batch)
    if len(a) == 0:
        raise ValueError("empty batch")
    y = td_targets(target_params if target_params is not None else params, r, x2, gamma)
    q, acts = forward(params, x)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(y))):
        raise FloatingPointError("non-finite Q-values")
    n = len(a)
    rows = np.arange(n)
    err = q[rows, a] - y
    loss = float(np.mean(err**2))

    delta = np.zeros_like(q)
    delta[rows, a] = 2.0 * err / n
    grads: list[np.ndarray] = [None] * len(params)  # type: ignore[list-item]
    n_layers = len(params) // 2
    for i in reversed(range(n_layers)):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params[2 * i].T) * (1.0 - acts[i] ** 2)
    return loss, flatten(grads)


@dataclass
class ReplayBuffer:
    capacity: int
    dim: int = FEATURE_DIM
    size: int = 0
    pos: int = 0
    obs: np.ndarray = field(init=False)
    actions: np.ndarray = field(init=False)
    rewards: np.ndarray = field(init=False)
    next_obs: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.obs = np.zeros((self.capacity, self.dim))
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self.rewards = np.zeros(self.capacity)
        self.next_obs = np.zeros((self.capacity, self.dim))

    def add(self, x: np.ndarray, a: int, r: float, x2: np.ndarray) -> None:
        i = self.pos
        self.obs[i], self.actions[i], self.rewards[i], self.next_obs[i] = x, a, r, x2
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=n)
        return self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx]


@dataclass
class ApproxLearner:
    """Q-network agent: replay sampling, SGD on :func:`td_loss`, synced target copy."""

    signal: RewardSignal
    env_config: EnvConfig = field(default_factory=EnvConfig)
    config: LearnerConfig = field(default_factory=lambda: LearnerConfig(backend="approximator"))
    steps: int = 0

    def __post_init__(self) -> None:
        self.config.validate()
        self.params = init_params(self.config.approximator_widths, seed=self.config.seed)
        self.target = [p.copy() for p in self.params]
        self.buffer = ReplayBuffer(self.config.replay_capacity)
        self.rng = random.Random(self.config.seed)
        self.np_rng = np.random.default_rng(self.config.seed)
        self.state: EnvState = reset(self.env_config, self.config.seed)

    @property
    def signal_id(self) -> str:
        return self.signal.id

    def _act(self, x: np.ndarray, epsilon: float, rng: random.Random) -> int:
        if rng.random() < epsilon:
            return rng.randrange(N_ACTIONS)
        return greedy(list(q_values(self.params, x)[0]), rng)

    def train_steps(self, n_steps: int) -> list[int]:
        if n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        cfg, ecfg = self.config, self.env_config
        rewards = [0] * n_steps
        x = features(ecfg, self.state)
        for i in range(n_steps):
            a = self._act(x, cfg.epsilon(self.steps), self.rng)
            nxt = step(ecfg, self.state, a)
            r = emit_reward(self.signal, self.state, nxt, ecfg)
            x2 = features(ecfg, nxt)
            self.buffer.add(x, a, r, x2)
            self.state, x = nxt, x2
            self.steps += 1
            rewards[i] = r
            if self.buffer.size >= max(cfg.learn_start, cfg.batch_size):
                batch = self.buffer.sample(cfg.batch_size, self.np_rng)
                _, grad = td_loss(self.params, batch, cfg.gamma, self.target)
                self.params = unflatten(flatten(self.params) - cfg.approx_lr * grad, self.params)
            if self.steps % cfg.target_sync == 0:
                self.target = [p.copy() for p in self.params]
        return rewards

    def train_until(self, target: int) -> None:
        if target > self.steps:
            self.train_steps(target - self.steps)

    def test_run(self, n_steps: int, seed: int) -> TestStats:
        rng = random.Random(seed)
        state = reset(self.env_config, seed)
        won = lost = last = 0
        intervals: list[int] = []
        for t in range(n_steps):
            a = self._act(features(self.env_config, state), self.config.eval_epsilon, rng)
            state = step(self.env_config, state, a)
            if state.last_event is not Event.NONE:
                won += state.last_event is Event.AGENT_SCORED
                lost += state.last_event is Event.AGENT_CONCEDED
                intervals.append(t + 1 - last)
                last = t + 1
        return TestStats(n_steps, won, lost, tuple(intervals), n_steps - last)

    def to_dict(self) -> dict:
        return {
            "format": "rewardevo-learner",
            "version": 1,
            "backend": "approximator",
            "signal": self.signal.id,
            "env": asdict(self.env_config),
            "learner": _config_dict(self.config),
            "steps": self.steps,
            "params": flatten(self.params).tolist(),
            "target": flatten(self.target).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ApproxLearner":
        if data.get("format") != "rewardevo-learner" or data.get("backend") != "approximator":
            raise ValueError("not an approximator checkpoint")
        learner = cls(parse_signal(data["signal"]), EnvConfig(**data["env"]), _config_from_dict(data["learner"]))
        learner.params = unflatten(np.asarray(data["params"]), learner.params)
        learner.target = unflatten(np.asarray(data["target"]), learner.target)
        learner.steps = int(data["steps"])
        return learner

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))
