"""Deterministic grid Pong with a scripted opponent on the left.

The learning agent controls the right paddle. Positions are integer cells and
the clock is one step per call, so a trajectory replays exactly from
``(config, seed, actions)``.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised for an invalid environment, learner or run configuration."""


class Action(enum.IntEnum):
    UP = 0
    DOWN = 1
    STAY = 2


ACTIONS: tuple[Action, ...] = (Action.UP, Action.DOWN, Action.STAY)
N_ACTIONS = len(ACTIONS)


class Event(enum.Enum):
    NONE = "none"
    AGENT_SCORED = "agent_scored"
    AGENT_CONCEDED = "agent_conceded"


class Region(enum.Enum):
    A1 = "a1"  # behind the opponent's (left) paddle
    A2 = "a2"  # between the paddle lines, inclusive
    A3 = "a3"  # behind the agent's (right) paddle

    @property
    def index(self) -> int:
        return _REGION_INDEX[self]


_REGION_INDEX = {Region.A1: 0, Region.A2: 1, Region.A3: 2}


@dataclass(frozen=True)
class EnvConfig:
    field_width: int = 32
    field_height: int = 21
    paddle_height: int = 4
    ball_speed: int = 1
    opponent_max_speed: int = 1
    opponent_reaction_lag: int = 1
    serve_seed: int = 0
    agent_speed: int = 1
    max_ball_vy: int = 2
    paddle_inset: int = 2

    def validate(self) -> None:
        if self.field_width < 8:
            raise ConfigError(f"field_width must be >= 8, got {self.field_width}")
        if not self.field_height >= self.paddle_height >= 1:
            raise ConfigError(
                f"need field_height >= paddle_height >= 1, got "
                f"{self.field_height} and {self.paddle_height}"
            )
        if self.ball_speed < 1:
            raise ConfigError(f"ball_speed must be >= 1, got {self.ball_speed}")
        for name in ("opponent_max_speed", "agent_speed", "max_ball_vy"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.opponent_reaction_lag < 1:
            raise ConfigError("opponent_reaction_lag must be >= 1")
        if not 1 <= self.paddle_inset < self.field_width // 2 - 1:
            raise ConfigError(f"paddle_inset out of range: {self.paddle_inset}")

    @property
    def left_paddle_x(self) -> int:
        return self.paddle_inset

    @property
    def right_paddle_x(self) -> int:
        return self.field_width - 1 - self.paddle_inset

    @property
    def center(self) -> tuple[int, int]:
        return self.field_width // 2, self.field_height // 2

    @property
    def centered_paddle_y(self) -> int:
        """Top row of a vertically centered paddle."""
        return (self.field_height - self.paddle_height) // 2


@dataclass(frozen=True, slots=True)
class EnvState:
    ball_x: int
    ball_y: int
    ball_vx: int
    ball_vy: int
    left_paddle_y: int
    right_paddle_y: int
    step_count: int = 0
    last_event: Event = Event.NONE
    # ball rows at the start of the last `lag` steps, oldest first; the
    # opponent steers toward the oldest one
    ball_y_history: tuple[int, ...] = ()
    serve_count: int = 0
    seed: int = 0


def _serve_velocity(config: EnvConfig, seed: int, serve_index: int) -> tuple[int, int]:
    rng = random.Random(f"serve:{seed}:{serve_index}")
    vx = config.ball_speed if rng.random() < 0.5 else -config.ball_speed
    vy = 1 if rng.random() < 0.5 else -1
    return vx, vy


def reset(config: EnvConfig, seed: int | None = None) -> EnvState:
    """Center ball and paddles; the serve direction comes from ``seed``."""
    config.validate()
    if seed is None:
        seed = config.serve_seed
    cx, cy = config.center
    vx, vy = _serve_velocity(config, seed, 0)
    py = config.centered_paddle_y
    return EnvState(
        ball_x=cx,
        ball_y=cy,
        ball_vx=vx,
        ball_vy=vy,
        left_paddle_y=py,
        right_paddle_y=py,
        ball_y_history=(cy,) * config.opponent_reaction_lag,
        seed=seed,
    )


def _clamp(v: int, lo: int, hi: int) -> int:
    return lo if v < lo else hi if v > hi else v


def _contact_offset(ball_y: int, paddle_y: int, height: int) -> int | None:
    """-1/0/+1 for a hit on the top edge, body or bottom edge; None on a miss."""
    rel = ball_y - paddle_y
    if rel < 0 or rel >= height:
        return None
    if height >= 3:
        if rel == 0:
            return -1
        if rel == height - 1:
            return 1
    return 0


def _opponent_move(config: EnvConfig, state: EnvState) -> int:
    target = state.ball_y_history[0]
    desired = target - config.paddle_height // 2
    delta = _clamp(desired - state.left_paddle_y, -config.opponent_max_speed, config.opponent_max_speed)
    return _clamp(state.left_paddle_y + delta, 0, config.field_height - config.paddle_height)


def step(config: EnvConfig, state: EnvState, action: Action | int) -> EnvState:
    """Advance one timestep.

    Order: agent paddle, opponent paddle, then the ball. A ball leaving the
    field through the left edge is a point for the agent, through the right
    edge a point for the opponent. The ball is then re-served from the center
    in the same step; paddles keep their positions.
    """
    h = config.paddle_height
    top_limit = config.field_height - h
    action = int(action)
    if action == Action.UP:
        right_y = state.right_paddle_y - config.agent_speed
    elif action == Action.DOWN:
        right_y = state.right_paddle_y + config.agent_speed
    elif action == Action.STAY:
        right_y = state.right_paddle_y
    else:
        raise ValueError(f"invalid action {action!r}")
    right_y = _clamp(right_y, 0, top_limit)
    left_y = _opponent_move(config, state)

    vx, vy = state.ball_vx, state.ball_vy
    nx = state.ball_x + vx
    ny = state.ball_y + vy
    ymax = config.field_height - 1
    if ny < 0:
        ny, vy = -ny, -vy
    elif ny > ymax:
        ny, vy = 2 * ymax - ny, -vy
    ny = _clamp(ny, 0, ymax)

    lx, rx = config.left_paddle_x, config.right_paddle_x
    if vx > 0 and state.ball_x < rx <= nx:
        off = _contact_offset(ny, right_y, h)
        if off is not None:
            nx = 2 * rx - 1 - nx
            vx = -vx
            vy = _clamp(vy + off, -config.max_ball_vy, config.max_ball_vy)
    elif vx < 0 and state.ball_x > lx >= nx:
        off = _contact_offset(ny, left_y, h)
        if off is not None:
            nx = 2 * lx + 1 - nx
            vx = -vx
            vy = _clamp(vy + off, -config.max_ball_vy, config.max_ball_vy)

    event = Event.NONE
    serve_count = state.serve_count
    if nx < 0 or nx > config.field_width - 1:
        event = Event.AGENT_SCORED if nx < 0 else Event.AGENT_CONCEDED
        serve_count += 1
        nx, ny = config.center
        vx, vy = _serve_velocity(config, state.seed, serve_count)

    history = state.ball_y_history[1:] + (ny,)
    return EnvState(
        ball_x=nx,
        ball_y=ny,
        ball_vx=vx,
        ball_vy=vy,
        left_paddle_y=left_y,
        right_paddle_y=right_y,
        step_count=state.step_count + 1,
        last_event=event,
        ball_y_history=history,
        serve_count=serve_count,
        seed=state.seed,
    )


def region_of(config: EnvConfig, state: EnvState) -> Region:
    if state.ball_x < config.left_paddle_x:
        return Region.A1
    if state.ball_x > config.right_paddle_x:
        return Region.A3
    return Region.A2


def rollout(config: EnvConfig, seed: int, actions: Sequence[int]) -> list[EnvState]:
    """States visited from reset through each action, reset state included."""
    state = reset(config, seed)
    states = [state]
    for a in actions:
        state = step(config, state, a)
        states.append(state)
    return states


@dataclass(frozen=True)
class ObservationScheme:
    """How a state is projected to a lookup key.

    Ball x/y, the agent paddle and (optionally) the opponent paddle are cut
    into equal-width bins. Horizontal velocity enters as its sign; vertical
    velocity as its sign, or its exact value when ``exact_vy`` is set.
    """

    x_bins: int = 8
    y_bins: int = 7
    paddle_bins: int = 6
    exact_vy: bool = True
    include_opponent: bool = False
    opponent_bins: int = 4
    relative_y: bool = True

    def n_keys_bound(self, config: EnvConfig) -> int:
        vy_states = 2 * config.max_ball_vy + 1 if self.exact_vy else 3
        n = self.x_bins * self.y_bins * 2 * vy_states * self.paddle_bins
        if self.relative_y:
            n *= self.relative_span(config)
        if self.include_opponent:
            n *= self.opponent_bins
        return n

    def relative_span(self, config: EnvConfig) -> int:
        return 2 * (config.paddle_height // 2 + 1) + 1


def _bin(value: int, extent: int, bins: int) -> int:
    if extent <= 1:
        return 0
    b = value * bins // extent
    return bins - 1 if b >= bins else b


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


def observe(config: EnvConfig, state: EnvState, scheme: ObservationScheme) -> tuple[int, ...]:
    """Discrete lookup key for tabular learners; equal states give equal keys."""
    paddle_positions = config.field_height - config.paddle_height + 1
    key = [
        _bin(state.ball_x, config.field_width, scheme.x_bins),
        _bin(state.ball_y, config.field_height, scheme.y_bins),
        1 if state.ball_vx > 0 else 0,
        state.ball_vy if scheme.exact_vy else _sign(state.ball_vy),
        _bin(state.right_paddle_y, paddle_positions, scheme.paddle_bins),
    ]
    if scheme.relative_y:
        # ball row against the paddle's middle, saturated just past the paddle edges
        half = config.paddle_height // 2
        rel = state.ball_y - (state.right_paddle_y + half)
        key.append(_clamp(rel, -half - 1, half + 1))
    if scheme.include_opponent:
        key.append(_bin(state.left_paddle_y, paddle_positions, scheme.opponent_bins))
    return tuple(key)


FEATURE_DIM = 7


def features(config: EnvConfig, state: EnvState) -> np.ndarray:
    """Normalized feature vector for the function-approximation learner."""
    span_y = max(config.field_height - 1, 1)
    span_p = max(config.field_height - config.paddle_height, 1)
    rel = state.ball_y - (state.right_paddle_y + config.paddle_height // 2)
    return np.array(
        [
            state.ball_x / (config.field_width - 1),
            state.ball_y / span_y,
            1.0 if state.ball_vx > 0 else -1.0,
            state.ball_vy / config.max_ball_vy,
            state.right_paddle_y / span_p,
            state.left_paddle_y / span_p,
            rel / span_y,
        ],
        dtype=np.float64,
    )


@dataclass
class PongEnv:
    """Mutable convenience wrapper around :func:`reset` / :func:`step`."""

    config: EnvConfig = field(default_factory=EnvConfig)
    seed: int = 0
    state: EnvState = field(init=False)

    def __post_init__(self) -> None:
        self.state = reset(self.config, self.seed)

    def reset(self, seed: int | None = None) -> EnvState:
        if seed is not None:
            self.seed = seed
        self.state = reset(self.config, self.seed)
        return self.state

    def step(self, action: Action | int) -> tuple[EnvState, EnvState]:
        before = self.state
        self.state = step(self.config, before, action)
        return before, self.state

    def region(self) -> Region:
        return region_of(self.config, self.state)

    def with_state(self, **changes) -> EnvState:
        self.state = replace(self.state, **changes)
        return self.state
