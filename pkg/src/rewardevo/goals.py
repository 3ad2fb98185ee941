"""Goal fitness functions: winning, losing and cooperation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .signals import signal_sort_key


class ValidationError(ValueError):
    pass


class Goal(enum.Enum):
    WINNING = "winning"
    LOSING = "losing"
    COOPERATION = "cooperation"


GOALS: tuple[Goal, ...] = (Goal.WINNING, Goal.LOSING, Goal.COOPERATION)


@dataclass(frozen=True)
class TestStats:
    """Outcome of one evaluation window of ``n_steps`` steps.

    ``intervals`` holds the step count of every completed rally; the rally
    still running when the window closes is kept apart in ``residual``.
    """

    __test__ = False  # not a pytest class despite the name

    n_steps: int
    won: int = 0
    lost: int = 0
    intervals: tuple[int, ...] = ()
    residual: int = 0

    def __post_init__(self) -> None:
        if len(self.intervals) != self.won + self.lost:
            raise ValidationError("one interval per point expected")
        if min(self.intervals, default=1) < 1 or self.residual < 0:
            raise ValidationError("intervals must be positive and the residual non-negative")
        if sum(self.intervals) + self.residual != self.n_steps:
            raise ValidationError("intervals plus residual must cover the window")

    @property
    def points(self) -> int:
        return self.won + self.lost


@dataclass(frozen=True)
class GoalScores:
    won: float
    lost: float
    coop: float

    def fitness(self, goal: Goal) -> float:
        if goal is Goal.WINNING:
            return self.won
        if goal is Goal.LOSING:
            return self.lost
        return self.coop


def cooperation(stats: TestStats) -> float:
    """Mean rally length; a window without points saturates at its length."""
    if not stats.intervals:
        return float(stats.n_steps)
    return fmean(stats.intervals)


def coop_from_counts(n_steps: int, won: int, lost: int) -> float:
    """Steps per point when only point counts are known."""
    points = won + lost
    return float(n_steps) if points == 0 else n_steps / points


def evaluate(stats: TestStats, goal: Goal) -> float:
    if goal is Goal.WINNING:
        return float(stats.won)
    if goal is Goal.LOSING:
        return float(stats.lost)
    return cooperation(stats)


def scores_of(stats: TestStats) -> GoalScores:
    return GoalScores(won=stats.won, lost=stats.lost, coop=cooperation(stats))


@dataclass
class GoalTable:
    """Per-signal scores at each checkpoint plus the running averages."""

    test_len: int
    rows: dict[int, dict[str, GoalScores]] = field(default_factory=dict)

    @property
    def checkpoints(self) -> list[int]:
        return sorted(self.rows)

    @property
    def signals(self) -> list[str]:
        ids = {sid for row in self.rows.values() for sid in row}
        return sorted(ids, key=signal_sort_key)

    def averages(self) -> dict[str, GoalScores]:
        out = {}
        for sid in self.signals:
            cells = [self.rows[c][sid] for c in self.checkpoints if sid in self.rows[c]]
            out[sid] = GoalScores(
                won=fmean(s.won for s in cells),
                lost=fmean(s.lost for s in cells),
                coop=fmean(s.coop for s in cells),
            )
        return out

    def get(self, checkpoint: int, sid: str) -> GoalScores:
        return self.rows[checkpoint][sid]


def goal_table(reports: Iterable[tuple[int, str, TestStats]]) -> GoalTable:
    """Assemble ``(checkpoint, signal id, stats)`` triples into a table.

    All windows must have the same length.
    """
    table: GoalTable | None = None
    for checkpoint, sid, stats in reports:
        if table is None:
            table = GoalTable(test_len=stats.n_steps)
        elif stats.n_steps != table.test_len:
            raise ValidationError(
                f"mixed test window lengths: {stats.n_steps} vs {table.test_len}"
            )
        row = table.rows.setdefault(checkpoint, {})
        if sid in row:
            raise ValidationError(f"duplicate report for {sid} at {checkpoint}")
        row[sid] = scores_of(stats)
    if table is None:
        raise ValidationError("no reports given")
    return table


def argmin_set(scores: Mapping[str, float], active: Sequence[str]) -> list[str]:
    """Active ids sharing the lowest fitness, in ``active`` order."""
    missing = [sid for sid in active if sid not in scores]
    if missing:
        raise ValidationError(f"no fitness for {missing}")
    low = min(scores[sid] for sid in active)
    return [sid for sid in active if scores[sid] == low]
