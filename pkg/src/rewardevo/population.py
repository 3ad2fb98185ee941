"""Per-goal population bookkeeping: elimination, mutation injection, replay.

Nothing here trains anything. :func:`replay_elimination` drives the same
round logic as a live run from a precomputed fitness table, which is how the
published elimination sequence is checked and how the tie-draw sensitivity
statistic is estimated.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .draws import ChoiceStream, derive_seed
from .goals import GOALS, Goal, GoalScores, GoalTable, ValidationError, argmin_set
from .signals import REGION_IDS, SignalArchive


class StateError(RuntimeError):
    pass


class IncrementMode(enum.Enum):
    ADDITIVE = "additive"
    DOUBLING = "doubling"


def advance_budget(target: int, base: int, mode: IncrementMode | str = IncrementMode.ADDITIVE) -> int:
    """Next cumulative training target.

    Additive adds the initial burn-in ``base`` each round (checkpoints at
    2M, 3M, ...); doubling is the literal ``M := M + M`` update.
    """
    if target <= 0:
        raise ValueError("target must be positive")
    mode = IncrementMode(mode)
    if mode is IncrementMode.ADDITIVE:
        return target + base
    return 2 * target


@dataclass(frozen=True)
class Elimination:
    signal: str
    round: int
    fitness: float


@dataclass(frozen=True)
class TieDraw:
    tied: tuple[str, ...]
    chosen: str


@dataclass
class PopulationMatrix:
    """Active and struck signals for every goal, plus the global registry."""

    goals: tuple[Goal, ...] = GOALS
    active: dict[Goal, list[str]] = field(default_factory=dict)
    eliminated: dict[Goal, list[Elimination]] = field(default_factory=dict)
    registry: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for g in self.goals:
            self.active.setdefault(g, [])
            self.eliminated.setdefault(g, [])

    @classmethod
    def seeded(cls, initial: Sequence[str] | Mapping[Goal, Sequence[str]], goals: Sequence[Goal] = GOALS):
        m = cls(goals=tuple(goals))
        if isinstance(initial, Mapping):
            for g in m.goals:
                for sid in initial[g]:
                    m.active[g].append(sid)
                    if sid not in m.registry:
                        m.registry.append(sid)
        else:
            m.add(initial)
        return m

    def add(self, ids: Sequence[str]) -> None:
        for sid in ids:
            if sid not in self.registry:
                self.registry.append(sid)
            for g in self.goals:
                if any(e.signal == sid for e in self.eliminated[g]):
                    raise StateError(f"{sid} was already eliminated for {g.value}")
                if sid not in self.active[g]:
                    self.active[g].append(sid)

    def remove(self, goal: Goal, sid: str, round_index: int, fitness: float) -> None:
        if sid not in self.active[goal]:
            raise StateError(f"{sid} is not active for {goal.value}")
        self.active[goal].remove(sid)
        self.eliminated[goal].append(Elimination(sid, round_index, fitness))

    def live_signals(self) -> list[str]:
        """Signals active for at least one goal, in registry order."""
        live = {sid for g in self.goals for sid in self.active[g]}
        return [sid for sid in self.registry if sid in live]

    def converged(self) -> bool:
        return all(len(self.active[g]) == 1 for g in self.goals)

    def winners(self) -> dict[Goal, str | None]:
        return {g: (self.active[g][0] if len(self.active[g]) == 1 else None) for g in self.goals}

    def snapshot(self) -> "PopulationMatrix":
        return copy.deepcopy(self)


@dataclass
class RoundRecord:
    round: int
    checkpoint: int
    scores: dict[str, GoalScores]
    active_before: dict[Goal, list[str]]
    removed: dict[Goal, str | None]
    added: list[str]
    tie_draws: dict[Goal, TieDraw] = field(default_factory=dict)


def eliminate(
    scores: Mapping[str, float],
    active: Sequence[str],
    stream: ChoiceStream,
) -> tuple[str, TieDraw | None]:
    """Pick the active id with the lowest fitness.

    Ties are settled by one draw from ``stream``; no draw is consumed when
    the minimum is unique.
    """
    if not active:
        raise StateError("cannot eliminate from an empty population")
    tied = argmin_set(scores, active)
    if len(tied) == 1:
        return tied[0], None
    chosen = stream.choice(tied)
    return chosen, TieDraw(tuple(tied), chosen)


TieScript = Mapping[tuple[int, Goal], str]


def play_round(
    matrix: PopulationMatrix,
    round_index: int,
    checkpoint: int,
    scores: Mapping[str, GoalScores],
    archive: SignalArchive,
    p: int,
    ties: ChoiceStream,
    tie_script: TieScript | None = None,
) -> RoundRecord:
    """One elimination + mutation step, applied to ``matrix`` in place.

    A goal already down to a single signal skips elimination.
    """
    before = {g: list(matrix.active[g]) for g in matrix.goals}
    removed: dict[Goal, str | None] = {}
    draws: dict[Goal, TieDraw] = {}
    for g in matrix.goals:
        active = matrix.active[g]
        if len(active) <= 1:
            removed[g] = None
            continue
        fitness = {sid: scores[sid].fitness(g) for sid in active if sid in scores}
        stream = ties
        if tie_script and (round_index, g) in tie_script:
            stream = ChoiceStream(script=[tie_script[round_index, g]])
        sid, draw = eliminate(fitness, active, stream)
        matrix.remove(g, sid, round_index, fitness[sid])
        removed[g] = sid
        if draw is not None:
            draws[g] = draw
    added = [s.id for s in archive.mutate(p)]
    matrix.add(added)
    return RoundRecord(
        round=round_index,
        checkpoint=checkpoint,
        scores={sid: scores[sid] for sid in before_ids(before) if sid in scores},
        active_before=before,
        removed=removed,
        added=added,
        tie_draws=draws,
    )


def before_ids(before: Mapping[Goal, Sequence[str]]) -> list[str]:
    out: list[str] = []
    for ids in before.values():
        for sid in ids:
            if sid not in out:
                out.append(sid)
    return out


@dataclass(frozen=True)
class ReplayDraws:
    """Recorded random decisions of a run.

    ``initial`` and each entry of ``mutations`` are what the archive drew;
    ``ties`` maps ``(round, goal)`` to the id struck when that goal tied.
    Rounds count from 1.
    """

    initial: tuple[str, ...] | None = None
    mutations: tuple[tuple[str, ...], ...] | None = None
    ties: Mapping[tuple[int, Goal], str] = field(default_factory=dict)


def replay_elimination(
    table: GoalTable,
    draws: ReplayDraws,
    *,
    initial: Sequence[str] | Mapping[Goal, Sequence[str]] | None = None,
    goals: Sequence[Goal] = GOALS,
    p: int = 2,
    j: int = 3,
    seed: int = 0,
    pool: Sequence[str] = REGION_IDS,
    max_rounds: int | None = None,
) -> tuple[list[RoundRecord], list[PopulationMatrix]]:
    """Run the round bookkeeping against a fitness table, checkpoint by checkpoint.

    Recorded draws are consumed first; anything unrecorded is drawn from
    streams derived from ``seed``. Returns the round records and the matrix
    after each round.
    """
    checkpoints = table.checkpoints
    if not checkpoints:
        raise ValidationError("empty fitness table")
    script: list = []
    if draws.initial is not None and initial is None:
        script.append(list(draws.initial))
    if draws.mutations is not None:
        script.extend(list(m) for m in draws.mutations)
    archive = SignalArchive(
        draws=ChoiceStream(seed=derive_seed(seed, "mutation"), script=script),
        pool=tuple(pool),
    )
    if initial is None:
        first = [s.id for s in archive.initial_population(j)]
        matrix = PopulationMatrix.seeded(first, goals)
    else:
        matrix = PopulationMatrix.seeded(initial, goals)
        ids = initial.values() if isinstance(initial, Mapping) else [initial]
        archive.seen.update(sid for group in ids for sid in group)
    ties = ChoiceStream(seed=derive_seed(seed, "ties"))

    records: list[RoundRecord] = []
    states: list[PopulationMatrix] = []
    limit = len(checkpoints) if max_rounds is None else min(max_rounds, len(checkpoints))
    for r in range(1, limit + 1):
        checkpoint = checkpoints[r - 1]
        row = table.rows[checkpoint]
        for g in matrix.goals:
            missing = [sid for sid in matrix.active[g] if sid not in row]
            if missing:
                raise ValidationError(f"round {r} ({checkpoint}): no fitness for {missing}")
        rec = play_round(matrix, r, checkpoint, row, archive, p, ties, draws.ties)
        records.append(rec)
        states.append(matrix.snapshot())
        if matrix.converged():
            break
    return records, states


def reaches_final_round(records: Sequence[RoundRecord], candidate: str, goal: Goal) -> bool:
    """True unless ``candidate`` was struck while more than two signals remained."""
    for rec in records:
        if rec.removed.get(goal) == candidate and len(rec.active_before[goal]) > 2:
            return False
    return True


def fragility(
    table: GoalTable,
    candidate: str,
    goal: Goal,
    base_initial: Sequence[str],
    n_seeds: int = 10_000,
    base_seed: int = 0,
    p: int = 2,
) -> float:
    """Fraction of seeds in which ``candidate`` misses the final elimination round.

    ``candidate`` joins ``base_initial`` in the ``goal`` population only; each
    seed re-draws both tie-breaks and mutations.
    """
    misses = 0
    initial = {goal: [*base_initial, candidate]}
    for s in range(n_seeds):
        records, _ = replay_elimination(
            table, ReplayDraws(), initial=initial, goals=(goal,), p=p, seed=base_seed + s
        )
        if not reaches_final_round(records, candidate, goal):
            misses += 1
    return misses / n_seeds
