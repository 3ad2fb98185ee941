"""The live evolution loop and the no-elimination grid sweep.

Each signal owns one learner, seeded from the master seed and the signal id,
so a learner's trajectory does not depend on which other signals share the
population or on how work is spread across processes. All signals tested at
a checkpoint play the same test seed.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .draws import ChoiceStream, derive_seed
from .env import EnvConfig, ObservationScheme
from .goals import GOALS, Goal, GoalScores, GoalTable, scores_of
from .learner import LearnerConfig, make_learner
from .population import IncrementMode, PopulationMatrix, RoundRecord, advance_budget, play_round
from .signals import REGION_IDS, SignalArchive, parse_signal

log = logging.getLogger(__name__)


class EvolutionError(RuntimeError):
    """A run aborted; ``records`` holds the rounds completed before the failure."""

    def __init__(self, msg: str, records: list[RoundRecord], matrix: PopulationMatrix | None = None):
        super().__init__(msg)
        self.records = records
        self.matrix = matrix


def checkpoints(burn_in: int, rounds: int, mode: IncrementMode | str = IncrementMode.ADDITIVE) -> list[int]:
    """Cumulative training targets at which rounds are tested."""
    out, target = [], burn_in
    for _ in range(rounds):
        target = advance_budget(target, burn_in, mode)
        out.append(target)
    return out


def eval_seed(master_seed: int, checkpoint: int) -> int:
    return derive_seed(master_seed, "test", checkpoint)


@dataclass
class Trainer:
    """Creates, trains and tests the per-signal learners."""

    env: EnvConfig
    learner: LearnerConfig
    scheme: ObservationScheme
    master_seed: int = 0
    workers: int = 1
    learners: dict[str, object] = field(default_factory=dict)

    def _new(self, sid: str):
        cfg = dataclasses.replace(self.learner, seed=derive_seed(self.master_seed, "learner", sid))
        return make_learner(parse_signal(sid), self.env, cfg, self.scheme)

    def advance(self, ids: Sequence[str], target: int, test_len: int = 0) -> dict[str, GoalScores]:
        """Train every id up to ``target`` steps (new ids from zero), then test
        each for ``test_len`` steps; ``test_len=0`` only trains."""
        for sid in ids:
            if sid not in self.learners:
                self.learners[sid] = self._new(sid)
        seed = eval_seed(self.master_seed, target)
        jobs = [(self.learners[sid], target, test_len, seed) for sid in ids]
        if self.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(jobs))) as pool:
                results = list(pool.map(_train_and_test, jobs))
        else:
            results = [_train_and_test(job) for job in jobs]
        scores = {}
        for sid, (learner, stats) in zip(ids, results):
            self.learners[sid] = learner
            if stats is not None:
                scores[sid] = scores_of(stats)
        return scores


def _train_and_test(job):
    learner, target, test_len, seed = job
    learner.train_until(target)
    return learner, (learner.test_run(test_len, seed) if test_len else None)


@dataclass
class EvolutionResult:
    matrix: PopulationMatrix
    records: list[RoundRecord]
    initial: list[str]
    table: GoalTable

    @property
    def winners(self) -> dict[Goal, str | None]:
        return self.matrix.winners()


def run(
    evo,
    env: EnvConfig,
    learner: LearnerConfig,
    scheme: ObservationScheme,
    *,
    workers: int = 1,
    pool: Sequence[str] = REGION_IDS,
    goals: Sequence[Goal] = GOALS,
    on_round: Callable[[RoundRecord, PopulationMatrix], None] | None = None,
) -> EvolutionResult:
    """Burn in, then test / eliminate / mutate until every goal keeps one signal.

    ``evo`` is an :class:`~rewardevo.config.EvoConfig`. ``on_round`` sees each
    finished round, which lets callers persist progress as it happens.
    """
    evo.validate()
    goals = tuple(goals[: evo.n_goals])
    archive = SignalArchive(draws=ChoiceStream(seed=derive_seed(evo.master_seed, "mutation")), pool=tuple(pool))
    ties = ChoiceStream(seed=derive_seed(evo.master_seed, "ties"))
    initial = [s.id for s in archive.initial_population(evo.initial_signals)]
    matrix = PopulationMatrix.seeded(initial, goals)
    trainer = Trainer(env, learner, scheme, evo.master_seed, workers)
    table = GoalTable(test_len=evo.test_len)
    records: list[RoundRecord] = []

    try:
        log.info("burn-in: %s for %d steps", " ".join(initial), evo.burn_in)
        trainer.advance(initial, evo.burn_in)
        target = evo.burn_in
        for r in range(1, evo.max_rounds + 1):
            target = advance_budget(target, evo.burn_in, evo.increment_mode)
            live = matrix.live_signals()
            scores = trainer.advance(live, target, evo.test_len)
            table.rows[target] = scores
            rec = play_round(matrix, r, target, scores, archive, evo.mutations_per_round, ties)
            records.append(rec)
            log.info(
                "round %d @ %d: removed %s, added %s",
                r, target, {g.value: s for g, s in rec.removed.items()}, rec.added,
            )
            if on_round is not None:
                on_round(rec, matrix)
            if matrix.converged():
                break
    except Exception as exc:
        raise EvolutionError(f"evolution aborted in round {len(records) + 1}: {exc}", records, matrix) from exc
    return EvolutionResult(matrix, records, initial, table)


def grid(
    signals: Sequence[str],
    checkpoint_list: Sequence[int],
    test_len: int,
    env: EnvConfig,
    learner: LearnerConfig,
    scheme: ObservationScheme,
    *,
    master_seed: int = 0,
    workers: int = 1,
) -> GoalTable:
    """Train every signal from step 0 and test all of them at every checkpoint."""
    trainer = Trainer(env, learner, scheme, master_seed, workers)
    table = GoalTable(test_len=test_len)
    for c in sorted(checkpoint_list):
        log.info("grid checkpoint %d", c)
        table.rows[c] = trainer.advance(list(signals), c, test_len)
    return table
