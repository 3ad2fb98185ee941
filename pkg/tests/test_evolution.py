import dataclasses

import pytest

from rewardevo import evolution
from rewardevo.config import EvoConfig
from rewardevo.env import EnvConfig, ObservationScheme
from rewardevo.evolution import EvolutionError, Trainer, checkpoints, grid, run
from rewardevo.goals import GOALS
from rewardevo.learner import LearnerConfig
from rewardevo.population import IncrementMode

ENV = EnvConfig(field_width=16, field_height=9, paddle_height=3, paddle_inset=2)
LRN = LearnerConfig(epsilon_decay_steps=1000)
SCHEME = ObservationScheme(x_bins=4, y_bins=3, paddle_bins=3)
SMALL = EvoConfig(burn_in=1000, test_len=300, max_rounds=7, master_seed=5)


@pytest.fixture(scope="module")
def small_run():
    return run(SMALL, ENV, LRN, SCHEME)


def test_checkpoints():
    assert checkpoints(1_000_000, 7) == [c * 1_000_000 for c in range(2, 9)]
    assert checkpoints(10, 3, IncrementMode.DOUBLING) == [20, 40, 80]


def test_run_converges_with_one_winner_per_goal(small_run):
    assert small_run.matrix.converged()
    assert all(sid is not None for sid in small_run.winners.values())
    assert len(small_run.matrix.registry) == 8
    assert len(small_run.records) == 7


def test_round_records_obey_the_rules(small_run):
    for rec in small_run.records:
        assert rec.checkpoint == SMALL.burn_in * (rec.round + 1)
        for g in GOALS:
            sid = rec.removed[g]
            fitness = {s: rec.scores[s].fitness(g) for s in rec.active_before[g]}
            assert fitness[sid] == min(fitness.values())
            if g in rec.tie_draws:
                assert set(rec.tie_draws[g].tied) == {s for s, f in fitness.items() if f == fitness[sid]}


def test_table_covers_exactly_the_tested_signals(small_run):
    for rec in small_run.records:
        live = {s for ids in rec.active_before.values() for s in ids}
        assert set(small_run.table.rows[rec.checkpoint]) == live


def test_same_seed_same_run(small_run):
    again = run(SMALL, ENV, LRN, SCHEME)
    assert again.records == small_run.records
    other = run(dataclasses.replace(SMALL, master_seed=6), ENV, LRN, SCHEME)
    assert other.records != small_run.records


def test_parallel_workers_match_serial(small_run):
    cfg = dataclasses.replace(SMALL, max_rounds=2)
    serial = run(cfg, ENV, LRN, SCHEME, workers=1)
    parallel = run(cfg, ENV, LRN, SCHEME, workers=2)
    assert serial.records == parallel.records == small_run.records[:2]


def test_single_signal_no_mutation_stops_after_first_round():
    res = run(dataclasses.replace(SMALL, initial_signals=1, mutations_per_round=0), ENV, LRN, SCHEME)
    assert len(res.records) == 1
    assert list(res.winners.values()) == [res.initial[0]] * 3


def test_late_signals_are_trained_from_zero_to_the_target():
    trainer = Trainer(ENV, LRN, SCHEME, master_seed=1)
    trainer.advance(["000"], 1000)
    trainer.advance(["000", "110"], 2000, 100)
    assert trainer.learners["000"].steps == trainer.learners["110"].steps == 2000
    fresh = Trainer(ENV, LRN, SCHEME, master_seed=1)
    fresh.advance(["110"], 2000)
    assert fresh.learners["110"].q == trainer.learners["110"].q


def test_failure_keeps_completed_rounds(monkeypatch):
    real = Trainer.advance
    calls = {"n": 0}

    def flaky(self, ids, target, test_len=0):
        calls["n"] += 1
        if calls["n"] == 4:  # burn-in, round 1, round 2, then fail in round 3
            raise RuntimeError("learner blew up")
        return real(self, ids, target, test_len)

    monkeypatch.setattr(evolution.Trainer, "advance", flaky)
    with pytest.raises(EvolutionError) as err:
        run(SMALL, ENV, LRN, SCHEME)
    assert len(err.value.records) == 2 and "round 3" in str(err.value)


def test_grid_trains_everyone_from_zero():
    table = grid(["000", "100", "rand"], [500, 1000], 200, ENV, LRN, SCHEME, master_seed=2)
    assert table.checkpoints == [500, 1000]
    assert all(set(row) == {"000", "100", "rand"} for row in table.rows.values())
