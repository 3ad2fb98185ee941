import random

import pytest

from rewardevo.env import EnvConfig, ObservationScheme
from rewardevo.learner import (
    LearnerConfig,
    RandomPolicy,
    TabularLearner,
    Transition,
    greedy,
    make_learner,
    q_bound,
    q_update,
    select_action,
)
from rewardevo.signals import parse_signal

CFG = EnvConfig(field_width=16, field_height=9, paddle_height=3, paddle_inset=2)
SCHEME = ObservationScheme(x_bins=4, y_bins=3, paddle_bins=3)


def learner(sid="100", seed=0, **kw):
    return TabularLearner(parse_signal(sid), CFG, LearnerConfig(seed=seed, epsilon_decay_steps=2000, **kw), SCHEME)


def test_full_tie_is_uniform():
    rng = random.Random(0)
    counts = [0, 0, 0]
    for _ in range(3000):
        counts[select_action({(0,): [0.0, 0.0, 0.0]}, (0,), 0.0, rng)] += 1
    assert all(abs(c - 1000) < 3 * (3000 * 2 / 9) ** 0.5 for c in counts)


def test_strict_argmax():
    rng = random.Random(0)
    assert {select_action({(0,): [0.5, 0.1, 0.1]}, (0,), 0.0, rng) for _ in range(100)} == {0}
    assert greedy([0.1, 0.9, 0.9], random.Random(1)) in (1, 2)


def test_full_exploration_uniform_within_3_sigma():
    rng = random.Random(5)
    n = 10_000
    counts = [0, 0, 0]
    for _ in range(n):
        counts[select_action({(0,): [9.0, 0.0, 0.0]}, (0,), 1.0, rng)] += 1
    sd = (n * (1 / 3) * (2 / 3)) ** 0.5
    assert all(abs(c - n / 3) < 3 * sd for c in counts)


def test_q_update_examples():
    q = q_update({}, Transition((0,), 1, 1, (1,)), 0.1, 0.99)
    assert q[(0,)] == [0.0, pytest.approx(0.1), 0.0]
    q = q_update({(0,): [0.0] * 3}, Transition((0,), 2, 0, (1,)), 0.1, 0.99)
    assert q[(0,)] == [0.0, 0.0, 0.0]
    q = {(0,): [0.5, 0.0, 0.0], (1,): [0.2, 1.0, 0.3]}
    q_update(q, Transition((0,), 0, 0, (1,)), 0.5, 0.9)
    assert q[(0,)][0] == pytest.approx(0.7) and q[(1,)] == [0.2, 1.0, 0.3]
    q = {(0,): [0.5, 0.25, 0.0]}
    assert q_update(dict(q), Transition((0,), 1, 1, (0,)), 0.0, 0.9)[(0,)] == [0.5, 0.25, 0.0]


def test_config_validation():
    from rewardevo.env import ConfigError

    for bad in (dict(alpha=1.5), dict(gamma=1.0), dict(epsilon_end=0.5, epsilon_start=0.1), dict(backend="x")):
        with pytest.raises(ConfigError):
            LearnerConfig(**bad).validate()
    cfg = LearnerConfig(epsilon_decay_steps=100)
    assert cfg.epsilon(0) == 1.0 and cfg.epsilon(50) == pytest.approx(0.525) and cfg.epsilon(10**6) == 0.05


def test_zero_steps_changes_nothing():
    a = learner()
    before = a.to_dict()
    assert a.train_steps(0) == []
    assert a.to_dict() == before


def test_zero_genome_keeps_table_zero():
    a = learner("000")
    a.train_steps(5000)
    assert a.q and all(v == [0.0, 0.0, 0.0] for v in a.q.values())


def test_training_is_deterministic_and_bounded():
    a, b = learner("110", seed=4), learner("110", seed=4)
    assert a.train_steps(4000) == b.train_steps(4000)
    assert a.q == b.q and a.steps == 4000
    bound = q_bound(a.config.gamma)
    assert all(0.0 <= v <= bound for row in a.q.values() for v in row)


def test_test_run_accounting_and_purity():
    a = learner("100", seed=2)
    a.train_steps(3000)
    before = a.to_dict()
    s = a.test_run(2000, seed=9)
    assert a.to_dict() == before
    assert sum(s.intervals) + s.residual == 2000 and len(s.intervals) == s.won + s.lost
    assert a.test_run(2000, seed=9) == s
    empty = a.test_run(0, seed=9)
    assert (empty.won, empty.lost, empty.intervals) == (0, 0, ())


def test_checkpoint_round_trip_resumes_identically(tmp_path):
    a = learner("010", seed=1)
    a.train_steps(1500)
    a.save(tmp_path / "l.json")
    b = TabularLearner.load(tmp_path / "l.json")
    assert b.q == a.q and b.steps == 1500
    assert a.train_steps(500) == b.train_steps(500)
    assert a.q == b.q


def test_random_policy_loses_far_more_than_it_wins():
    s = RandomPolicy(EnvConfig(field_width=24, field_height=15, paddle_height=5, paddle_inset=4)).test_run(10_000, seed=1)
    assert s.lost / max(s.won, 1) >= 3


def test_make_learner_backends():
    assert isinstance(make_learner(parse_signal("rand"), CFG, LearnerConfig()), RandomPolicy)
    assert isinstance(make_learner(parse_signal("b100"), CFG, LearnerConfig(), SCHEME), TabularLearner)
    from rewardevo.approximator import ApproxLearner

    assert isinstance(make_learner(parse_signal("b100"), CFG, LearnerConfig(backend="approximator")), ApproxLearner)
