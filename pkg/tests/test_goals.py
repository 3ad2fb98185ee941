import itertools
import random

import pytest
from hypothesis import given, strategies as st

from rewardevo.goals import (
    Goal,
    GoalScores,
    TestStats,
    ValidationError,
    argmin_set,
    cooperation,
    coop_from_counts,
    evaluate,
    goal_table,
)

from oracles import coop_identity


def stats(intervals, n_steps=None, won=None, lost=None):
    intervals = tuple(intervals)
    n = sum(intervals) + 5 if n_steps is None else n_steps
    pts = len(intervals)
    won = pts // 2 if won is None else won
    lost = pts - won if lost is None else lost
    return TestStats(n, won, lost, intervals, n - sum(intervals))


def test_mean_interval():
    assert cooperation(stats([10, 20, 30])) == 20


def test_no_points_saturates_to_window():
    assert cooperation(TestStats(500, 0, 0, (), 500)) == 500
    assert coop_from_counts(500, 0, 0) == 500


def test_goal_values():
    s = stats([3, 4, 5, 6], won=1, lost=3)
    assert evaluate(s, Goal.WINNING) == 1
    assert evaluate(s, Goal.LOSING) == 3
    assert evaluate(s, Goal.COOPERATION) == 4.5


def test_interval_accounting_validated():
    with pytest.raises(ValidationError):
        TestStats(100, 1, 1, (10,), 90)
    with pytest.raises(ValidationError):
        TestStats(100, 1, 0, (10,), 80)


@pytest.mark.parametrize(
    "won,lost,published",
    [(0, 1366, 73.17), (79, 624, 142.06), (194, 200, 253.17)],
)
def test_coop_identity_on_published_rows(won, lost, published):
    assert coop_from_counts(100_000, won, lost) == pytest.approx(coop_identity(100_000, won, lost))
    assert abs(coop_from_counts(100_000, won, lost) - published) / published < 0.01


@given(st.lists(st.integers(1, 400), min_size=1, max_size=40), st.integers(0, 300))
def test_goal_properties(intervals, tail):
    n = sum(intervals) + tail
    s = TestStats(n, len(intervals) // 3, len(intervals) - len(intervals) // 3, tuple(intervals), tail)
    assert evaluate(s, Goal.WINNING) + evaluate(s, Goal.LOSING) == len(intervals)
    # excluding only the trailing partial rally: coop * points + tail == n
    assert cooperation(s) * len(intervals) + tail == pytest.approx(n)


@given(st.lists(st.integers(2, 400), min_size=1, max_size=40), st.integers(0, 300), st.data())
def test_extra_point_inside_a_rally_never_raises_coop(intervals, tail, data):
    i = data.draw(st.integers(0, len(intervals) - 1))
    cut = data.draw(st.integers(1, intervals[i] - 1))
    split = intervals[:i] + [cut, intervals[i] - cut] + intervals[i + 1 :]
    n = sum(intervals) + tail
    before = TestStats(n, 0, len(intervals), tuple(intervals), tail)
    after = TestStats(n, 1, len(intervals), tuple(split), tail)
    assert evaluate(after, Goal.WINNING) == evaluate(before, Goal.WINNING) + 1
    assert cooperation(after) <= cooperation(before)
    assert coop_from_counts(n, 1, len(intervals)) <= coop_from_counts(n, 0, len(intervals))


def test_table_average_matches_published_block():
    won_100 = [312, 141, 284, 341, 223, 394, 494, 505]
    reports = [(c, "100", TestStats(100_000, w, 0, (1,) * w, 100_000 - w)) for c, w in enumerate(won_100)]
    assert round(goal_table(reports).averages()["100"].won) == 337


def test_single_row_average_is_that_row():
    s = TestStats(890, 505, 385, (1,) * 890, 0)
    table = goal_table([(9, "100", s)])
    assert table.averages()["100"] == table.rows[9]["100"] == GoalScores(505, 385, 1.0)


def test_order_independent_and_validated():
    rng = random.Random(3)
    reports = [(c, sid, TestStats(50, 1, 1, (10, 20), 20)) for c, sid in itertools.product((1, 2), ("000", "b100", "110"))]
    shuffled = reports[:]
    rng.shuffle(shuffled)
    assert goal_table(reports).rows == goal_table(shuffled).rows
    assert goal_table(reports).signals == ["000", "110", "b100"]
    with pytest.raises(ValidationError):
        goal_table(reports + [(3, "000", TestStats(60, 0, 0, (), 60))])
    with pytest.raises(ValidationError):
        goal_table(reports + [reports[0]])
    with pytest.raises(ValidationError):
        goal_table([])


def test_argmin_set():
    assert argmin_set({"000": 0, "001": 27, "011": 0}, ["000", "001", "011"]) == ["000", "011"]
    with pytest.raises(ValidationError):
        argmin_set({"000": 0}, ["000", "001"])
