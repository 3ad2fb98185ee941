import pytest

from rewardevo.draws import ChoiceStream, ScriptError, derive_seed


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(0, "ties") == derive_seed(0, "ties")
    assert len({derive_seed(0, "ties"), derive_seed(0, "mutation"), derive_seed(1, "ties")}) == 3
    assert 0 <= derive_seed(123, "x", 4) < 2**63


def test_same_seed_same_draws():
    a, b = ChoiceStream(seed=5), ChoiceStream(seed=5)
    assert [a.choice("abcd") for _ in range(20)] == [b.choice("abcd") for _ in range(20)]
    assert a.sample(range(10), 3) == b.sample(range(10), 3)


def test_script_overrides_then_rng_resumes():
    s = ChoiceStream(seed=1, script=["c", ["x", "y"]])
    assert s.choice("abc") == "c"
    assert s.sample("xyz", 2) == ["x", "y"]
    assert s.choice("abc") in "abc"
    assert s.history[:2] == ["c", ["x", "y"]]


def test_script_must_fit_population():
    with pytest.raises(ScriptError):
        ChoiceStream(script=["z"]).choice("abc")
    with pytest.raises(ScriptError):
        ChoiceStream(script=[["a", "a"]]).sample("abc", 2)


def test_singleton_choice_consumes_no_randomness():
    a, b = ChoiceStream(seed=9), ChoiceStream(seed=9)
    a.choice(["only"])
    assert a.choice("abcdef") == b.choice("abcdef")
