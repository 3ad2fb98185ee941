import pytest

from rewardevo.config import DESK_ENV, RunConfig, emit_config, load_config, parse_config
from rewardevo.env import ConfigError
from rewardevo.population import IncrementMode


def test_empty_config_is_all_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.env == DESK_ENV
    assert cfg.evolution.burn_in == 50_000 and cfg.evolution.test_len == 10_000
    assert cfg.evolution.mutations_per_round == 2 and cfg.evolution.increment_mode is IncrementMode.ADDITIVE


def test_sections_fill_dataclasses():
    cfg = parse_config(
        """
[run]
seed = 4
output = results
[env]
field_width = 30
[learner]
alpha = 0.2
approximator_widths = 16, 8
[evolution]
burn_in = 2_000
test_len = 500
increment_mode = doubling
[signals]
grid = 000 110 rand
"""
    )
    assert cfg.seed == 4 and cfg.evolution.master_seed == 4
    assert cfg.env.field_width == 30 and cfg.env.paddle_height == DESK_ENV.paddle_height
    assert cfg.learner.alpha == 0.2 and cfg.learner.approximator_widths == (16, 8)
    assert cfg.evolution.increment_mode is IncrementMode.DOUBLING
    assert cfg.grid_signals == ("000", "110", "rand")


def test_explicit_master_seed_wins():
    cfg = parse_config("[run]\nseed = 4\n[evolution]\nmaster_seed = 9\n")
    assert cfg.evolution.master_seed == 9


@pytest.mark.parametrize(
    "text,where",
    [
        ("[env]\nwidth = 3\n", "env.width"),
        ("[learner]\nalpha = 2\n", "alpha"),
        ("[learner]\nalpha = lots\n", "learner.alpha"),
        ("[evolution]\ntest_len = 60000\n", "evolution.test_len"),
        ("[signals]\ngrid = 000 abc\n", "signals.grid"),
        ("[bogus]\nx = 1\n", "bogus"),
        ("[run]\nmode = dance\n", "run.mode"),
        ("no section header\n", "syntax"),
    ],
)
def test_errors_name_the_key(text, where):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert where in str(err.value)


def test_emit_round_trip(tmp_path):
    cfg = parse_config("[run]\nseed = 2\n[env]\nserve_seed = 5\n[evolution]\nmax_rounds = 3\n")
    path = tmp_path / "run.ini"
    path.write_text(emit_config(cfg))
    assert load_config(path) == cfg


def test_overrides():
    cfg = RunConfig().with_overrides(seed=7, output="x", workers=None)
    assert cfg.seed == 7 and cfg.evolution.master_seed == 7 and cfg.output == "x"
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.ini")
