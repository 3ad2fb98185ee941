import pytest

from rewardevo.cli import fixture_path, main
from rewardevo.formats import parse_curve, parse_history, parse_report

TINY = """
[run]
seed = 3
workers = 1
[env]
field_width = 16
field_height = 9
paddle_height = 3
paddle_inset = 2
[learner]
epsilon_decay_steps = 1000
[observation]
x_bins = 4
y_bins = 3
paddle_bins = 3
[evolution]
burn_in = 1000
test_len = 300
"""


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY)
    return path


def replay_args(fitness=None, expect=True):
    args = ["replay", "--fitness", str(fitness or fixture_path("published_fitness.tsv")),
            "--draws", str(fixture_path("published_draws.json"))]
    return args + (["--expect", str(fixture_path("published_progression.jsonl"))] if expect else [])


def test_replay_matches_bundled_expectation(capsys):
    assert main(replay_args()) == 0
    out = capsys.readouterr().out
    assert "~011~" in out and "winners: winning=100, losing=000, cooperation=110" in out


def test_replay_reports_the_round_of_a_flipped_argmin(tmp_path, capsys):
    # at 5M the losing row strikes 010 (277 lost); dropping 111's losses below that strikes 111 instead
    text = fixture_path("published_fitness.tsv").read_text().replace("5000000\t111\t0\t1383\t72.19", "5000000\t111\t0\t100\t72.19")
    path = tmp_path / "perturbed.tsv"
    path.write_text(text)
    assert main(replay_args(path)) == 1
    out = capsys.readouterr().out
    assert "MISMATCH" in out
    first = next(line for line in out.splitlines() if line.startswith("  round"))
    assert first.startswith("  round 4 losing")


def test_replay_empty_table_is_a_validation_error(tmp_path, capsys):
    path = tmp_path / "empty.tsv"
    path.write_text("# rewardevo-report v1 test_len=10\ncheckpoint\tsignal\twon\tlost\tcoop\n")
    assert main(replay_args(path, expect=False)) == 2
    assert "empty fitness table" in capsys.readouterr().err


def test_replay_parse_error_has_line_number(tmp_path, capsys):
    path = tmp_path / "bad.tsv"
    lines = fixture_path("published_fitness.tsv").read_text().splitlines()
    lines[3] = "2000000\t001\t27\tmany\t73.78"
    path.write_text("\n".join(lines))
    assert main(replay_args(path)) == 2
    assert f"{path}:4:" in capsys.readouterr().err


def test_config_errors_name_section_and_key(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[env]\npaddle_hieght = 3\n")
    assert main(["evolve", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "env.paddle_hieght" in capsys.readouterr().err


def test_unwritable_output(tiny, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["evolve", "--config", str(tiny), "--out", str(blocker / "sub")]) == 2
    assert "cannot write" in capsys.readouterr().err


def test_evolve_outputs_are_consistent_and_reproducible(tiny, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["evolve", "--config", str(tiny), "--out", str(a)]) == 0
    assert main(["evolve", "--config", str(tiny), "--out", str(b)]) == 0
    for name in ("win.dat", "lose.dat", "coop.dat", "history.jsonl", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    history = parse_history((a / "history.jsonl").read_text())
    assert history.final is not None and len(history.final["winners"]) == 3
    assert all(w is not None for w in history.final["winners"].values())
    for name in ("win.dat", "lose.dat", "coop.dat"):
        curve = parse_curve((a / name).read_text())
        assert set(curve.columns) == set(history.registry)
        assert list(curve.checkpoints) == [r.checkpoint for r in history.records]
    # a saved history replays to the same decisions
    assert main(["replay", "--fitness", str(a / "history.jsonl")]) == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("winners: "))
    assert sorted(line[len("winners: "):].split(", ")) == sorted(f"{g}={s}" for g, s in history.final["winners"].items())
    # the seed flag changes the run
    assert main(["evolve", "--config", str(tiny), "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert (tmp_path / "c" / "history.jsonl").read_bytes() != (a / "history.jsonl").read_bytes()


def test_grid_and_baseline_reports(tiny, tmp_path):
    cfg = tiny.read_text().replace("burn_in = 1000", "burn_in = 500\nmax_rounds = 2").replace("test_len = 300", "test_len = 200")
    tiny.write_text(cfg)
    assert main(["grid", "--config", str(tiny), "--out", str(tmp_path)]) == 0
    report = parse_report((tmp_path / "grid_report.tsv").read_text())
    assert report.table.checkpoints == [1000, 1500]
    assert all(len(row) == 12 for row in report.table.rows.values())
    assert set(report.averages) == set(report.table.signals)
    assert main(["baseline", "--config", str(tiny), "--out", str(tmp_path)]) == 0
    base = parse_report((tmp_path / "baseline_report.tsv").read_text())
    assert base.table.signals == ["b100", "b010", "b001", "rand"]
    # the random row is identical in both reports: same seeds, no training
    assert base.table.get(1500, "rand") == report.table.get(1500, "rand")
