"""Command-line front end: ``evolve``, ``grid``, ``baseline`` and ``replay``.

Exit status is 0 when the mode completed and every check passed, 1 when a
replay disagrees with its expectation or a run aborted, 2 for bad input
(config, parse or validation errors) and unwritable output.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from .config import RunConfig, emit_config, load_config
from .env import ConfigError
from .evolution import EvolutionError, checkpoints, grid, run
from .formats import (
    History,
    ParseError,
    Report,
    curve_from_table,
    diff_progression,
    emit_curve,
    emit_history,
    emit_report,
    parse_draws,
    parse_history,
    parse_progression,
    parse_report,
    progression_from_records,
)
from .goals import GOALS, Goal, GoalTable, ValidationError
from .population import ReplayDraws, RoundRecord, replay_elimination

log = logging.getLogger("rewardevo")

CURVE_FILES = {Goal.WINNING: "win.dat", Goal.LOSING: "lose.dat", Goal.COOPERATION: "coop.dat"}


class InputError(Exception):
    """Bad user input; reported on stderr with exit status 2."""


def fixture_path(name: str) -> Path:
    """Path of a bundled data file (``published_fitness.tsv``, ``published_draws.json``, ...)."""
    return Path(str(resources.files("rewardevo") / "data" / name))


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None


def _load_config(args: argparse.Namespace, mode: str) -> RunConfig:
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(mode=mode, seed=getattr(args, "seed", None), output=getattr(args, "out", None))
    if getattr(args, "workers", None) is not None:
        cfg = cfg.with_overrides(workers=args.workers)
    cfg.validate()
    return cfg


# -- evolve ------------------------------------------------------------------


def _history(cfg: RunConfig, initial: Sequence[str], records: list[RoundRecord], final: dict | None) -> History:
    evo = cfg.evolution
    header = {
        "initial": list(initial),
        "master_seed": evo.master_seed,
        "burn_in": evo.burn_in,
        "test_len": evo.test_len,
        "mutations_per_round": evo.mutations_per_round,
        "increment_mode": evo.increment_mode.value,
        "goals": [g.value for g in GOALS[: evo.n_goals]],
    }
    return History(header, list(records), final)


def cmd_evolve(args: argparse.Namespace) -> int:
    cfg = _load_config(args, "evolve")
    out = Path(cfg.output)
    _write(out / "config.ini", emit_config(cfg))
    evo = cfg.evolution
    records: list[RoundRecord] = []
    initial: list[str] = []

    def persist(rec: RoundRecord, matrix) -> None:
        records.append(rec)
        if not initial:
            initial.extend(rec.active_before[next(iter(rec.active_before))])
        _write(out / "history.jsonl", emit_history(_history(cfg, initial, records, None)))

    try:
        result = run(evo, cfg.env, cfg.learner, cfg.observation, workers=cfg.n_workers, on_round=persist)
    except EvolutionError as exc:
        print(f"error: {exc}; {len(exc.records)} completed round(s) kept in {out / 'history.jsonl'}", file=sys.stderr)
        return 1

    winners = {g.value: sid for g, sid in result.winners.items()}
    _write(out / "history.jsonl", emit_history(_history(cfg, result.initial, result.records, {"winners": winners})))
    for g in result.matrix.goals:
        curve = curve_from_table(result.table, g, columns=result.matrix.registry)
        _write(out / CURVE_FILES[g], emit_curve(curve))
    summary = [f"{g}: {sid if sid is not None else '(not converged)'}" for g, sid in winners.items()]
    _write(out / "summary.txt", "\n".join(summary) + "\n")
    print("\n".join(summary))
    return 0


# -- grid / baseline ---------------------------------------------------------


def _sweep(args: argparse.Namespace, mode: str, signals: Sequence[str], name: str) -> int:
    cfg = _load_config(args, mode)
    evo = cfg.evolution
    cps = checkpoints(evo.burn_in, evo.max_rounds, evo.increment_mode)
    table = grid(
        signals, cps, evo.test_len, cfg.env, cfg.learner, cfg.observation,
        master_seed=evo.master_seed, workers=cfg.n_workers,
    )
    report = Report.from_table(table)
    path = Path(cfg.output) / name
    _write(path, emit_report(report))
    print(f"{'signal':<6} {'won':>8} {'lost':>8} {'co-op':>8}   (average over {len(cps)} checkpoints)")
    for sid, s in report.averages.items():
        print(f"{sid:<6} {s.won:8.1f} {s.lost:8.1f} {s.coop:8.2f}")
    print(f"report written to {path}")
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    return _sweep(args, "grid", cfg.grid_signals, "grid_report.tsv")


def cmd_baseline(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    return _sweep(args, "baseline", cfg.baseline_signals, "baseline_report.tsv")


# -- replay ------------------------------------------------------------------


def _parse_located(parse, text: str, path: str):
    try:
        return parse(text)
    except ParseError as exc:
        raise ParseError(exc.message, exc.line, path) from None


def load_fitness(path: str) -> tuple[GoalTable, ReplayDraws | None]:
    """A report table, or a round history (which also carries its own draws)."""
    text = _read(path)
    if text.lstrip().startswith("{"):
        history = _parse_located(parse_history, text, path)
        test_len = int(history.header.get("test_len", 0)) or 1
        table = GoalTable(test_len=test_len, rows={r.checkpoint: dict(r.scores) for r in history.records})
        draws = ReplayDraws(
            initial=tuple(history.header["initial"]) if "initial" in history.header else None,
            mutations=tuple(tuple(r.added) for r in history.records),
            ties={(r.round, g): d.chosen for r in history.records for g, d in r.tie_draws.items()},
        )
        return table, draws
    return _parse_located(parse_report, text, path).table, None


def render_round(rec: RoundRecord) -> str:
    """One round of the population matrix; ``~id~`` marks the struck signal."""
    lines = [f"round {rec.round} @ {rec.checkpoint}"]
    width = max(len(g.value) for g in rec.active_before)
    for g, ids in rec.active_before.items():
        cells = [f"~{sid}~" if sid == rec.removed.get(g) else sid for sid in ids]
        added = f"  | + {' '.join(rec.added)}" if rec.added else ""
        lines.append(f"  {g.value:<{width}}  {' '.join(cells)}{added}")
    return "\n".join(lines)


def cmd_replay(args: argparse.Namespace) -> int:
    table, own_draws = load_fitness(args.fitness)
    if args.draws is not None:
        draws = _parse_located(parse_draws, _read(args.draws), args.draws)
    elif own_draws is not None:
        draws = own_draws
    else:
        raise InputError("--draws is required when --fitness is a report")
    records, states = replay_elimination(table, draws, p=args.p, seed=args.seed)
    for rec in records:
        print(render_round(rec))
    winners = states[-1].winners()
    print("winners: " + ", ".join(f"{g.value}={sid if sid else '-'}" for g, sid in winners.items()))
    if args.expect is None:
        return 0
    expected = _parse_located(parse_progression, _read(args.expect), args.expect)
    diffs = diff_progression(progression_from_records(records), expected)
    if diffs:
        print("MISMATCH against " + args.expect)
        for d in diffs:
            print("  " + d)
        return 1
    print("matches " + args.expect)
    return 0


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rewardevo", description="Evolve reward signals for a Pong-like game.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run the elimination/mutation loop")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="output directory (default: run.output)")
    p.add_argument("--workers", type=int, help="parallel processes (0 = all cores)")
    p.set_defaults(func=cmd_evolve)

    for name, func, text in (
        ("grid", cmd_grid, "train every grid signal with no elimination"),
        ("baseline", cmd_baseline, "train the score-event baselines and random play"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("replay", help="re-run elimination bookkeeping from recorded scores")
    p.add_argument("--fitness", required=True, help="report (.tsv) or round history (.jsonl)")
    p.add_argument("--draws", help="recorded draws (.json); optional for a history")
    p.add_argument("--expect", help="expected matrix progression (.jsonl)")
    p.add_argument("--p", type=int, default=2, help="mutations per round")
    p.add_argument("--seed", type=int, default=0, help="seed for draws not on record")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except (ValidationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
