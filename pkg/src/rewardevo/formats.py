"""Readers and writers for every file the harness produces or consumes.

Each format starts with a version line. Parsers raise :class:`ParseError`
carrying the 1-based line number of the offending line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .goals import Goal, GoalScores, GoalTable
from .population import ReplayDraws, RoundRecord, TieDraw
from .signals import signal_sort_key

CURVE_HEADER = "# rewardevo-curve v1"
REPORT_HEADER = "# rewardevo-report v1"
HISTORY_FORMAT = "rewardevo-history"
PROGRESSION_FORMAT = "rewardevo-progression"
DRAWS_FORMAT = "rewardevo-draws"
MISSING = "nan"


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.message = message
        self.line = line
        self.path = path


def fmt_number(v: float | int) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return MISSING
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    return str(v)


def parse_number(token: str, line: int | None = None) -> float | int:
    try:
        return int(token)
    except ValueError:
        pass
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", line) from None
    if math.isnan(value):
        raise ParseError("unexpected missing value", line)
    return value


# -- curve files (.dat) ----------------------------------------------------


@dataclass(frozen=True)
class CurveFile:
    """Whitespace table: one checkpoint per row, one signal per column.

    ``None`` marks a checkpoint at which the signal was not tested.
    """

    columns: tuple[str, ...]
    checkpoints: tuple[int, ...]
    values: tuple[tuple[float | int | None, ...], ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.checkpoints):
            raise ValueError("one value row per checkpoint")
        if any(len(row) != len(self.columns) for row in self.values):
            raise ValueError("curve rows must match the column count")

    def column(self, sid: str) -> list[float | int | None]:
        i = self.columns.index(sid)
        return [row[i] for row in self.values]


def curve_from_table(table: GoalTable, goal: Goal, columns: Sequence[str] | None = None) -> CurveFile:
    cols = tuple(sorted(columns if columns is not None else table.signals, key=signal_sort_key))
    cps = tuple(table.checkpoints)
    rows = []
    for c in cps:
        row = table.rows[c]
        rows.append(tuple(row[sid].fitness(goal) if sid in row else None for sid in cols))
    return CurveFile(cols, cps, tuple(rows))


def emit_curve(curve: CurveFile) -> str:
    lines = [CURVE_HEADER, " ".join(["M", *curve.columns])]
    for c, row in zip(curve.checkpoints, curve.values):
        cells = [MISSING if v is None else fmt_number(v) for v in row]
        lines.append(" ".join([str(c), *cells]))
    return "\n".join(lines) + "\n"


def parse_curve(text: str) -> CurveFile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CURVE_HEADER:
        raise ParseError("missing curve header", 1)
    if len(lines) < 2 or not lines[1].split() or lines[1].split()[0] != "M":
        raise ParseError("expected column header starting with 'M'", 2)
    columns = tuple(lines[1].split()[1:])
    if len(set(columns)) != len(columns):
        raise ParseError("duplicate column", 2)
    cps, rows = [], []
    for n, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != len(columns) + 1:
            raise ParseError(f"expected {len(columns) + 1} fields, got {len(tokens)}", n)
        try:
            cps.append(int(tokens[0]))
        except ValueError:
            raise ParseError(f"bad checkpoint {tokens[0]!r}", n) from None
        rows.append(tuple(None if t == MISSING else parse_number(t, n) for t in tokens[1:]))
    return CurveFile(columns, tuple(cps), tuple(rows))


# -- reports ---------------------------------------------------------------


@dataclass
class Report:
    """Won / lost / co-op per signal per checkpoint, plus the average block."""

    table: GoalTable
    averages: dict[str, GoalScores] = field(default_factory=dict)

    @classmethod
    def from_table(cls, table: GoalTable) -> "Report":
        return cls(table, table.averages())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Report):
            return NotImplemented
        return (
            self.table.test_len == other.table.test_len
            and self.table.rows == other.table.rows
            and self.averages == other.averages
        )


def emit_report(report: Report) -> str:
    lines = [f"{REPORT_HEADER} test_len={report.table.test_len}", "checkpoint\tsignal\twon\tlost\tcoop"]
    for c in report.table.checkpoints:
        row = report.table.rows[c]
        for sid in sorted(row, key=signal_sort_key):
            s = row[sid]
            lines.append("\t".join([str(c), sid, fmt_number(s.won), fmt_number(s.lost), fmt_number(s.coop)]))
    for sid in sorted(report.averages, key=signal_sort_key):
        s = report.averages[sid]
        lines.append("\t".join(["avg", sid, fmt_number(s.won), fmt_number(s.lost), fmt_number(s.coop)]))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> Report:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(REPORT_HEADER):
        raise ParseError("missing report header", 1)
    test_len = None
    for token in lines[0][len(REPORT_HEADER):].split():
        key, _, value = token.partition("=")
        if key == "test_len":
            try:
                test_len = int(value)
            except ValueError:
                raise ParseError(f"bad test_len {value!r}", 1) from None
    if test_len is None:
        raise ParseError("header lacks test_len", 1)
    if len(lines) < 2 or lines[1].split("\t") != ["checkpoint", "signal", "won", "lost", "coop"]:
        raise ParseError("bad column header", 2)
    table = GoalTable(test_len=test_len)
    averages: dict[str, GoalScores] = {}
    for n, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ParseError(f"expected 5 tab-separated fields, got {len(parts)}", n)
        cp, sid, won, lost, coop = parts
        scores = GoalScores(parse_number(won, n), parse_number(lost, n), parse_number(coop, n))
        if cp == "avg":
            averages[sid] = scores
            continue
        try:
            checkpoint = int(cp)
        except ValueError:
            raise ParseError(f"bad checkpoint {cp!r}", n) from None
        row = table.rows.setdefault(checkpoint, {})
        if sid in row:
            raise ParseError(f"duplicate entry for {sid} at {checkpoint}", n)
        row[sid] = scores
    return Report(table, averages)


# -- round history ---------------------------------------------------------


@dataclass
class History:
    header: dict
    records: list[RoundRecord]
    final: dict | None = None

    @property
    def registry(self) -> list[str]:
        out = list(self.header.get("initial", []))
        for rec in self.records:
            for sid in rec.added:
                if sid not in out:
                    out.append(sid)
        return out


def record_to_json(rec: RoundRecord) -> dict:
    return {
        "round": rec.round,
        "checkpoint": rec.checkpoint,
        "scores": {
            sid: [s.won, s.lost, s.coop] for sid, s in sorted(rec.scores.items(), key=lambda kv: signal_sort_key(kv[0]))
        },
        "active_before": {g.value: list(ids) for g, ids in rec.active_before.items()},
        "removed": {g.value: sid for g, sid in rec.removed.items()},
        "added": list(rec.added),
        "ties": {g.value: {"tied": list(d.tied), "chosen": d.chosen} for g, d in rec.tie_draws.items()},
    }


def record_from_json(d: dict) -> RoundRecord:
    return RoundRecord(
        round=int(d["round"]),
        checkpoint=int(d["checkpoint"]),
        scores={sid: GoalScores(*v) for sid, v in d["scores"].items()},
        active_before={Goal(g): list(ids) for g, ids in d["active_before"].items()},
        removed={Goal(g): sid for g, sid in d["removed"].items()},
        added=list(d["added"]),
        tie_draws={Goal(g): TieDraw(tuple(t["tied"]), t["chosen"]) for g, t in d.get("ties", {}).items()},
    )


def emit_history(history: History) -> str:
    header = {"format": HISTORY_FORMAT, "version": 1, **history.header}
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(record_to_json(r), sort_keys=True) for r in history.records]
    if history.final is not None:
        lines.append(json.dumps({"final": history.final}, sort_keys=True))
    return "\n".join(lines) + "\n"


def _json_lines(text: str, fmt: str) -> list[tuple[int, dict]]:
    out = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append((n, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", n) from None
    if not out or out[0][1].get("format") != fmt:
        raise ParseError(f"first line must declare format {fmt!r}", out[0][0] if out else 1)
    if out[0][1].get("version") != 1:
        raise ParseError("unsupported version", out[0][0])
    return out


def parse_history(text: str) -> History:
    items = _json_lines(text, HISTORY_FORMAT)
    header = {k: v for k, v in items[0][1].items() if k not in ("format", "version")}
    records, final = [], None
    for n, d in items[1:]:
        if "final" in d:
            final = d["final"]
            continue
        try:
            records.append(record_from_json(d))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad round record: {exc}", n) from None
    return History(header, records, final)


# -- matrix progression (replay output / expectation) ----------------------


@dataclass(frozen=True)
class ProgressionStep:
    round: int
    checkpoint: int
    active_before: dict[str, tuple[str, ...]]
    removed: dict[str, str | None]
    added: tuple[str, ...]


def progression_from_records(records: Iterable[RoundRecord]) -> list[ProgressionStep]:
    return [
        ProgressionStep(
            round=r.round,
            checkpoint=r.checkpoint,
            active_before={g.value: tuple(ids) for g, ids in r.active_before.items()},
            removed={g.value: sid for g, sid in r.removed.items()},
            added=tuple(r.added),
        )
        for r in records
    ]


def emit_progression(steps: Sequence[ProgressionStep]) -> str:
    lines = [json.dumps({"format": PROGRESSION_FORMAT, "version": 1})]
    for s in steps:
        lines.append(
            json.dumps(
                {
                    "round": s.round,
                    "checkpoint": s.checkpoint,
                    "active_before": {g: list(v) for g, v in s.active_before.items()},
                    "removed": s.removed,
                    "added": list(s.added),
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"


def parse_progression(text: str) -> list[ProgressionStep]:
    steps = []
    for n, d in _json_lines(text, PROGRESSION_FORMAT)[1:]:
        try:
            steps.append(
                ProgressionStep(
                    round=int(d["round"]),
                    checkpoint=int(d["checkpoint"]),
                    active_before={g: tuple(v) for g, v in d["active_before"].items()},
                    removed=dict(d["removed"]),
                    added=tuple(d["added"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad progression step: {exc}", n) from None
    return steps


def diff_progression(actual: Sequence[ProgressionStep], expected: Sequence[ProgressionStep]) -> list[str]:
    """Human-readable mismatches, earliest round first; empty when equal."""
    out = []
    for a, e in zip(actual, expected):
        if a.checkpoint != e.checkpoint:
            out.append(f"round {e.round}: checkpoint {a.checkpoint} != expected {e.checkpoint}")
        for g in sorted(set(a.active_before) | set(e.active_before)):
            if a.active_before.get(g) != e.active_before.get(g):
                out.append(f"round {e.round} {g}: active {a.active_before.get(g)} != expected {e.active_before.get(g)}")
            if a.removed.get(g) != e.removed.get(g):
                out.append(f"round {e.round} {g}: removed {a.removed.get(g)} != expected {e.removed.get(g)}")
        if a.added != e.added:
            out.append(f"round {e.round}: added {list(a.added)} != expected {list(e.added)}")
    if len(actual) != len(expected):
        out.append(f"round count {len(actual)} != expected {len(expected)}")
    return out


# -- recorded draws --------------------------------------------------------


def emit_draws(draws: ReplayDraws) -> str:
    data = {
        "format": DRAWS_FORMAT,
        "version": 1,
        "initial": list(draws.initial) if draws.initial is not None else None,
        "mutations": [list(m) for m in draws.mutations] if draws.mutations is not None else None,
        "ties": [
            {"round": r, "goal": g.value, "chosen": sid}
            for (r, g), sid in sorted(draws.ties.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
        ],
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def parse_draws(text: str) -> ReplayDraws:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(data, dict) or data.get("format") != DRAWS_FORMAT:
        raise ParseError(f"not a {DRAWS_FORMAT} file", 1)
    try:
        ties = {(int(t["round"]), Goal(t["goal"])): t["chosen"] for t in data.get("ties", [])}
        initial = data.get("initial")
        mutations = data.get("mutations")
        return ReplayDraws(
            initial=tuple(initial) if initial is not None else None,
            mutations=tuple(tuple(m) for m in mutations) if mutations is not None else None,
            ties=ties,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad draws entry: {exc}") from None


def read_text(path: str | Path) -> str:
    return Path(path).read_text()


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text)


def load_report(path: str | Path) -> Report:
    try:
        return parse_report(read_text(path))
    except ParseError as exc:
        raise ParseError(exc.message, exc.line, str(path)) from None


def scores_table(rows: Mapping[int, Mapping[str, GoalScores]], test_len: int) -> GoalTable:
    return GoalTable(test_len=test_len, rows={c: dict(r) for c, r in rows.items()})
