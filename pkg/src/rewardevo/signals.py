"""Reward-signal genomes and the mutation operator.

A region signal is three bits, one per mutation region (a1, a2, a3); the
reward for a transition is the bit of the region holding the ball afterwards.
Event baselines pay on score events instead, and a periodic tape pays a fixed
bit pattern indexed by the timestep.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .draws import ChoiceStream
from .env import EnvConfig, EnvState, Event, region_of


class SignalKind(enum.Enum):
    REGION_BITS = "region_bits"
    EVENT_BASELINE = "event_baseline"
    RANDOM_POLICY = "random_policy_marker"
    PERIODIC_TAPE = "periodic_tape"


class EventKind(enum.Enum):
    ON_SCORE = "on_score"
    ON_CONCEDE = "on_concede"
    PER_STEP_NO_SCORE = "per_step_no_score"


_BASELINE_IDS = {
    EventKind.ON_SCORE: "b100",
    EventKind.PER_STEP_NO_SCORE: "b010",
    EventKind.ON_CONCEDE: "b001",
}
_BASELINE_BY_ID = {v: k for k, v in _BASELINE_IDS.items()}

RANDOM_ID = "rand"


class SignalError(ValueError):
    pass


class ExhaustedError(RuntimeError):
    """No unseen genome is left in the pool."""


@dataclass(frozen=True)
class RewardSignal:
    kind: SignalKind
    bits: tuple[int, ...] = ()
    event: EventKind | None = None
    tape: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is SignalKind.REGION_BITS:
            if len(self.bits) != 3 or any(b not in (0, 1) for b in self.bits):
                raise SignalError(f"region signal needs 3 bits, got {self.bits!r}")
        elif self.kind is SignalKind.EVENT_BASELINE:
            if self.event is None:
                raise SignalError("event baseline needs an event kind")
        elif self.kind is SignalKind.PERIODIC_TAPE:
            if not self.tape or any(b not in (0, 1) for b in self.tape):
                raise SignalError("tape must be a non-empty bit sequence")

    @property
    def id(self) -> str:
        return canonical_id(self)

    @property
    def period(self) -> int:
        return len(self.tape)

    def __str__(self) -> str:
        return self.id


def region_signal(bits: Iterable[int] | str) -> RewardSignal:
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    return RewardSignal(SignalKind.REGION_BITS, bits=tuple(bits))


def baseline_signal(event: EventKind) -> RewardSignal:
    return RewardSignal(SignalKind.EVENT_BASELINE, event=event)


def random_marker() -> RewardSignal:
    return RewardSignal(SignalKind.RANDOM_POLICY)


def tape_signal(tape: Iterable[int]) -> RewardSignal:
    return RewardSignal(SignalKind.PERIODIC_TAPE, tape=tuple(tape))


REGION_IDS: tuple[str, ...] = tuple("".join(map(str, b)) for b in itertools.product((0, 1), repeat=3))
BASELINE_IDS: tuple[str, ...] = ("b100", "b010", "b001")


def canonical_id(signal: RewardSignal) -> str:
    if signal.kind is SignalKind.REGION_BITS:
        return "".join(str(b) for b in signal.bits)
    if signal.kind is SignalKind.EVENT_BASELINE:
        return _BASELINE_IDS[signal.event]
    if signal.kind is SignalKind.RANDOM_POLICY:
        return RANDOM_ID
    payload = "".join(map(str, signal.tape)).encode()
    return "t" + hashlib.sha1(payload).hexdigest()[:12]


def parse_signal(text: str) -> RewardSignal:
    """Inverse of :func:`canonical_id` for region, baseline and random ids.

    Tape ids are digests and cannot be parsed back.
    """
    text = text.strip()
    if text in REGION_IDS:
        return region_signal(text)
    if text in _BASELINE_BY_ID:
        return baseline_signal(_BASELINE_BY_ID[text])
    if text == RANDOM_ID:
        return random_marker()
    raise SignalError(f"unknown signal id {text!r}")


def signal_sort_key(sid: str) -> tuple[int, str]:
    """Canonical column order: region ids, then baselines, random, tapes."""
    if sid in REGION_IDS:
        return (0, sid)
    if sid in BASELINE_IDS:
        return (1, str(BASELINE_IDS.index(sid)))
    if sid == RANDOM_ID:
        return (2, sid)
    return (3, sid)


def emit_reward(signal: RewardSignal, before: EnvState, after: EnvState, config: EnvConfig) -> int:
    kind = signal.kind
    if kind is SignalKind.REGION_BITS:
        return signal.bits[region_of(config, after).index]
    if kind is SignalKind.EVENT_BASELINE:
        ev = after.last_event
        if signal.event is EventKind.ON_SCORE:
            return int(ev is Event.AGENT_SCORED)
        if signal.event is EventKind.ON_CONCEDE:
            return int(ev is Event.AGENT_CONCEDED)
        return int(ev is Event.NONE)
    if kind is SignalKind.PERIODIC_TAPE:
        return signal.tape[before.step_count % len(signal.tape)]
    return 0


def mutate_tape(signal: RewardSignal, k: int, stream: ChoiceStream) -> RewardSignal:
    """Flip ``k`` distinct random positions of a tape."""
    if signal.kind is not SignalKind.PERIODIC_TAPE:
        raise SignalError("only tapes can be bit-flipped")
    positions = stream.sample(range(signal.period), min(k, signal.period))
    tape = list(signal.tape)
    for i in positions:
        tape[i] ^= 1
    return tape_signal(tape)


@dataclass
class SignalArchive:
    """Every region genome handed out so far; draws come from ``draws``."""

    draws: ChoiceStream = field(default_factory=ChoiceStream)
    seen: set[str] = field(default_factory=set)
    pool: tuple[str, ...] = REGION_IDS

    def unseen(self) -> list[str]:
        return [sid for sid in self.pool if sid not in self.seen]

    def _take(self, k: int) -> list[RewardSignal]:
        ids = self.draws.sample(self.unseen(), k)
        self.seen.update(ids)
        return [parse_signal(sid) for sid in ids]

    def initial_population(self, count: int) -> list[RewardSignal]:
        pool = self.unseen()
        if count > len(pool):
            raise ExhaustedError(f"asked for {count} unseen genomes, only {len(pool)} left")
        return self._take(count)

    def mutate(self, p: int) -> list[RewardSignal]:
        """Up to ``p`` unseen genomes; a short list means the pool ran dry."""
        if p < 0:
            raise ValueError("p must be >= 0")
        k = min(p, len(self.unseen()))
        if k == 0:
            return []
        return self._take(k)


def initial_population(count: int, archive: SignalArchive) -> list[RewardSignal]:
    return archive.initial_population(count)


def mutate(archive: SignalArchive, p: int) -> list[RewardSignal]:
    return archive.mutate(p)
