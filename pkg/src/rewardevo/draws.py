"""Recordable / replayable random choices.

Every random decision the evolution loop makes (initial signals, mutations,
tie-breaks) goes through a :class:`ChoiceStream`. A stream either draws from
a seeded RNG or replays a script of previously recorded outcomes, so a run
can be re-executed with the exact decisions of an earlier one.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Hashable, Sequence, TypeVar

T = TypeVar("T", bound=Hashable)


class ScriptError(ValueError):
    """A scripted draw does not fit the population it was asked for."""


def derive_seed(master: int, *names: object) -> int:
    """Stable 63-bit seed for a named sub-stream of ``master``."""
    text = ":".join([str(master), *map(str, names)])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass
class ChoiceStream:
    """Seeded choices, optionally forced by a script.

    ``script`` is a list of outcomes consumed in order, one entry per call;
    each entry is a single item for :meth:`choice` or a list for
    :meth:`sample`. Once the script runs out the RNG takes over.
    """

    seed: int = 0
    script: list = field(default_factory=list)
    history: list = field(default_factory=list)
    rng: random.Random = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.rng = random.Random(self.seed)
        self.script = list(self.script)

    def _next_scripted(self):
        if self.script:
            return True, self.script.pop(0)
        return False, None

    def choice(self, population: Sequence[T]) -> T:
        if not population:
            raise IndexError("choice from an empty population")
        scripted, value = self._next_scripted()
        if scripted:
            if value not in population:
                raise ScriptError(f"scripted draw {value!r} not in {list(population)!r}")
        elif len(population) == 1:
            value = population[0]
        else:
            value = population[self.rng.randrange(len(population))]
        self.history.append(value)
        return value

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        if k > len(population):
            raise ValueError(f"cannot sample {k} from {len(population)}")
        scripted, value = self._next_scripted()
        if scripted:
            value = list(value)
            if len(value) != k or len(set(value)) != k or any(v not in population for v in value):
                raise ScriptError(f"scripted sample {value!r} invalid for k={k} from {list(population)!r}")
        else:
            value = self.rng.sample(list(population), k)
        self.history.append(list(value))
        return value
