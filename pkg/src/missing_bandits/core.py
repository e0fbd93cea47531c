"""Shared value types for the bandit simulator.

Everything in this module is an immutable value object: identifiers,
outcome alphabets, single observed rounds, and derivable RNG streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

# Arms and mediator values are plain zero-based ints everywhere.
ArmId = int
MediatorValue = int

_U64 = 2**64


@dataclass(frozen=True)
class OutcomeAlphabet:
    """Finite reward support for categorical-outcome settings.

    Values must be strictly increasing. Several downstream formulas assume
    the support is scaled so that sum(|y|) == 1; use `normalized()` to get
    such a copy and `is_normalized` to check.
    """

    values: Tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("alphabet must contain at least one value")
        for lo, hi in zip(vals, vals[1:]):
            if not lo < hi:
                raise ValueError("alphabet values must be strictly increasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_index", {y: i for i, y in enumerate(vals)})

    def __len__(self) -> int:
        return len(self.values)

    @property
    def is_normalized(self) -> bool:
        return abs(sum(abs(v) for v in self.values) - 1.0) <= 1e-12

    def normalized(self) -> "OutcomeAlphabet":
        scale = sum(abs(v) for v in self.values)
        if scale == 0.0:
            raise ValueError("cannot normalize an all-zero alphabet")
        return OutcomeAlphabet(tuple(v / scale for v in self.values))

    def index_of(self, y: float) -> int:
        """Exact-match lookup; environments emit alphabet elements verbatim."""
        try:
            return self._index[y]
        except KeyError:
            raise ValueError(f"value {y!r} is not in the alphabet") from None


@dataclass(frozen=True)
class ObservedRound:
    """One masked observation: the reward and/or mediator may be absent.

    Absence is explicit: y is None exactly when o_y is False, and m is None
    exactly when o_m is False. There is no sentinel number.
    """

    arm: ArmId
    m: Optional[MediatorValue]
    o_m: bool
    y: Optional[float]
    o_y: bool

    def __post_init__(self):
        if self.arm < 0:
            raise ValueError("arm must be a nonnegative index")
        if self.o_m != (self.m is not None):
            raise ValueError("mediator must be present exactly when o_m is true")
        if self.o_y != (self.y is not None):
            raise ValueError("reward must be present exactly when o_y is true")
        if self.m is not None and self.m < 0:
            raise ValueError("mediator must be a nonnegative index")


def make_round(arm: ArmId, m: Optional[MediatorValue], y: Optional[float]) -> ObservedRound:
    """Build an ObservedRound, deriving the observation flags from presence."""
    return ObservedRound(arm=arm, m=m, o_m=m is not None, y=y, o_y=y is not None)


@dataclass(frozen=True)
class RngStream:
    """A derivable, counter-based random stream.

    Identical (seed, path) always produces identical draws; `derive` returns
    an independent child stream, which is how replications and per-arm
    initializations get their own randomness without shared state.
    """

    seed: int
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        if not (0 <= self.seed < _U64):
            raise ValueError("seed must fit in 64 bits")
        for k in self.path:
            if not (0 <= k < _U64):
                raise ValueError("path keys must fit in 64 bits")

    def derive(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))


def as_generator(rng: Union[RngStream, np.random.Generator]) -> np.random.Generator:
    """Accept either a stream or a ready generator (envs take both)."""
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng
