"""Per-stage likelihood schedules assigned by evaluation hypotheses.

A schedule maps a 1-indexed stage number to the probability the hypothesis
assigns to that stage of a stream. Three kinds cover every configuration used
here: a constant, a geometric approach to a limit, and the pointwise
complement of another schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"constant schedule outside [0,1]: {self.c}")

    def value(self, n: int) -> float:
        _check_stage(n)
        return self.c

    def limit(self) -> float:
        return self.c

    def nondecreasing(self) -> bool:
        return True


@dataclass(frozen=True)
class MonotoneToLimit:
    """Geometric approach from ``start`` toward ``limit_value``.

    value(n) = limit - (limit - start) * (1 - rate) ** (n - 1), so value(1)
    is exactly ``start`` and each stage closes a ``rate`` fraction of the
    remaining gap.
    """

    start: float
    limit_value: float
    rate: float

    def __post_init__(self) -> None:
        for name in ("start", "limit_value"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} outside [0,1]: {v}")
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate outside (0,1]: {self.rate}")

    def value(self, n: int) -> float:
        _check_stage(n)
        return self.limit_value - (self.limit_value - self.start) * (1.0 - self.rate) ** (n - 1)

    def limit(self) -> float:
        return self.limit_value

    def nondecreasing(self) -> bool:
        return self.limit_value >= self.start


@dataclass(frozen=True)
class Complement:
    """Pointwise ``1 - base``; closes the schedule family under negation."""

    base: "Schedule"

    def value(self, n: int) -> float:
        return 1.0 - self.base.value(n)

    def limit(self) -> float:
        return 1.0 - self.base.limit()

    def nondecreasing(self) -> bool:
        # complement flips the direction of the base schedule
        return not self.base.nondecreasing() or isinstance(self.base, Constant)


Schedule = Union[Constant, MonotoneToLimit, Complement]


def schedule_to_json(s: Schedule) -> dict:
    if isinstance(s, Constant):
        return {"kind": "constant", "c": s.c}
    if isinstance(s, MonotoneToLimit):
        return {"kind": "monotone", "start": s.start, "limit": s.limit_value, "rate": s.rate}
    if isinstance(s, Complement):
        return {"kind": "complement", "base": schedule_to_json(s.base)}
    raise TypeError(f"not a schedule: {s!r}")


def schedule_from_json(data: dict) -> Schedule:
    kind = data.get("kind")
    if kind == "constant":
        return Constant(float(data["c"]))
    if kind == "monotone":
        return MonotoneToLimit(float(data["start"]), float(data["limit"]), float(data["rate"]))
    if kind == "complement":
        return Complement(schedule_from_json(data["base"]))
    raise ValueError(f"unknown schedule kind: {kind!r}")


def _check_stage(n: int) -> None:
    if n < 1:
        raise ValueError(f"stage index must be >= 1, got {n}")
