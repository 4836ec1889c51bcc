"""Staged testimony streams and the syntactic relations between them.

A stream is a cumulative sequence of literal sets: every stage contains all
literals asserted so far. Entailment is literal membership; inconsistency is a
signed-atom clash. Streams built from a constant core may be marked repeating,
in which case any stage index past the materialized content yields the final
stage again (the source keeps re-asserting itself).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ibsim.errors import EmptyStream, InconsistentSpec, StageOutOfRange
from ibsim.literals import Literal, negate


@dataclass(frozen=True)
class TestimonyStream:
    """A body of testimony presented in cumulative stages."""

    id: str
    stages: tuple[frozenset[Literal], ...]
    repeats: bool = False  # stage indexes past the end re-assert the last stage

    def __post_init__(self) -> None:
        for earlier, later in zip(self.stages, self.stages[1:]):
            if not earlier <= later:
                raise InconsistentSpec(
                    f"stream {self.id!r}: stage content must be cumulative"
                )

    @property
    def length(self) -> int:
        return len(self.stages)

    def has_stage(self, n: int) -> bool:
        if n < 1:
            return False
        return self.repeats or n <= len(self.stages)

    def stage_set(self, n: int) -> frozenset[Literal]:
        """Content at stage ``n`` (1-indexed)."""
        if n < 1:
            raise StageOutOfRange(f"stream {self.id!r}: stage {n} < 1")
        if n <= len(self.stages):
            return self.stages[n - 1]
        if self.repeats and self.stages:
            return self.stages[-1]
        raise StageOutOfRange(
            f"stream {self.id!r}: stage {n} of {len(self.stages)}"
        )

    def extended(self, content: frozenset[Literal]) -> "TestimonyStream":
        """A copy with one more stage appended."""
        return TestimonyStream(self.id, self.stages + (content,), self.repeats)


def stream_consistent(stream: TestimonyStream) -> bool:
    """True iff no stage asserts an atom with both signs."""
    if not stream.stages:
        raise EmptyStream(f"stream {stream.id!r} has no stages")
    for stage in stream.stages:
        atoms_pos = {l.atom for l in stage if not l.negative}
        atoms_neg = {l.atom for l in stage if l.negative}
        if atoms_pos & atoms_neg:
            return False
    return True


def streams_conflict(a: TestimonyStream, b: TestimonyStream, stage: int) -> bool:
    """True iff the union of the two stage-``stage`` contents clashes."""
    merged = a.stage_set(stage) | b.stage_set(stage)
    atoms_pos = {l.atom for l in merged if not l.negative}
    atoms_neg = {l.atom for l in merged if l.negative}
    return bool(atoms_pos & atoms_neg)


def entails(stream: TestimonyStream, phi: Literal, stage: int) -> bool:
    """True iff stage ``stage`` of the stream asserts ``phi``."""
    return phi in stream.stage_set(stage)


def disagrees(phi: Literal, stream: TestimonyStream, stage: int) -> bool:
    """True iff the stream asserts the negation of ``phi`` at this stage."""
    return negate(phi) in stream.stage_set(stage)


def stream_entails_stream(a: TestimonyStream, b: TestimonyStream, stage: int) -> bool:
    """True iff everything ``b`` asserts at this stage, ``a`` asserts too."""
    return b.stage_set(stage) <= a.stage_set(stage)
