"""Evaluation hypotheses: per-stream likelihood assignments over testimony.

An evaluation hypothesis carries one likelihood schedule per stream it
pronounces on. A hypothesis that is probability-wise model complete (PWMC)
for a stream also pronounces on everything that stream does not entail, by
assigning the complement of its stream likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ibsim.errors import NotApplicable, Unpronounced
from ibsim.literals import Literal
from ibsim.schedules import Schedule
from ibsim.streams import TestimonyStream, entails, stream_entails_stream

# Convergence proxy defaults used by the finite-horizon trust checks.
DEFAULT_HORIZON = 200
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class EvaluationHypothesis:
    """A hypothesis about which testimony streams are trustworthy."""

    id: str
    schedules: dict[str, Schedule]
    pwmc_for: str | None = None  # stream id this hypothesis is model-complete for

    def pronounces_on(self, stream_id: str) -> bool:
        return stream_id in self.schedules or (
            self.pwmc_for is not None and self.pwmc_for in self.schedules
        )

    def likelihood(self, stream_id: str, stage: int) -> float:
        """P(stream stage | hypothesis) at the given 1-indexed stage."""
        sched = self.schedules.get(stream_id)
        if sched is not None:
            return sched.value(stage)
        if self.pwmc_for is not None and stream_id != self.pwmc_for:
            base = self.schedules.get(self.pwmc_for)
            if base is not None:
                # model completeness: whatever the trusted stream does not
                # cover gets the complement of the stream likelihood
                return 1.0 - base.value(stage)
        raise Unpronounced(
            f"hypothesis {self.id!r} assigns no likelihood to stream {stream_id!r}"
        )

    def channel_limit(self, stream_id: str) -> float:
        """Limit of the likelihood series for a stream, if pronounced on."""
        sched = self.schedules.get(stream_id)
        if sched is not None:
            return sched.limit()
        if self.pwmc_for is not None and stream_id != self.pwmc_for:
            base = self.schedules.get(self.pwmc_for)
            if base is not None:
                return 1.0 - base.limit()
        raise Unpronounced(
            f"hypothesis {self.id!r} assigns no likelihood to stream {stream_id!r}"
        )

    def as_pwmc(self, stream_id: str) -> "EvaluationHypothesis":
        return self if self.pwmc_for == stream_id else replace(self, pwmc_for=stream_id)


def pwmc_extend(
    hypothesis: EvaluationHypothesis,
    stream: TestimonyStream,
    phi: Literal,
    stage: int,
) -> float:
    """Closure likelihood of evidence the stream does not entail.

    For a hypothesis treated as model-complete for ``stream``, any ``phi``
    outside the stream's stage content is assigned exactly
    ``1 - P(stream stage | hypothesis)``.
    """
    if entails(stream, phi, stage):
        raise NotApplicable(
            f"{phi} is entailed by stream {stream.id!r} at stage {stage}; "
            "the closure value is only defined for non-entailed evidence"
        )
    return 1.0 - hypothesis.likelihood(stream.id, stage)


def proposition_likelihood(
    hypothesis: EvaluationHypothesis,
    phi: Literal,
    stage: int,
    streams: dict[str, TestimonyStream],
) -> float | None:
    """P(phi | hypothesis) routed through the streams that entail phi.

    Returns the strongest schedule value among entailing streams the
    hypothesis pronounces on; falls back to the PWMC complement when the
    hypothesis is model-complete for a stream that does not entail phi.
    Returns None when the hypothesis is silent about phi.
    """
    candidates = []
    for stream in streams.values():
        if not stream.has_stage(stage):
            continue
        if entails(stream, phi, stage) and stream.id in hypothesis.schedules:
            candidates.append(hypothesis.schedules[stream.id].value(stage))
    if candidates:
        return max(candidates)
    if hypothesis.pwmc_for is not None and hypothesis.pwmc_for in streams:
        base_stream = streams[hypothesis.pwmc_for]
        if base_stream.has_stage(stage) and not entails(base_stream, phi, stage):
            return 1.0 - hypothesis.likelihood(base_stream.id, stage)
    return None


def potentially_trustworthy(
    hypothesis: EvaluationHypothesis,
    stream: TestimonyStream,
    horizon: int = DEFAULT_HORIZON,
    eps: float = DEFAULT_EPS,
) -> bool:
    """Finite-horizon proxy for full trust in a stream.

    Requires a majority likelihood at every stage, a schedule whose limit is
    exactly 1, and a horizon value within ``eps`` of 1. The limit check keeps
    slow constants from passing on horizon value alone.
    """
    try:
        values = [hypothesis.likelihood(stream.id, n) for n in range(1, horizon + 1)]
        lim = hypothesis.channel_limit(stream.id)
    except Unpronounced:
        return False
    if any(v <= 0.5 for v in values):
        return False
    if lim != 1.0:
        return False
    return values[-1] >= 1.0 - eps
