"""Iterated testimony updating over evaluation hypotheses.

The state tracks a distribution over evaluation hypotheses together with the
marginal probability of each tracked stream's current stage. Two update modes
are provided:

* ``CHAINED``  - the update denominator is the stored marginal of the
  previous stage (the posterior marginal of stage n doubles as the prior
  marginal of stage n+1),
* ``STANDARD`` - the denominator is the ordinary Bayes normalizer computed
  from the current stage likelihoods.

With stage-constant schedules the two denominators coincide, so the modes
agree exactly; with varying schedules the chained arithmetic is reproduced
verbatim, including its transient departures from a normalized distribution.

The very first update consumes stage 1: it leaves the hypothesis distribution
untouched and only establishes the stage-1 marginals, which seed the chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from ibsim.errors import KeyMismatch, NotNormalized, StageOutOfRange, Unpronounced, ZeroEvidence
from ibsim.hypotheses import EvaluationHypothesis, proposition_likelihood
from ibsim.literals import Literal
from ibsim.streams import TestimonyStream

# Denominators at or below this floor count as no evidence at all.
EPS_EVIDENCE = 1e-12

NORMALIZATION_TOL = 1e-9


class UpdateMode(Enum):
    CHAINED = "chained"
    STANDARD = "standard"


class Verdict(Enum):
    LEARNABLE = "Learnable"
    NOT_LEARNABLE = "NotLearnable"


class LossKind(Enum):
    ABSOLUTE = "absolute"
    SQUARED = "squared"


@dataclass(frozen=True)
class Snapshot:
    step: int
    probs: dict[str, float]
    marginals: dict[str, float]


@dataclass(frozen=True)
class BeliefState:
    """Immutable belief state; updates return new states."""

    hypothesis_probs: dict[str, float]
    stream_marginals: dict[str, float]
    tracked: tuple[str, ...]
    step: int
    mode: UpdateMode
    history: tuple[Snapshot, ...]

    @staticmethod
    def initial(
        priors: dict[str, float],
        tracked: Sequence[str],
        mode: UpdateMode = UpdateMode.CHAINED,
    ) -> "BeliefState":
        total = math.fsum(priors.values())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NotNormalized(f"priors sum to {total!r}")
        probs = dict(priors)
        snap = Snapshot(0, dict(probs), {})
        return BeliefState(probs, {}, tuple(tracked), 0, mode, (snap,))

    def prob_trace(self, hypothesis_id: str) -> list[float]:
        return [s.probs[hypothesis_id] for s in self.history]

    def marginal_trace(self, stream_id: str) -> list[float]:
        return [s.marginals[stream_id] for s in self.history if stream_id in s.marginals]


def marginal(beliefs: dict[str, float], likelihoods: dict[str, float]) -> float:
    """Total probability of a stage: sum of likelihood times belief.

    Keys of the two maps must match exactly; beliefs must sum to one. The
    result is clamped to [0, 1] only against floating-point drift.
    """
    if set(beliefs) != set(likelihoods):
        raise KeyMismatch("beliefs and likelihoods must be keyed identically")
    total = math.fsum(beliefs.values())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"beliefs sum to {total!r}")
    value = math.fsum(likelihoods[k] * beliefs[k] for k in beliefs)
    if -1e-12 <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + 1e-12:
        return 1.0
    return value


def _as_stream_list(evidence) -> list[TestimonyStream]:
    if isinstance(evidence, TestimonyStream):
        return [evidence]
    return list(evidence)


def _mixture_likelihood(
    hypothesis: EvaluationHypothesis, streams: Sequence[TestimonyStream], stage: int
) -> float:
    # evidence from several attended streams weighs in equally
    return math.fsum(hypothesis.likelihood(s.id, stage) for s in streams) / len(streams)


def _refresh_marginals(
    probs: dict[str, float],
    hypotheses: Sequence[EvaluationHypothesis],
    tracked: Iterable[str],
    stage: int,
) -> dict[str, float]:
    out: dict[str, float] = {}
    for sid in tracked:
        out[sid] = math.fsum(h.likelihood(sid, stage) * probs[h.id] for h in hypotheses)
    return out


def chained_update(
    state: BeliefState,
    evidence,
    hypotheses: Sequence[EvaluationHypothesis],
) -> BeliefState:
    """Consume the next stage of the evidence stream(s).

    ``evidence`` is a stream or a sequence of streams updated on jointly
    (their likelihoods and stored marginals are averaged). Raises
    StageOutOfRange when a stream lacks the next stage and ZeroEvidence when
    the update denominator falls to the evidence floor.
    """
    streams = _as_stream_list(evidence)
    stage = state.step + 1
    for s in streams:
        if not s.has_stage(stage):
            raise StageOutOfRange(f"stream {s.id!r} has no stage {stage}")

    if state.step == 0:
        new_probs = dict(state.hypothesis_probs)
    else:
        like = {h.id: _mixture_likelihood(h, streams, stage) for h in hypotheses}
        if state.mode is UpdateMode.CHAINED:
            denom = math.fsum(state.stream_marginals[s.id] for s in streams) / len(streams)
        else:
            denom = math.fsum(like[h.id] * state.hypothesis_probs[h.id] for h in hypotheses)
        if denom <= EPS_EVIDENCE:
            raise ZeroEvidence(f"stage-{stage} denominator {denom!r} is at the evidence floor")
        new_probs = {
            h.id: like[h.id] * state.hypothesis_probs[h.id] / denom for h in hypotheses
        }

    new_marginals = _refresh_marginals(new_probs, hypotheses, state.tracked, stage)
    snap = Snapshot(stage, dict(new_probs), dict(new_marginals))
    return BeliefState(
        new_probs,
        new_marginals,
        state.tracked,
        stage,
        state.mode,
        state.history + (snap,),
    )


def simulate(
    state: BeliefState,
    evidence,
    steps: int,
    hypotheses: Sequence[EvaluationHypothesis],
) -> BeliefState:
    """Apply ``chained_update`` repeatedly; the history keeps every snapshot."""
    for _ in range(steps):
        state = chained_update(state, evidence, hypotheses)
    return state


def marginal_of_proposition(
    state: BeliefState,
    phi: Literal,
    streams: dict[str, TestimonyStream],
    hypotheses: Sequence[EvaluationHypothesis],
) -> float:
    """Probability of a single piece of evidence under the current beliefs.

    Each hypothesis contributes its schedule value through the strongest
    entailing stream it pronounces on, or its model-completeness complement
    when it pronounces on nothing that entails ``phi``. Hypotheses silent
    about ``phi`` contribute nothing; if all are silent the evidence is
    unpronounced.
    """
    stage = max(state.step, 1)
    total = 0.0
    pronounced = False
    for h in hypotheses:
        value = proposition_likelihood(h, phi, stage, streams)
        if value is None:
            continue
        pronounced = True
        total += value * state.hypothesis_probs[h.id]
    if not pronounced:
        raise Unpronounced(f"no hypothesis pronounces on {phi}")
    return total


def loss(estimate: float, ideal: float, kind: LossKind = LossKind.ABSOLUTE) -> float:
    """Distance between an estimate and the ideal posterior."""
    for name, v in (("estimate", estimate), ("ideal", ideal)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} outside [0,1]: {v}")
    if kind is LossKind.SQUARED:
        return (estimate - ideal) ** 2
    return abs(estimate - ideal)


@dataclass(frozen=True)
class LearnabilityProbe:
    """An object-level hypothesis whose learning is gated by testimony.

    The probe's target is conditioned on one piece of evidence per stage,
    with the evidence marginal supplied by the testimony system. When that
    marginal is at the evidence floor the update is skipped outright and the
    posterior stays at the prior.
    """

    target_id: str
    prior: float
    ideal_posterior: float
    evidence: Literal
    evidence_likelihood: float  # P(evidence | target)
    loss_kind: LossKind = LossKind.ABSOLUTE


@dataclass(frozen=True)
class ProbeResult:
    verdict: Verdict
    losses: tuple[float, ...]
    posteriors: tuple[float, ...]
    degenerate: bool


def learnability_probe(
    probe: LearnabilityProbe,
    state: BeliefState,
    steps: int,
    evidence,
    streams: dict[str, TestimonyStream],
    hypotheses: Sequence[EvaluationHypothesis],
) -> ProbeResult:
    """Run the testimony system forward and test whether the target can learn.

    At each of ``steps`` stages the testimony state advances once and the
    target's posterior given the probe evidence is recomputed from its prior:
    ``P(evidence | target) * prior / marginal(evidence)``, clipped to the
    probability range, or exactly the prior under the zero-evidence rule.
    Learnable means the final loss improved on the prior's loss.
    """
    losses = [loss(probe.prior, probe.ideal_posterior, probe.loss_kind)]
    posteriors = [probe.prior]
    for _ in range(steps):
        state = chained_update(state, evidence, hypotheses)
        m = marginal_of_proposition(state, probe.evidence, streams, hypotheses)
        if m <= EPS_EVIDENCE:
            post = probe.prior
        else:
            post = probe.evidence_likelihood * probe.prior / m
            post = min(1.0, max(0.0, post))
        posteriors.append(post)
        losses.append(loss(post, probe.ideal_posterior, probe.loss_kind))
    degenerate = losses[0] == 0.0
    learnable = (not degenerate) and losses[-1] < losses[0]
    verdict = Verdict.LEARNABLE if learnable else Verdict.NOT_LEARNABLE
    return ProbeResult(verdict, tuple(losses), tuple(posteriors), degenerate)
