"""Hierarchical evaluation-hypothesis lattices.

Level 1 holds evaluation hypotheses over testimony streams. Level m+1 holds
hypotheses that score level-m hypotheses in [0, 1] (a score of exactly 0 is a
nullification) and carry their own per-stream support channel. Rationality
ties the levels together: each level's distribution is the normalized
expectation of the scores assigned from the level above.

Score maps are sparse: a missing entry counts as 0 in the arithmetic, but
only an explicit 0 counts as an actual nullifying pronouncement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from typing import Iterable, Sequence

from ibsim.beliefs import (
    EPS_EVIDENCE,
    BeliefState,
    Snapshot,
    UpdateMode,
    chained_update,
    _refresh_marginals,
)
from ibsim.errors import DegenerateLattice, NotArgComplete, NotNormalized, ZeroEvidence
from ibsim.hypotheses import DEFAULT_EPS, DEFAULT_HORIZON, EvaluationHypothesis
from ibsim.streams import TestimonyStream, disagrees, entails

# Scores above this threshold count as real (non-marginal) endorsement.
POSITIVE_THETA = 0.5


@dataclass(frozen=True)
class HigherOrderHypothesis:
    """A level-(m+1) hypothesis scoring the level-m hypotheses."""

    id: str
    level: int  # >= 2
    scores: dict[str, float]
    testimony_support: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.level < 2:
            raise ValueError(f"higher-order hypothesis at level {self.level}")

    def score(self, lower_id: str) -> float:
        return self.scores.get(lower_id, 0.0)

    def nullifies_id(self, lower_id: str) -> bool:
        """An explicit zero score; silence does not nullify."""
        return self.scores.get(lower_id) == 0.0

    def support_for(self, stream_id: str) -> float:
        return self.testimony_support.get(stream_id, 0.0)


@dataclass(frozen=True)
class HypothesisSequence:
    """One hypothesis per level, from level 1 upward."""

    elements: tuple

    def __post_init__(self) -> None:
        for k, el in enumerate(self.elements[1:], start=2):
            if el.level != k:
                raise ValueError(f"sequence element {el.id!r} is not at level {k}")

    @property
    def length(self) -> int:
        return len(self.elements)

    @property
    def base(self) -> EvaluationHypothesis:
        return self.elements[0]

    @property
    def top(self):
        return self.elements[-1]

    def element(self, level: int):
        return self.elements[level - 1]

    def ids(self) -> tuple[str, ...]:
        return tuple(el.id for el in self.elements)


@dataclass(frozen=True)
class HypothesisLattice:
    """The leveled hypothesis sets plus the current per-level distributions.

    ``priors[m]`` maps hypothesis ids at level m to their current mass.
    ``support_marginals[m]`` stores, per stream, the last support marginal of
    level m; it seeds the chained denominators of the next hierarchical step.
    """

    level1: tuple[EvaluationHypothesis, ...]
    higher: dict[int, tuple[HigherOrderHypothesis, ...]]
    priors: dict[int, dict[str, float]]
    depth_cap: int = 3
    support_marginals: dict[int, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.level1:
            raise DegenerateLattice("level 1 is empty")
        occupied = sorted(self.higher)
        for want, got in zip(range(2, 2 + len(occupied)), occupied):
            if want != got:
                raise DegenerateLattice(f"level {want} is empty but level {got} is not")

    @property
    def depth(self) -> int:
        return 1 + len(self.higher)

    def hypotheses_at(self, level: int) -> Sequence:
        return self.level1 if level == 1 else self.higher[level]

    def ids_at(self, level: int) -> list[str]:
        return [h.id for h in self.hypotheses_at(level)]

    def find(self, level: int, hid: str):
        for h in self.hypotheses_at(level):
            if h.id == hid:
                return h
        raise KeyError(f"no hypothesis {hid!r} at level {level}")

    def prior_of(self, level: int, hid: str) -> float:
        return self.priors.get(level, {}).get(hid, 0.0)

    def with_level1_added(
        self, hypothesis: EvaluationHypothesis, mass: float = 0.0
    ) -> "HypothesisLattice":
        if any(h.id == hypothesis.id for h in self.level1):
            return self
        priors = {m: dict(p) for m, p in self.priors.items()}
        priors.setdefault(1, {})[hypothesis.id] = mass
        return replace(self, level1=self.level1 + (hypothesis,), priors=priors)

    def with_higher_added(
        self, hypothesis: HigherOrderHypothesis, mass: float = 0.0
    ) -> "HypothesisLattice":
        m = hypothesis.level
        if m > self.depth_cap:
            raise DegenerateLattice(f"level {m} exceeds the depth cap {self.depth_cap}")
        if m > self.depth + 1:
            raise DegenerateLattice(f"level {m} would leave level {self.depth + 1} empty")
        current = self.higher.get(m, ())
        if any(h.id == hypothesis.id for h in current):
            return self
        higher = dict(self.higher)
        higher[m] = current + (hypothesis,)
        priors = {lvl: dict(p) for lvl, p in self.priors.items()}
        priors.setdefault(m, {})[hypothesis.id] = mass
        return replace(self, higher=higher, priors=priors)

    def all_sequences(self, length: int) -> Iterable[HypothesisSequence]:
        if length < 1 or length > self.depth:
            return
        pools = [self.hypotheses_at(m) for m in range(1, length + 1)]
        for combo in product(*pools):
            yield HypothesisSequence(tuple(combo))


def rationality_normalize(lat: HypothesisLattice) -> HypothesisLattice:
    """Recompute every level below the top as the normalized expectation of
    the scores assigned from the level above. Idempotent; raises
    DegenerateLattice when a level's unnormalized mass vanishes.
    """
    top = lat.depth
    top_priors = lat.priors.get(top, {})
    total = math.fsum(top_priors.get(h.id, 0.0) for h in lat.hypotheses_at(top))
    if total <= 0.0:
        raise DegenerateLattice(f"level {top} carries no mass")
    if abs(total - 1.0) > 1e-9:
        raise NotNormalized(f"top-level priors sum to {total!r}")

    priors = {m: dict(p) for m, p in lat.priors.items()}
    for m in range(top - 1, 0, -1):
        above = lat.hypotheses_at(m + 1)
        weights = {}
        for h in lat.hypotheses_at(m):
            weights[h.id] = math.fsum(
                priors[m + 1].get(parent.id, 0.0) * parent.score(h.id) for parent in above
            )
        mass = math.fsum(weights.values())
        if mass <= 0.0:
            raise DegenerateLattice(f"level {m} receives no support from level {m + 1}")
        priors[m] = {hid: w / mass for hid, w in weights.items()}
    return replace(lat, priors=priors)


def is_positive(sequence: HypothesisSequence, theta: float = POSITIVE_THETA) -> bool:
    """Every element endorses the one below it above the threshold."""
    for lower, upper in zip(sequence.elements, sequence.elements[1:]):
        if upper.score(lower.id) <= theta:
            return False
    return True


def nullifies(sequence: HypothesisSequence, target: HypothesisSequence) -> bool:
    """Pairwise nullification: each scorer zeroes the target element below it.

    The scorer at level m+1 of ``sequence`` must explicitly score the target's
    level-m element 0, for every level where such a scorer exists. A sequence
    with no scorers nullifies nothing.
    """
    if sequence.length < target.length:
        raise ValueError("nullifying sequence must be at least as long as its target")
    pairs = range(1, min(target.length, sequence.length - 1) + 1)
    if not pairs:
        return False
    return all(
        sequence.element(m + 1).nullifies_id(target.element(m).id) for m in pairs
    )


class SupportLevel(Enum):
    NEITHER = "neither"
    SUPPORTS = "supports"
    POTENTIALLY_TRUSTWORTHY = "potentially_trustworthy"


def sequence_support(
    lat: HypothesisLattice,
    sequence: HypothesisSequence,
    stream: TestimonyStream,
    horizon: int = DEFAULT_HORIZON,
    eps: float = DEFAULT_EPS,
) -> SupportLevel:
    """Classify how a sequence stands to a stream.

    SUPPORTS: the base hypothesis's likelihood series for the stream is
    eventually nondecreasing (from some stage within the first half of the
    horizon) and every element of the sequence carries non-zero mass.
    POTENTIALLY_TRUSTWORTHY additionally requires the series to converge to 1
    (limit exactly 1 and the horizon value within ``eps`` of it).
    """
    for level, el in enumerate(sequence.elements, start=1):
        if lat.prior_of(level, el.id) <= 0.0:
            return SupportLevel.NEITHER
    base = sequence.base
    try:
        series = [base.likelihood(stream.id, n) for n in range(1, horizon + 1)]
        lim = base.channel_limit(stream.id)
    except Exception:
        return SupportLevel.NEITHER
    last_drop = 0
    for i in range(1, horizon):
        if series[i] < series[i - 1]:
            last_drop = i
    if last_drop > horizon // 2:
        return SupportLevel.NEITHER
    if lim == 1.0 and series[-1] >= 1.0 - eps:
        return SupportLevel.POTENTIALLY_TRUSTWORTHY
    return SupportLevel.SUPPORTS


def _chain_weight(sequence: HypothesisSequence) -> float:
    """Product of the scores linking the sequence above its level-2 element."""
    w = 1.0
    for lower, upper in zip(sequence.elements[1:], sequence.elements[2:]):
        w *= upper.score(lower.id)
    return w


def sigma_support_of_base(
    lat: HypothesisLattice, sequence: HypothesisSequence, h1_id: str
) -> float:
    """Support a level-1 hypothesis receives from the sequence's upper part.

    The upper elements are treated as a one-hypothesis-per-level hierarchy and
    normalized over the full level 1, exactly like the rationality rule. A
    broken chain (an internal zero score) supports nothing.
    """
    if sequence.length < 2:
        raise ValueError("support from above needs a sequence of length >= 2")
    if _chain_weight(sequence) == 0.0:
        return 0.0
    scorer = sequence.element(2)
    denom = math.fsum(scorer.score(h.id) for h in lat.level1)
    if denom <= 0.0:
        return 0.0
    return scorer.score(h1_id) / denom


def undercuts(
    lat: HypothesisLattice,
    sequence: HypothesisSequence,
    stream: TestimonyStream,
    stage: int,
) -> bool:
    """The sequence leaves every stream-trusting base hypothesis unsupported.

    For each level-1 hypothesis with majority likelihood for the stream at
    this stage, the support it receives from the sequence must not exceed the
    complement of that likelihood.
    """
    if sequence.length < 2:
        raise ValueError("undercutting is defined for sequences of length >= 2")
    for h in lat.level1:
        try:
            p = h.likelihood(stream.id, stage)
        except Exception:
            continue
        if p > 0.5 and sigma_support_of_base(lat, sequence, h.id) > 1.0 - p:
            return False
    return True


def _nullifier_against(
    lat: HypothesisLattice,
    target: HypothesisSequence,
    stream_id: str | None = None,
    exclude_stream_sourced: bool = False,
) -> HigherOrderHypothesis | None:
    """A hypothesis one level up (capped at the lattice depth) that explicitly
    zeroes the target's top reachable element.

    With ``stream_id`` set, only hypotheses whose support for that stream
    exceeds one half qualify; with ``exclude_stream_sourced`` those are
    disqualified instead (the discounting stance).
    """
    level = min(target.length + 1, lat.depth_cap, lat.depth + 1)
    if level < 2 or level > lat.depth:
        return None
    victim = target.element(level - 1).id
    for h in lat.higher.get(level, ()):
        if not h.nullifies_id(victim):
            continue
        if stream_id is not None:
            sourced = h.support_for(stream_id) > 0.5
            if exclude_stream_sourced and sourced:
                continue
            if not exclude_stream_sourced and not sourced:
                continue
        return h
    return None


@dataclass(frozen=True)
class AttackReport:
    holds: bool
    witness: HypothesisSequence | None
    failures: tuple[str, ...]


def attacks(
    lat: HypothesisLattice,
    stream: TestimonyStream,
    rival: TestimonyStream,
    stage: int,
    horizon: int = DEFAULT_HORIZON,
    eps: float = DEFAULT_EPS,
) -> AttackReport:
    """Whether the lattice lets ``stream`` attack ``rival``.

    Clause one: some positive sequence that makes the stream potentially
    trustworthy assigns the rival exactly the complementary likelihood and
    undercuts it. Clause two: every positive sequence supporting the rival is
    answered by a stream-supported nullifier one level up.
    """
    failures: list[str] = []
    witness = None
    for length in range(2, lat.depth + 1):
        for seq in lat.all_sequences(length):
            if not is_positive(seq):
                continue
            if sequence_support(lat, seq, stream, horizon, eps) is not SupportLevel.POTENTIALLY_TRUSTWORTHY:
                continue
            base = seq.base
            try:
                p_rival = base.likelihood(rival.id, stage)
                p_own = base.likelihood(stream.id, stage)
            except Exception:
                continue
            if abs(p_rival - (1.0 - p_own)) > 1e-12:
                continue
            if undercuts(lat, seq, rival, stage):
                witness = seq
                break
        if witness is not None:
            break
    if witness is None:
        failures.append("no potentially-trustworthy sequence undercuts the rival")

    for length in range(1, lat.depth + 1):
        for seq in lat.all_sequences(length):
            if not is_positive(seq):
                continue
            if sequence_support(lat, seq, rival, horizon, eps) is SupportLevel.NEITHER:
                continue
            if _nullifier_against(lat, seq, stream_id=stream.id) is None:
                failures.append(
                    f"rival-supporting sequence {seq.ids()} has no supported nullifier"
                )
    return AttackReport(not failures, witness, tuple(failures))


@dataclass(frozen=True)
class CompletenessReport:
    holds: bool
    violations: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.holds


def argumentatively_complete(
    lat: HypothesisLattice,
    stream: TestimonyStream,
    rivals: Sequence[TestimonyStream],
    horizon: int = DEFAULT_HORIZON,
    eps: float = DEFAULT_EPS,
) -> CompletenessReport:
    """Finite verifier for argumentative completeness of a stream.

    Checks, against each rival: disagreeing rival evidence triggers a full
    attack; compatible rival evidence is absorbed exactly one stage after it
    first appears; every positive sequence undercutting the stream has a
    stream-supported nullifier; and some full-depth positive sequence makes
    the stream potentially trustworthy.
    """
    violations: list[str] = []
    final_stage = min(stream.length, horizon)

    for rival in rivals:
        rival_len = min(rival.length, horizon)
        has_disagreement = False
        for n in range(1, min(rival_len, stream.length) + 1):
            for phi in sorted(rival.stage_set(n)):
                if disagrees(phi, stream, n):
                    has_disagreement = True
                    break
            if has_disagreement:
                break
        if has_disagreement:
            report = attacks(lat, stream, rival, final_stage, horizon, eps)
            if not report.holds:
                violations.append(
                    f"disagreeing rival {rival.id!r} is not attacked: {report.failures[0]}"
                )

        seen: set = set()
        for n in range(1, rival_len + 1):
            fresh = rival.stage_set(n) - seen
            seen |= rival.stage_set(n)
            for phi in sorted(fresh):
                if not stream.has_stage(n):
                    continue
                if disagrees(phi, stream, n) or entails(stream, phi, n):
                    continue
                if not stream.has_stage(n + 1) or not entails(stream, phi, n + 1):
                    violations.append(
                        f"compatible evidence {phi} from {rival.id!r} at stage {n} "
                        f"is not absorbed at stage {n + 1}"
                    )

    for length in range(2, lat.depth + 1):
        for seq in lat.all_sequences(length):
            if not is_positive(seq):
                continue
            if not undercuts(lat, seq, stream, final_stage):
                continue
            if _nullifier_against(lat, seq, stream_id=stream.id) is None:
                violations.append(
                    f"undercutting sequence {seq.ids()} has no supported nullifier"
                )

    if not any(
        sequence_support(lat, seq, stream, horizon, eps)
        is SupportLevel.POTENTIALLY_TRUSTWORTHY
        for seq in lat.all_sequences(lat.depth)
        if is_positive(seq)
    ):
        violations.append("no full-depth positive sequence makes the stream potentially trustworthy")

    return CompletenessReport(not violations, tuple(violations))


def pwmc_witness(
    lat: HypothesisLattice,
    stream: TestimonyStream,
    rivals: Sequence[TestimonyStream],
    horizon: int = DEFAULT_HORIZON,
    eps: float = DEFAULT_EPS,
) -> EvaluationHypothesis:
    """The base of a trust-establishing sequence, made model-complete.

    Only defined for argumentatively complete streams; raises NotArgComplete
    otherwise.
    """
    report = argumentatively_complete(lat, stream, rivals, horizon, eps)
    if not report.holds:
        raise NotArgComplete(
            f"stream {stream.id!r} is not argumentatively complete: {report.violations[0]}"
        )
    for seq in lat.all_sequences(lat.depth):
        if not is_positive(seq):
            continue
        if (
            sequence_support(lat, seq, stream, horizon, eps)
            is SupportLevel.POTENTIALLY_TRUSTWORTHY
        ):
            return seq.base.as_pwmc(stream.id)
    raise NotArgComplete(f"stream {stream.id!r} has no trust-establishing sequence")


def hierarchical_update(
    lat: HypothesisLattice,
    state: BeliefState,
    evidence,
) -> tuple[HypothesisLattice, BeliefState]:
    """One stage of leveled updating.

    Level 1 follows the belief-core update for the evidence stream(s); every
    higher level updates against its testimony-support channel by the same
    rule; then rationality is re-applied top down, so each level below the
    top ends up as the normalized expectation of the level above (levels
    whose mass is entirely zero are left alone: structure without mass does
    not reweight anything). In a depth-1 lattice this reduces exactly to the
    belief-core update.
    """
    streams = [evidence] if isinstance(evidence, TestimonyStream) else list(evidence)
    stage = state.step + 1
    new_state = chained_update(state, streams, lat.level1)
    priors = {m: dict(p) for m, p in lat.priors.items()}
    priors[1] = dict(new_state.hypothesis_probs)

    support_marginals = {m: dict(v) for m, v in lat.support_marginals.items()}
    for m in range(2, lat.depth + 1):
        level = lat.higher[m]
        current = priors.get(m, {})
        mass = math.fsum(current.get(h.id, 0.0) for h in level)
        sup = {
            h.id: math.fsum(h.support_for(s.id) for s in streams) / len(streams)
            for h in level
        }
        if mass > 0.0 and state.step > 0:
            stored = support_marginals.get(m, {})
            if state.mode is UpdateMode.CHAINED:
                denom = math.fsum(stored.get(s.id, 0.0) for s in streams) / len(streams)
            else:
                denom = math.fsum(sup[h.id] * current.get(h.id, 0.0) for h in level)
            if denom <= EPS_EVIDENCE:
                raise ZeroEvidence(f"level-{m} support denominator is at the evidence floor")
            priors[m] = {h.id: sup[h.id] * current.get(h.id, 0.0) / denom for h in level}
        else:
            priors[m] = {h.id: current.get(h.id, 0.0) for h in level}
        support_marginals[m] = {
            s.id: math.fsum(h.support_for(s.id) * priors[m][h.id] for h in level)
            for s in streams
        }

    # rationality re-projection, top down; zero-mass upper levels are inert
    for m in range(lat.depth - 1, 0, -1):
        above = lat.hypotheses_at(m + 1)
        above_mass = math.fsum(priors[m + 1].get(h.id, 0.0) for h in above)
        if above_mass <= 0.0:
            continue
        weights = {
            h.id: math.fsum(
                priors[m + 1].get(parent.id, 0.0) * parent.score(h.id) for parent in above
            )
            for h in lat.hypotheses_at(m)
        }
        total = math.fsum(weights.values())
        if total <= 0.0:
            raise DegenerateLattice(f"level {m} receives no support from level {m + 1}")
        priors[m] = {hid: w / total for hid, w in weights.items()}

    final_probs = dict(priors[1])
    marginals = _refresh_marginals(final_probs, lat.level1, new_state.tracked, stage)
    snap = Snapshot(stage, dict(final_probs), dict(marginals))
    final_state = BeliefState(
        final_probs,
        marginals,
        new_state.tracked,
        stage,
        new_state.mode,
        state.history + (snap,),
    )
    new_lat = replace(lat, priors=priors, support_marginals=support_marginals)
    return new_lat, final_state
