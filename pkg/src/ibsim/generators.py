"""Construction of testimony streams, including the reactive generator.

The reactive engine owns one stream plus the lattice that backs it and plays
the role of an argumentatively complete source: compatible rival evidence is
absorbed into the next stage, and every observed rival hypothesis or sequence
is answered one stage later by a freshly minted nullifier supported by the
stream. The one-stage delay is a law of the engine: an item observed at stage
i is answered at exactly stage i+1, never at i.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from ibsim.errors import InconsistentSpec
from ibsim.hypotheses import EvaluationHypothesis
from ibsim.lattice import (
    HigherOrderHypothesis,
    HypothesisLattice,
    _nullifier_against,
    is_positive,
)
from ibsim.literals import Literal, negate, parse_literal_set
from ibsim.streams import TestimonyStream


@dataclass(frozen=True)
class StreamSpec:
    """Declarative recipe for a stream.

    kind "explicit" materializes the given cumulative stages; "constant"
    repeats a core set indefinitely; "reactive" starts from the core and is
    grown by a ReactiveAttackEngine.
    """

    id: str
    kind: str  # explicit | constant | reactive
    core: frozenset[Literal] = frozenset()
    stages: tuple[frozenset[Literal], ...] = ()
    repeat: bool = True

    @staticmethod
    def from_json(data: dict) -> "StreamSpec":
        kind = data["kind"]
        stages = tuple(parse_literal_set(s) for s in data.get("stages", []))
        core = parse_literal_set(data.get("core", []))
        return StreamSpec(
            id=data["id"],
            kind=kind,
            core=core,
            stages=stages,
            repeat=bool(data.get("repeat", True)),
        )


def _check_consistent(content: frozenset[Literal], owner: str) -> None:
    atoms_pos = {l.atom for l in content if not l.negative}
    atoms_neg = {l.atom for l in content if l.negative}
    clash = atoms_pos & atoms_neg
    if clash:
        raise InconsistentSpec(f"stream {owner!r}: atoms asserted with both signs: {sorted(clash)}")


def build_stream(spec: StreamSpec, length: int | None = None) -> TestimonyStream:
    """Materialize a stream spec; raises InconsistentSpec for bad recipes."""
    if spec.kind == "explicit":
        if not spec.stages:
            raise InconsistentSpec(f"stream {spec.id!r}: explicit spec with no stages")
        for stage in spec.stages:
            _check_consistent(stage, spec.id)
        return TestimonyStream(spec.id, spec.stages, repeats=False)
    if spec.kind in ("constant", "reactive"):
        if not spec.core:
            raise InconsistentSpec(f"stream {spec.id!r}: empty core set")
        _check_consistent(spec.core, spec.id)
        n = 1 if length is None else max(1, length)
        return TestimonyStream(spec.id, (spec.core,) * n, repeats=spec.repeat)
    raise InconsistentSpec(f"stream {spec.id!r}: unknown kind {spec.kind!r}")


class ObservationKind(Enum):
    EVIDENCE = "evidence"      # a rival literal, compatible or disagreeing
    HYPOTHESIS = "hypothesis"  # a rival-positive level-1 hypothesis
    SEQUENCE = "sequence"      # a rival-positive sequence


@dataclass(frozen=True)
class Observation:
    kind: ObservationKind
    literal: Literal | None = None
    sequence_ids: tuple[str, ...] = ()
    source_stream: str | None = None


@dataclass
class Pending:
    observation: Observation
    stage_seen: int


class ReactiveAttackEngine:
    """Single-owner generator of an argumentatively complete stream.

    The engine mutates its own stream/lattice pair; callers read the current
    values from ``stream`` and ``lattice``. Extensions are strictly
    sequential; each ``advance`` adds exactly one stage and mints at most one
    nullifier per pending item, requeueing whatever is left of a burst.
    """

    def __init__(
        self,
        stream: TestimonyStream,
        lattice: HypothesisLattice,
        spine_ids: Sequence[str] = (),
        nullifier_support: float = 0.9,
    ) -> None:
        self.stream = stream
        self.lattice = lattice
        self.nullifier_support = nullifier_support
        # ids of the self-supporting chain, one per level, lowest first
        self.spine_ids = tuple(spine_ids)
        self.pending: list[Pending] = []
        self.answered: list[tuple[int, Observation]] = []
        self._mint_serial = 0

    @property
    def stage(self) -> int:
        return self.stream.length

    def observe(self, observation: Observation) -> None:
        self.pending.append(Pending(observation, self.stage))

    def observe_evidence(self, phi: Literal, source: str | None = None) -> None:
        self.observe(Observation(ObservationKind.EVIDENCE, literal=phi, source_stream=source))

    def observe_sequence(self, ids: Sequence[str], source: str | None = None) -> None:
        kind = ObservationKind.HYPOTHESIS if len(ids) == 1 else ObservationKind.SEQUENCE
        self.observe(Observation(kind, sequence_ids=tuple(ids), source_stream=source))

    def advance(self) -> tuple[TestimonyStream, HypothesisLattice]:
        """Add one stage, absorbing and answering everything seen so far."""
        ready = list(self.pending)
        self.pending = []
        new_content = set(self.stream.stage_set(self.stage))
        requeue: list[Pending] = []

        for item in ready:
            obs = item.observation
            if obs.kind is ObservationKind.EVIDENCE:
                phi = obs.literal
                if negate(phi) in new_content:
                    if not self._nullify_stream_supporters(obs.source_stream, budget=1):
                        requeue.append(item)
                        continue
                elif phi not in new_content:
                    new_content.add(phi)
                self.answered.append((self.stage + 1, obs))
            else:
                self._mint_against(obs.sequence_ids)
                self.answered.append((self.stage + 1, obs))

        self.pending = requeue + self.pending
        self.stream = self.stream.extended(frozenset(new_content))
        return self.stream, self.lattice

    def settle(self, max_stages: int = 32) -> tuple[TestimonyStream, HypothesisLattice]:
        """Advance until nothing is pending."""
        for _ in range(max_stages):
            if not self.pending:
                break
            self.advance()
        return self.stream, self.lattice

    # ------------------------------------------------------------------ mint

    def _fresh_id(self, level: int) -> str:
        self._mint_serial += 1
        return f"{self.stream.id}.n{level}.{self._mint_serial:03d}"

    def _spine_id_at(self, level: int) -> str | None:
        if 1 <= level <= len(self.spine_ids):
            return self.spine_ids[level - 1]
        return None

    def _mint_against(self, target_ids: Sequence[str]) -> HigherOrderHypothesis | None:
        """Mint one nullifier against the top reachable element of the target."""
        lat = self.lattice
        level = min(len(target_ids) + 1, lat.depth_cap)
        victim = target_ids[level - 2] if level <= len(target_ids) else target_ids[-1]
        already = [
            h
            for h in lat.higher.get(level, ())
            if h.nullifies_id(victim) and h.support_for(self.stream.id) > 0.5
        ]
        if already:
            return None  # this element is answered at this level already
        scores = {victim: 0.0}
        spine_below = self._spine_id_at(level - 1)
        if spine_below is not None:
            scores[spine_below] = 0.9
        minted = HigherOrderHypothesis(
            id=self._fresh_id(level),
            level=level,
            scores=scores,
            testimony_support={self.stream.id: self.nullifier_support},
        )
        self.lattice = lat.with_higher_added(minted, mass=0.0)
        return minted

    def _nullify_stream_supporters(self, rival_stream_id: str | None, budget: int) -> bool:
        """Answer positive sequences endorsing the rival stream.

        Mints up to ``budget`` nullifiers; returns True once every supporter
        is answered.
        """
        if rival_stream_id is None:
            return True
        minted = 0
        for length in range(1, self.lattice.depth + 1):
            for seq in self.lattice.all_sequences(length):
                if not is_positive(seq):
                    continue
                base = seq.base
                sched = base.schedules.get(rival_stream_id)
                if sched is None or not sched.nondecreasing():
                    continue
                if _nullifier_against(self.lattice, seq, stream_id=self.stream.id) is not None:
                    continue
                if minted >= budget:
                    return False
                self._mint_against(seq.ids())
                minted += 1
        return True


def reactive_extend(
    engine: ReactiveAttackEngine, observations: Sequence[Observation] = ()
) -> tuple[TestimonyStream, HypothesisLattice]:
    """Feed observations to the engine and advance one stage."""
    for obs in observations:
        engine.observe(obs)
    return engine.advance()


def explicit_spec(stream: TestimonyStream, length: int | None = None) -> StreamSpec:
    """Freeze a stream's realized stages into an explicit recipe.

    Rebuilding the result reproduces the stream exactly up to ``length``, so
    a reactively grown stream can be replayed without its engine.
    """
    n = length if length is not None else stream.length
    stages = tuple(stream.stage_set(k) for k in range(1, n + 1))
    return StreamSpec(stream.id, "explicit", stages=stages, repeat=False)


def make_spine(
    stream_id: str,
    depth: int,
    base_schedule,
    support: float = 0.9,
    score: float = 0.9,
) -> tuple[EvaluationHypothesis, list[HigherOrderHypothesis]]:
    """The self-supporting chain an argumentatively complete stream rides on."""
    base = EvaluationHypothesis(
        id=f"{stream_id}.h1",
        schedules={stream_id: base_schedule},
        pwmc_for=stream_id,
    )
    chain: list[HigherOrderHypothesis] = []
    below = base.id
    for level in range(2, depth + 1):
        h = HigherOrderHypothesis(
            id=f"{stream_id}.h{level}",
            level=level,
            scores={below: score},
            testimony_support={stream_id: support},
        )
        chain.append(h)
        below = h.id
    return base, chain
