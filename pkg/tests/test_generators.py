"""Stream recipes and the reactive growth engine.

The engine's contract under test: anything observed while the stream is at
stage i is answered in stage i+1 (absorbed, or met with a fresh nullifier),
a burst larger than the per-item budget spills into the following stage, and
nothing is ever minted twice for the same victim.
"""

import pytest

from ibsim.beliefs import BeliefState, UpdateMode, simulate
from ibsim.errors import InconsistentSpec
from ibsim.generators import (
    Observation,
    ObservationKind,
    ReactiveAttackEngine,
    StreamSpec,
    build_stream,
    explicit_spec,
    make_spine,
    reactive_extend,
)
from ibsim.hypotheses import EvaluationHypothesis
from ibsim.lattice import HypothesisLattice
from ibsim.literals import Literal
from ibsim.schedules import Constant, MonotoneToLimit
from ibsim.streams import TestimonyStream

A = Literal("a")
B = Literal("b")
NOT_A = Literal("a", negative=True)


def test_spec_kinds():
    explicit = build_stream(
        StreamSpec("t", "explicit", stages=(frozenset({A}), frozenset({A, B})))
    )
    assert explicit.length == 2 and not explicit.repeats

    constant = build_stream(StreamSpec("t", "constant", core=frozenset({A})))
    assert constant.repeats and constant.stage_set(99) == frozenset({A})

    with pytest.raises(InconsistentSpec):
        build_stream(StreamSpec("t", "explicit", stages=(frozenset({A, NOT_A}),)))
    with pytest.raises(InconsistentSpec):
        build_stream(StreamSpec("t", "explicit"))


def test_spec_from_json():
    spec = StreamSpec.from_json(
        {"id": "t", "kind": "explicit", "stages": [["a"], ["a", "!a"]]}
    )
    assert spec.stages[1] == frozenset({A, NOT_A})
    with pytest.raises(InconsistentSpec):
        build_stream(spec)


def make_engine(rival_trusters=1):
    """Reactive stream with a 3-level spine; optional rival endorsers."""
    t = build_stream(StreamSpec("t", "reactive", core=frozenset({A})))
    base, chain = make_spine("t", 3, MonotoneToLimit(0.6, 1.0, 0.1))
    level1 = [base]
    priors1 = {base.id: 1.0 - 0.1 * rival_trusters}
    for k in range(rival_trusters):
        hid = f"r.h{k + 1}"
        level1.append(EvaluationHypothesis(hid, {"r": Constant(1.0)}, pwmc_for="r"))
        priors1[hid] = 0.1
    lat = HypothesisLattice(
        level1=tuple(level1),
        higher={2: (chain[0],), 3: (chain[1],)},
        priors={1: priors1, 2: {chain[0].id: 1.0}, 3: {chain[1].id: 1.0}},
    )
    return ReactiveAttackEngine(t, lat, spine_ids=(base.id, chain[0].id, chain[1].id))


def test_make_spine_shape():
    base, chain = make_spine("t", 3, MonotoneToLimit(0.6, 1.0, 0.1))
    assert base.id == "t.h1" and base.pwmc_for == "t"
    assert [h.id for h in chain] == ["t.h2", "t.h3"]
    assert chain[1].scores == {"t.h2": 0.9}
    assert chain[0].testimony_support == {"t": 0.9}


def test_compatible_evidence_absorbed_next_stage():
    engine = make_engine()
    assert engine.stage == 1
    engine.observe_evidence(B, source="r")
    stream, _ = engine.advance()
    assert stream.length == 2
    assert B in stream.stage_set(2)
    assert B not in stream.stage_set(1)
    assert engine.answered == [(2, Observation(ObservationKind.EVIDENCE, B, (), "r"))]


def test_disagreeing_evidence_is_met_with_a_nullifier():
    engine = make_engine()
    engine.observe_evidence(NOT_A, source="r")
    stream, lat = engine.advance()
    # the denial is never absorbed; the rival's endorser is zeroed instead
    assert NOT_A not in stream.stage_set(2)
    minted = [h for h in lat.higher[2] if h.id.startswith("t.n2")]
    assert len(minted) == 1
    assert minted[0].nullifies_id("r.h1")
    assert minted[0].support_for("t") == 0.9
    assert lat.prior_of(2, minted[0].id) == 0.0  # minted mass-neutral


def test_burst_spills_into_following_stage():
    engine = make_engine(rival_trusters=2)
    engine.observe_evidence(NOT_A, source="r")
    engine.advance()
    assert engine.pending  # one supporter still unanswered
    assert engine.answered == []
    engine.advance()
    assert not engine.pending
    assert [stage for stage, _ in engine.answered] == [3]
    nullifiers = [h for h in engine.lattice.higher[2] if h.id.startswith("t.n2")]
    assert len(nullifiers) == 2
    victims = {v for h in nullifiers for v in h.scores if h.scores[v] == 0.0}
    assert victims == {"r.h1", "r.h2"}


def test_no_double_minting():
    engine = make_engine()
    engine.observe_evidence(NOT_A, source="r")
    engine.advance()
    engine.observe_evidence(NOT_A, source="r")
    engine.advance()
    nullifiers = [h for h in engine.lattice.higher[2] if h.id.startswith("t.n2")]
    assert len(nullifiers) == 1


def test_sequence_observation_minted_against_top():
    engine = make_engine()
    engine.observe_sequence(["r.h1"], source="r")
    _, lat = engine.advance()
    minted = [h for h in lat.higher[2] if h.id.startswith("t.n2")]
    assert len(minted) == 1 and minted[0].nullifies_id("r.h1")
    # the nullifier also endorses the spine below it
    assert minted[0].scores["t.h1"] == 0.9


def test_reactive_extend_helper():
    engine = make_engine()
    stream, _ = reactive_extend(
        engine, [Observation(ObservationKind.EVIDENCE, B, (), "r")]
    )
    assert stream.length == 2 and B in stream.stage_set(2)


def test_settle_drains_pending():
    engine = make_engine(rival_trusters=3)
    engine.observe_evidence(NOT_A, source="r")
    engine.settle()
    assert not engine.pending


def test_explicit_freeze_round_trip():
    engine = make_engine()
    engine.observe_evidence(B, source="r")
    engine.advance()
    engine.observe_sequence(["r.h1"], source="r")
    engine.advance()
    grown = engine.stream
    frozen = build_stream(explicit_spec(grown))
    assert frozen.stages == grown.stages

    hyps = [
        EvaluationHypothesis("h1", {"t": MonotoneToLimit(0.6, 1.0, 0.1)}),
        EvaluationHypothesis("h2", {"t": Constant(0.3)}),
    ]

    def run(stream):
        state = BeliefState.initial({"h1": 0.5, "h2": 0.5}, ("t",), UpdateMode.CHAINED)
        return simulate(state, stream, 3, hyps)

    a, b = run(grown), run(frozen)
    assert [s.probs for s in a.history] == [s.probs for s in b.history]
    assert [s.marginals for s in a.history] == [s.marginals for s in b.history]
