"""Hierarchy mechanics: normalization, nullification, support, completeness.

Expected numbers are worked by hand next to each setup; none are copied from
the engine. Level distributions use small decimals whose products stay well
inside double precision.
"""

import pytest

from ibsim.beliefs import BeliefState, UpdateMode, chained_update
from ibsim.errors import DegenerateLattice, NotArgComplete, NotNormalized
from ibsim.hypotheses import EvaluationHypothesis
from ibsim.lattice import (
    HigherOrderHypothesis,
    HypothesisLattice,
    HypothesisSequence,
    SupportLevel,
    argumentatively_complete,
    attacks,
    hierarchical_update,
    is_positive,
    nullifies,
    pwmc_witness,
    rationality_normalize,
    sequence_support,
    sigma_support_of_base,
    undercuts,
)
from ibsim.literals import Literal
from ibsim.schedules import Constant, MonotoneToLimit
from ibsim.streams import TestimonyStream

T = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
R = TestimonyStream("r", (frozenset({Literal("a", negative=True)}),), repeats=True)


def h1(hid, sched, pwmc=None):
    return EvaluationHypothesis(hid, {"t": sched}, pwmc_for=pwmc)


def scorer(hid, level, scores, support=None):
    return HigherOrderHypothesis(hid, level, scores, support or {})


# --------------------------------------------------------- normalization


def three_level_lattice():
    a = h1("h1a", Constant(0.8))
    b = h1("h1b", Constant(0.3))
    h2a = scorer("h2a", 2, {"h1a": 0.6, "h1b": 0.4})
    h2b = scorer("h2b", 2, {"h1a": 0.1, "h1b": 0.8})
    h3 = scorer("h3", 3, {"h2a": 0.7, "h2b": 0.3})
    return HypothesisLattice(
        level1=(a, b),
        higher={2: (h2a, h2b), 3: (h3,)},
        priors={
            1: {"h1a": 0.5, "h1b": 0.5},
            2: {"h2a": 0.5, "h2b": 0.5},
            3: {"h3": 1.0},
        },
    )


def test_rationality_normalize_by_hand():
    lat = rationality_normalize(three_level_lattice())
    # level 2: expectation of h3's scores, already normalized: .7 / .3
    assert lat.priors[2]["h2a"] == pytest.approx(0.7, abs=1e-12)
    assert lat.priors[2]["h2b"] == pytest.approx(0.3, abs=1e-12)
    # level 1: h1a gets .7*.6 + .3*.1 = .45, h1b .7*.4 + .3*.8 = .52
    assert lat.priors[1]["h1a"] == pytest.approx(0.45 / 0.97, abs=1e-12)
    assert lat.priors[1]["h1b"] == pytest.approx(0.52 / 0.97, abs=1e-12)


def test_rationality_normalize_idempotent():
    once = rationality_normalize(three_level_lattice())
    twice = rationality_normalize(once)
    assert twice.priors == once.priors


def test_rationality_normalize_guards():
    lat = three_level_lattice()
    starved = HypothesisLattice(
        lat.level1, lat.higher,
        {**lat.priors, 3: {"h3": 0.0}}, lat.depth_cap,
    )
    with pytest.raises(DegenerateLattice):
        rationality_normalize(starved)
    lopsided = HypothesisLattice(
        lat.level1, lat.higher,
        {**lat.priors, 3: {"h3": 0.8}}, lat.depth_cap,
    )
    with pytest.raises(NotNormalized):
        rationality_normalize(lopsided)


def test_rationality_normalize_needs_scored_lower_level():
    a = h1("h1a", Constant(0.8))
    mute = scorer("mute", 2, {})  # scores nothing below
    lat = HypothesisLattice(
        (a,), {2: (mute,)}, {1: {"h1a": 1.0}, 2: {"mute": 1.0}}
    )
    with pytest.raises(DegenerateLattice):
        rationality_normalize(lat)


# ------------------------------------------------- positivity and nulls


def test_is_positive_threshold_is_strict():
    base = h1("b", Constant(0.8))
    assert is_positive(HypothesisSequence((base,)))
    assert not is_positive(HypothesisSequence((base, scorer("s", 2, {"b": 0.5}))))
    assert is_positive(HypothesisSequence((base, scorer("s", 2, {"b": 0.51}))))
    # sparse zero: an unmentioned id scores zero
    assert not is_positive(HypothesisSequence((base, scorer("s", 2, {"other": 0.9}))))


def test_nullifies_pairwise():
    base = h1("b", Constant(0.8))
    rival = h1("x", Constant(0.9))
    nul = scorer("n", 2, {"x": 0.0, "b": 0.9})
    seq = HypothesisSequence((base, nul))
    assert nullifies(seq, HypothesisSequence((rival,)))
    # absence of an explicit zero is not nullification
    assert not nullifies(
        HypothesisSequence((base, scorer("s", 2, {"b": 0.9}))),
        HypothesisSequence((rival,)),
    )
    with pytest.raises(ValueError):
        nullifies(HypothesisSequence((base,)), HypothesisSequence((rival, nul)))
    # a bare level-1 sequence has no scorers and nullifies nothing
    assert not nullifies(HypothesisSequence((base,)), HypothesisSequence((rival,)))


def test_mutual_nullification_is_expressible():
    a, b = h1("a", Constant(0.8)), h1("b", Constant(0.7))
    na = scorer("na", 2, {"b": 0.0, "a": 0.9})
    nb = scorer("nb", 2, {"a": 0.0, "b": 0.9})
    assert nullifies(HypothesisSequence((a, na)), HypothesisSequence((b,)))
    assert nullifies(HypothesisSequence((b, nb)), HypothesisSequence((a,)))


# ------------------------------------------------------ sequence support


def support_lattice(base_sched, mass=0.6):
    base = h1("t.h1", base_sched, pwmc="t")
    top = scorer("t.h2", 2, {"t.h1": 0.9}, {"t": 0.9})
    lat = HypothesisLattice(
        (base,), {2: (top,)},
        {1: {"t.h1": mass}, 2: {"t.h2": 1.0}},
    )
    return lat, HypothesisSequence((base, top))


def test_sequence_support_levels():
    lat, seq = support_lattice(MonotoneToLimit(0.6, 1.0, 0.1))
    assert sequence_support(lat, seq, T) is SupportLevel.POTENTIALLY_TRUSTWORTHY

    lat, seq = support_lattice(Constant(0.8))  # nondecreasing, limit below 1
    assert sequence_support(lat, seq, T) is SupportLevel.SUPPORTS

    lat, seq = support_lattice(MonotoneToLimit(0.9, 0.2, 0.1))  # keeps dropping
    assert sequence_support(lat, seq, T) is SupportLevel.NEITHER

    lat, seq = support_lattice(MonotoneToLimit(0.6, 1.0, 0.1), mass=0.0)
    assert sequence_support(lat, seq, T) is SupportLevel.NEITHER


def test_sigma_support_and_undercut_boundary():
    # dyadic likelihood so the complement boundary is float-exact
    own = h1("own", Constant(0.75))
    rival_friend = h1("fr", Constant(0.2))
    edge = scorer("edge", 2, {"own": 0.25, "fr": 0.75})
    over = scorer("over", 2, {"own": 0.3, "fr": 0.7})
    lat = HypothesisLattice(
        (own, rival_friend), {2: (edge, over)},
        {1: {"own": 0.5, "fr": 0.5}, 2: {"edge": 0.5, "over": 0.5}},
    )
    seq_edge = HypothesisSequence((rival_friend, edge))
    seq_over = HypothesisSequence((rival_friend, over))
    assert sigma_support_of_base(lat, seq_edge, "own") == 0.25
    # support exactly at 1 - likelihood still undercuts; above it does not
    assert undercuts(lat, seq_edge, T, 1)
    assert not undercuts(lat, seq_over, T, 1)
    with pytest.raises(ValueError):
        sigma_support_of_base(lat, HypothesisSequence((own,)), "own")


def test_broken_chain_supports_nothing():
    base = h1("b", Constant(0.8))
    mid = scorer("m", 2, {"b": 0.9})
    top = scorer("top", 3, {"other": 0.9})  # zero link onto "m"
    lat = HypothesisLattice(
        (base,), {2: (mid,), 3: (top,)},
        {1: {"b": 1.0}, 2: {"m": 1.0}, 3: {"top": 1.0}},
    )
    seq = HypothesisSequence((base, mid, top))
    assert sigma_support_of_base(lat, seq, "b") == 0.0


# ------------------------------------------------- attacks, completeness


def complete_lattice(with_nullifier=True):
    base = h1("t.h1", MonotoneToLimit(0.6, 1.0, 0.1), pwmc="t")
    rival_friend = EvaluationHypothesis("r.h1", {"r": Constant(1.0)}, pwmc_for="r")
    t2 = scorer("t.h2", 2, {"t.h1": 0.9}, {"t": 0.9})
    t3 = scorer("t.h3", 3, {"t.h2": 0.9}, {"t": 0.9})
    level2 = [t2]
    priors2 = {"t.h2": 0.7}
    if with_nullifier:
        n2 = scorer("t.n2", 2, {"r.h1": 0.0, "t.h1": 0.9}, {"t": 0.9})
        level2.append(n2)
        priors2 = {"t.h2": 0.7, "t.n2": 0.3}
    return HypothesisLattice(
        (base, rival_friend),
        {2: tuple(level2), 3: (t3,)},
        {1: {"t.h1": 0.8, "r.h1": 0.2}, 2: priors2, 3: {"t.h3": 1.0}},
    )


def test_attack_present_with_nullifier():
    report = attacks(complete_lattice(True), T, R, stage=1)
    assert report.holds
    assert report.witness is not None
    assert report.witness.base.id == "t.h1"


def test_attack_fails_without_nullifier():
    report = attacks(complete_lattice(False), T, R, stage=1)
    assert not report.holds
    assert any("no supported nullifier" in f for f in report.failures)


def test_argumentative_completeness_and_witness():
    lat = complete_lattice(True)
    report = argumentatively_complete(lat, T, [R])
    assert report.holds and bool(report)

    witness = pwmc_witness(lat, T, [R])
    assert witness.pwmc_for == "t"
    for n in (1, 2, 10, 100):
        assert witness.likelihood("r", n) == 1.0 - witness.likelihood("t", n)


def test_incomplete_stream_has_no_witness():
    lat = complete_lattice(False)
    report = argumentatively_complete(lat, T, [R])
    assert not report.holds
    with pytest.raises(NotArgComplete):
        pwmc_witness(lat, T, [R])


def test_absorption_clause_flags_ignored_evidence():
    # rival adds compatible "b" at stage 2; the stream never absorbs it
    t = TestimonyStream("t", (frozenset({Literal("a")}),) * 3)
    r = TestimonyStream(
        "r",
        (frozenset({Literal("c")}), frozenset({Literal("c"), Literal("b")})),
        repeats=True,
    )
    lat = complete_lattice(True)
    report = argumentatively_complete(lat, t, [r])
    assert any("not absorbed" in v for v in report.violations)


# ------------------------------------------------------------ hierarchy


def test_depth_one_reduces_to_chained_update():
    hyps = (
        h1("h1", Constant(0.8)),
        h1("h2", Constant(0.2)),
    )
    lat = HypothesisLattice(hyps, {}, {1: {"h1": 0.6, "h2": 0.4}})
    flat = BeliefState.initial({"h1": 0.6, "h2": 0.4}, ("t",), UpdateMode.CHAINED)
    deep = BeliefState.initial({"h1": 0.6, "h2": 0.4}, ("t",), UpdateMode.CHAINED)
    for _ in range(6):
        flat = chained_update(flat, T, list(hyps))
        lat, deep = hierarchical_update(lat, deep, T)
    assert deep.hypothesis_probs == flat.hypothesis_probs
    assert deep.stream_marginals == flat.stream_marginals
    assert lat.priors[1] == flat.hypothesis_probs


def test_massless_structure_is_belief_neutral():
    # the same run with and without a zero-mass nullifier minted at level 2
    def run(lat):
        state = BeliefState.initial(dict(lat.priors[1]), ("t", "r"), UpdateMode.CHAINED)
        for _ in range(10):
            lat, state = hierarchical_update(lat, state, T)
        return state

    bare = complete_lattice(False)
    minted = bare.with_higher_added(
        scorer("t.n2", 2, {"r.h1": 0.0, "t.h1": 0.9}, {"t": 0.9}), mass=0.0
    )
    a, b = run(bare), run(minted)
    assert a.hypothesis_probs == b.hypothesis_probs
    assert a.stream_marginals == b.stream_marginals


def test_three_level_run_concentrates_on_trusted_stream():
    lat = complete_lattice(True)
    state = BeliefState.initial(dict(lat.priors[1]), ("t", "r"), UpdateMode.CHAINED)
    for _ in range(120):
        lat, state = hierarchical_update(lat, state, T)
    assert state.stream_marginals["t"] > 0.999
    assert state.stream_marginals["r"] < 1e-3
    assert lat.priors[1]["r.h1"] < 1e-6


def test_higher_level_gap_is_rejected():
    lat = HypothesisLattice((h1("h1", Constant(0.8)),), {}, {1: {"h1": 1.0}})
    with pytest.raises(DegenerateLattice):
        lat.with_higher_added(scorer("s3", 3, {"x": 0.9}))
