"""Scenario execution and experiment outputs.

Every run produces three artifacts: ``trace.csv`` (step, entity_kind,
entity_id, value rows, floats at 12 significant digits), ``summary.json``
(final probabilities, convergence step, game outcome, assertion results),
and ``report.txt`` (a human-readable digest). Runs are deterministic for a
given scenario and seed; nothing here reads clocks or global state.
"""

from __future__ import annotations

import csv
import json
import math
import os
import random
from dataclasses import dataclass, field

from ibsim.beliefs import (
    BeliefState,
    LearnabilityProbe,
    UpdateMode,
    Verdict,
    chained_update,
    learnability_probe,
    marginal_of_proposition,
    simulate,
)
from ibsim.errors import ScenarioError, Unpronounced
from ibsim.game import (
    Accept,
    ExtendPositiveSequence,
    FConstraint,
    GameConfig,
    GameState,
    GameStatus,
    Jury,
    NullifyHypothesis,
    NullifySequence,
    Player,
    ProposeHypothesis,
    WinCondition,
    builtin_strategies,
    default_jury,
    jury_orderings,
    play,
    win_eval,
)
from ibsim.generators import ReactiveAttackEngine, StreamSpec, build_stream, make_spine
from ibsim.hypotheses import EvaluationHypothesis, pwmc_extend
from ibsim.lattice import (
    HigherOrderHypothesis,
    HypothesisLattice,
    argumentatively_complete,
    hierarchical_update,
    pwmc_witness,
)
from ibsim.literals import Literal
from ibsim.scenario import Scenario
from ibsim.schedules import Constant, MonotoneToLimit
from ibsim.streams import TestimonyStream

TRACE_HEADER = ("step", "entity_kind", "entity_id", "value")

CONV_EPS = 1e-6


def _fmt(value: float) -> str:
    return "%.12g" % value


@dataclass
class RunResult:
    name: str
    summary: dict
    trace: list[tuple[int, str, str, float]]
    report_lines: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(a["ok"] for a in self.summary.get("assertions", []))

    def report(self) -> str:
        return "\n".join(self.report_lines) + "\n"


def _check(assertions: list[dict], name: str, ok: bool, detail: str = "") -> bool:
    assertions.append({"name": name, "ok": bool(ok), "detail": detail})
    return ok


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def _state_trace(state: BeliefState) -> list[tuple[int, str, str, float]]:
    rows = []
    for snap in state.history:
        for hid, p in snap.probs.items():
            rows.append((snap.step, "hypothesis", hid, p))
        for sid, m in snap.marginals.items():
            rows.append((snap.step, "stream", sid, m))
    return rows


def _lead_id(hypotheses, attended_ids) -> str | None:
    """The hypothesis whose likelihood limit on the attended streams is largest.

    Convergence is judged against this hypothesis, so a run that merely
    collapses onto a rival (say, because the lead's prior is zero) does not
    count as converged.
    """
    best, best_limit = None, -1.0
    for h in hypotheses:
        limits = []
        for sid in attended_ids:
            try:
                limits.append(h.channel_limit(sid))
            except Unpronounced:
                continue
        if not limits:
            continue
        avg = math.fsum(limits) / len(limits)
        if avg > best_limit:
            best, best_limit = h.id, avg
    return best


def _convergence_step(state: BeliefState, lead: str | None = None) -> int | None:
    for snap in state.history:
        if not snap.probs:
            continue
        value = snap.probs[lead] if lead is not None else max(snap.probs.values())
        if value >= 1.0 - CONV_EPS:
            return snap.step
    return None


# ------------------------------------------------------------- reproduce


def _run_reproduce(scn: Scenario, mode: UpdateMode | None, horizon: int | None) -> RunResult:
    streams = scn.build_streams()
    hypotheses = scn.build_hypotheses()
    state = scn.initial_state(mode)
    attended = [streams[sid] for sid in scn.attended_ids()]
    payload = attended[0] if len(attended) == 1 else attended
    steps = horizon if horizon is not None else scn.data["steps"]
    state = simulate(state, payload, steps, hypotheses)

    assertions: list[dict] = []
    expected = scn.expected
    tol = expected.get("tolerance", 1e-9)
    for hid, want in expected.get("final_probs", {}).items():
        got = state.hypothesis_probs[hid]
        _check(assertions, f"final_probs[{hid}]", _close(got, want, tol),
               f"got {_fmt(got)}, want {_fmt(want)}")
    for sid, wants in expected.get("marginal_trace", {}).items():
        got = state.marginal_trace(sid)
        ok = len(got) >= len(wants) and all(_close(g, w, tol) for g, w in zip(got, wants))
        _check(assertions, f"marginal_trace[{sid}]", ok,
               f"got {[_fmt(g) for g in got[: len(wants)]]}")
    for step_str, probs in expected.get("prob_checkpoints", {}).items():
        snap = state.history[int(step_str)]
        for hid, want in probs.items():
            got = snap.probs[hid]
            _check(assertions, f"prob_checkpoints[{step_str}][{hid}]",
                   _close(got, want, tol), f"got {_fmt(got)}, want {_fmt(want)}")
    for sid, want in expected.get("final_marginals", {}).items():
        got = state.stream_marginals[sid]
        _check(assertions, f"final_marginals[{sid}]", _close(got, want, tol),
               f"got {_fmt(got)}, want {_fmt(want)}")

    summary = {
        "name": scn.name,
        "kind": scn.kind,
        "mode": state.mode.value,
        "steps": steps,
        "final_probs": dict(state.hypothesis_probs),
        "final_marginals": dict(state.stream_marginals),
        "convergence_steps": _convergence_step(
            state, _lead_id(hypotheses, scn.attended_ids())
        ),
        "game_outcome": None,
        "note": scn.data.get("notes"),
        "assertions": assertions,
    }
    lines = [f"scenario {scn.name} ({scn.kind}, {state.mode.value}, {steps} steps)"]
    for hid, p in state.hypothesis_probs.items():
        lines.append(f"  P({hid}) = {_fmt(p)}")
    for sid, m in state.stream_marginals.items():
        lines.append(f"  P({sid}) = {_fmt(m)}")
    lines += [f"  [{'ok' if a['ok'] else 'FAIL'}] {a['name']} {a['detail']}" for a in assertions]
    if scn.data.get("notes"):
        lines.append(f"  note: {scn.data['notes']}")
    return RunResult(scn.name, summary, _state_trace(state), lines)


# ------------------------------------------------------------------ game


def _build_game_config(scn: Scenario, horizon: int | None, seed: int | None) -> tuple[GameConfig, str, str]:
    g = scn.data["game"]
    streams = scn.build_streams()
    hypotheses = scn.build_hypotheses()
    by_id = {h.id: h for h in hypotheses}
    t_id, r_id = g["t_stream"], g["rival_stream"]

    spine = g.get("spine")
    depth_cap = spine["depth"] if spine else 3
    higher: dict[int, tuple[HigherOrderHypothesis, ...]] = {}
    priors: dict[int, dict[str, float]] = {1: dict(scn.data["priors"])}
    spine_ids: tuple[str, ...] = ()
    if spine:
        below = spine["base_hypothesis"]
        spine_ids = (below,)
        for level in range(2, spine["depth"] + 1):
            h = HigherOrderHypothesis(
                id=f"{t_id}.h{level}",
                level=level,
                scores={below: spine.get("score", 0.9)},
                testimony_support={t_id: spine.get("support", 0.9)},
            )
            higher[level] = (h,)
            priors[level] = {h.id: 1.0}
            spine_ids += (h.id,)
            below = h.id
    lattice = HypothesisLattice(
        level1=tuple(hypotheses), higher=higher, priors=priors, depth_cap=depth_cap
    )

    jury_block = g.get("jury", {})
    if "candidates" in jury_block:
        jury = Jury(r_id, tuple(by_id[c] for c in jury_block["candidates"]))
    else:
        jury = default_jury(r_id, jury_block.get("size", 6))
    if "seed" in jury_block or seed is not None:
        jseed = seed if seed is not None else jury_block["seed"]
        jury = jury_orderings(jury, 1, jseed)[0]

    engine = None
    if spine:
        engine = ReactiveAttackEngine(streams[t_id], lattice, spine_ids=spine_ids)

    beliefs = scn.initial_state()
    config = GameConfig(
        condition=WinCondition(g["condition"]),
        constraint=FConstraint(g["constraint"]),
        jury=jury,
        lattice=lattice,
        beliefs=beliefs,
        streams=streams,
        t_stream_id=t_id,
        rival_stream_id=r_id,
        attended=scn.attended_ids(),
        engine=engine,
        horizon=horizon if horizon is not None else g.get("horizon", 1000),
        accept_mass=g.get("accept_mass", 0.1),
        post_stages=g.get("post_stages", 100),
    )
    return config, g.get("e_strategy", "e_persistent"), g.get("f_strategy", "f_knowledge_first")


def _run_game(scn: Scenario, horizon: int | None, seed: int | None) -> RunResult:
    config, e_name, f_name = _build_game_config(scn, horizon, seed)
    strategies = builtin_strategies()
    for name in (e_name, f_name):
        if name not in strategies:
            raise ScenarioError(f"unknown strategy {name!r}")
    final = play(config, strategies[e_name], strategies[f_name])
    outcome = win_eval(final, config)

    assertions: list[dict] = []
    expected = scn.expected
    tol = expected.get("tolerance", 1e-9)
    if "game_outcome" in expected:
        _check(assertions, "game_outcome", final.status.value == expected["game_outcome"],
               f"got {final.status.value}")
    if "accepted_round_max" in expected:
        got = final.accepted_round
        _check(assertions, "accepted_round_max",
               got is not None and got <= expected["accepted_round_max"], f"got {got}")
    for sid, want in expected.get("stationary_marginals", {}).items():
        series = final.beliefs.marginal_trace(sid)
        if expected.get("exact", False):
            ok = all(m == want for m in series)
        else:
            ok = all(_close(m, want, tol) for m in series)
        worst = max((abs(m - want) for m in series), default=0.0)
        _check(assertions, f"stationary_marginals[{sid}]", ok,
               f"{len(series)} stages, worst deviation {_fmt(worst)}")

    summary = {
        "name": scn.name,
        "kind": scn.kind,
        "mode": final.beliefs.mode.value,
        "rounds": final.round,
        "final_probs": dict(final.beliefs.hypothesis_probs),
        "final_marginals": dict(final.beliefs.stream_marginals),
        "convergence_steps": _convergence_step(final.beliefs),
        "game_outcome": final.status.value,
        "accepted_round": final.accepted_round,
        "winner": outcome.winner.value,
        "verdict": outcome.verdict,
        "assertions": assertions,
    }
    lines = [
        f"scenario {scn.name} (game, {config.constraint.value}, horizon {config.horizon})",
        f"  outcome: {final.status.value}, winner {outcome.winner.value}: {outcome.verdict}",
    ]
    lines += [f"  [{'ok' if a['ok'] else 'FAIL'}] {a['name']} {a['detail']}" for a in assertions]
    return RunResult(scn.name, summary, _state_trace(final.beliefs), lines)


# -------------------------------------------------------------- batteries


def _two_stream_setup() -> tuple[dict[str, TestimonyStream], list[EvaluationHypothesis]]:
    """The standing trusted-vs-rival configuration used by several batteries."""
    t = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
    r = TestimonyStream("r", (frozenset({Literal("b")}),), repeats=True)
    h_t = EvaluationHypothesis("h_t", {"t": MonotoneToLimit(0.6, 1.0, 0.1)}, pwmc_for="t")
    h_r = EvaluationHypothesis("h_r", {"r": Constant(0.9)}, pwmc_for="r")
    return {"t": t, "r": r}, [h_t, h_r]


def _battery_dominant_convergence(params: dict, seed: int):
    seeds = params.get("seeds", 50)
    steps = params.get("steps", 200)
    rows, assertions = [], []
    failures = []
    for i in range(seeds):
        rng = random.Random(seed + i)
        start = rng.uniform(0.6, 0.9)
        limit = rng.uniform(max(start, 0.8), 1.0)
        lead = EvaluationHypothesis(
            "h1", {"t": MonotoneToLimit(start, limit, rng.uniform(0.05, 0.5))}
        )
        rivals = []
        for k in range(rng.randint(1, 3)):
            if rng.random() < 0.5:
                sched = Constant(rng.uniform(0.05, 0.4))
            else:
                top = rng.uniform(0.1, 0.45)
                sched = MonotoneToLimit(top, rng.uniform(0.02, top), rng.uniform(0.05, 0.5))
            rivals.append(EvaluationHypothesis(f"r{k + 1}", {"t": sched}))
        hyps = [lead] + rivals
        p1 = rng.uniform(0.1, 0.8)
        weights = [rng.uniform(0.2, 1.0) for _ in rivals]
        wsum = math.fsum(weights)
        priors = {"h1": p1}
        priors.update({r.id: (1.0 - p1) * w / wsum for r, w in zip(rivals, weights)})
        stream = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
        for mode in (UpdateMode.CHAINED, UpdateMode.STANDARD):
            state = simulate(
                BeliefState.initial(priors, tracked=("t",), mode=mode), stream, steps, hyps
            )
            final = state.hypothesis_probs["h1"]
            marg_err = abs(state.stream_marginals["t"] - limit)
            if final < 1.0 - 1e-6:
                failures.append(f"cfg{i:02d}/{mode.value}: final {_fmt(final)}")
            if marg_err > 1e-3:
                failures.append(f"cfg{i:02d}/{mode.value}: marginal error {_fmt(marg_err)}")
            if mode is UpdateMode.STANDARD:
                trace = state.prob_trace("h1")
                if any(b < a for a, b in zip(trace, trace[1:])):
                    failures.append(f"cfg{i:02d}: standard-mode trace decreased")
            rows.append((i, "hypothesis", f"cfg{i:02d}.h1.{mode.value}", final))
            rows.append((i, "stream", f"cfg{i:02d}.t.{mode.value}", state.stream_marginals["t"]))
    _check(assertions, "dominant hypothesis reaches 1 - 1e-6 and marginal limit",
           not failures, "; ".join(failures[:4]))
    return {"configs": seeds, "steps": steps, "failures": failures}, rows, assertions


def _battery_trusted_stream(params: dict, seed: int):
    steps = params.get("steps", 300)
    streams, hyps = _two_stream_setup()
    state = BeliefState.initial(
        {"h_t": 0.5, "h_r": 0.5}, tracked=("t", "r"), mode=UpdateMode.CHAINED
    )
    state = simulate(state, streams["t"], steps, hyps)
    m_t, m_r = state.stream_marginals["t"], state.stream_marginals["r"]
    assertions: list[dict] = []
    _check(assertions, "trusted stream marginal >= .999", m_t >= 0.999, _fmt(m_t))
    _check(assertions, "conflicting stream marginal <= 1e-3", m_r <= 1e-3, _fmt(m_r))
    return (
        {"steps": steps, "final_marginals": dict(state.stream_marginals)},
        _state_trace(state),
        assertions,
    )


def _battery_rival_collapse(params: dict, seed: int):
    steps = params.get("steps", 200)
    streams, hyps = _two_stream_setup()
    state = BeliefState.initial(
        {"h_t": 0.5, "h_r": 0.5}, tracked=("t", "r"), mode=UpdateMode.CHAINED
    )
    state = simulate(state, streams["t"], steps, hyps)
    phi = Literal("b")
    m_phi = marginal_of_proposition(state, phi, streams, hyps)
    assertions: list[dict] = []
    _check(assertions, "rival-only evidence marginal <= 1e-6 after 200 steps",
           m_phi <= 1e-6, _fmt(m_phi))
    rows = _state_trace(state)
    rows.append((state.step, "literal", phi.to_json(), m_phi))
    return {"steps": steps, "evidence_marginal": m_phi}, rows, assertions


def _battery_blocked_learning(params: dict, seed: int):
    pre_steps = params.get("pre_steps", 300)
    probe_steps = params.get("probe_steps", 200)
    assertions: list[dict] = []
    rows: list[tuple[int, str, str, float]] = []

    # entrenched run: rival evidence is at the floor, so the probe is inert
    streams, hyps = _two_stream_setup()
    state = BeliefState.initial(
        {"h_t": 0.5, "h_r": 0.5}, tracked=("t", "r"), mode=UpdateMode.CHAINED
    )
    state = simulate(state, streams["t"], pre_steps, hyps)
    probe = LearnabilityProbe(
        target_id="rival_cause", prior=0.3, ideal_posterior=0.8,
        evidence=Literal("b"), evidence_likelihood=0.9,
    )
    blocked = learnability_probe(probe, state, probe_steps, streams["t"], streams, hyps)
    _check(assertions, "entrenched probe is not learnable",
           blocked.verdict is Verdict.NOT_LEARNABLE, blocked.verdict.value)
    _check(assertions, "entrenched loss trace is bit-constant",
           len(set(blocked.losses)) == 1, f"{len(set(blocked.losses))} distinct values")
    _check(assertions, "entrenched posteriors equal the prior exactly",
           all(p == probe.prior for p in blocked.posteriors), "")
    for k, (p, l) in enumerate(zip(blocked.posteriors, blocked.losses)):
        rows.append((k, "hypothesis", "rival_cause", p))
        rows.append((k, "hypothesis", "rival_cause.loss", l))

    # control: same machinery, evidence the attended stream actually carries
    ct = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
    c_hyps = [
        EvaluationHypothesis("hA", {"t": Constant(0.6)}),
        EvaluationHypothesis("hB", {"t": Constant(0.1)}),
    ]
    c_state = BeliefState.initial(
        {"hA": 0.5, "hB": 0.5}, tracked=("t",), mode=UpdateMode.CHAINED
    )
    c_probe = LearnabilityProbe(
        target_id="object_h", prior=0.3, ideal_posterior=0.8,
        evidence=Literal("a"), evidence_likelihood=0.9,
    )
    control = learnability_probe(c_probe, c_state, probe_steps, ct, {"t": ct}, c_hyps)
    _check(assertions, "control probe is learnable",
           control.verdict is Verdict.LEARNABLE,
           f"loss {_fmt(control.losses[0])} -> {_fmt(control.losses[-1])}")
    for k, (p, l) in enumerate(zip(control.posteriors, control.losses)):
        rows.append((k, "hypothesis", "object_h", p))
        rows.append((k, "hypothesis", "object_h.loss", l))
    summary = {
        "blocked_verdict": blocked.verdict.value,
        "control_verdict": control.verdict.value,
        "blocked_distinct_losses": len(set(blocked.losses)),
        "control_loss_initial": control.losses[0],
        "control_loss_final": control.losses[-1],
    }
    return summary, rows, assertions


def _reactive_seed_run(i: int, rng: random.Random, stages: int):
    """One reactive-generator configuration; returns (violations, m_t, m_r)."""
    violations: list[str] = []
    t = build_stream(StreamSpec("t", "reactive", core=frozenset({Literal("a")})))
    # rate floor keeps the trust series within eps of 1 at the verifier horizon
    base, chain = make_spine(
        "t", 3, MonotoneToLimit(rng.uniform(0.55, 0.8), 1.0, rng.uniform(0.1, 0.3))
    )
    rival_mass = rng.uniform(0.05, 0.3)
    h_r = EvaluationHypothesis("r.h1", {"r": Constant(1.0)}, pwmc_for="r")
    lat = HypothesisLattice(
        level1=(base, h_r),
        higher={2: (chain[0],), 3: (chain[1],)},
        priors={
            1: {base.id: 1.0 - rival_mass, h_r.id: rival_mass},
            2: {chain[0].id: 1.0},
            3: {chain[1].id: 1.0},
        },
    )
    engine = ReactiveAttackEngine(t, lat, spine_ids=(base.id, chain[0].id, chain[1].id))

    disagree = i % 2 == 0
    stage1 = frozenset({Literal("b")})
    stage2 = stage1 | ({Literal("a", negative=True)} if disagree else {Literal("c")})
    r = TestimonyStream("r", (stage1, stage2), repeats=True)

    engine.observe_sequence([h_r.id], source="r")
    engine.observe_evidence(Literal("b"), source="r")
    engine.advance()
    for phi in sorted(stage2 - stage1):
        engine.observe_evidence(phi, source="r")
    engine.advance()
    engine.settle()
    lat, t = engine.lattice, engine.stream

    report = argumentatively_complete(lat, t, [r])
    if not report.holds:
        violations.extend(f"cfg{i:02d}: {v}" for v in report.violations)
    witness = pwmc_witness(lat, t, [r])
    fresh = Literal("z")  # never part of either stream, so never absorbed
    for n in (1, 2, 10, 100):
        want = 1.0 - witness.likelihood("t", n)
        if pwmc_extend(witness, t, fresh, n) != want:
            violations.append(f"cfg{i:02d}: closure not exact at stage {n}")
        if witness.likelihood("r", n) != want:
            violations.append(f"cfg{i:02d}: rival channel not the exact complement at {n}")

    state = BeliefState.initial(
        dict(lat.priors[1]), tracked=("t", "r"), mode=UpdateMode.CHAINED
    )
    cur = lat
    for _ in range(stages):
        cur, state = hierarchical_update(cur, state, t)
    m_t, m_r = state.stream_marginals["t"], state.stream_marginals["r"]
    if m_t < 0.999:
        violations.append(f"cfg{i:02d}: trusted marginal {_fmt(m_t)}")
    if m_r > 1e-3:
        violations.append(f"cfg{i:02d}: rival marginal {_fmt(m_r)}")
    return violations, m_t, m_r


def _battery_reactive_completeness(params: dict, seed: int):
    seeds = params.get("seeds", 50)
    stages = params.get("stages", 300)
    rows, failures = [], []
    for i in range(seeds):
        violations, m_t, m_r = _reactive_seed_run(i, random.Random(seed + i), stages)
        failures.extend(violations)
        rows.append((i, "stream", f"cfg{i:02d}.t", m_t))
        rows.append((i, "stream", f"cfg{i:02d}.r", m_r))
    assertions: list[dict] = []
    _check(assertions, "completeness checker, closure, and 3-level convergence",
           not failures, "; ".join(failures[:4]))
    return {"configs": seeds, "stages": stages, "failures": failures}, rows, assertions


def _standoff_config(jury: Jury, horizon: int) -> GameConfig:
    t = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
    r = TestimonyStream("r", (frozenset({Literal("b")}),), repeats=True)
    base, chain = make_spine("t", 3, MonotoneToLimit(0.6, 1.0, 0.1))
    lat = HypothesisLattice(
        level1=(base,),
        higher={2: (chain[0],), 3: (chain[1],)},
        priors={1: {base.id: 1.0}, 2: {chain[0].id: 1.0}, 3: {chain[1].id: 1.0}},
    )
    beliefs = BeliefState.initial({base.id: 1.0}, tracked=("t", "r"), mode=UpdateMode.CHAINED)
    engine = ReactiveAttackEngine(t, lat, spine_ids=(base.id, chain[0].id, chain[1].id))
    return GameConfig(
        condition=WinCondition.INTERPRETIVE_BLINDNESS,
        constraint=FConstraint.KNOWLEDGE_FIRST,
        jury=jury,
        lattice=lat,
        beliefs=beliefs,
        streams={"t": t, "r": r},
        t_stream_id="t",
        rival_stream_id="r",
        attended=("t",),
        engine=engine,
        horizon=horizon,
        post_stages=0,
    )


def _e_moves_answered(final: GameState) -> bool:
    """Every substantive E move is met by a nullification one round later."""
    by_round = {rd: (player, move) for rd, player, move in final.transcript}
    for rd, player, move in final.transcript:
        if player is not Player.E:
            continue
        if not isinstance(move, (ProposeHypothesis, ExtendPositiveSequence)):
            continue
        reply = by_round.get(rd + 1)
        if reply is None and rd + 1 > final.round:
            continue  # horizon fell between move and reply
        if reply is None or not isinstance(reply[1], (NullifyHypothesis, NullifySequence)):
            return False
    return True


def _battery_knowledge_first(params: dict, seed: int):
    variants = params.get("variants", 20)
    horizon = params.get("horizon", 1000)
    strategies = builtin_strategies()
    e_names = ["e_persistent", "e_rotating"]
    orderings = jury_orderings(default_jury("r", 6), (variants + 1) // 2, seed)
    rows, failures = [], []
    runs = 0
    for jury in orderings:
        for e_name in e_names:
            if runs >= variants:
                break
            config = _standoff_config(jury, horizon)
            final = play(config, strategies[e_name], strategies["f_knowledge_first"])
            accepted = final.status is GameStatus.ACCEPTED
            if accepted:
                failures.append(f"variant {runs} ({e_name}): accepted at {final.accepted_round}")
            if not _e_moves_answered(final):
                failures.append(f"variant {runs} ({e_name}): an E move went unanswered")
            rows.append((runs, "hypothesis", f"v{runs:02d}.accepted", 1.0 if accepted else 0.0))
            rows.append((runs, "stream", f"v{runs:02d}.t", final.beliefs.stream_marginals["t"]))
            runs += 1
    assertions: list[dict] = []
    _check(assertions, f"knowledge-first never accepts in {horizon} rounds "
                       f"across {runs} proposer variants", not failures, "; ".join(failures[:4]))
    _check(assertions, "every proposal answered one round later",
           not any("unanswered" in f for f in failures), "")
    return {"variants": runs, "horizon": horizon, "failures": failures}, rows, assertions


def _battery_discount_escape(params: dict, seed: int):
    horizon = params.get("horizon", 40)
    config = _standoff_config(default_jury("r", 6), horizon)
    config.condition = WinCondition.PERSUASION
    config.constraint = FConstraint.DISCOUNT
    config.post_stages = params.get("post_stages", 100)
    strategies = builtin_strategies()
    final = play(config, strategies["e_persistent"], strategies["f_discount"])
    outcome = win_eval(final, config)
    m_r = final.beliefs.stream_marginals["r"]
    assertions: list[dict] = []
    _check(assertions, "discounting accepter admits the rival within 2 rounds",
           final.status is GameStatus.ACCEPTED and final.accepted_round <= 2,
           f"status {final.status.value}, round {final.accepted_round}")
    _check(assertions, "rival stream keeps conferred mass after acceptance",
           m_r >= config.accept_mass / 2, _fmt(m_r))
    summary = {
        "game_outcome": final.status.value,
        "accepted_round": final.accepted_round,
        "winner": outcome.winner.value,
        "rival_marginal": m_r,
    }
    return summary, _state_trace(final.beliefs), assertions


def _battery_mode_equivalence(params: dict, seed: int):
    seeds = params.get("seeds", 30)
    steps = params.get("steps", 50)
    rows, assertions = [], []
    worst = 0.0
    for i in range(seeds):
        rng = random.Random(seed + i)
        n = rng.randint(2, 4)
        hyps = [
            EvaluationHypothesis(f"h{k + 1}", {"t": Constant(rng.uniform(0.05, 0.95))})
            for k in range(n)
        ]
        weights = [rng.uniform(0.05, 1.0) for _ in range(n)]
        total = math.fsum(weights)
        priors = {h.id: w / total for h, w in zip(hyps, weights)}
        stream = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
        finals = {}
        for mode in (UpdateMode.CHAINED, UpdateMode.STANDARD):
            finals[mode] = simulate(
                BeliefState.initial(priors, tracked=("t",), mode=mode), stream, steps, hyps
            )
        cfg_worst = 0.0
        for hid in priors:
            diff = max(
                abs(a - b)
                for a, b in zip(
                    finals[UpdateMode.CHAINED].prob_trace(hid),
                    finals[UpdateMode.STANDARD].prob_trace(hid),
                )
            )
            cfg_worst = max(cfg_worst, diff)
        worst = max(worst, cfg_worst)
        rows.append((i, "hypothesis", f"cfg{i:02d}.max_gap", cfg_worst))
    _check(assertions, "chained and standard posteriors within 1e-12 on constant schedules",
           worst <= 1e-12, f"worst gap {_fmt(worst)}")
    return {"configs": seeds, "steps": steps, "worst_gap": worst}, rows, assertions


_BATTERIES = {
    "dominant-convergence": _battery_dominant_convergence,
    "trusted-stream-convergence": _battery_trusted_stream,
    "rival-evidence-collapse": _battery_rival_collapse,
    "blocked-learning-probe": _battery_blocked_learning,
    "reactive-completeness": _battery_reactive_completeness,
    "knowledge-first-standoff": _battery_knowledge_first,
    "discount-escape": _battery_discount_escape,
    "mode-equivalence": _battery_mode_equivalence,
}


# which battery_params key a --horizon override should land on
_LENGTH_KEY = {
    "dominant-convergence": "steps",
    "trusted-stream-convergence": "steps",
    "rival-evidence-collapse": "steps",
    "blocked-learning-probe": "probe_steps",
    "reactive-completeness": "stages",
    "knowledge-first-standoff": "horizon",
    "discount-escape": "horizon",
    "mode-equivalence": "steps",
}


def _run_battery(scn: Scenario, horizon: int | None, seed: int | None) -> RunResult:
    name = scn.data["battery"]
    params = dict(scn.data.get("battery_params", {}))
    if horizon is not None:
        params[_LENGTH_KEY[name]] = horizon
    rng_seed = seed if seed is not None else scn.data.get("seed", 0)
    battery_summary, rows, assertions = _BATTERIES[name](params, rng_seed)
    summary = {
        "name": scn.name,
        "kind": scn.kind,
        "battery": name,
        "seed": rng_seed,
        "final_probs": battery_summary.pop("final_probs", None),
        "convergence_steps": None,
        "game_outcome": battery_summary.get("game_outcome"),
        "battery_summary": battery_summary,
        "assertions": assertions,
    }
    lines = [f"scenario {scn.name} (battery {name}, seed {rng_seed})"]
    lines += [f"  [{'ok' if a['ok'] else 'FAIL'}] {a['name']} {a['detail']}" for a in assertions]
    return RunResult(scn.name, summary, rows, lines)


# ---------------------------------------------------------------- driver


def run_scenario(
    scn: Scenario,
    mode: UpdateMode | None = None,
    horizon: int | None = None,
    seed: int | None = None,
) -> RunResult:
    if scn.kind == "reproduce":
        return _run_reproduce(scn, mode, horizon)
    if scn.kind == "proposition":
        return _run_battery(scn, horizon, seed)
    if scn.kind == "game":
        return _run_game(scn, horizon, seed)
    raise ScenarioError(f"unknown scenario kind {scn.kind!r}")


def write_outputs(result: RunResult, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trace.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for step, kind, entity, value in result.trace:
            writer.writerow((step, kind, entity, _fmt(value)))
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(result.report())
