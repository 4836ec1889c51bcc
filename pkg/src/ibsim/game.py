"""Two-player persuasion game over a hypothesis lattice.

E tries to get a rival stream admitted; F holds the incumbent stream and
answers. Rounds and testimony stages run in lockstep: E moves on odd rounds,
F on even ones, and after every move the world advances one stage (the
incumbent's reactive generator extends its stream, then beliefs update
hierarchically). F's reply at round k+1 therefore sees whatever the generator
minted at stage k+1.

F plays under one of two constraints. Knowledge-first: while any explicit
nullifier against the pending proposal exists, citing one is the only legal
reply and acceptance is off the table. Discounting: nullifiers sourced from
the incumbent stream itself are inadmissible, so when nothing else answers
the proposal, acceptance becomes legal.

Acceptance confers a fixed mass on the accepted hypotheses (lifting, never
lowering) and switches attention to include the rival stream.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

from ibsim.beliefs import BeliefState
from ibsim.errors import IllegalMove
from ibsim.generators import ReactiveAttackEngine
from ibsim.hypotheses import DEFAULT_EPS, DEFAULT_HORIZON, EvaluationHypothesis, potentially_trustworthy
from ibsim.lattice import (
    HigherOrderHypothesis,
    HypothesisLattice,
    hierarchical_update,
)
from ibsim.schedules import Constant, MonotoneToLimit
from ibsim.streams import TestimonyStream


class Player(Enum):
    E = "E"
    F = "F"


class WinCondition(Enum):
    PERSUASION = "persuasion"
    INTERPRETIVE_BLINDNESS = "interpretive_blindness"


class FConstraint(Enum):
    KNOWLEDGE_FIRST = "knowledge_first"
    DISCOUNT = "discount"


class GameStatus(Enum):
    RUNNING = "running"
    ACCEPTED = "accepted"
    HORIZON_EXHAUSTED = "horizon_exhausted"


# ------------------------------------------------------------------- moves


@dataclass(frozen=True)
class ProposeHypothesis:
    """E offers a fresh rival-positive level-1 hypothesis."""

    hypothesis: EvaluationHypothesis


@dataclass(frozen=True)
class ExtendPositiveSequence:
    """E grows (or re-tops, at the depth cap) its current sequence."""

    new_top: HigherOrderHypothesis
    base_ids: tuple[str, ...]


@dataclass(frozen=True)
class NullifyHypothesis:
    """F cites a nullifier against a bare level-1 proposal."""

    nullifier_id: str
    target_id: str


@dataclass(frozen=True)
class NullifySequence:
    """F cites a nullifier against a proposed sequence."""

    nullifier_id: str
    target_ids: tuple[str, ...]


@dataclass(frozen=True)
class Accept:
    """F admits the pending proposal."""

    target_ids: tuple[str, ...]


@dataclass(frozen=True)
class Pass:
    pass


Move = (
    ProposeHypothesis
    | ExtendPositiveSequence
    | NullifyHypothesis
    | NullifySequence
    | Accept
    | Pass
)


# -------------------------------------------------------------------- jury


@dataclass(frozen=True)
class Jury:
    """E's pool of level-1 candidates plus the recipe for fresh tops."""

    rival_stream_id: str
    candidates: tuple[EvaluationHypothesis, ...]
    top_score: float = 0.9
    top_support: float = 0.9


def default_jury(rival_stream_id: str, size: int = 6) -> Jury:
    candidates = []
    for i in range(size):
        if i == 0:
            sched = Constant(1.0)
        else:
            sched = MonotoneToLimit(0.55 + 0.05 * i, 1.0, 0.1 + 0.05 * i)
        candidates.append(
            EvaluationHypothesis(
                id=f"{rival_stream_id}.e{i + 1}",
                schedules={rival_stream_id: sched},
                pwmc_for=rival_stream_id,
            )
        )
    return Jury(rival_stream_id, tuple(candidates))


def jury_competent(
    jury: Jury, horizon: int = DEFAULT_HORIZON, eps: float = DEFAULT_EPS
) -> bool:
    """Every candidate treats the rival stream as potentially trustworthy."""
    probe = TestimonyStream(jury.rival_stream_id, (frozenset(),), repeats=True)
    return all(
        potentially_trustworthy(c, probe, horizon, eps) for c in jury.candidates
    )


def jury_orderings(jury: Jury, count: int, seed: int = 0) -> list[Jury]:
    """Seeded shuffles of the candidate pool, for order-invariance checks."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        candidates = list(jury.candidates)
        rng.shuffle(candidates)
        out.append(replace(jury, candidates=tuple(candidates)))
    return out


# ------------------------------------------------------------------- state


@dataclass
class GameConfig:
    condition: WinCondition
    constraint: FConstraint
    jury: Jury
    lattice: HypothesisLattice
    beliefs: BeliefState
    streams: dict[str, TestimonyStream]
    t_stream_id: str
    rival_stream_id: str
    attended: tuple[str, ...]
    engine: ReactiveAttackEngine | None = None
    horizon: int = 1000
    accept_mass: float = 0.1
    post_stages: int = 100


@dataclass
class GameState:
    lattice: HypothesisLattice
    beliefs: BeliefState
    streams: dict[str, TestimonyStream]
    attended: tuple[str, ...]
    engine: ReactiveAttackEngine | None
    round: int = 0
    status: GameStatus = GameStatus.RUNNING
    sigma_star: tuple[str, ...] = ()
    pending: tuple[str, ...] | None = None
    last_nullified: bool = False
    proposed_ids: set[str] = field(default_factory=set)
    top_serial: int = 0
    transcript: list[tuple[int, Player, Move]] = field(default_factory=list)
    accepted_round: int | None = None

    @staticmethod
    def initial(config: GameConfig) -> "GameState":
        if config.engine is not None:
            config.engine.lattice = config.lattice
        return GameState(
            lattice=config.lattice,
            beliefs=config.beliefs,
            streams=dict(config.streams),
            attended=tuple(config.attended),
            engine=config.engine,
        )


def _mover(round_no: int) -> Player:
    return Player.E if round_no % 2 == 1 else Player.F


def _candidate_top(state: GameState, config: GameConfig) -> HigherOrderHypothesis:
    """The next jury top for sigma*, recycling at the depth cap."""
    level = min(len(state.sigma_star) + 1, state.lattice.depth_cap)
    below = state.sigma_star[level - 2]
    return HigherOrderHypothesis(
        id=f"{config.rival_stream_id}.j{level}.{state.top_serial + 1:03d}",
        level=level,
        scores={below: config.jury.top_score},
        testimony_support={config.rival_stream_id: config.jury.top_support},
    )


def _answering_nullifiers(
    lat: HypothesisLattice, target_ids: tuple[str, ...]
) -> list[HigherOrderHypothesis]:
    """All explicit nullifiers one level above the target's reachable top."""
    level = min(len(target_ids) + 1, lat.depth_cap, lat.depth + 1)
    if level < 2 or level > lat.depth:
        return []
    victim = target_ids[level - 2]
    return [h for h in lat.higher.get(level, ()) if h.nullifies_id(victim)]


def _nullify_move(target_ids: tuple[str, ...], nullifier: HigherOrderHypothesis) -> Move:
    if len(target_ids) == 1:
        return NullifyHypothesis(nullifier.id, target_ids[0])
    return NullifySequence(nullifier.id, target_ids)


def legal_moves(state: GameState, config: GameConfig) -> list[Move]:
    if state.status is not GameStatus.RUNNING:
        return []
    if _mover(state.round) is Player.E:
        moves: list[Move] = []
        if state.sigma_star:
            top = _candidate_top(state, config)
            moves.append(ExtendPositiveSequence(top, state.sigma_star[: top.level - 1]))
        for cand in config.jury.candidates:
            if cand.id not in state.proposed_ids:
                moves.append(ProposeHypothesis(cand))
        moves.append(Pass())
        return moves

    if state.pending is None:
        return [Pass()]
    nullifiers = _answering_nullifiers(state.lattice, state.pending)
    if config.constraint is FConstraint.KNOWLEDGE_FIRST:
        if nullifiers:
            return [_nullify_move(state.pending, h) for h in nullifiers]
        return [Accept(state.pending)]
    admissible = [h for h in nullifiers if h.support_for(config.t_stream_id) <= 0.5]
    moves = [_nullify_move(state.pending, h) for h in admissible]
    moves.append(Accept(state.pending))
    return moves


def _level_of(lat: HypothesisLattice, hid: str) -> int:
    for m in range(1, lat.depth + 1):
        if any(h.id == hid for h in lat.hypotheses_at(m)):
            return m
    raise KeyError(f"no hypothesis {hid!r} in the lattice")


def _lift_dist(dist: dict[str, float], hid: str, floor: float) -> dict[str, float]:
    """Raise one entry to at least ``floor``, rescaling the rest to keep the
    total at 1. Entries already at or above the floor are untouched."""
    if dist.get(hid, 0.0) >= floor:
        return dict(dist)
    others_sum = math.fsum(v for k, v in dist.items() if k != hid)
    if others_sum <= 0.0:
        out = {k: 0.0 for k in dist}
        out[hid] = 1.0
        return out
    scale = (1.0 - floor) / others_sum
    out = {k: (floor if k == hid else v * scale) for k, v in dist.items()}
    if hid not in out:
        out[hid] = floor
    return out


def _apply_accept(state: GameState, move: Accept, config: GameConfig) -> None:
    lat = state.lattice
    targets = [(_level_of(lat, hid), hid) for hid in move.target_ids]
    # a bare level-1 acceptance in a deep lattice gets a support chain, so the
    # top-down projection cannot re-zero what was just admitted
    if len(targets) == 1 and targets[0][0] == 1 and lat.depth >= 2:
        below = move.target_ids[0]
        for level in range(2, lat.depth + 1):
            support = HigherOrderHypothesis(
                id=f"{config.rival_stream_id}.s{level}",
                level=level,
                scores={below: 0.9},
                testimony_support={config.rival_stream_id: 0.9},
            )
            lat = lat.with_higher_added(support, mass=0.0)
            targets.append((level, support.id))
            below = support.id
    priors = {m: dict(p) for m, p in lat.priors.items()}
    for level, hid in targets:
        priors[level] = _lift_dist(priors.get(level, {}), hid, config.accept_mass)
    state.lattice = replace(lat, priors=priors)
    state.beliefs = replace(state.beliefs, hypothesis_probs=dict(priors[1]))
    if config.rival_stream_id not in state.attended:
        state.attended = state.attended + (config.rival_stream_id,)
    state.pending = None
    state.status = GameStatus.ACCEPTED
    state.accepted_round = state.round


def apply_move(state: GameState, move: Move, config: GameConfig) -> GameState:
    if move not in legal_moves(state, config):
        raise IllegalMove(f"round {state.round}: {move!r} is not legal")
    mover = _mover(state.round)

    if isinstance(move, ProposeHypothesis):
        h = move.hypothesis
        state.lattice = state.lattice.with_level1_added(h, mass=0.0)
        if h.id not in state.beliefs.hypothesis_probs:
            probs = dict(state.beliefs.hypothesis_probs)
            probs[h.id] = 0.0
            state.beliefs = replace(state.beliefs, hypothesis_probs=probs)
        state.proposed_ids.add(h.id)
        state.sigma_star = (h.id,)
        state.pending = (h.id,)
        state.last_nullified = False
        if state.engine is not None:
            state.engine.lattice = state.lattice
            state.engine.observe_sequence([h.id], source=config.rival_stream_id)
    elif isinstance(move, ExtendPositiveSequence):
        state.lattice = state.lattice.with_higher_added(move.new_top, mass=0.0)
        state.top_serial += 1
        state.sigma_star = move.base_ids + (move.new_top.id,)
        state.pending = state.sigma_star
        state.last_nullified = False
        if state.engine is not None:
            state.engine.lattice = state.lattice
            state.engine.observe_sequence(state.sigma_star, source=config.rival_stream_id)
    elif isinstance(move, (NullifyHypothesis, NullifySequence)):
        state.pending = None
        state.last_nullified = True
    elif isinstance(move, Accept):
        _apply_accept(state, move, config)
    # Pass changes nothing

    state.transcript.append((state.round, mover, move))
    return state


def _advance_world(state: GameState, config: GameConfig) -> None:
    """One testimony stage plus one hierarchical belief update."""
    if state.engine is not None:
        state.engine.lattice = state.lattice
        stream, lattice = state.engine.advance()
        state.streams[config.t_stream_id] = stream
        state.lattice = lattice
    evidence = [state.streams[sid] for sid in state.attended]
    payload = evidence[0] if len(evidence) == 1 else evidence
    state.lattice, state.beliefs = hierarchical_update(state.lattice, state.beliefs, payload)


Strategy = Callable[[GameState, GameConfig, "list[Move]"], Move]


def play(config: GameConfig, e_strategy: Strategy, f_strategy: Strategy) -> GameState:
    state = GameState.initial(config)
    while state.round < config.horizon and state.status is GameStatus.RUNNING:
        state.round += 1
        moves = legal_moves(state, config)
        strategy = e_strategy if _mover(state.round) is Player.E else f_strategy
        apply_move(state, strategy(state, config, moves), config)
        _advance_world(state, config)
    if state.status is GameStatus.RUNNING:
        state.status = GameStatus.HORIZON_EXHAUSTED
    for _ in range(config.post_stages):
        _advance_world(state, config)
    return state


# -------------------------------------------------------------- strategies


def e_persistent(state: GameState, config: GameConfig, moves: list[Move]) -> Move:
    """Open with a fresh candidate, then keep sigma* alive forever."""
    if not state.sigma_star:
        for m in moves:
            if isinstance(m, ProposeHypothesis):
                return m
    for m in moves:
        if isinstance(m, ExtendPositiveSequence):
            return m
    return Pass()


def e_rotating(state: GameState, config: GameConfig, moves: list[Move]) -> Move:
    """Burn through the candidate pool first, then extend like e_persistent."""
    for m in moves:
        if isinstance(m, ProposeHypothesis):
            return m
    for m in moves:
        if isinstance(m, ExtendPositiveSequence):
            return m
    return Pass()


def _prefer_nullify(state: GameState, config: GameConfig, moves: list[Move]) -> Move:
    for m in moves:
        if isinstance(m, (NullifyHypothesis, NullifySequence)):
            return m
    for m in moves:
        if isinstance(m, Accept):
            return m
    return Pass()


def f_knowledge_first(state: GameState, config: GameConfig, moves: list[Move]) -> Move:
    return _prefer_nullify(state, config, moves)


def f_discount(state: GameState, config: GameConfig, moves: list[Move]) -> Move:
    return _prefer_nullify(state, config, moves)


def builtin_strategies() -> dict[str, Strategy]:
    return {
        "e_persistent": e_persistent,
        "e_rotating": e_rotating,
        "f_knowledge_first": f_knowledge_first,
        "f_discount": f_discount,
    }


# ----------------------------------------------------------------- outcome


@dataclass(frozen=True)
class Outcome:
    condition: WinCondition
    winner: Player
    verdict: str
    accepted_round: int | None


def win_eval(state: GameState, config: GameConfig) -> Outcome:
    accepted = state.status is GameStatus.ACCEPTED
    if config.condition is WinCondition.PERSUASION:
        if accepted:
            return Outcome(
                config.condition,
                Player.E,
                f"proposal accepted at round {state.accepted_round}",
                state.accepted_round,
            )
        return Outcome(
            config.condition, Player.F, "no proposal accepted within the horizon", None
        )
    if accepted:
        return Outcome(
            config.condition,
            Player.E,
            "not interpretively blind: a rival stream was admitted",
            state.accepted_round,
        )
    return Outcome(
        config.condition,
        Player.F,
        "interpretively blind at this horizon (bounded-horizon verdict, not a limit claim)",
        None,
    )
