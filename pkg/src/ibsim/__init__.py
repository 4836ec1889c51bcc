"""Belief-dynamics laboratory for testimony-driven Bayesian learning.

Simulates staged bodies of testimony, evaluation hypotheses over their
trustworthiness, hierarchical hypothesis lattices with support/undercut/attack
relations, reactive argumentatively-complete testimony generators, and the
two-player persuasion game used to probe interpretive blindness, all at desk
scale with deterministic traces.
"""

from ibsim.errors import (
    DegenerateLattice,
    EmptyStream,
    IllegalMove,
    InconsistentSpec,
    KeyMismatch,
    NotApplicable,
    NotArgComplete,
    NotNormalized,
    ScenarioError,
    SimulationError,
    StageOutOfRange,
    Unpronounced,
    ZeroEvidence,
)
from ibsim.literals import Literal, negate, parse_literal
from ibsim.streams import (
    TestimonyStream,
    disagrees,
    entails,
    stream_consistent,
    stream_entails_stream,
    streams_conflict,
)
from ibsim.schedules import Complement, Constant, MonotoneToLimit
from ibsim.hypotheses import (
    EvaluationHypothesis,
    potentially_trustworthy,
    pwmc_extend,
)
from ibsim.beliefs import (
    BeliefState,
    LearnabilityProbe,
    LossKind,
    ProbeResult,
    UpdateMode,
    Verdict,
    chained_update,
    learnability_probe,
    loss,
    marginal,
    marginal_of_proposition,
    simulate,
)
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
    undercuts,
)
from ibsim.generators import ReactiveAttackEngine, StreamSpec, build_stream, reactive_extend
from ibsim.game import (
    GameConfig,
    GameState,
    Outcome,
    apply_move,
    builtin_strategies,
    legal_moves,
    play,
    win_eval,
)

__version__ = "0.1.0"
