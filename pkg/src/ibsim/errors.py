"""Exception types shared across the simulation engine."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class EmptyStream(SimulationError):
    """A testimony stream with no stages was used where content is required."""


class StageOutOfRange(SimulationError):
    """A stage index points past the materialized content of a stream."""


class KeyMismatch(SimulationError):
    """Two keyed collections that must share keys do not."""


class NotNormalized(SimulationError):
    """A probability assignment does not sum to one within tolerance."""


class ZeroEvidence(SimulationError):
    """An update denominator collapsed below the zero-evidence floor."""


class NotApplicable(SimulationError):
    """A closure value was requested for evidence the stream already entails."""


class Unpronounced(SimulationError):
    """No hypothesis assigns a likelihood to the queried evidence."""


class DegenerateLattice(SimulationError):
    """A lattice level carries zero unnormalizable mass."""


class NotArgComplete(SimulationError):
    """A witness was requested from a stream that fails completeness."""


class IllegalMove(SimulationError):
    """A game move violates the current legality constraints."""


class InconsistentSpec(SimulationError):
    """A stream specification cannot be materialized as stated."""


class ScenarioError(SimulationError):
    """A scenario file failed schema or semantic validation."""
