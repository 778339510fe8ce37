"""Exception types shared across the package."""


class Q2SatError(Exception):
    """Base class for all q2sat errors."""


class MalformedInput(Q2SatError):
    """Instance or solution document violates the file schema."""


class InvalidTerm(Q2SatError):
    """Term violates the instance model (duplicate site, bad basis, bad index)."""


class ZeroState(Q2SatError):
    """State amplitude vector has norm below the renormalization floor."""


class InvalidClause(Q2SatError):
    """Clause set cannot be represented as a projector instance."""


class DependentInput(Q2SatError):
    """Two states expected to span a plane are (numerically) dependent."""


class NotEntangled(Q2SatError):
    """Operation requires an entangled 2-qubit state."""


class DeadTarget(Q2SatError):
    """Kill requested on an edge or vertex that is already dead."""


class IncoherentAssignment(Q2SatError):
    """Assignment holds a conflict marker where a coherent value is required."""


class PreconditionViolated(Q2SatError):
    """Caller broke a documented entry condition of a solver routine."""


class ArityMismatch(Q2SatError):
    """Solution does not assign every qubit the operation needs."""


class TooLarge(Q2SatError):
    """Dense computation requested above the supported qubit count."""


class DimensionMismatch(Q2SatError):
    """Dense operators have incompatible shapes."""
