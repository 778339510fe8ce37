"""q2sat: linear-time solver for quantum 2-SAT projector instances."""

from .assignment import (
    Assignment,
    PairValue,
    SolutionEntry,
    WriteResult,
    satisfies,
    total_extension,
)
from .errors import (
    DeadTarget,
    DependentInput,
    IncoherentAssignment,
    InvalidClause,
    InvalidTerm,
    MalformedInput,
    NotEntangled,
    PreconditionViolated,
    Q2SatError,
    TooLarge,
    ZeroState,
)
from .graph import ConstraintGraph, Journal
from .instance import (
    Instance,
    Term,
    gen_classical_2sat,
    gen_planted,
    gen_random,
    gen_ring,
    parse,
    rank1_decompose,
    serialize,
)
from .propagate import EdgeProp, propagate_edge, run_propagation
from .solver import (
    SolveOutcome,
    SolverConfig,
    SolverState,
    slide_edge,
    slide_path,
    solve,
)

__version__ = "0.1.0"
