"""Partial assignments: values, write semantics, edge satisfaction, output.

A value is one of
  None                unassigned
  (a0, a1)            a normalized 1-qubit state as a tuple of complex
  PairValue           an entangled 2-qubit state shared with a partner qubit
  Assignment.CONFLICT sentinel recording that incompatible values were written

Single-qubit values are bare tuples because they dominate the solver's
hot path; pair values only ever originate from rank-3 kernels.
"""

from __future__ import annotations

import enum

import numpy as np

from . import linalg
from .errors import IncoherentAssignment
from .graph import KIND_LOOP, KIND_MAXIMAL, Journal

TOL_SAT = 1e-9
TOL_EQ = linalg.TOL_EQ


class _Conflict:
    __slots__ = ()

    def __repr__(self):
        return "X"


class PairValue:
    """Entangled 2-qubit value shared by two qubits.

    state is a 4-tuple of complex amplitudes oriented with the lower
    qubit index in the first slot; both partners hold the same tuple.
    """

    __slots__ = ("state", "partner")

    def __init__(self, state: tuple, partner: int):
        self.state = state
        self.partner = partner

    def __repr__(self):
        return f"Pair(partner={self.partner})"


class WriteResult(enum.Enum):
    FRESH = "fresh"
    SAME_UP_TO_PHASE = "same"
    CONFLICT_RAISED = "conflict"


def _tuples_phase_equal(a: tuple, b: tuple, tol: float) -> bool:
    ip = 0j
    for x, y in zip(a, b):
        ip += x.conjugate() * y
    return 1.0 - abs(ip) <= tol


def single_value(state) -> tuple:
    """Normalized 1-qubit ndarray/sequence as an assignment value."""
    s = linalg.normalize(state)
    return (complex(s[0]), complex(s[1]))


def pair_values(state, i: int, j: int) -> tuple[PairValue, PairValue]:
    """Matched pair values for qubits i < j sharing `state` oriented (i, j)."""
    s = linalg.normalize(state)
    st = (complex(s[0]), complex(s[1]), complex(s[2]), complex(s[3]))
    return PairValue(st, j), PairValue(st, i)


class Assignment:
    """Partial map qubit -> value with conflict tracking."""

    CONFLICT = _Conflict()

    def __init__(self, n: int):
        self.n = n
        self.values: list = [None] * n
        self.support: set[int] = set()
        self.conflicts = 0

    @property
    def coherent(self) -> bool:
        return self.conflicts == 0

    def write(self, v: int, value, journal: Journal, tol_eq: float = TOL_EQ) -> WriteResult:
        """Store a Single or Pair value at v.

        Unassigned slots take the value; an existing value equal up to
        global phase (same kind, same partner for pairs) is a no-op;
        anything else records the conflict sentinel.  Every state change
        is journaled.
        """
        cur = self.values[v]
        if cur is None:
            self.values[v] = value
            self.support.add(v)
            journal.writes.append(v)
            return WriteResult.FRESH
        if cur is Assignment.CONFLICT:
            return WriteResult.CONFLICT_RAISED
        if type(cur) is tuple:
            same = type(value) is tuple and _tuples_phase_equal(cur, value, tol_eq)
        else:
            same = (
                isinstance(value, PairValue)
                and value.partner == cur.partner
                and _tuples_phase_equal(cur.state, value.state, tol_eq)
            )
        if same:
            return WriteResult.SAME_UP_TO_PHASE
        journal.overwrites.append((v, cur))
        self.values[v] = Assignment.CONFLICT
        self.conflicts += 1
        return WriteResult.CONFLICT_RAISED

    def snapshot(self) -> tuple:
        vals = []
        for v in self.values:
            if isinstance(v, PairValue):
                vals.append(("pair", v.state, v.partner))
            elif v is Assignment.CONFLICT:
                vals.append("X")
            else:
                vals.append(v)
        return (tuple(vals), self.conflicts)


# ---------------------------------------------------------------------------
# Satisfaction


def satisfies(assignment: Assignment, graph, eid: int, tol_sat: float = TOL_SAT) -> bool:
    """Whether the partial assignment satisfies an edge's constraint.

    True means every total extension annihilates the projector piece.
    Unassigned endpoints make an edge satisfied only through the
    product-factor shortcuts; entangled constraints need both sides.
    """
    values = assignment.values
    f, t = graph.efrom[eid], graph.eto[eid]
    vf, vt = values[f], values[t]
    if vf is Assignment.CONFLICT or vt is Assignment.CONFLICT:
        raise IncoherentAssignment(f"conflict marker touching edge {eid}")
    kind = graph.ekind[eid]
    sc = graph.econj[eid]

    if kind == KIND_LOOP:
        if type(vf) is tuple:
            return abs(sc[0] * vf[0] + sc[1] * vf[1]) <= tol_sat
        return False

    if kind == KIND_MAXIMAL:
        # constraint data holds the conjugated rank-3 kernel; satisfied
        # exactly when the local state matches the kernel up to phase
        if isinstance(vf, PairValue) and vf.partner == t:
            amps = vf.state if f < t else _swap_tuple(vf.state)
            return 1.0 - abs(_dot4(sc, amps)) <= tol_sat
        if type(vf) is tuple and type(vt) is tuple:
            amps = (vf[0] * vt[0], vf[0] * vt[1], vf[1] * vt[0], vf[1] * vt[1])
            return 1.0 - abs(_dot4(sc, amps)) <= tol_sat
        return False

    # rank-1 piece with forbidden state psi (conjugated in sc)
    if type(vf) is tuple and type(vt) is tuple:
        ip = (
            sc[0] * vf[0] * vt[0]
            + sc[1] * vf[0] * vt[1]
            + sc[2] * vf[1] * vt[0]
            + sc[3] * vf[1] * vt[1]
        )
        return abs(ip) <= tol_sat
    if isinstance(vf, PairValue) and vf.partner == t:
        return abs(_dot4(sc, vf.state if f < t else _swap_tuple(vf.state))) <= tol_sat

    if graph.eent[eid]:
        return False
    fac = graph.efactors[eid]
    # <x|alpha> with x = from-side factor; kills the term for any other side
    if type(vf) is tuple and abs(fac[0] * vf[0] + fac[1] * vf[1]) <= tol_sat:
        return True
    # <y|beta> on the to side, reconstructed from the stored perp(y)
    if type(vt) is tuple and abs(-fac[3] * vt[0] + fac[2] * vt[1]) <= tol_sat:
        return True
    return False


def _dot4(sc: tuple, amps: tuple) -> complex:
    return sc[0] * amps[0] + sc[1] * amps[1] + sc[2] * amps[2] + sc[3] * amps[3]


def _swap_tuple(s: tuple) -> tuple:
    return (s[0], s[2], s[1], s[3])


# ---------------------------------------------------------------------------
# Output


class SolutionEntry:
    """One product factor of the output state.

    free is True for qubits the ground space leaves arbitrary (emitted as
    |0>), False for forced single-qubit values, None for pair factors.
    """

    __slots__ = ("qubits", "amps", "free")

    def __init__(self, qubits: tuple[int, ...], amps: np.ndarray, free):
        self.qubits = qubits
        self.amps = amps
        self.free = free

    def to_json(self) -> dict:
        doc = {
            "qubits": list(self.qubits),
            "state": [[float(a.real), float(a.imag)] for a in self.amps],
        }
        if self.free is not None:
            doc["free"] = self.free
        return doc


_FREE_KET0 = (1.0 + 0j, 0j)


def total_extension(assignment: Assignment) -> list[SolutionEntry]:
    """Extend to a total product state: unassigned qubits become free |0>."""
    if not assignment.coherent:
        raise IncoherentAssignment("cannot extend an incoherent assignment")
    entries = []
    append = entries.append
    for v, val in enumerate(assignment.values):
        if val is None:
            append(SolutionEntry((v,), _FREE_KET0, True))
        elif type(val) is tuple:
            append(SolutionEntry((v,), val, False))
        else:
            if v < val.partner:
                append(SolutionEntry((v, val.partner), val.state, None))
    return entries


def solution_to_json(entries, cause: str | None = None) -> dict:
    doc = {
        "status": "sat" if cause is None else "unsat",
        "assignment": [e.to_json() for e in entries],
    }
    if cause is not None:
        doc["cause"] = cause
    return doc


def parse_solution(doc: dict) -> list[SolutionEntry]:
    """Read back a solution document's assignment entries."""
    entries = []
    for item in doc.get("assignment", []):
        qubits = tuple(int(q) for q in item["qubits"])
        amps = np.array([complex(p[0], p[1]) for p in item["state"]])
        entries.append(SolutionEntry(qubits, amps, item.get("free")))
    return entries
