"""Single-edge propagation and the journaled breadth-first propagation run.

An entangled rank-1 constraint forces a unique partner state for every
source state; a product constraint x (x) y either is already satisfied
(source orthogonal to x) or forces perp(y).  The run below sweeps these
forcings breadth-first from one seed, killing every edge it inspects,
exactly mirroring the reduced-Hamiltonian graph on success.

The inner loop is deliberately flat (tuple complex arithmetic, inlined
kills and writes): it dominates the solver's O(n + m) running time.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from math import sqrt

import numpy as np

from . import linalg
from .assignment import TOL_EQ, TOL_SAT, Assignment, PairValue
from .errors import PreconditionViolated
from .graph import KIND_RANK1, ConstraintGraph, Journal

CHUNK_MASK = 63  # primitive steps between generator yields


class EdgeProp(enum.Enum):
    PROPAGATES = "propagates"
    NO_PROPAGATION = "no-propagation"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class EdgePropResult:
    kind: EdgeProp
    beta: np.ndarray | None = None


def propagate_edge(
    constraint,
    source,
    tol_sat: float = TOL_SAT,
    tol_ent: float = linalg.TOL_ENT,
) -> EdgePropResult:
    """Classify one constraint against the value at its from-endpoint.

    source is a 1-qubit state (array or amplitude tuple) or a PairValue
    whose partner lies outside the edge.  Entangled constraints propagate
    every single-qubit state to the unique annihilating partner state;
    product constraints x (x) y are satisfied outright when the source is
    orthogonal to x and force perp(y) otherwise.  A pair against an
    entangled constraint admits no extension at all.
    """
    psi = linalg.as_state(constraint)
    entangled = linalg.is_entangled(psi, tol_ent)
    if isinstance(source, PairValue):
        if entangled:
            return EdgePropResult(EdgeProp.INFEASIBLE)
        _, y = linalg.product_factors(psi)
        return EdgePropResult(EdgeProp.PROPAGATES, linalg.perp(y))
    alpha = linalg.as_state(source)
    if entangled:
        v = np.conj(psi.reshape(2, 2)).T @ alpha
        beta = np.array([v[1], -v[0]])
        return EdgePropResult(EdgeProp.PROPAGATES, beta / np.linalg.norm(beta))
    x, y = linalg.product_factors(psi)
    if abs(linalg.braket(x, alpha)) <= tol_sat:
        return EdgePropResult(EdgeProp.NO_PROPAGATION)
    return EdgePropResult(EdgeProp.PROPAGATES, linalg.perp(y))


@dataclass
class PropOutcome:
    """Result of one propagation run.

    On conflict the graph and assignment are left as they are (the caller
    decides whether to undo); conflict_edge is the offending edge and the
    BFS parents remain readable on the graph for path extraction.
    """

    ok: bool
    conflict_vertex: int = -1
    conflict_edge: int = -1
    infeasible: bool = False
    epoch: int = 0


def propagation_run(
    g: ConstraintGraph,
    a: Assignment,
    journal: Journal,
    i: int,
    delta,
    steps_cell,
    tol_eq: float = TOL_EQ,
    tol_sat: float = TOL_SAT,
):
    """Generator implementing one breadth-first propagation from seed i.

    Yields every 64 primitive steps (edge inspections and cleanup scans)
    so two runs can be interleaved in lock-step; returns a PropOutcome.
    Requires the alive graph to carry only rank-1 constraints, and
    s(i) to be unassigned or equal to delta.
    """
    values = a.values
    support = a.support
    ealive, valive, inc = g.ealive, g.valive, g.inc
    eto, erev = g.eto, g.erev
    eent, econj, efactors = g.eent, g.econj, g.efactors
    flat, off = g.adj_flat, g.adj_off
    parent, pepoch = g.parent, g.parent_epoch
    lmark, enq = g.lmark, g.enqmark
    epoch = g.new_epoch()
    jkill = journal.kills.append
    jvkill = journal.vkills.append
    jwrite = journal.writes.append
    joverwrites = journal.overwrites
    kills0, vkills0 = len(journal.kills), len(journal.vkills)

    one_minus = (1.0 - tol_eq) ** 2  # squared-magnitude form of 1 - |<a|b>| <= tol
    tol_sat2 = tol_sat * tol_sat

    # seed: s(i) must be unassigned or already delta
    cur = values[i]
    if cur is None:
        values[i] = delta
        support.add(i)
        jwrite(i)
    elif cur is not delta and not _same_value(cur, delta, tol_eq):
        raise PreconditionViolated(f"seed {i} holds a different value")

    steps = 0
    queue = deque((i,))
    qpop = queue.popleft
    qput = queue.append
    enq[i] = epoch
    boundary: list[int] = []
    conflict_v = conflict_e = -1
    infeasible = False

    while queue:
        u = qpop()
        val = values[u]
        if type(val) is tuple:
            a0, a1 = val
            pair_mode = False
        else:
            pair_mode = True
        skip = erev[parent[u]] if pepoch[u] == epoch else -1
        for idx in range(off[u], off[u + 1]):
            eid = flat[idx]
            if not ealive[eid]:
                continue
            steps += 1
            if not steps & CHUNK_MASK:
                steps_cell[0] += 64
                yield
            ealive[eid] = 0
            jkill(eid)
            k = eto[eid]
            inc[u] -= 1
            inc[k] -= 1
            if eid == skip:
                # exact reverse of the tree edge that assigned u: consistent
                # by the two-way uniqueness of rank-1 propagation
                continue
            if pair_mode:
                if eent[eid]:
                    conflict_v, conflict_e = k, eid
                    infeasible = True
                    break
                fac = efactors[eid]
                b0, b1 = fac[2], fac[3]
            elif eent[eid]:
                sc = econj[eid]
                b0 = sc[1] * a0 + sc[3] * a1
                v0 = sc[0] * a0 + sc[2] * a1
                nr = sqrt(
                    b0.real * b0.real
                    + b0.imag * b0.imag
                    + v0.real * v0.real
                    + v0.imag * v0.imag
                )
                b0 /= nr
                b1 = -v0 / nr
            else:
                fac = efactors[eid]
                t = fac[0] * a0 + fac[1] * a1
                if t.real * t.real + t.imag * t.imag <= tol_sat2:
                    if lmark[k] != epoch:
                        lmark[k] = epoch
                        boundary.append(k)
                    continue
                b0, b1 = fac[2], fac[3]
            # write (b0, b1) at k
            curk = values[k]
            if curk is None:
                values[k] = (b0, b1)
                support.add(k)
                jwrite(k)
                parent[k] = eid
                pepoch[k] = epoch
                if enq[k] != epoch:
                    enq[k] = epoch
                    qput(k)
            elif type(curk) is tuple:
                ip = curk[0].conjugate() * b0 + curk[1].conjugate() * b1
                if ip.real * ip.real + ip.imag * ip.imag >= one_minus:
                    if enq[k] != epoch:
                        enq[k] = epoch
                        qput(k)
                else:
                    joverwrites.append((k, curk))
                    values[k] = Assignment.CONFLICT
                    a.conflicts += 1
                    conflict_v, conflict_e = k, eid
                    break
            else:
                # single forced onto a pair-assigned qubit
                joverwrites.append((k, curk))
                values[k] = Assignment.CONFLICT
                a.conflicts += 1
                conflict_v, conflict_e = k, eid
                break
        if conflict_v >= 0:
            break
        if valive[u]:
            valive[u] = 0
            jvkill(u)

    if conflict_v < 0:
        # boundary cleanup: drop edges into the explored region, then
        # vertices this leaves isolated
        for k in boundary:
            steps += 1
            if not steps & CHUNK_MASK:
                steps_cell[0] += 64
                yield
            if not valive[k]:
                continue
            for idx in range(off[k], off[k + 1]):
                eid = flat[idx]
                if not ealive[eid]:
                    continue
                steps += 1
                if not steps & CHUNK_MASK:
                    steps_cell[0] += 64
                    yield
                t = eto[eid]
                if not valive[t]:
                    ealive[eid] = 0
                    jkill(eid)
                    inc[k] -= 1
                    inc[t] -= 1
            if inc[k] == 0 and valive[k]:
                valive[k] = 0
                jvkill(k)

    g.alive_edges -= len(journal.kills) - kills0
    g.alive_vertices -= len(journal.vkills) - vkills0
    steps_cell[0] += steps & CHUNK_MASK
    return PropOutcome(
        ok=conflict_v < 0,
        conflict_vertex=conflict_v,
        conflict_edge=conflict_e,
        infeasible=infeasible,
        epoch=epoch,
    )


def _same_value(cur, delta, tol_eq: float) -> bool:
    if type(cur) is tuple and type(delta) is tuple:
        ip = cur[0].conjugate() * delta[0] + cur[1].conjugate() * delta[1]
        return 1.0 - abs(ip) <= tol_eq
    if isinstance(cur, PairValue) and isinstance(delta, PairValue):
        if cur.partner != delta.partner:
            return False
        ip = sum(x.conjugate() * y for x, y in zip(cur.state, delta.state))
        return 1.0 - abs(ip) <= tol_eq
    return False


def run_propagation(
    g: ConstraintGraph,
    a: Assignment,
    journal: Journal,
    i: int,
    delta,
    steps_cell,
    tol_eq: float = TOL_EQ,
    tol_sat: float = TOL_SAT,
) -> PropOutcome:
    """Drive one propagation to completion."""
    gen = propagation_run(g, a, journal, i, delta, steps_cell, tol_eq, tol_sat)
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value
