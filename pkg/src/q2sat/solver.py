"""Four-phase frustration-freeness solver.

Phase 1 pins every maximal-rank constraint (single-qubit terms and
rank-3 kernels), phase 2 propagates all pinned values, phase 3 removes
product constraints by racing their two factor branches on the twin
copies, and phase 4 clears the all-entangled residue by probing |0> and,
on contradiction, collapsing the two contradicting propagation paths
into one virtual product constraint via edge sliding.

The two copies (s0, G0) and (s1, G1) share stable edge ids; every stage
leaves them structurally identical, maintained by replaying removal
journals rather than copying, so total work stays linear in n + m.
Copy 1 is only materialized when a stage actually needs it (a parallel
race or a debug check); the pending journal is replayed on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .assignment import (
    Assignment,
    PairValue,
    SolutionEntry,
    WriteResult,
    pair_values,
    satisfies,
    single_value,
    solution_to_json,
    total_extension,
)
from .errors import NotEntangled, PreconditionViolated
from .graph import KIND_RANK1, ConstraintGraph, Journal, replay, undo
from .instance import Instance, rank1_decompose
from .propagate import propagation_run, run_propagation

CAUSE_MAX_RANK = "MaxRankIncoherent"
CAUSE_PAIR_ENTANGLED = "PairTouchesEntangled"
CAUSE_PROPAGATION = "PropagationConflict"
CAUSE_BOTH_BRANCHES = "BothBranchesFail"


@dataclass
class SolverConfig:
    """Tolerances and knobs; defaults sit well above float64 noise."""

    tol_orth: float = linalg.TOL_ORTH
    tol_ent: float = linalg.TOL_ENT
    tol_ind: float = linalg.TOL_IND
    tol_span: float = linalg.TOL_SPAN
    tol_eq: float = linalg.TOL_EQ
    tol_sat: float = 1e-9
    probe_state: tuple = (1.0 + 0j, 0j)
    debug: bool = False


@dataclass
class SolveOutcome:
    """Verdict plus either a product-form solution or a located cause."""

    status: str  # "sat" | "unsat"
    assignment: list[SolutionEntry] = field(default_factory=list)
    cause: str | None = None
    detail: str | None = None
    steps: int = 0
    edges: int = 0
    n: int = 0

    @property
    def sat(self) -> bool:
        return self.status == "sat"

    def cause_string(self) -> str | None:
        if self.cause is None:
            return None
        return f"{self.cause}: {self.detail}" if self.detail else self.cause

    def to_json(self) -> dict:
        return solution_to_json(self.assignment, self.cause_string())


class SolverState:
    """Two synchronized graph+assignment copies plus the step ledger."""

    def __init__(self, inst: Instance, cfg: SolverConfig):
        self.cfg = cfg
        self.n = inst.n
        self.pieces = rank1_decompose(inst)
        self.maximal_pieces = [p for p in self.pieces if p.maximal]
        self.g0 = ConstraintGraph.build(self.pieces, inst.n, cfg.tol_ent)
        self.g1 = self.g0.twin()
        self.a0 = Assignment(inst.n)
        self.a1 = Assignment(inst.n)
        self.j0 = Journal()
        self.j1 = Journal()
        self.steps_cell = [0]

    @property
    def steps(self) -> int:
        return self.steps_cell[0]

    def flush(self) -> None:
        """Bring copy 1 up to date by replaying copy 0's pending journal."""
        if len(self.j0):
            self.steps_cell[0] += replay(self.j0, self.a0, self.g1, self.a1)
            self.j0.clear()

    def check_mirror(self) -> None:
        self.flush()
        if self.g0.snapshot() != self.g1.snapshot() or (
            self.a0.snapshot() != self.a1.snapshot()
        ):
            raise AssertionError("solver copies diverged at a stage boundary")

    def unsat(self, cause: str, detail: str) -> SolveOutcome:
        return SolveOutcome(
            status="unsat",
            cause=cause,
            detail=detail,
            steps=self.steps,
            edges=self.g0.num_edges,
            n=self.n,
        )


# ---------------------------------------------------------------------------
# Phase 1: maximal-rank constraints


def max_rank_removal(state: SolverState) -> SolveOutcome | None:
    """Pin the unique local solution of every maximal-rank constraint.

    Single-qubit terms forbidding phi force perp(phi); rank-3 terms force
    their kernel, as two singles when it factors and as a matched pair
    value otherwise.  Afterwards: incoherence is unsatisfiable, a pair
    value meeting an entangled rank-1 piece toward a third qubit is
    unsatisfiable, every satisfied edge is removed, and vertices this
    isolates leave the graph.
    """
    g, a, j = state.g0, state.a0, state.j0
    cfg = state.cfg
    steps = state.steps_cell
    first_conflict = None

    for p in state.maximal_pieces:
        steps[0] += 1
        if len(p.qubits) == 1:
            v = p.qubits[0]
            res = a.write(v, single_value(linalg.perp(p.state)), j, cfg.tol_eq)
            if res is WriteResult.CONFLICT_RAISED and first_conflict is None:
                first_conflict = (v, p.term_id)
        else:
            qi, qj = p.qubits
            kernel = p.kernel
            if abs(linalg.det2(kernel)) <= cfg.tol_ent:
                x, y = linalg.product_factors(kernel)
                for v, val in ((qi, single_value(x)), (qj, single_value(y))):
                    res = a.write(v, val, j, cfg.tol_eq)
                    if res is WriteResult.CONFLICT_RAISED and first_conflict is None:
                        first_conflict = (v, p.term_id)
            else:
                pv_i, pv_j = pair_values(kernel, qi, qj)
                for v, val in ((qi, pv_i), (qj, pv_j)):
                    res = a.write(v, val, j, cfg.tol_eq)
                    if res is WriteResult.CONFLICT_RAISED and first_conflict is None:
                        first_conflict = (v, p.term_id)

    if not a.coherent:
        v, tid = first_conflict
        return state.unsat(
            CAUSE_MAX_RANK, f"conflicting forced values at qubit {v} (term {tid})"
        )

    for v in sorted(a.support):
        if not isinstance(a.values[v], PairValue):
            continue
        for e in g.out_edges(v):
            steps[0] += 1
            if g.ekind[e] == KIND_RANK1 and g.eent[e]:
                return state.unsat(
                    CAUSE_PAIR_ENTANGLED,
                    f"pair value at qubit {v} meets entangled piece of term "
                    f"{g.eterm[e]} toward qubit {g.eto[e]}",
                )

    if a.support:
        ealive = g.ealive
        for e in range(g.num_edges):
            steps[0] += 1
            if ealive[e] and satisfies(a, g, e, cfg.tol_sat):
                g.kill_edge(e, j)
    return None


# ---------------------------------------------------------------------------
# Phase 2: propagate everything pinned so far


def settle(state: SolverState) -> SolveOutcome | None:
    """Propagate assigned values until the assignment is closed."""
    g, a, j = state.g0, state.a0, state.j0
    cfg = state.cfg
    roots = sorted(v for v in a.support if g.valive[v])
    for v in roots:
        if not g.valive[v]:
            continue
        out = run_propagation(
            g, a, j, v, a.values[v], state.steps_cell, cfg.tol_eq, cfg.tol_sat
        )
        if not out.ok:
            return state.unsat(
                CAUSE_PROPAGATION,
                f"propagating forced values reached qubit {out.conflict_vertex} "
                f"with two incompatible states (edge of term "
                f"{g.eterm[out.conflict_edge]})",
            )
    return None


# ---------------------------------------------------------------------------
# Phase 3: product constraints, two branches raced on the two copies


def parallel_propagation(
    state: SolverState, i0: int, alpha0: tuple, i1: int, alpha1: tuple
) -> SolveOutcome | None:
    """Race the two ways of satisfying a product constraint.

    Runs one propagation per copy in lock-step (alternating fixed step
    chunks) until one succeeds or both conflict.  The loser's copy is
    rolled back through its journal and the winner's journal is replayed
    onto it, so the copies end the stage synchronized and the total work
    stays proportional to the winner's progress.
    """
    state.flush()
    cfg = state.cfg
    m0, m1 = state.j0.mark(), state.j1.mark()
    gen0 = propagation_run(
        state.g0, state.a0, state.j0, i0, alpha0, state.steps_cell, cfg.tol_eq, cfg.tol_sat
    )
    gen1 = propagation_run(
        state.g1, state.a1, state.j1, i1, alpha1, state.steps_cell, cfg.tol_eq, cfg.tol_sat
    )
    out0 = out1 = None
    winner = -1
    while True:
        if out0 is None:
            try:
                next(gen0)
            except StopIteration as stop:
                out0 = stop.value
                if out0.ok:
                    winner = 0
                    break
        if out1 is None:
            try:
                next(gen1)
            except StopIteration as stop:
                out1 = stop.value
                if out1.ok:
                    winner = 1
                    break
        if out0 is not None and out1 is not None:
            break
    gen0.close()
    gen1.close()

    if winner < 0:
        state.steps_cell[0] += undo(state.g0, state.a0, state.j0, m0)
        state.steps_cell[0] += undo(state.g1, state.a1, state.j1, m1)
        return state.unsat(
            CAUSE_BOTH_BRANCHES,
            f"both branches of the product constraint on qubits ({i0}, {i1}) "
            "ended in contradiction",
        )
    if winner == 0:
        state.steps_cell[0] += undo(state.g1, state.a1, state.j1, m1)
        state.steps_cell[0] += replay(state.j0, state.a0, state.g1, state.a1)
        state.j0.clear()
    else:
        state.steps_cell[0] += undo(state.g0, state.a0, state.j0, m0)
        state.steps_cell[0] += replay(state.j1, state.a1, state.g0, state.a0)
        state.j1.clear()
    return None


def remove_product_constraints(state: SolverState) -> SolveOutcome | None:
    """Phase-3 loop: race the factor branches of every product edge.

    Candidates are collected once in edge-id (creation) order; removal
    never introduces new product edges, so the list is exhaustive.
    """
    g = state.g0
    ealive = g.ealive
    alive_view = np.frombuffer(g.ealive, dtype=np.uint8)
    candidates = np.nonzero(
        (alive_view != 0) & (g.kind_np == KIND_RANK1) & ~g.ent_np
    )[0].tolist()
    state.steps_cell[0] += g.num_edges
    for e in candidates:
        state.steps_cell[0] += 1
        if not ealive[e]:
            continue
        fac = g.efactors[e]
        alpha0 = (fac[1], -fac[0])  # perp of the from-side factor
        alpha1 = (fac[2], fac[3])  # stored perp of the to-side factor
        fail = parallel_propagation(state, g.efrom[e], alpha0, g.eto[e], alpha1)
        if fail is not None:
            return fail
        if state.cfg.debug:
            state.check_mirror()
    return None


# ---------------------------------------------------------------------------
# Edge sliding


def slide_edge(psi1, psi2, tol_ent: float = linalg.TOL_ENT) -> np.ndarray:
    """Replace a constraint on (i, j) by an equivalent one on (i, k).

    Given rank-1 constraint states psi1 on (i, j) and entangled psi2 on
    (j, k), returns psi3 on (i, k) such that the 3-qubit ground space of
    the two projectors is unchanged when psi1 is swapped for psi3.

    Construction: with the Schmidt form psi2 = lam1 x1 y1 + lam2 x2 y2,
    the map T on qubit j defined by lam1 T x1 = y2 and lam2 T x2 = -y1
    sends psi2 to the antisymmetric state, whose projector is blind to
    swapping (j, k); psi3 is the normalized (I (x) T) psi1 read on (i, k).
    """
    psi2 = linalg.as_state(psi2)
    if abs(linalg.det2(psi2)) <= tol_ent:
        raise NotEntangled("sliding needs an entangled carrier state")
    sf = linalg.schmidt(psi2)
    t = (
        np.outer(sf.y2, np.conj(sf.x1)) / sf.lambda1
        - np.outer(sf.y1, np.conj(sf.x2)) / sf.lambda2
    )
    m3 = linalg.coeff_matrix(linalg.as_state(psi1)) @ t.T
    return linalg.normalize(m3.reshape(4))


def slide_path(states, tol_ent: float = linalg.TOL_ENT) -> np.ndarray:
    """Fold slide_edge along a propagating path of entangled constraints.

    states lists the constraint states along consecutive edges
    i0 -> i1 -> ... -> ik, each oriented along the path; the result is an
    equivalent single constraint on (i0, ik).  A length-1 path returns
    its own state.
    """
    if not states:
        raise ValueError("path must contain at least one constraint")
    for s in states:
        if abs(linalg.det2(s)) <= tol_ent:
            raise NotEntangled("every path constraint must be entangled")
    acc = linalg.as_state(states[0])
    for s in states[1:]:
        acc = slide_edge(acc, s, tol_ent)
    return acc


# ---------------------------------------------------------------------------
# Phase 4: entangled residue, probe plus sliding recovery


def _tree_path_edges(g: ConstraintGraph, root: int, target: int, epoch: int) -> list[int]:
    edges = []
    v = target
    while v != root:
        if g.parent_epoch[v] != epoch:
            raise AssertionError(f"vertex {v} has no parent in the current run")
        e = g.parent[v]
        edges.append(e)
        v = g.efrom[e]
    edges.reverse()
    return edges


def probe_propagation(state: SolverState, i: int) -> SolveOutcome | None:
    """Assign the probe value at i and propagate; recover on contradiction.

    A contradiction at j yields two propagating paths from i to j (the
    BFS tree path, and the tree path to the offending edge's source plus
    that edge).  Sliding each path to a single constraint on (i, j) and
    taking a product state in their span produces a virtual product
    constraint; the probe is undone and its two branches are raced.
    """
    g, a, j = state.g0, state.a0, state.j0
    cfg = state.cfg
    mark = j.mark()
    out = run_propagation(
        g, a, j, i, cfg.probe_state, state.steps_cell, cfg.tol_eq, cfg.tol_sat
    )
    if out.ok:
        return None
    if out.infeasible:
        # unreachable in the all-entangled phase; kept as a hard stop
        return state.unsat(
            CAUSE_PROPAGATION,
            f"pair value met entangled edge of term {g.eterm[out.conflict_edge]}",
        )
    cv, ce = out.conflict_vertex, out.conflict_edge
    if cv == i:
        raise AssertionError("entangled propagation cannot contradict its own seed")
    p1 = _tree_path_edges(g, i, cv, out.epoch)
    p2 = _tree_path_edges(g, i, g.efrom[ce], out.epoch)
    state.steps_cell[0] += len(p1) + len(p2) + 1
    path1 = [g.edge_state(e) for e in p1]
    path2 = [g.edge_state(e) for e in p2]
    path2.append(g.edge_state(ce))

    gamma1 = slide_path(path1, cfg.tol_ent)
    gamma2 = slide_path(path2, cfg.tol_ent)
    w = linalg.product_in_span(gamma1, gamma2, cfg.tol_ind)
    x, y = linalg.product_factors(w)
    alpha = single_value(linalg.perp(x))
    beta = single_value(linalg.perp(y))

    state.steps_cell[0] += undo(g, a, j, mark)
    return parallel_propagation(state, i, alpha, cv, beta)


def remove_entangled_constraints(state: SolverState) -> SolveOutcome | None:
    """Phase-4 loop: probe from the lowest-index alive vertex until empty."""
    g = state.g0
    if state.cfg.debug:
        for e in g.alive_edge_ids():
            assert g.ekind[e] == KIND_RANK1 and g.eent[e], (
                "phase 4 entered with a non-entangled constraint alive"
            )
    valive = g.valive
    cursor = 0
    while g.alive_vertices:
        while cursor < g.n and not valive[cursor]:
            cursor += 1
            state.steps_cell[0] += 1
        if cursor >= g.n:
            raise AssertionError("alive vertex count out of sync")
        fail = probe_propagation(state, cursor)
        if fail is not None:
            return fail
        if state.cfg.debug:
            state.check_mirror()
    return None


# ---------------------------------------------------------------------------


def prepare(inst: Instance, config: SolverConfig | None = None) -> SolverState:
    """Build the solver state: rank-1 decomposition plus the two graph copies.

    This is the input-preparation half of solving; the algorithm itself
    consumes the adjacency-list constraint graph prepared here.
    """
    cfg = config if config is not None else SolverConfig()
    return SolverState(inst, cfg)


def solve_prepared(state: SolverState) -> SolveOutcome:
    """Run the four phases on a freshly prepared state."""
    cfg = state.cfg
    fail = max_rank_removal(state)
    if fail is None:
        if cfg.debug:
            state.check_mirror()
        fail = settle(state)
    if fail is None:
        if cfg.debug:
            state.check_mirror()
        fail = remove_product_constraints(state)
    if fail is None:
        fail = remove_entangled_constraints(state)
    if fail is not None:
        return fail

    entries = total_extension(state.a0)
    return SolveOutcome(
        status="sat",
        assignment=entries,
        steps=state.steps,
        edges=state.g0.num_edges,
        n=state.n,
    )


def solve(inst: Instance, config: SolverConfig | None = None) -> SolveOutcome:
    """Decide frustration-freeness and emit a product-form ground state.

    Returns a sat outcome whose assignment is a tensor product of
    single-qubit states and rank-3 pair states (unassigned qubits are
    emitted as free |0>), or an unsat outcome carrying a located cause.
    """
    return solve_prepared(prepare(inst, config))
