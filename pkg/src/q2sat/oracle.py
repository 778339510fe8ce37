"""Independent ground-truth checks for small instances.

Everything here is deliberately separate from the solver's own machinery:
dense exact diagonalization for satisfiability, local expectation values
for emitted solutions, an implication-graph 2-SAT decision for embedded
formulas, and kernel-projector comparison for constraint rewrites.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .assignment import SolutionEntry
from .errors import ArityMismatch, DimensionMismatch, TooLarge
from .instance import Instance

N_MAX = 10
SAT_ENERGY = 1e-9
AMBIGUOUS_BAND = (1e-9, 1e-3)


def lift_operator(local: np.ndarray, sites: tuple[int, ...], n: int) -> np.ndarray:
    """Embed an operator on `sites` into the full 2^n-dimensional space.

    Qubit 0 is the most significant index bit; basis order on a pair
    (i, j) with i < j is |00>, |01>, |10>, |11>.
    """
    k = len(sites)
    rest = [q for q in range(n) if q not in sites]
    order = list(sites) + rest
    full = np.kron(local, np.eye(2 ** (n - k), dtype=np.complex128))
    t = full.reshape((2,) * (2 * n))
    inv = np.argsort(order)
    t = np.transpose(t, list(inv) + [n + int(x) for x in inv])
    return np.ascontiguousarray(t.reshape(2**n, 2**n))


def term_projector(term) -> np.ndarray:
    """Local projector onto the term's forbidden subspace."""
    s = np.array(term.states)
    return np.einsum("ri,rj->ij", s, np.conj(s))


def dense_operator(inst: Instance, n_max: int = N_MAX) -> np.ndarray:
    """The full 2^n x 2^n Hamiltonian as a dense Hermitian matrix."""
    if inst.n > n_max:
        raise TooLarge(f"n={inst.n} exceeds dense limit {n_max}")
    dim = 2**inst.n
    h = np.zeros((dim, dim), dtype=np.complex128)
    for term in inst.terms:
        h += lift_operator(term_projector(term), term.qubits, inst.n)
    herm = np.max(np.abs(h - h.conj().T)) if dim else 0.0
    if herm > 1e-12:
        raise AssertionError(f"dense operator not Hermitian: {herm:.3e}")
    return h


def dense_min_energy(inst: Instance, n_max: int = N_MAX) -> float:
    """Smallest eigenvalue of the dense Hamiltonian."""
    h = dense_operator(inst, n_max)
    return float(np.linalg.eigvalsh(h)[0])


def dense_verdict(inst: Instance, n_max: int = N_MAX) -> tuple[str, float]:
    """("sat"|"unsat"|"ambiguous", minimum energy) with the promise band.

    Energies inside [1e-9, 1e-3] are reported ambiguous and excluded from
    agreement statistics; they play the role of the promise gap.
    """
    e = dense_min_energy(inst, n_max)
    lo, hi = AMBIGUOUS_BAND
    if e <= lo:
        return "sat", e
    if e >= hi:
        return "unsat", e
    return "ambiguous", e


# ---------------------------------------------------------------------------
# Local energies of product-form solutions


def _entry_map(entries: list[SolutionEntry], n: int) -> list[tuple[SolutionEntry, int]]:
    where: list = [None] * n
    for ent in entries:
        for pos, q in enumerate(ent.qubits):
            if q >= n or where[q] is not None:
                raise ArityMismatch(f"solution assigns qubit {q} badly")
            where[q] = (ent, pos)
    for q, w in enumerate(where):
        if w is None:
            raise ArityMismatch(f"solution misses qubit {q}")
    return where


def product_energy(inst: Instance, entries: list[SolutionEntry]) -> tuple[float, float]:
    """(total energy, max per-term energy) of a product-form assignment.

    Each term is evaluated on the joint state of the solution entries it
    touches (at most 16 amplitudes when pair factors are involved); no
    2^n object is ever built.
    """
    where = _entry_map(entries, inst.n)
    total = 0.0
    worst = 0.0
    for term in inst.terms:
        touched: list[SolutionEntry] = []
        for q in term.qubits:
            ent = where[q][0]
            if ent not in touched:
                touched.append(ent)
        mini_qubits: list[int] = []
        state = np.array([1.0 + 0j])
        for ent in touched:
            mini_qubits.extend(ent.qubits)
            state = np.kron(state, ent.amps)
        sites = tuple(mini_qubits.index(q) for q in term.qubits)
        p = lift_operator(term_projector(term), sites, len(mini_qubits))
        e = float(np.real(np.vdot(state, p @ state)))
        total += e
        worst = max(worst, e)
    return total, worst


def solution_state_vector(entries: list[SolutionEntry], n: int) -> np.ndarray:
    """Assemble the full 2^n state of a product-form solution."""
    if n > 2 * N_MAX:
        raise TooLarge(f"n={n} too large to assemble densely")
    _entry_map(entries, n)
    order: list[int] = []
    state = np.array([1.0 + 0j])
    for ent in entries:
        order.extend(ent.qubits)
        state = np.kron(state, ent.amps)
    t = state.reshape((2,) * n)
    return np.ascontiguousarray(np.transpose(t, np.argsort(order))).reshape(-1)


# ---------------------------------------------------------------------------
# Classical 2-SAT reference (implication graph, strongly connected components)


def classical_2sat_reference(formula, n: int) -> bool:
    """Decide a 2-SAT formula via implication-graph SCCs.

    Literal nodes are 2v (variable true) and 2v + 1 (variable false);
    satisfiable iff no variable shares a component with its negation.
    Iterative Tarjan, so deep implication chains cannot overflow the
    Python stack.
    """

    def node(var: int, positive: bool) -> int:
        return 2 * var + (0 if positive else 1)

    adj: list[list[int]] = [[] for _ in range(2 * n)]

    def implies(a: int, b: int) -> None:
        adj[a].append(b)

    for clause in formula:
        lits = tuple(clause)
        if len(lits) == 1:
            (v, p) = lits[0]
            implies(node(v, not p), node(v, p))
            continue
        (u, pu), (w, pw) = lits
        if u == w:
            if pu == pw:
                implies(node(u, not pu), node(u, pu))
            continue  # tautology imposes nothing
        implies(node(u, not pu), node(w, pw))
        implies(node(w, not pw), node(u, pu))

    size = 2 * n
    index = [-1] * size
    low = [0] * size
    on_stack = bytearray(size)
    stack: list[int] = []
    comp = [-1] * size
    counter = 0
    ncomp = 0

    for root in range(size):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = 1
            advanced = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = 0
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])

    return all(comp[2 * v] != comp[2 * v + 1] for v in range(n))


def brute_force_formula_sat(formula, n: int) -> bool:
    """Exhaustive 2-SAT check over all 2^n assignments (vectorized)."""
    if n > 22:
        raise TooLarge(f"n={n} too large for enumeration")
    count = 2**n
    idx = np.arange(count)
    assign = (idx[:, None] >> np.arange(n)[None, :]) & 1  # column v = value of var v
    ok = np.ones(count, dtype=bool)
    for clause in formula:
        lits = tuple(clause)
        sat = np.zeros(count, dtype=bool)
        for v, p in lits:
            sat |= assign[:, v] == (1 if p else 0)
        ok &= sat
    return bool(np.any(ok))


# ---------------------------------------------------------------------------
# Kernel comparison


def kernel_projector_distance(
    h_a: np.ndarray, h_b: np.ndarray, tol_zero: float = 1e-9
) -> float:
    """Max entrywise modulus between the two null-space projectors.

    Null spaces are the eigenspaces with eigenvalue at most tol_zero.
    """
    h_a = np.asarray(h_a)
    h_b = np.asarray(h_b)
    if h_a.shape != h_b.shape or h_a.ndim != 2 or h_a.shape[0] != h_a.shape[1]:
        raise DimensionMismatch(f"shapes {h_a.shape} vs {h_b.shape}")
    if h_a.shape[0] > 64:
        raise TooLarge("kernel comparison supports dimensions up to 64")

    def kernel_projector(h: np.ndarray) -> np.ndarray:
        w, v = np.linalg.eigh(h)
        cols = v[:, w <= tol_zero]
        return cols @ cols.conj().T

    return float(np.max(np.abs(kernel_projector(h_a) - kernel_projector(h_b))))
