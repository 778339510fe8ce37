"""Hamiltonian instances: projector terms, the JSON file format, and generators.

An instance is a sum of projector terms over n qubits.  A term sits on a
single qubit (rank 1) or on an ordered pair i < j (rank 1 to 3) and lists
an orthonormal basis of its forbidden subspace.  Qubit indices are
0-based everywhere, including files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InvalidClause, InvalidTerm, MalformedInput, ZeroState

KET0 = np.array([1.0, 0.0], dtype=np.complex128)
KET1 = np.array([0.0, 1.0], dtype=np.complex128)
SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / np.sqrt(2.0)
PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=np.complex128) / np.sqrt(2.0)
TRIPLET = np.array([0.0, 1.0, 1.0, 0.0], dtype=np.complex128) / np.sqrt(2.0)


def basis_state_1q(bit: int) -> np.ndarray:
    return KET1.copy() if bit else KET0.copy()


def basis_state_2q(index: int) -> np.ndarray:
    v = np.zeros(4, dtype=np.complex128)
    v[index] = 1.0
    return v


@dataclass(slots=True)
class Term:
    """One projector term: forbidden-subspace basis on a site.

    qubits is (i,) for a single-qubit term or (i, j) with i < j; states
    holds `rank` orthonormal amplitude vectors (length 2 or 4).
    """

    qubits: tuple[int, ...]
    states: tuple[np.ndarray, ...]

    @property
    def rank(self) -> int:
        return len(self.states)

    @property
    def is_single(self) -> bool:
        return len(self.qubits) == 1


class Instance:
    """A validated list of terms over n qubits.

    Validation batches the per-state numeric checks (norms, finiteness)
    into stacked numpy arrays so million-term instances stay cheap.
    """

    def __init__(self, n: int, terms, tol_orth: float = linalg.TOL_ORTH):
        if n < 1:
            raise InvalidTerm(f"need n >= 1, got {n}")
        self.n = int(n)
        self.terms = []
        n_ = self.n
        seen: set[int] = set()  # site key: -(i+1) single, i*n+j pair
        flat_states: list[np.ndarray] = []
        owners: list[int] = []  # term id per flat state, for error messages
        append_term = self.terms.append
        for tid, term in enumerate(terms):
            q = term.qubits
            if type(q) is not tuple:
                q = tuple(int(x) for x in q)
            states = term.states
            if len(q) == 1:
                i = q[0]
                if not 0 <= i < n_:
                    raise InvalidTerm(f"term {tid}: qubit {i} out of range")
                key = -(i + 1)
                want_len, max_rank = 2, 1
            elif len(q) == 2:
                i, jq = q
                if not 0 <= i < jq < n_:
                    raise InvalidTerm(f"term {tid}: bad qubit pair {q}")
                key = i * n_ + jq
                want_len, max_rank = 4, 3
            else:
                raise InvalidTerm(f"term {tid}: {len(q)} qubits")
            if key in seen:
                raise InvalidTerm(f"term {tid}: duplicate site {q}")
            seen.add(key)
            if not 1 <= len(states) <= max_rank:
                raise InvalidTerm(f"term {tid}: rank {len(states)} not allowed on {q}")
            for s in states:
                if type(s) is not np.ndarray or s.dtype != np.complex128:
                    s = linalg.as_state(s)
                if s.shape != (want_len,):
                    raise InvalidTerm(f"term {tid}: state has shape {s.shape}")
                flat_states.append(s)
                owners.append(tid)
            append_term((q, len(states)))

        normed = self._batch_normalize(flat_states, owners)
        cursor = 0
        built = []
        for q, k in self.terms:
            states = tuple(normed[cursor : cursor + k])
            cursor += k
            for a in range(k - 1):
                for b in range(a + 1, k):
                    ov = abs(linalg.braket(states[a], states[b]))
                    if ov > tol_orth:
                        raise InvalidTerm(
                            f"term on {q}: basis overlap {ov:.3e} > {tol_orth:.0e}"
                        )
            built.append(Term(qubits=q, states=states))
        self.terms = built

    @staticmethod
    def _batch_normalize(flat_states, owners) -> list[np.ndarray]:
        out: list[np.ndarray] = [None] * len(flat_states)
        for length in (2, 4):
            idx = [k for k, s in enumerate(flat_states) if s.shape[0] == length]
            if not idx:
                continue
            whole = len(idx) == len(flat_states)
            block = np.array(
                flat_states if whole else [flat_states[k] for k in idx],
                dtype=np.complex128,
            )
            if not np.all(np.isfinite(block.view(np.float64))):
                bad = np.where(
                    ~np.all(np.isfinite(block.view(np.float64)), axis=1)
                )[0][0]
                raise InvalidTerm(f"term {owners[idx[bad]]}: non-finite amplitude")
            norms = np.linalg.norm(block, axis=1)
            small = norms < linalg.NORM_FLOOR
            if np.any(small):
                bad = int(np.argmax(small))
                raise ZeroState(
                    f"term {owners[idx[bad]]}: norm {norms[bad]:.3e} below "
                    f"floor {linalg.NORM_FLOOR:.0e}"
                )
            off = np.abs(norms - 1.0) > 1e-12
            block[off] /= norms[off, None]
            rows = list(block)
            if whole:
                return rows
            for row, k in enumerate(idx):
                out[k] = rows[row]
        return out

    @property
    def m(self) -> int:
        return len(self.terms)

    def structural_equal(self, other: "Instance") -> bool:
        if self.n != other.n or self.m != other.m:
            return False
        for a, b in zip(self.terms, other.terms):
            if a.qubits != b.qubits or len(a.states) != len(b.states):
                return False
            for sa, sb in zip(a.states, b.states):
                if not np.array_equal(sa, sb):
                    return False
        return True


# ---------------------------------------------------------------------------
# File format


def _state_to_json(s: np.ndarray) -> list:
    return [[float(a.real), float(a.imag)] for a in s]


def serialize(inst: Instance) -> str:
    doc = {
        "n": inst.n,
        "terms": [
            {
                "qubits": list(t.qubits),
                "rank": t.rank,
                "states": [_state_to_json(s) for s in t.states],
            }
            for t in inst.terms
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def _json_to_state(obj, tid: int) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) not in (2, 4):
        raise MalformedInput(f"term {tid}: state must be a list of 2 or 4 amplitudes")
    amps = []
    for pair in obj:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)
        ):
            raise MalformedInput(f"term {tid}: amplitude must be [re, im]")
        amps.append(complex(pair[0], pair[1]))
    return np.array(amps, dtype=np.complex128)


def parse(text: str, tol_orth: float = linalg.TOL_ORTH) -> Instance:
    """Parse an instance document.  Amplitudes are renormalized on ingest."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("n"), int):
        raise MalformedInput("document must be an object with integer 'n'")
    raw_terms = doc.get("terms")
    if not isinstance(raw_terms, list):
        raise MalformedInput("'terms' must be a list")
    terms = []
    for tid, rt in enumerate(raw_terms):
        if not isinstance(rt, dict):
            raise MalformedInput(f"term {tid}: must be an object")
        qubits = rt.get("qubits")
        if (
            not isinstance(qubits, list)
            or len(qubits) not in (1, 2)
            or not all(isinstance(q, int) for q in qubits)
        ):
            raise MalformedInput(f"term {tid}: 'qubits' must be [i] or [i, j]")
        states = rt.get("states")
        if not isinstance(states, list) or not states:
            raise MalformedInput(f"term {tid}: 'states' must be a non-empty list")
        rank = rt.get("rank")
        if rank != len(states):
            raise MalformedInput(f"term {tid}: rank {rank} != {len(states)} states")
        terms.append(
            Term(qubits=tuple(qubits), states=tuple(_json_to_state(s, tid) for s in states))
        )
    return Instance(doc["n"], terms, tol_orth=tol_orth)


# ---------------------------------------------------------------------------
# Rank-1 decomposition


class Rank1Piece:
    """One graph-edge-worth of constraint extracted from a term.

    Rank-2 terms contribute two pieces (tag 1 and 2), each carrying one
    basis state verbatim.  Rank-3 and single-qubit terms contribute one
    maximal piece; rank-3 pieces also carry the 1-dimensional kernel of
    the projector, precomputed here.
    """

    __slots__ = ("qubits", "term_id", "tag", "maximal", "state", "range_states", "kernel")

    def __init__(self, qubits, term_id, tag, maximal, state=None, range_states=(), kernel=None):
        self.qubits = qubits
        self.term_id = term_id
        self.tag = tag  # 0 for non-parallel pieces, 1 or 2 for rank-2 halves
        self.maximal = maximal
        self.state = state  # forbidden state (rank-1 pieces, singles)
        self.range_states = range_states
        self.kernel = kernel  # rank-3 only

    def __repr__(self):
        kind = "max" if self.maximal else f"tag{self.tag}"
        return f"Rank1Piece({self.qubits}, term {self.term_id}, {kind})"


def rank1_decompose(inst: Instance) -> list[Rank1Piece]:
    """Split every term into rank-1 pieces; rank-3 terms stay whole (maximal).

    The input basis of a rank-2 term is used verbatim: any orthonormal
    basis of the range yields the same projector.
    """
    pieces: list[Rank1Piece] = []
    append = pieces.append
    for tid, term in enumerate(inst.terms):
        states = term.states
        rank = len(states)
        if len(term.qubits) == 1:
            append(Rank1Piece(term.qubits, tid, 0, True, state=states[0]))
        elif rank == 1:
            append(Rank1Piece(term.qubits, tid, 0, False, state=states[0]))
        elif rank == 2:
            append(Rank1Piece(term.qubits, tid, 1, False, state=states[0]))
            append(Rank1Piece(term.qubits, tid, 2, False, state=states[1]))
        else:
            kernel = linalg.orthonormal_complement(states, 4)[0]
            append(
                Rank1Piece(
                    term.qubits, tid, 0, True, range_states=states, kernel=kernel
                )
            )
    return pieces


# ---------------------------------------------------------------------------
# Generators

Literal = tuple[int, bool]  # (variable, positive?)
Clause = tuple[Literal, ...]  # one or two literals


def gen_classical_2sat(formula, n: int) -> Instance:
    """Embed a 2-SAT formula as projectors onto falsifying basis states.

    Each clause forbids its unique falsifying assignment on its pair;
    distinct clauses on one pair merge into a rank-2 or rank-3 term.
    Tautological clauses (x or not-x) impose nothing and are dropped.

    Raises InvalidClause when the clause set needs a forbidden subspace
    the model cannot hold: contradictory unit clauses on one variable, or
    four distinct falsifying states on one pair.  Both situations imply
    the formula is trivially unsatisfiable; callers handle that directly.
    """
    unit_forbid: dict[int, set[int]] = {}
    pair_forbid: dict[tuple[int, int], set[int]] = {}

    def add_unit(var: int, positive: bool) -> None:
        bits = unit_forbid.setdefault(var, set())
        bits.add(0 if positive else 1)
        if len(bits) > 1:
            raise InvalidClause(
                f"variable {var}: contradictory unit clauses need a rank-2 "
                "single-qubit projector"
            )

    for clause in formula:
        lits = tuple(clause)
        if len(lits) == 1:
            (var, pos) = lits[0]
            _check_var(var, n)
            add_unit(var, pos)
            continue
        if len(lits) != 2:
            raise InvalidClause(f"clause {lits!r} is not 1- or 2-literal")
        (u, pu), (w, pw) = lits
        _check_var(u, n)
        _check_var(w, n)
        if u == w:
            if pu == pw:
                add_unit(u, pu)
            # (x or not-x) is a tautology: no constraint
            continue
        if u > w:
            (u, pu), (w, pw) = (w, pw), (u, pu)
        bu = 0 if pu else 1
        bw = 0 if pw else 1
        forbidden = pair_forbid.setdefault((u, w), set())
        forbidden.add(2 * bu + bw)
        if len(forbidden) > 3:
            raise InvalidClause(
                f"pair ({u}, {w}): four distinct falsifying states exceed rank 3"
            )

    terms = [
        Term((v,), (basis_state_1q(next(iter(bits))),))
        for v, bits in sorted(unit_forbid.items())
    ]
    terms.extend(
        Term(pair, tuple(basis_state_2q(ix) for ix in sorted(idxs)))
        for pair, idxs in sorted(pair_forbid.items())
    )
    return Instance(n, terms)


def _check_var(var: int, n: int) -> None:
    if not 0 <= var < n:
        raise InvalidClause(f"variable {var} outside 0..{n - 1}")


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sample_pairs(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """m distinct unordered pairs over n vertices, as an (m, 2) array i < j."""
    total = n * (n - 1) // 2
    if m > total:
        raise ValueError(f"m={m} exceeds the {total} available pairs")
    if total <= 4_000_000:
        codes = rng.choice(total, size=m, replace=False).astype(np.int64)
        # decode triangular index to (i, j) with i < j; correct for float
        # rounding in the sqrt by nudging i until base(i) <= code < base(i+1)
        i = (np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * codes)) / 2)).astype(
            np.int64
        )
        i = np.clip(i, 0, n - 2)
        for _ in range(2):
            base = i * (2 * n - i - 1) // 2
            i = np.where((codes < base) & (i > 0), i - 1, i)
            nxt = (i + 1) * (2 * n - i - 2) // 2
            i = np.where((codes >= nxt) & (i < n - 2), i + 1, i)
        base = i * (2 * n - i - 1) // 2
        j = codes - base + i + 1
        return np.stack([i, j], axis=1)
    seen: set[int] = set()
    out = np.empty((m, 2), dtype=np.int64)
    k = 0
    while k < m:
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if i == j:
            continue
        if i > j:
            i, j = j, i
        code = i * n + j
        if code in seen:
            continue
        seen.add(code)
        out[k, 0] = i
        out[k, 1] = j
        k += 1
    return out


def gen_planted(n: int, m: int, seed: int = 0, entangled_only: bool = False) -> Instance:
    """Satisfiable instance planted around a hidden product state.

    Samples one random 1-qubit state per qubit, then m rank-1 terms, each
    drawn from the 3-dimensional orthocomplement of the hidden product on
    its pair.  With entangled_only, terms are rejection-sampled until the
    coefficient matrix has |det| > 0.1.
    """
    rng = np.random.default_rng(seed)
    alphas = _normalize_rows(
        rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    )
    pairs = _sample_pairs(rng, n, m)
    ai = alphas[pairs[:, 0]]
    aj = alphas[pairs[:, 1]]
    target = np.einsum("ma,mb->mab", ai, aj).reshape(m, 4)

    states = np.empty((m, 4), dtype=np.complex128)
    todo = np.arange(m)
    while todo.size:
        v = rng.standard_normal((todo.size, 4)) + 1j * rng.standard_normal(
            (todo.size, 4)
        )
        t = target[todo]
        v -= np.sum(np.conj(t) * v, axis=1, keepdims=True) * t
        norms = np.linalg.norm(v, axis=1)
        ok = norms > 1e-3
        if entangled_only:
            with np.errstate(invalid="ignore", divide="ignore"):
                w = v / norms[:, None]
            dets = np.abs(w[:, 0] * w[:, 3] - w[:, 1] * w[:, 2])
            ok &= dets > 0.1
        states[todo[ok]] = v[ok] / norms[ok, None]
        todo = todo[~ok]

    terms = [
        Term((int(pairs[t, 0]), int(pairs[t, 1])), (states[t],)) for t in range(m)
    ]
    return Instance(n, terms)


def gen_ring(n: int, kind: str = "singlet", seed: int = 0) -> Instance:
    """Rank-1 terms on the cycle (i, i+1 mod n).

    The singlet kind puts the antisymmetric state on every edge, which is
    satisfiable by any uniform product state.  The mixed kind draws a
    random state per edge.
    """
    if n < 3:
        raise ValueError("rings need n >= 3")
    if kind not in ("singlet", "mixed"):
        raise ValueError(f"unknown ring kind {kind!r}")
    rng = np.random.default_rng(seed)
    if kind == "mixed":
        raw = _normalize_rows(
            rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
        )
    terms = []
    for t in range(n):
        i, j = t, (t + 1) % n
        state = SINGLET if kind == "singlet" else raw[t]
        if i > j:  # closing edge (n-1, 0): reorder the pair
            i, j = j, i
            state = linalg.swap_qubits(state)
        terms.append(Term((i, j), (state,)))
    return Instance(n, terms)


DEFAULT_RANK_MIX = {1: 0.5, 2: 0.3, 3: 0.2}


def gen_random(n: int, m: int, rank_mix=None, seed: int = 0) -> Instance:
    """Random instance with the given rank histogram.

    rank_mix maps rank to probability over {1, 2, 3}; the optional key 0
    adds single-qubit terms to the mix.  Sites are sampled without
    replacement, states are Haar-like random orthonormal sets.
    """
    mix = dict(DEFAULT_RANK_MIX if rank_mix is None else rank_mix)
    rng = np.random.default_rng(seed)
    ranks = list(mix.keys())
    probs = np.array([mix[r] for r in ranks], dtype=float)
    probs /= probs.sum()
    choice = rng.choice(len(ranks), size=m, p=probs)
    n_single = int(np.sum(np.array(ranks)[choice] == 0))
    if n_single > n:
        raise ValueError(f"{n_single} single-qubit terms exceed {n} qubits")
    singles = rng.choice(n, size=n_single, replace=False)
    pairs = _sample_pairs(rng, n, m - n_single)

    terms = []
    si = pi = 0
    for c in choice:
        rank = ranks[c]
        if rank == 0:
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            terms.append(Term((int(singles[si]),), (linalg.normalize(v),)))
            si += 1
        else:
            a = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
            q, _ = np.linalg.qr(a)
            terms.append(
                Term(
                    (int(pairs[pi, 0]), int(pairs[pi, 1])),
                    tuple(q[:, k].copy() for k in range(rank)),
                )
            )
            pi += 1
    return Instance(n, terms)
