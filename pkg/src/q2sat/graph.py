"""Directed constraint multigraph with journaled removal and exact undo.

Every rank-1 piece contributes a directed edge pair (the reverse edge
carries the tensor-swapped state), rank-2 terms contribute two parallel
pairs, single-qubit terms one self-loop, rank-3 terms one edge pair that
is consumed before any propagation.  Edge ids are stable and shared by
the two synchronized solver copies: the twin shares all immutable
topology (endpoints, constraint data, adjacency) and only duplicates the
mutable alive/assignment state, so a journal recorded on one copy can be
replayed onto the other by id.

Removal journals are flat integer streams (plus one ordered overwrite
list).  Within a single log segment an edge or vertex dies at most once
and a vertex receives at most one fresh value, so the streams commute
under undo; repeated writes to one vertex are the only ordered part.
Dead entries are tombstoned and skipped during iteration rather than
unlinked, which keeps both kill and undo O(1) per action.
"""

from __future__ import annotations

from array import array

import numpy as np

from . import linalg
from .errors import DeadTarget

KIND_RANK1 = 0
KIND_MAXIMAL = 1
KIND_LOOP = 2


class Journal:
    """Reversible log of graph kills and assignment writes."""

    __slots__ = ("kills", "vkills", "writes", "overwrites")

    def __init__(self):
        self.kills = array("q")  # edge ids
        self.vkills = array("q")  # vertex ids
        self.writes = array("q")  # vertices given a fresh value
        self.overwrites: list = []  # (vertex, previous value), ordered

    def __len__(self) -> int:
        return (
            len(self.kills) + len(self.vkills) + len(self.writes) + len(self.overwrites)
        )

    def mark(self) -> tuple[int, int, int, int]:
        return (len(self.kills), len(self.vkills), len(self.writes), len(self.overwrites))

    def clear(self) -> None:
        del self.kills[:]
        del self.vkills[:]
        del self.writes[:]
        del self.overwrites[:]


class ConstraintGraph:
    """Adjacency-list multigraph over stable directed edge ids.

    Immutable topology (shared with twins):
      efrom/eto/erev   endpoints and the reverse-pairing involution
      ekind            rank-1 piece / maximal / self-loop
      eent             1 iff a rank-1 piece state is entangled
      econj            conjugated constraint amplitudes, oriented (from, to)
      efactors         for product rank-1 pieces: (conj x0, conj x1,
                       perp(y)[0], perp(y)[1]) with x the from-side factor
      eterm/etag       originating term id and rank-2 piece tag
      adj_off/adj_flat CSR adjacency: outgoing edge ids per vertex

    Mutable per copy: ealive/valive flags, per-vertex incident counts,
    alive counters, and per-run scratch (BFS parents, epoch marks).
    """

    __slots__ = (
        "n",
        "num_edges",
        "efrom",
        "eto",
        "erev",
        "ekind",
        "eent",
        "econj",
        "efactors",
        "eterm",
        "etag",
        "adj_off",
        "adj_flat",
        "kind_np",
        "ent_np",
        "ealive",
        "valive",
        "inc",
        "alive_edges",
        "alive_vertices",
        "parent",
        "parent_epoch",
        "lmark",
        "enqmark",
        "epoch",
    )

    @classmethod
    def build(cls, pieces, n: int, tol_ent: float = linalg.TOL_ENT) -> "ConstraintGraph":
        g = cls()
        g.n = n
        count = len(pieces)

        # one compact pass extracting per-piece fields, then vectorized layout
        qi = np.empty(count, dtype=np.int32)
        qj = np.empty(count, dtype=np.int32)
        single = np.zeros(count, dtype=bool)
        maximal = np.zeros(count, dtype=bool)
        tids = np.empty(count, dtype=np.int64)
        tags = np.zeros(count, dtype=np.uint8)
        pair_states: list = []
        loop_payload: list = []  # (piece index, conjugated 1-qubit amplitudes)
        for p_ix, p in enumerate(pieces):
            q = p.qubits
            tids[p_ix] = p.term_id
            if len(q) == 1:
                qi[p_ix] = qj[p_ix] = q[0]
                single[p_ix] = True
                s = p.state
                loop_payload.append(
                    (p_ix, (complex(s[0]).conjugate(), complex(s[1]).conjugate()))
                )
            else:
                qi[p_ix], qj[p_ix] = q
                if p.maximal:
                    maximal[p_ix] = True
                    pair_states.append(p.kernel)
                else:
                    pair_states.append(p.state)
                tags[p_ix] = p.tag

        width = np.where(single, 1, 2)
        offs = np.zeros(count + 1, dtype=np.int64)
        np.cumsum(width, out=offs[1:])
        num = int(offs[-1])
        g.num_edges = num
        pair_mask = ~single
        f_ids = offs[:-1][pair_mask]
        r_ids = f_ids + 1
        loop_ids = offs[:-1][single]

        efrom = np.empty(num, dtype=np.int32)
        eto = np.empty(num, dtype=np.int32)
        erev = np.empty(num, dtype=np.int32)
        efrom[f_ids] = qi[pair_mask]
        eto[f_ids] = qj[pair_mask]
        erev[f_ids] = r_ids
        efrom[r_ids] = qj[pair_mask]
        eto[r_ids] = qi[pair_mask]
        erev[r_ids] = f_ids
        efrom[loop_ids] = qi[single]
        eto[loop_ids] = qi[single]
        erev[loop_ids] = loop_ids

        ekind = np.zeros(num, dtype=np.uint8)
        ekind[loop_ids] = KIND_LOOP
        max_pairs = offs[:-1][maximal]
        ekind[max_pairs] = KIND_MAXIMAL
        ekind[max_pairs + 1] = KIND_MAXIMAL

        eterm = np.empty(num, dtype=np.int32)
        eterm[f_ids] = tids[pair_mask]
        eterm[r_ids] = tids[pair_mask]
        eterm[loop_ids] = tids[single]
        etag = np.zeros(num, dtype=np.uint8)
        etag[f_ids] = tags[pair_mask]
        etag[r_ids] = tags[pair_mask]

        # forward rows only; reverse tuples reuse the same boxed amplitudes
        econj: list = [None] * num
        fwd_states = None
        if pair_states:
            fwd_states = np.array(pair_states, dtype=np.complex128)
            fwd_rows = np.conj(fwd_states).tolist()
            f_list = f_ids.tolist()
            for k, e in enumerate(f_list):
                row = fwd_rows[k]
                t = (row[0], row[1], row[2], row[3])
                econj[e] = t
                econj[e + 1] = (t[0], t[2], t[1], t[3])
        for p_ix, payload in loop_payload:
            econj[int(offs[p_ix])] = payload
        g.econj = econj

        ent_edges = np.zeros(num, dtype=bool)
        if fwd_states is not None:
            d = np.abs(
                fwd_states[:, 0] * fwd_states[:, 3]
                - fwd_states[:, 1] * fwd_states[:, 2]
            )
            ent_pairs = (d > tol_ent) & ~maximal[pair_mask]
            ent_edges[f_ids] = ent_pairs
            ent_edges[r_ids] = ent_pairs
        g.eent = bytearray(ent_edges.astype(np.uint8).tobytes())

        # product rank-1 pieces: batched SVD for the factor shortcuts,
        # one per direction (x is always the from-side factor)
        efactors: list = [None] * num
        if fwd_states is not None:
            prod_pairs = np.nonzero(~ent_pairs & ~maximal[pair_mask])[0]
            if prod_pairs.size:
                mats = fwd_states[prod_pairs].reshape(-1, 2, 2)
                u, _, vh = np.linalg.svd(mats)
                x = np.conj(u[:, :, 0])
                y = np.conj(vh[:, 0, :])
                fx = np.stack([x[:, 0], x[:, 1], y[:, 1], -y[:, 0]], axis=1)
                rx = np.stack([y[:, 0], y[:, 1], x[:, 1], -x[:, 0]], axis=1)
                fr = fx.tolist()
                rr = rx.tolist()
                for k, p in enumerate(prod_pairs.tolist()):
                    e = f_list[p]
                    efactors[e] = tuple(fr[k])
                    efactors[e + 1] = tuple(rr[k])
        g.efactors = efactors

        g.efrom = array("i", efrom.tobytes())
        g.eto = array("i", eto.tobytes())
        g.erev = array("i", erev.tobytes())
        g.ekind = bytearray(ekind.tobytes())
        g.eterm = array("i", eterm.astype(np.int32).tobytes())
        g.etag = bytearray(etag.tobytes())
        g.kind_np = ekind  # immutable numpy mirrors for vectorized scans
        g.ent_np = ent_edges

        # CSR adjacency in edge-creation order (stable sort by source)
        order = np.argsort(efrom, kind="stable").astype(np.int32)
        g.adj_flat = array("i", order.tobytes())
        g.adj_off = array(
            "i",
            np.searchsorted(efrom[order], np.arange(n + 1)).astype(np.int32).tobytes(),
        )

        inc = np.zeros(n, dtype=np.int32)
        np.add.at(inc, efrom, 1)
        nonloop = efrom != eto
        np.add.at(inc, eto[nonloop], 1)
        g.inc = array("i", inc.tobytes())
        g.ealive = bytearray(b"\x01") * num
        alive_v = inc > 0
        g.valive = bytearray(alive_v.astype(np.uint8).tobytes())
        g.alive_edges = num
        g.alive_vertices = int(np.sum(alive_v))

        g.parent = array("i", bytes(4 * n))
        g.parent_epoch = array("i", bytes(4 * n))
        g.lmark = array("i", bytes(4 * n))
        g.enqmark = array("i", bytes(4 * n))
        g.epoch = 0
        return g

    def twin(self) -> "ConstraintGraph":
        """Fresh copy sharing all immutable topology and constraint data."""
        t = ConstraintGraph()
        for name in (
            "n",
            "num_edges",
            "efrom",
            "eto",
            "erev",
            "ekind",
            "eent",
            "econj",
            "efactors",
            "eterm",
            "etag",
            "adj_off",
            "adj_flat",
            "kind_np",
            "ent_np",
        ):
            setattr(t, name, getattr(self, name))
        t.ealive = bytearray(self.ealive)
        t.valive = bytearray(self.valive)
        t.inc = array("i", self.inc)
        t.alive_edges = self.alive_edges
        t.alive_vertices = self.alive_vertices
        n = self.n
        t.parent = array("i", bytes(4 * n))
        t.parent_epoch = array("i", bytes(4 * n))
        t.lmark = array("i", bytes(4 * n))
        t.enqmark = array("i", bytes(4 * n))
        t.epoch = 0
        return t

    def new_epoch(self) -> int:
        self.epoch += 1
        return self.epoch

    # -- queries ----------------------------------------------------------

    def out_edges(self, v: int):
        """Alive outgoing edge ids of v, in adjacency order."""
        flat, off, alive = self.adj_flat, self.adj_off, self.ealive
        for idx in range(off[v], off[v + 1]):
            e = flat[idx]
            if alive[e]:
                yield e

    def alive_edge_ids(self):
        alive = self.ealive
        for e in range(self.num_edges):
            if alive[e]:
                yield e

    def edge_state(self, eid: int) -> np.ndarray:
        """Constraint amplitudes of an edge, oriented (from, to)."""
        return np.conj(np.array(self.econj[eid], dtype=np.complex128))

    def out_degree(self, v: int) -> int:
        return sum(1 for _ in self.out_edges(v))

    # -- journaled mutation ------------------------------------------------

    def kill_edge(self, eid: int, journal: Journal) -> None:
        """Tombstone an edge; endpoints left isolated leave the vertex set."""
        if not self.ealive[eid]:
            raise DeadTarget(f"edge {eid} is already dead")
        self.ealive[eid] = 0
        journal.kills.append(eid)
        self.alive_edges -= 1
        f, t = self.efrom[eid], self.eto[eid]
        inc = self.inc
        inc[f] -= 1
        if f != t:
            inc[t] -= 1
        if inc[f] == 0 and self.valive[f]:
            self.kill_vertex(f, journal)
        if f != t and inc[t] == 0 and self.valive[t]:
            self.kill_vertex(t, journal)

    def kill_vertex(self, v: int, journal: Journal) -> None:
        if not self.valive[v]:
            raise DeadTarget(f"vertex {v} is already dead")
        self.valive[v] = 0
        journal.vkills.append(v)
        self.alive_vertices -= 1

    def snapshot(self) -> tuple:
        """Structural state for equality checks (scratch fields excluded)."""
        return (
            bytes(self.ealive),
            bytes(self.valive),
            self.inc.tobytes(),
            self.alive_edges,
            self.alive_vertices,
        )


def undo(graph: ConstraintGraph, assignment, journal: Journal, mark=None) -> int:
    """Roll the graph and assignment back to `mark`, truncating the journal.

    Restores a byte-identical structure: alive flags, incident counts,
    counters, and assignment values.  BFS scratch (parents, epoch marks)
    is per-run and not part of the structural state.
    """
    k0, v0, w0, o0 = mark if mark is not None else (0, 0, 0, 0)
    kills, vkills = journal.kills, journal.vkills
    writes, overwrites = journal.writes, journal.overwrites
    entries = (len(kills) - k0) + (len(vkills) - v0) + (len(writes) - w0) + (
        len(overwrites) - o0
    )

    ealive, valive, inc = graph.ealive, graph.valive, graph.inc
    efrom, eto = graph.efrom, graph.eto
    for idx in range(len(kills) - 1, k0 - 1, -1):
        e = kills[idx]
        ealive[e] = 1
        f, t = efrom[e], eto[e]
        inc[f] += 1
        if f != t:
            inc[t] += 1
    graph.alive_edges += len(kills) - k0
    for idx in range(len(vkills) - 1, v0 - 1, -1):
        valive[vkills[idx]] = 1
    graph.alive_vertices += len(vkills) - v0

    values = assignment.values
    support = assignment.support
    # overwrites always postdate any fresh write of the same vertex within
    # one log segment, so they unwind first
    for idx in range(len(overwrites) - 1, o0 - 1, -1):
        v, prev = overwrites[idx]
        if values[v] is assignment.CONFLICT:
            assignment.conflicts -= 1
        values[v] = prev
    for idx in range(len(writes) - 1, w0 - 1, -1):
        v = writes[idx]
        values[v] = None
        support.discard(v)

    del kills[k0:]
    del vkills[v0:]
    del writes[w0:]
    del overwrites[o0:]
    return entries


def replay(journal: Journal, src_assign, dst_graph: ConstraintGraph, dst_assign) -> int:
    """Apply a journal recorded on one copy to its structurally-equal twin.

    Values are copied from the source assignment's current state, so the
    twin lands on the final state regardless of intra-log write order.
    The journal itself is left untouched; callers clear it afterwards.
    """
    ealive, valive, inc = dst_graph.ealive, dst_graph.valive, dst_graph.inc
    efrom, eto = dst_graph.efrom, dst_graph.eto
    for e in journal.kills:
        ealive[e] = 0
        f, t = efrom[e], eto[e]
        inc[f] -= 1
        if f != t:
            inc[t] -= 1
    dst_graph.alive_edges -= len(journal.kills)
    for v in journal.vkills:
        valive[v] = 0
    dst_graph.alive_vertices -= len(journal.vkills)

    src_values = src_assign.values
    dst_values = dst_assign.values
    dst_support = dst_assign.support
    for v in journal.writes:
        dst_values[v] = src_values[v]
        dst_support.add(v)
    for v, _prev in journal.overwrites:
        if src_values[v] is dst_assign.CONFLICT and dst_values[v] is not dst_assign.CONFLICT:
            dst_assign.conflicts += 1
        dst_values[v] = src_values[v]
    return len(journal)
