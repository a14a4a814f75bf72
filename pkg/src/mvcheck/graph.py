"""The multi-version conflict graph over transactions.

Edges are deduplicated: one edge per ordered vertex pair, carrying the set of
reasons that justify it and the pairs that contributed. Cycle checks are a
plain DFS per query, which is enough at the sizes the checkers work with.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from .conflicts import ConflictKind, ConflictPair, mvc_order
from .history import INIT_TXN, History, completion, real_time_pairs, require_valid


class EdgeReason(enum.Enum):
    REAL_TIME = "RT"
    CC = "CC"
    CR = "CR"
    RC = "RC"


_REASON_ORDER = list(EdgeReason)

# A real-time provenance entry is the (k, m) transaction pair itself.
Provenance = Union[ConflictPair, tuple[int, int]]


@dataclass
class Edge:
    reasons: set[EdgeReason] = field(default_factory=set)
    provenance: list[Provenance] = field(default_factory=list)

    def label(self) -> str:
        return ",".join(r.value for r in _REASON_ORDER if r in self.reasons)


@dataclass(frozen=True)
class BatchEdge:
    source: int
    target: int
    reason: EdgeReason
    provenance: Optional[Provenance] = None


class MVCG:
    def __init__(self, vertices: Iterable[int] = ()):
        self._succ: dict[int, dict[int, Edge]] = {}
        for v in vertices:
            self.add_vertex(v)

    @property
    def vertices(self) -> list[int]:
        return sorted(self._succ)

    def __contains__(self, v: int) -> bool:
        return v in self._succ

    def edges(self) -> Iterator[tuple[int, int, Edge]]:
        for u in sorted(self._succ):
            for v in sorted(self._succ[u]):
                yield u, v, self._succ[u][v]

    def edge(self, u: int, v: int) -> Optional[Edge]:
        return self._succ.get(u, {}).get(v)

    def has_edge(self, u: int, v: int) -> bool:
        return self.edge(u, v) is not None

    def successors(self, u: int) -> list[int]:
        return sorted(self._succ[u])

    def edge_count(self) -> int:
        return sum(len(s) for s in self._succ.values())

    def add_vertex(self, v: int) -> None:
        self._succ.setdefault(v, {})

    def add_edge(self, u: int, v: int, reason: EdgeReason, provenance: Optional[Provenance] = None) -> None:
        if u == v:
            raise ValueError(f"self-edge on T{u}")
        self.add_vertex(u)
        self.add_vertex(v)
        e = self._succ[u].setdefault(v, Edge())
        e.reasons.add(reason)
        if provenance is not None:
            e.provenance.append(provenance)

    def copy(self) -> "MVCG":
        g = MVCG()
        for u, targets in self._succ.items():
            g._succ[u] = {v: Edge(set(e.reasons), list(e.provenance)) for v, e in targets.items()}
        return g

    def signature(self) -> tuple[tuple[int, ...], frozenset]:
        """Vertices plus edges with their reason sets; provenance is ignored."""
        edges = frozenset((u, v, frozenset(e.reasons)) for u, v, e in self.edges())
        return tuple(self.vertices), edges

    def __eq__(self, other) -> bool:
        if not isinstance(other, MVCG):
            return NotImplemented
        return self.signature() == other.signature()

    def subgraph(self, vertices: Iterable[int]) -> "MVCG":
        keep = set(vertices)
        g = MVCG(v for v in self._succ if v in keep)
        for u, v, e in self.edges():
            if u in keep and v in keep:
                g._succ[u][v] = Edge(set(e.reasons), list(e.provenance))
        return g

    def find_cycle(self) -> Optional[list[int]]:
        """One directed cycle as an open vertex list starting at its smallest vertex, or None."""
        white, grey, black = 0, 1, 2
        color = dict.fromkeys(self._succ, white)
        for root in sorted(self._succ):
            if color[root] != white:
                continue
            path = [root]
            stack = [iter(sorted(self._succ[root]))]
            color[root] = grey
            while stack:
                nxt = next(stack[-1], None)
                if nxt is None:
                    color[path.pop()] = black
                    stack.pop()
                elif color[nxt] == grey:
                    cycle = path[path.index(nxt):]
                    return _rotate(cycle)
                elif color[nxt] == white:
                    color[nxt] = grey
                    path.append(nxt)
                    stack.append(iter(sorted(self._succ[nxt])))
        return None

    def is_acyclic(self) -> bool:
        return self.find_cycle() is None

    def path(self, source: int, target: int) -> Optional[list[int]]:
        """Some directed path from ``source`` to ``target`` (inclusive), or None."""
        if source not in self._succ or target not in self._succ:
            return None
        parent = {source: None}
        todo = [source]
        while todo:
            u = todo.pop()
            if u == target:
                out = []
                while u is not None:
                    out.append(u)
                    u = parent[u]
                return out[::-1]
            for v in self._succ[u]:
                if v not in parent:
                    parent[v] = u
                    todo.append(v)
        return None

    def reaches(self, source: int, target: int) -> bool:
        return self.path(source, target) is not None

    def topological_order(self) -> Optional[list[int]]:
        """Kahn's algorithm with smallest-id-first tie-break; None if cyclic."""
        indegree = dict.fromkeys(self._succ, 0)
        for _, v, _ in self.edges():
            indegree[v] += 1
        ready = [v for v, d in indegree.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            u = heapq.heappop(ready)
            order.append(u)
            for v in self._succ[u]:
                indegree[v] -= 1
                if indegree[v] == 0:
                    heapq.heappush(ready, v)
        return order if len(order) == len(self._succ) else None

    def try_add_edges(self, batch: Iterable[BatchEdge]) -> tuple[bool, Optional[list[int]]]:
        """Add the whole batch iff the graph stays acyclic.

        Returns ``(True, None)`` on acceptance and ``(False, cycle)`` on
        rejection, in which case the graph is left exactly as it was.
        """
        batch = list(batch)
        new_vertices = [v for v in {b.source for b in batch} | {b.target for b in batch} if v not in self._succ]
        new_edges: list[tuple[int, int]] = []
        added_reasons: list[tuple[int, int, EdgeReason]] = []
        provenance_marks: dict[tuple[int, int], int] = {}
        for b in batch:
            existing = self.edge(b.source, b.target)
            key = (b.source, b.target)
            if existing is None:
                new_edges.append(key)
            elif key not in new_edges:
                provenance_marks.setdefault(key, len(existing.provenance))
                if b.reason not in existing.reasons:
                    added_reasons.append((b.source, b.target, b.reason))
            self.add_edge(b.source, b.target, b.reason, b.provenance)

        cycle = None
        for u, v in new_edges:
            back = self.path(v, u)
            if back is not None:
                cycle = _rotate([u] + back[:-1])
                break
        if cycle is None:
            cycle = self.find_cycle()
        if cycle is None:
            return True, None

        for u, v in new_edges:
            del self._succ[u][v]
        for u, v, reason in added_reasons:  # only edges that pre-existed the batch
            self._succ[u][v].reasons.discard(reason)
        for (u, v), mark in provenance_marks.items():
            del self._succ[u][v].provenance[mark:]
        for v in new_vertices:
            del self._succ[v]
        return False, cycle + [cycle[0]]

    def remove_vertex(self, t: int) -> None:
        if t not in self._succ:
            raise KeyError(f"unknown vertex T{t}")
        del self._succ[t]
        for targets in self._succ.values():
            targets.pop(t, None)

    def cycle_edges(self, cycle: list[int]) -> list[tuple[int, int, Edge]]:
        return [(u, v, self._succ[u][v]) for u, v in zip(cycle, cycle[1:])]

    def to_json(self) -> dict:
        def prov(p: Provenance):
            return p.to_json() if isinstance(p, ConflictPair) else {"kind": "RT", "from_txn": p[0], "to_txn": p[1]}

        return {
            "vertices": self.vertices,
            "edges": [
                {"from": u, "to": v, "reasons": e.label().split(","), "provenance": [prov(p) for p in e.provenance]}
                for u, v, e in self.edges()
            ],
        }


def _rotate(cycle: list[int]) -> list[int]:
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


def find_cycle(g: MVCG) -> Optional[list[int]]:
    """Closed cycle ``[v0, ..., v0]`` or None."""
    cycle = g.find_cycle()
    return None if cycle is None else cycle + [cycle[0]]


def is_acyclic(g: MVCG) -> tuple[bool, Optional[list[int]]]:
    cycle = find_cycle(g)
    return cycle is None, cycle


_PAIR_REASON = {ConflictKind.CC: EdgeReason.CC, ConflictKind.CR: EdgeReason.CR, ConflictKind.RC: EdgeReason.RC}


def build_mvcg(h: History) -> MVCG:
    """Real-time edges plus one edge per multi-version conflict across transactions."""
    require_valid(completion(h))
    g = MVCG([INIT_TXN, *completion(h).txns])
    for k, m in sorted(real_time_pairs(h)):
        g.add_edge(k, m, EdgeReason.REAL_TIME, (k, m))
    for p in mvc_order(h):
        g.add_edge(p.source.txn, p.target.txn, _PAIR_REASON[p.kind], p)
    return g


def serialization_witness(h: History, g: Optional[MVCG] = None) -> Optional[History]:
    """Topological order of the graph expanded into a t-sequential history, or None if cyclic."""
    if g is None:
        g = build_mvcg(h)
    order = g.topological_order()
    if order is None:
        return None
    hbar = completion(h)
    events = []
    for t in order:
        events.extend(hbar.projection(t))
    return History(events)


def to_dot(g: MVCG) -> str:
    lines = ["digraph mvcg {"]
    for v in g.vertices:
        lines.append(f'  T{v} [label="T{v}"];')
    for u, v, e in g.edges():
        lines.append(f'  T{u} -> T{v} [label="{e.label()}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
