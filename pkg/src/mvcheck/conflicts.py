"""Single-version conflict order and the multi-version conflict order.

Operations are referenced by :class:`OpRef` (transaction id plus the index of
the event inside that transaction), which is stable across equivalent
histories. Event positions are carried alongside for reporting; they index the
completion of the source history, with T0's commit at ``-1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

from .history import (
    INIT_POSITION,
    INIT_TXN,
    History,
    completion,
    require_valid,
    valid_write,
)


class ConflictKind(enum.Enum):
    WW = "w-w"
    WR = "w-r"
    RW = "r-w"
    CC = "c-c"
    CR = "c-r"
    RC = "r-c"


CO_KINDS = frozenset({ConflictKind.WW, ConflictKind.WR, ConflictKind.RW})
MVCO_KINDS = frozenset({ConflictKind.CC, ConflictKind.CR, ConflictKind.RC})
_KIND_RANK = {k: i for i, k in enumerate(ConflictKind)}


class OpRef(NamedTuple):
    txn: int
    seq: int  # index within the transaction's own events


INIT_COMMIT = OpRef(INIT_TXN, 0)


@dataclass(frozen=True)
class ConflictPair:
    kind: ConflictKind
    source: OpRef
    target: OpRef
    obj: str
    source_pos: int = field(default=0, compare=False)
    target_pos: int = field(default=0, compare=False)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "from_txn": self.source.txn,
            "from_pos": self.source_pos,
            "to_txn": self.target.txn,
            "to_pos": self.target_pos,
            "object": self.obj,
        }

    def describe(self, hbar: Optional[History] = None) -> str:
        def label(ref: OpRef, pos: int) -> str:
            if ref == INIT_COMMIT:
                return "c0"
            return str(hbar.events[pos]) if hbar is not None else f"T{ref.txn}#{ref.seq}"

        return f"{self.kind.value} ({label(self.source, self.source_pos)}, {label(self.target, self.target_pos)})"


@dataclass(frozen=True)
class ConflictSet:
    pairs: tuple[ConflictPair, ...]
    source: History

    def __iter__(self) -> Iterator[ConflictPair]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, item) -> bool:
        return item in self.pairs

    def relation(self) -> frozenset[tuple[OpRef, OpRef]]:
        """The order as a bare relation on operations (kinds and objects dropped)."""
        return frozenset((p.source, p.target) for p in self.pairs)

    def of_kind(self, kind: ConflictKind) -> list[ConflictPair]:
        return [p for p in self.pairs if p.kind is kind]

    def to_json(self) -> list[dict]:
        return [p.to_json() for p in self.pairs]


class _OpIndex:
    """Maps event positions of a history to operation references."""

    def __init__(self, h: History):
        self.refs: dict[int, OpRef] = {}
        for t in h.txns:
            for seq, pos in enumerate(h.positions(t)):
                self.refs[pos] = OpRef(t, seq)

    def __getitem__(self, pos: int) -> OpRef:
        return INIT_COMMIT if pos == INIT_POSITION else self.refs[pos]


def _make_set(raw: set[tuple[ConflictKind, int, int, str]], h: History, index: _OpIndex) -> ConflictSet:
    ordered = sorted(raw, key=lambda r: (r[1], r[2], _KIND_RANK[r[0]], r[3]))
    pairs = tuple(ConflictPair(k, index[a], index[b], x, a, b) for k, a, b, x in ordered)
    return ConflictSet(pairs, h)


def conflict_order(h: History) -> ConflictSet:
    """w-w, w-r and r-w pairs over successfully executed operations."""
    hbar = completion(h)
    index = _OpIndex(hbar)
    commits = hbar.commit_positions
    raw: set[tuple[ConflictKind, int, int, str]] = set()
    for x in hbar.objects:
        writers = hbar.writers(x)
        for a, ti in enumerate(writers):
            for tj in writers[a + 1:]:
                raw.add((ConflictKind.WW, commits[ti], commits[tj], x))
    for r, e in hbar.reads():
        for t in hbar.writers(e.obj):
            if t == e.txn:
                continue
            c = commits[t]
            if c < r:
                raw.add((ConflictKind.WR, c, r, e.obj))
            else:
                raw.add((ConflictKind.RW, r, c, e.obj))
    return _make_set(raw, h, index)


def mvc_order(h: History) -> ConflictSet:
    """c-c, c-r and r-c pairs, each read anchored at its valid-write.

    Raises :class:`InvalidHistoryError` if some read has no valid-write.
    """
    hbar = completion(h)
    require_valid(hbar)
    index = _OpIndex(hbar)
    commits = hbar.commit_positions
    raw: set[tuple[ConflictKind, int, int, str]] = set()
    for x in hbar.objects:
        writers = hbar.writers(x)
        for a, ti in enumerate(writers):
            for tj in writers[a + 1:]:
                raw.add((ConflictKind.CC, commits[ti], commits[tj], x))
    for r, e in hbar.reads():
        anchor = valid_write(hbar, r).position
        for t in hbar.writers(e.obj):
            if t == e.txn:
                continue
            c = commits[t]
            if c <= anchor:
                raw.add((ConflictKind.CR, c, r, e.obj))
            else:
                raw.add((ConflictKind.RC, r, c, e.obj))
    return _make_set(raw, h, index)


def equivalent(h1: History, h2: History) -> bool:
    """Same events, with every transaction's own events in the same order."""
    if h1.txns != h2.txns or len(h1) != len(h2):
        return False
    return all(h1.projection(t) == h2.projection(t) for t in h1.txns)


def satisfies(candidate: History, mvco: ConflictSet) -> tuple[bool, Optional[ConflictPair]]:
    """Whether ``candidate`` is equivalent to the completed source and orders every pair.

    Returns ``(ok, first_violated_pair)``; the pair is ``None`` when the
    failure is non-equivalence or when ``ok`` is true.
    """
    if not equivalent(candidate, completion(mvco.source)):
        return False, None
    where = {INIT_COMMIT: INIT_POSITION}
    for t in candidate.txns:
        for seq, pos in enumerate(candidate.positions(t)):
            where[OpRef(t, seq)] = pos
    for p in mvco.pairs:
        if where[p.source] >= where[p.target]:
            return False, p
    return True, None


def respects(candidate: History, order: ConflictSet) -> bool:
    """Whether every pair of ``order`` appears in the same direction in ``candidate``."""
    return satisfies(candidate, order)[0]
