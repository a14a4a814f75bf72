"""Garbage collection of committed transactions and their versions.

Collecting a transaction deletes it from the history: its versions leave the
store, its vertex leaves the graph and its events leave the emitted log.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .history import INIT_TXN, TxnStatus
from .scheduler import SchedulerError, SchedulerState

LIVE_SET_ALIVE = "live-set-member-alive"
SOLE_VERSION = "sole-version-of-object"
READER_DEPENDS = "live-reader-depends"
INITIALIZER = "initializer"
NOT_COMMITTED = "not-committed"


@dataclass(frozen=True)
class GcPolicy:
    """Which of the optional collection conditions are enforced.

    Committed status and a drained live set are always required.
    """

    require_newer_version: bool = True
    require_no_readers: bool = True
    protect_initializer: bool = True


@dataclass
class CollectDecision:
    txn: int
    blocked_by: list[str] = field(default_factory=list)

    @property
    def collectible(self) -> bool:
        return not self.blocked_by

    def to_json(self) -> dict:
        return {"txn": self.txn, "collectible": self.collectible, "blocked_by": list(self.blocked_by)}


def live_set(state: SchedulerState, t: int) -> set[int]:
    """Transactions that were still running when ``t`` terminated."""
    if t not in state.records:
        raise SchedulerError(f"unknown transaction T{t}")
    rec = state.records[t]
    if rec.end_step is None:
        raise SchedulerError(f"T{t} has not terminated")
    if t == INIT_TXN:
        return set()
    return set(rec.live_set)


def collectible(state: SchedulerState, t: int, policy: GcPolicy = GcPolicy()) -> CollectDecision:
    if t not in state.records or t in state.deleted:
        raise SchedulerError(f"unknown transaction T{t}")
    rec = state.records[t]
    decision = CollectDecision(t)
    if t == INIT_TXN and policy.protect_initializer:
        decision.blocked_by.append(INITIALIZER)
        return decision
    if rec.status is not TxnStatus.COMMITTED:
        decision.blocked_by.append(NOT_COMMITTED)
        return decision
    if t != INIT_TXN and any(state.records[k].status is TxnStatus.LIVE for k in rec.live_set):
        decision.blocked_by.append(LIVE_SET_ALIVE)

    written = [x for x, vs in state.store.items() if any(v.writer == t for v in vs)]
    if policy.require_newer_version and t == INIT_TXN:
        # the initializer wrote every object, including ones not touched yet
        decision.blocked_by.append(SOLE_VERSION)
    elif policy.require_newer_version:
        for x in written:
            mine = next(v for v in state.store[x] if v.writer == t)
            if not any(v.commit_position > mine.commit_position and v.writer not in state.deleted
                       for v in state.store[x]):
                decision.blocked_by.append(SOLE_VERSION)
                break
    if policy.require_no_readers:
        # Any remaining reader, not only live ones: dropping the version a kept
        # read returned would leave that read without a valid-write.
        for k, other in state.records.items():
            if k in state.deleted or k == t:
                continue
            if any(v.writer == t for _, v in other.read_set):
                decision.blocked_by.append(READER_DEPENDS)
                break
    return decision


def collect(state: SchedulerState, policy: GcPolicy = GcPolicy()) -> set[int]:
    """Remove every collectible transaction, repeating until nothing changes."""
    removed: set[int] = set()
    while True:
        # one at a time: a removal can change the decision for the others
        victim = next(
            (t for t in sorted(state.records)
             if t not in state.deleted and collectible(state, t, policy).collectible),
            None,
        )
        if victim is None:
            return removed
        _remove(state, victim)
        removed.add(victim)


def _remove(state: SchedulerState, t: int) -> None:
    for x in list(state.store):
        state.store[x] = [v for v in state.store[x] if v.writer != t]
    if t in state.graph:
        state.graph.remove_vertex(t)
    state.deleted.add(t)
