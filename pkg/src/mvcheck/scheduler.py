"""Deterministic simulator of the online multi-version conflict scheduler.

The scheduler executes a scripted interleaving one step at a time. Reads pick
the newest committed version whose conflict edges keep the graph acyclic;
writes are buffered; an update transaction commits only if its commit edges
keep the graph acyclic. The incremental graph always equals the graph built
offline from the emitted log (restricted to transactions that have events).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .conflicts import ConflictKind, ConflictPair, OpRef
from .dsl import WorkloadStep
from .graph import MVCG, BatchEdge, EdgeReason
from .history import (
    INIT_TXN,
    INIT_VALUE,
    Event,
    History,
    TxnStatus,
    commit,
    commit_aborted,
    completion,
    abort,
    read,
    write,
)

log = logging.getLogger(__name__)


class SchedulerError(RuntimeError):
    pass


@dataclass(frozen=True)
class Version:
    obj: str
    writer: int
    value: int
    commit_position: int  # log index of the writer's commit; -1 for T0


@dataclass
class TxnRecord:
    id: int
    status: TxnStatus = TxnStatus.LIVE
    read_set: list[tuple[str, Version]] = field(default_factory=list)
    write_buffer: dict[str, int] = field(default_factory=dict)
    begin_step: int = 0
    end_step: Optional[int] = None
    live_set: frozenset[int] = frozenset()
    has_events: bool = False
    wrote: bool = False


@dataclass
class Incident:
    step: int
    txn: int
    obj: str
    rejected: list[int]  # writers of the versions that were tried

    def to_json(self) -> dict:
        return {"step": self.step, "txn": self.txn, "object": self.obj, "rejected_writers": self.rejected}


@dataclass
class Stats:
    commits: int = 0
    aborts: int = 0
    version_skips: int = 0
    incidents: int = 0

    def to_json(self) -> dict:
        return {
            "commits": self.commits,
            "aborts": self.aborts,
            "version_skips": self.version_skips,
            "incidents": self.incidents,
        }


class SchedulerState:
    def __init__(self) -> None:
        init = TxnRecord(INIT_TXN, TxnStatus.COMMITTED, begin_step=0, end_step=0, has_events=True)
        self.records: dict[int, TxnRecord] = {INIT_TXN: init}
        self.store: dict[str, list[Version]] = {}
        self.graph = MVCG([INIT_TXN])
        self.log: list[Event] = []
        self.incident_log: list[Incident] = []
        self.stats = Stats()
        self.step = 0
        self.deleted: set[int] = set()  # transactions removed by garbage collection
        self.forced: set[int] = set()  # aborted by the read rule, not by their script

    # -- helpers ------------------------------------------------------------

    def history(self) -> History:
        """The log as a history, without events of garbage-collected transactions."""
        return History(e for e in self.log if e.txn not in self.deleted)

    def versions(self, obj: str) -> list[Version]:
        if obj not in self.store:
            self.store[obj] = [Version(obj, INIT_TXN, INIT_VALUE, -1)]
        return self.store[obj]

    def _record(self, t: int) -> TxnRecord:
        if t not in self.records or t == INIT_TXN:
            raise SchedulerError(f"unknown transaction T{t}")
        return self.records[t]

    def _live(self, t: int) -> TxnRecord:
        rec = self._record(t)
        if rec.status is not TxnStatus.LIVE:
            raise SchedulerError(f"T{t} is not live")
        return rec

    def _terminated(self) -> list[int]:
        return [t for t, r in self.records.items() if r.status is not TxnStatus.LIVE and t not in self.deleted]

    def _touch(self, rec: TxnRecord) -> None:
        """Real-time predecessors are fixed by a transaction's first logged event."""
        if rec.has_events:
            return
        rec.has_events = True
        self.graph.add_vertex(rec.id)
        for k in self._terminated():
            self.graph.add_edge(k, rec.id, EdgeReason.REAL_TIME, (k, rec.id))

    def _append(self, rec: TxnRecord, event: Event) -> None:
        self._touch(rec)
        self.log.append(event)

    def _terminate(self, rec: TxnRecord, status: TxnStatus) -> None:
        rec.status = status
        rec.end_step = self.step
        rec.live_set = frozenset(
            t for t, r in self.records.items()
            if t not in (INIT_TXN, rec.id) and r.status is TxnStatus.LIVE
        )

    def _seq(self, t: int) -> int:
        return sum(1 for e in self.log if e.txn == t)

    def _commit_ref(self, v: Version) -> OpRef:
        if v.writer == INIT_TXN:
            return OpRef(INIT_TXN, 0)
        return OpRef(v.writer, self._seq_at(v.writer, v.commit_position))

    def _seq_at(self, t: int, position: int) -> int:
        return sum(1 for e in self.log[:position] if e.txn == t)

    # -- operations ---------------------------------------------------------

    def begin(self, t: int) -> None:
        if t == INIT_TXN or t < 0:
            raise SchedulerError(f"bad transaction id {t}")
        if t in self.records:
            raise SchedulerError(f"T{t} already exists")
        self.step += 1
        self.records[t] = TxnRecord(t, begin_step=self.step)
        self.graph.add_vertex(t)
        for k in self._terminated():
            self.graph.add_edge(k, t, EdgeReason.REAL_TIME, (k, t))

    def read(self, t: int, obj: str) -> Optional[int]:
        """Return the value read, or None if ``t`` had to be aborted."""
        rec = self._live(t)
        if rec.wrote:
            raise SchedulerError(f"T{t} reads {obj} after writing")
        self.step += 1
        versions = [v for v in self.versions(obj) if v.writer not in self.deleted]
        position = len(self.log)
        seq = self._seq(t)
        target = OpRef(t, seq)

        self._touch(rec)

        rejected: list[int] = []
        seen_values: set[int] = set()
        for i in range(len(versions) - 1, -1, -1):
            chosen = versions[i]
            if chosen.value in seen_values:
                # the log would attribute this read to the newer writer of the same value
                continue
            seen_values.add(chosen.value)
            batch = []
            for k, v in enumerate(versions):
                if v.writer == t:
                    continue
                src = self._commit_ref(v)
                if k <= i:
                    pair = ConflictPair(ConflictKind.CR, src, target, obj, v.commit_position, position)
                    batch.append(BatchEdge(v.writer, t, EdgeReason.CR, pair))
                else:
                    pair = ConflictPair(ConflictKind.RC, target, src, obj, position, v.commit_position)
                    batch.append(BatchEdge(t, v.writer, EdgeReason.RC, pair))
            ok, _ = self.graph.try_add_edges(batch)
            if ok:
                self.log.append(read(t, obj, chosen.value))
                rec.read_set.append((obj, chosen))
                return chosen.value
            rejected.append(chosen.writer)
            self.stats.version_skips += 1

        # Unreachable while the graph stays acyclic; kept as a fail-safe.
        log.warning("T%d: no version of %s keeps the graph acyclic", t, obj)
        self.incident_log.append(Incident(self.step, t, obj, rejected))
        self.stats.incidents += 1
        self.stats.aborts += 1
        self.log.append(read(t, obj, None))
        self._terminate(rec, TxnStatus.ABORTED)
        self.forced.add(t)
        return None

    def write(self, t: int, obj: str, value: int) -> None:
        rec = self._live(t)
        self.step += 1
        self._append(rec, write(t, obj, value))
        rec.write_buffer[obj] = value
        rec.wrote = True

    def try_commit(self, t: int) -> bool:
        rec = self._live(t)
        self.step += 1
        if not rec.write_buffer:
            self._append(rec, commit(t))
            self._terminate(rec, TxnStatus.COMMITTED)
            self.stats.commits += 1
            return True

        self._touch(rec)
        position = len(self.log)
        target = OpRef(t, self._seq(t))
        batch = []
        for obj in sorted(rec.write_buffer):
            for v in self.versions(obj):
                if v.writer in self.deleted:
                    continue
                pair = ConflictPair(ConflictKind.CC, self._commit_ref(v), target, obj, v.commit_position, position)
                batch.append(BatchEdge(v.writer, t, EdgeReason.CC, pair))
            for i, e in enumerate(self.log):
                if e.is_read and e.obj == obj and e.txn != t and e.txn not in self.deleted:
                    source = OpRef(e.txn, self._seq_at(e.txn, i))
                    pair = ConflictPair(ConflictKind.RC, source, target, obj, i, position)
                    batch.append(BatchEdge(e.txn, t, EdgeReason.RC, pair))
        ok, _ = self.graph.try_add_edges(batch)
        if not ok:
            self.log.append(commit_aborted(t))
            self._terminate(rec, TxnStatus.ABORTED)
            self.stats.aborts += 1
            return False
        self.log.append(commit(t))
        for obj, value in sorted(rec.write_buffer.items()):
            self.versions(obj).append(Version(obj, t, value, position))
        self._terminate(rec, TxnStatus.COMMITTED)
        self.stats.commits += 1
        return True

    def try_abort(self, t: int) -> None:
        rec = self._live(t)
        self.step += 1
        self._append(rec, abort(t))
        self._terminate(rec, TxnStatus.ABORTED)
        self.stats.aborts += 1

    def apply(self, step: WorkloadStep):
        if step.txn in self.forced:
            # the rest of a script whose transaction the scheduler already aborted
            return None
        if step.action == "begin":
            return self.begin(step.txn)
        if step.action == "read":
            return self.read(step.txn, step.obj)
        if step.action == "write":
            return self.write(step.txn, step.obj, step.value)
        if step.action == "try_commit":
            return self.try_commit(step.txn)
        if step.action == "try_abort":
            return self.try_abort(step.txn)
        raise SchedulerError(f"unknown step {step.action!r}")

    def expected_graph(self) -> MVCG:
        """The offline graph of the current log, for checking the incremental one."""
        from .graph import build_mvcg

        return build_mvcg(self.history())

    def logged_subgraph(self) -> MVCG:
        """The incremental graph restricted to transactions that have logged events."""
        keep = [t for t, r in self.records.items() if r.has_events and t not in self.deleted]
        return self.graph.subgraph(keep)

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "log": " ".join(str(e) for e in self.log),
            "deleted": sorted(self.deleted),
            "records": {
                str(t): {
                    "status": r.status.value,
                    "begin_step": r.begin_step,
                    "end_step": r.end_step,
                    "read_set": [[x, v.writer] for x, v in r.read_set],
                    "write_buffer": r.write_buffer,
                }
                for t, r in sorted(self.records.items())
            },
            "store": {x: [[v.writer, v.value] for v in vs] for x, vs in sorted(self.store.items())},
            "graph": self.graph.to_json(),
            "incidents": [i.to_json() for i in self.incident_log],
        }


class WorkloadError(SchedulerError):
    def __init__(self, index: int, step: WorkloadStep, cause: Exception):
        where = f"line {step.line}" if step.line else f"step {index}"
        super().__init__(f"{where} ({step}): {cause}")
        self.index = index
        self.step = step


def run_workload(steps: list[WorkloadStep], state: Optional[SchedulerState] = None, after_step=None):
    """Execute ``steps`` in order; return ``(completed history, stats, state)``.

    ``after_step(state, index)`` is called after every step, which is how
    tests check per-step invariants and how garbage collection is interleaved.
    """
    state = SchedulerState() if state is None else state
    for i, step in enumerate(steps):
        try:
            state.apply(step)
        except SchedulerError as err:
            raise WorkloadError(i, step, err) from err
        if after_step is not None:
            after_step(state, i)
    return completion(state.history()), state.stats, state
