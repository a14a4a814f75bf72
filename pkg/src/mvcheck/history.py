"""Transactional histories: events, well-formedness, completion and read predicates.

A history is a single global sequence of atomic transactional events. Every
history implicitly starts with the initializer transaction ``T0``, which writes
``0`` to every object mentioned anywhere in the history and commits before the
first event. ``T0`` has no events of its own; its commit sits at the virtual
position ``-1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Optional

INIT_TXN = 0
INIT_POSITION = -1
INIT_VALUE = 0


class Op(enum.Enum):
    READ = "r"
    WRITE = "w"
    TRY_COMMIT = "tryC"
    TRY_ABORT = "tryA"


class Response(enum.Enum):
    VALUE = "value"  # successful read or write
    COMMIT = "commit"
    ABORT = "abort"


class TxnStatus(enum.Enum):
    LIVE = "live"
    COMMITTED = "committed"
    ABORTED = "aborted"


class HistoryError(ValueError):
    """Base class for errors about malformed or unsuitable histories."""


class WellFormednessError(HistoryError):
    def __init__(self, index: int, rule: str):
        super().__init__(f"event {index}: {rule}")
        self.index = index
        self.rule = rule


class InvalidHistoryError(HistoryError):
    """Raised when an operation needs a valid history and some read has no valid-write."""

    def __init__(self, index: int, message: str = "read has no valid-write"):
        super().__init__(f"event {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class Event:
    txn: int
    op: Op
    obj: Optional[str] = None
    value: Optional[int] = None
    response: Response = Response.VALUE

    def __post_init__(self) -> None:
        if self.op in (Op.READ, Op.WRITE):
            if self.obj is None:
                raise ValueError(f"{self.op.value} needs an object")
            if self.response is Response.COMMIT:
                raise ValueError(f"{self.op.value} cannot respond with commit")
            if self.op is Op.READ and (self.value is None) != (self.response is Response.ABORT):
                raise ValueError("a read carries a value iff it succeeded")
            if self.op is Op.WRITE and self.value is None:
                raise ValueError("write needs a value")
        else:
            if self.obj is not None or self.value is not None:
                raise ValueError(f"{self.op.value} takes no object or value")
            if self.response is Response.VALUE:
                raise ValueError(f"{self.op.value} must respond with commit or abort")
            if self.op is Op.TRY_ABORT and self.response is not Response.ABORT:
                raise ValueError("tryA always responds with abort")

    @property
    def successful(self) -> bool:
        return self.response is not Response.ABORT

    @property
    def terminal(self) -> bool:
        return self.response is not Response.VALUE

    @property
    def is_commit(self) -> bool:
        return self.response is Response.COMMIT

    @property
    def is_read(self) -> bool:
        return self.op is Op.READ and self.successful

    @property
    def is_write(self) -> bool:
        return self.op is Op.WRITE and self.successful

    def __str__(self) -> str:
        if self.op is Op.READ:
            return f"r{self.txn}({self.obj},{'A' if self.value is None else self.value})"
        if self.op is Op.WRITE:
            suffix = ",A" if self.response is Response.ABORT else ""
            return f"w{self.txn}({self.obj},{self.value}{suffix})"
        return f"{'c' if self.is_commit else 'a'}{self.txn}"


def read(txn: int, obj: str, value: Optional[int]) -> Event:
    """``r_txn(obj, value)``; ``value=None`` is the aborted read ``r_txn(obj, A)``."""
    response = Response.ABORT if value is None else Response.VALUE
    return Event(txn, Op.READ, obj, value, response)


def write(txn: int, obj: str, value: int, aborted: bool = False) -> Event:
    return Event(txn, Op.WRITE, obj, value, Response.ABORT if aborted else Response.VALUE)


def commit(txn: int) -> Event:
    return Event(txn, Op.TRY_COMMIT, response=Response.COMMIT)


def commit_aborted(txn: int) -> Event:
    return Event(txn, Op.TRY_COMMIT, response=Response.ABORT)


def abort(txn: int) -> Event:
    return Event(txn, Op.TRY_ABORT, response=Response.ABORT)


class CommitRef(NamedTuple):
    txn: int
    position: int


@dataclass(frozen=True)
class History:
    events: tuple[Event, ...] = ()

    def __init__(self, events: Iterable[Event] = ()):
        object.__setattr__(self, "events", tuple(events))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __getitem__(self, index: int) -> Event:
        return self.events[index]

    def __str__(self) -> str:
        return " ".join(str(e) for e in self.events)

    @cached_property
    def txns(self) -> tuple[int, ...]:
        """Transactions with at least one event, ascending; excludes T0."""
        return tuple(sorted({e.txn for e in self.events}))

    @cached_property
    def objects(self) -> tuple[str, ...]:
        return tuple(sorted({e.obj for e in self.events if e.obj is not None}))

    @cached_property
    def _by_txn(self) -> dict[int, tuple[int, ...]]:
        positions: dict[int, list[int]] = {}
        for i, e in enumerate(self.events):
            positions.setdefault(e.txn, []).append(i)
        return {t: tuple(p) for t, p in positions.items()}

    def positions(self, txn: int) -> tuple[int, ...]:
        """Event indices of ``txn`` in history order."""
        return self._by_txn.get(txn, ())

    def projection(self, txn: int) -> tuple[Event, ...]:
        return tuple(self.events[i] for i in self.positions(txn))

    def first_index(self, txn: int) -> int:
        return INIT_POSITION if txn == INIT_TXN else self.positions(txn)[0]

    def last_index(self, txn: int) -> int:
        return INIT_POSITION if txn == INIT_TXN else self.positions(txn)[-1]

    @cached_property
    def _statuses(self) -> dict[int, TxnStatus]:
        statuses = {INIT_TXN: TxnStatus.COMMITTED}
        for t, pos in self._by_txn.items():
            last = self.events[pos[-1]]
            if last.is_commit:
                statuses[t] = TxnStatus.COMMITTED
            elif last.terminal:
                statuses[t] = TxnStatus.ABORTED
            else:
                statuses[t] = TxnStatus.LIVE
        return statuses

    def status(self, txn: int) -> TxnStatus:
        return self._statuses[txn]

    def committed(self) -> tuple[int, ...]:
        return tuple(t for t, s in sorted(self._statuses.items()) if s is TxnStatus.COMMITTED)

    def aborted(self) -> tuple[int, ...]:
        return tuple(t for t, s in sorted(self._statuses.items()) if s is TxnStatus.ABORTED)

    def live(self) -> tuple[int, ...]:
        return tuple(t for t, s in sorted(self._statuses.items()) if s is TxnStatus.LIVE)

    @cached_property
    def commit_positions(self) -> dict[int, int]:
        """Commit event index per committed transaction, T0 at ``INIT_POSITION``."""
        commits = {INIT_TXN: INIT_POSITION}
        for i, e in enumerate(self.events):
            if e.is_commit:
                commits[e.txn] = i
        return commits

    def commit_ref(self, txn: int) -> CommitRef:
        return CommitRef(txn, self.commit_positions[txn])

    @cached_property
    def _write_values(self) -> dict[int, dict[str, int]]:
        values: dict[int, dict[str, int]] = {INIT_TXN: {x: INIT_VALUE for x in self.objects}}
        for e in self.events:
            if e.is_write:
                values.setdefault(e.txn, {})[e.obj] = e.value
        return values

    def write_values(self, txn: int) -> dict[str, int]:
        """Final successfully written value per object (what a commit would install)."""
        return self._write_values.get(txn, {})

    @cached_property
    def _writers(self) -> dict[str, tuple[int, ...]]:
        by_obj: dict[str, list[int]] = {}
        for t, pos in sorted(self.commit_positions.items(), key=lambda kv: kv[1]):
            for x in self.write_values(t):
                by_obj.setdefault(x, []).append(t)
        return {x: tuple(ts) for x, ts in by_obj.items()}

    def writers(self, obj: str) -> tuple[int, ...]:
        """Committed writers of ``obj`` (T0 included) in commit order."""
        return self._writers.get(obj, ())

    def reads(self) -> Iterator[tuple[int, Event]]:
        """Successful reads with their indices."""
        for i, e in enumerate(self.events):
            if e.is_read:
                yield i, e


def validate_well_formed(h: History) -> None:
    """Raise :class:`WellFormednessError` at the first event breaking the per-transaction shape.

    Each transaction must be reads, then writes, then at most one terminal
    event, with nothing after the terminal.
    """
    wrote: set[int] = set()
    done: set[int] = set()
    for i, e in enumerate(h.events):
        if e.txn == INIT_TXN:
            raise WellFormednessError(i, "transaction id 0 is reserved for the initializer")
        if e.txn < 0:
            raise WellFormednessError(i, "transaction ids are non-negative")
        if e.txn in done:
            raise WellFormednessError(i, f"event after the terminal event of T{e.txn}")
        if e.op is Op.READ and e.txn in wrote:
            raise WellFormednessError(i, f"read after write in T{e.txn}")
        if e.op is Op.WRITE:
            wrote.add(e.txn)
        if e.terminal:
            done.add(e.txn)


def is_well_formed(h: History) -> bool:
    try:
        validate_well_formed(h)
    except WellFormednessError:
        return False
    return True


def completion(h: History) -> History:
    """Abort every live transaction immediately after its last event."""
    live = set(h.live())
    if not live:
        return h
    last = {t: h.last_index(t) for t in live}
    after = {i: t for t, i in last.items()}
    events: list[Event] = []
    for i, e in enumerate(h.events):
        events.append(e)
        if i in after:
            events.append(abort(after[i]))
    return History(events)


def real_time_pairs(h: History) -> set[tuple[int, int]]:
    """``(k, m)`` such that ``T_k`` is complete and ends before ``T_m`` starts."""
    pairs = {(INIT_TXN, t) for t in h.txns}
    complete = [t for t in h.txns if h.status(t) is not TxnStatus.LIVE]
    for k in complete:
        end = h.last_index(k)
        for m in h.txns:
            if m != k and end < h.first_index(m):
                pairs.add((k, m))
    return pairs


def valid_write(h: History, index: int) -> Optional[CommitRef]:
    """Closest commit before the read at ``index`` whose transaction wrote the read value."""
    e = h.events[index]
    if not e.is_read:
        raise ValueError(f"event {index} is not a successful read")
    for t in reversed(h.writers(e.obj)):
        pos = h.commit_positions[t]
        if pos < index and h.write_values(t)[e.obj] == e.value:
            return CommitRef(t, pos)
    return None


def last_write(h: History, index: int) -> CommitRef:
    """Latest commit before the read at ``index`` whose transaction wrote the read object."""
    e = h.events[index]
    if not e.is_read:
        raise ValueError(f"event {index} is not a successful read")
    best = CommitRef(INIT_TXN, INIT_POSITION)
    for t in h.writers(e.obj):
        pos = h.commit_positions[t]
        if pos < index:
            best = CommitRef(t, pos)
    return best


def is_valid(h: History) -> bool:
    return all(valid_write(h, i) is not None for i, _ in h.reads())


def first_invalid_read(h: History) -> Optional[int]:
    for i, _ in h.reads():
        if valid_write(h, i) is None:
            return i
    return None


def is_legal(h: History) -> bool:
    for i, e in h.reads():
        lw = last_write(h, i)
        if h.write_values(lw.txn).get(e.obj) != e.value:
            return False
    return True


def is_multi_versioned(h: History) -> bool:
    return is_valid(h) and not is_legal(h)


def require_valid(h: History) -> None:
    bad = first_invalid_read(h)
    if bad is not None:
        raise InvalidHistoryError(bad, f"read {h.events[bad]} has no valid-write")


def is_t_sequential(h: History) -> bool:
    seen: set[int] = set()
    current = None
    for e in h.events:
        if e.txn != current:
            if e.txn in seen:
                return False
            seen.add(e.txn)
            current = e.txn
    return True


def txn_order(h: History) -> tuple[int, ...]:
    """T0 followed by transactions in order of first appearance."""
    order = [INIT_TXN]
    for e in h.events:
        if e.txn not in order:
            order.append(e.txn)
    return tuple(order)
