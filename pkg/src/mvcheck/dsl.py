"""Text formats for histories and scheduler workloads.

History text is a whitespace-separated token stream in the usual notation::

    r1(x,0) w2(x,10) w2(y,10) c2 r1(y,0) c1

``r1(x,A)`` is a read that returned abort, ``w1(x,5,A)`` a write that returned
abort; ``a1`` covers both tryA and a rejected tryC. ``#`` starts a comment.

Workload files hold one step per line: ``begin <t>``, ``r <t> <obj>``,
``w <t> <obj> <int>``, ``tryc <t>``, ``trya <t>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .history import (
    Event,
    History,
    Op,
    Response,
    WellFormednessError,
    abort,
    commit,
    read,
    validate_well_formed,
    write,
)

OBJECT_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_INT_RE = re.compile(r"-?\d+\Z")
_TOKEN_RE = re.compile(r"\S+")
_OP_RE = re.compile(r"([rw])_?(\d+)\((.*)\)\Z")
_TERM_RE = re.compile(r"([ca])_?(\d+)\Z")


class DslError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


def _tokens(text: str):
    """Yield ``(line, column, token)`` with 1-based positions, comments stripped.

    Parenthesised groups may contain spaces (``r1(x, 0)``), so a token runs
    until its parentheses balance.
    """
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.split("#", 1)[0].rstrip("\r")
        pos = 0
        while True:
            m = _TOKEN_RE.search(line, pos)
            if m is None:
                break
            start = m.start()
            end = m.end()
            if "(" in m.group() and ")" not in line[start:end]:
                close = line.find(")", end)
                next_open = line.find("(", end)
                if close != -1 and (next_open == -1 or close < next_open):
                    end = close + 1
                    while end < len(line) and not line[end].isspace():
                        end += 1
            yield lineno, start + 1, line[start:end]
            pos = end


def _parse_token(token: str, line: int, col: int) -> Event:
    m = _TERM_RE.match(token)
    if m:
        kind, txn = m.group(1), int(m.group(2))
        _check_txn(txn, line, col)
        return commit(txn) if kind == "c" else abort(txn)
    m = _OP_RE.match(token)
    if not m:
        if re.match(r"[rw]_?\d+\Z", token):
            what = "read" if token[0] == "r" else "write"
            raise DslError(line, col, f"{what} requires an object and a value")
        raise DslError(line, col, f"malformed token {token!r}")
    kind, txn, inner = m.group(1), int(m.group(2)), m.group(3)
    _check_txn(txn, line, col)
    args = [a.strip() for a in inner.split(",")]
    what = "read" if kind == "r" else "write"
    if not args[0] or not OBJECT_RE.match(args[0]):
        raise DslError(line, col, f"{what} has a bad object name {args[0]!r}")
    obj = args[0]
    if len(args) < 2:
        raise DslError(line, col, f"{what} requires a value")
    if kind == "r":
        if len(args) != 2:
            raise DslError(line, col, "read takes an object and a value")
        if args[1] == "A":
            return read(txn, obj, None)
        if not _INT_RE.match(args[1]):
            raise DslError(line, col, f"read value {args[1]!r} is not an integer")
        return read(txn, obj, int(args[1]))
    if not _INT_RE.match(args[1]):
        raise DslError(line, col, f"write value {args[1]!r} is not an integer")
    if len(args) == 3 and args[2] == "A":
        return write(txn, obj, int(args[1]), aborted=True)
    if len(args) != 2:
        raise DslError(line, col, "write takes an object, a value and an optional A")
    return write(txn, obj, int(args[1]))


def _check_txn(txn: int, line: int, col: int) -> None:
    if txn == 0:
        raise DslError(line, col, "transaction id 0 is reserved for the initializer")


def parse_history(text: str) -> History:
    """Parse history text; malformed tokens and well-formedness violations raise :class:`DslError`."""
    events = []
    where = []
    for line, col, token in _tokens(text):
        events.append(_parse_token(token, line, col))
        where.append((line, col))
    h = History(events)
    try:
        validate_well_formed(h)
    except WellFormednessError as err:
        line, col = where[err.index]
        raise DslError(line, col, err.rule) from err
    return h


def serialize_history(h: History) -> str:
    return " ".join(_event_text(e) for e in h.events)


def _event_text(e: Event) -> str:
    if e.op is Op.READ:
        return f"r{e.txn}({e.obj},{'A' if e.response is Response.ABORT else e.value})"
    if e.op is Op.WRITE:
        return f"w{e.txn}({e.obj},{e.value}{',A' if e.response is Response.ABORT else ''})"
    return f"c{e.txn}" if e.is_commit else f"a{e.txn}"


@dataclass(frozen=True)
class WorkloadStep:
    action: str  # begin | read | write | try_commit | try_abort
    txn: int
    obj: Optional[str] = None
    value: Optional[int] = None
    line: int = 0

    def __str__(self) -> str:
        if self.action == "begin":
            return f"begin {self.txn}"
        if self.action == "read":
            return f"r {self.txn} {self.obj}"
        if self.action == "write":
            return f"w {self.txn} {self.obj} {self.value}"
        return f"{'tryc' if self.action == 'try_commit' else 'trya'} {self.txn}"


_STEP_ARITY = {"begin": 1, "r": 2, "w": 3, "tryc": 1, "trya": 1}
_STEP_ACTION = {"begin": "begin", "r": "read", "w": "write", "tryc": "try_commit", "trya": "try_abort"}


def parse_workload(text: str) -> list[WorkloadStep]:
    steps = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0]
        fields = body.split()
        if not fields:
            continue
        col = len(body) - len(body.lstrip()) + 1
        verb = fields[0]
        if verb not in _STEP_ARITY:
            raise DslError(lineno, col, f"unknown step {verb!r}")
        args = fields[1:]
        if len(args) != _STEP_ARITY[verb]:
            if verb == "w" and len(args) == 2:
                raise DslError(lineno, col, "write requires a value")
            if verb == "r" and len(args) == 1:
                raise DslError(lineno, col, "read requires an object")
            raise DslError(lineno, col, f"{verb} takes {_STEP_ARITY[verb]} argument(s), got {len(args)}")
        if not args[0].isdigit() or int(args[0]) == 0:
            raise DslError(lineno, col, f"bad transaction id {args[0]!r}")
        txn = int(args[0])
        obj = value = None
        if verb in ("r", "w"):
            obj = args[1]
            if not OBJECT_RE.match(obj):
                raise DslError(lineno, col, f"bad object name {obj!r}")
        if verb == "w":
            if not _INT_RE.match(args[2]):
                raise DslError(lineno, col, f"write value {args[2]!r} is not an integer")
            value = int(args[2])
        steps.append(WorkloadStep(_STEP_ACTION[verb], txn, obj, value, lineno))
    return steps


def serialize_workload(steps: list[WorkloadStep]) -> str:
    return "".join(f"{s}\n" for s in steps)
