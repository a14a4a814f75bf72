"""Exhaustive deciders, the graph-based decider, classification and history generators.

The brute-force deciders walk every transaction order that respects real-time
order, expand it into a t-sequential history and test the candidate directly.
Subtrees whose prefix already violates the property are skipped, but every
accepted candidate is re-checked in full, so pruning never decides a verdict
on its own.
"""

from __future__ import annotations

import enum
import os
import random
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Optional, Union

from .conflicts import ConflictSet, conflict_order, mvc_order, satisfies
from .dsl import WorkloadStep, serialize_history
from .graph import build_mvcg, serialization_witness
from .history import (
    INIT_TXN,
    INIT_VALUE,
    History,
    HistoryError,
    abort,
    commit,
    completion,
    is_legal,
    is_valid,
    read,
    real_time_pairs,
    require_valid,
    txn_order,
    validate_well_formed,
    write,
)

DEFAULT_BOUND = 8
SCHEMA_VERSION = 1


class BoundExceeded(HistoryError):
    def __init__(self, count: int, bound: int):
        super().__init__(f"{count} transactions (T0 included) exceed the brute-force bound {bound}")
        self.count = count
        self.bound = bound


def default_bound() -> int:
    return int(os.environ.get("MVCHECK_BOUND", DEFAULT_BOUND))


class Decision(NamedTuple):
    holds: bool
    witness: Optional[History] = None

    @property
    def order(self) -> Optional[tuple[int, ...]]:
        return None if self.witness is None else txn_order(self.witness)


# -- search -----------------------------------------------------------------

def _orders(h: History, bound: Optional[int], extend_ok: Callable[[list[int], int], bool]) -> Iterator[list[int]]:
    """Real-time respecting orders of the completed history's transactions, T0 first.

    ``extend_ok(prefix, t)`` may reject appending ``t`` to ``prefix``; rejected
    branches are not explored.
    """
    bound = default_bound() if bound is None else bound
    hbar = completion(h)
    txns = [INIT_TXN, *hbar.txns]
    if len(txns) > bound:
        raise BoundExceeded(len(txns), bound)
    preds: dict[int, set[int]] = {t: set() for t in txns}
    for k, m in real_time_pairs(h):
        preds[m].add(k)

    prefix: list[int] = []
    placed: set[int] = set()

    def walk() -> Iterator[list[int]]:
        if len(prefix) == len(txns):
            yield list(prefix)
            return
        for t in txns:
            if t in placed or not preds[t] <= placed or not extend_ok(prefix, t):
                continue
            prefix.append(t)
            placed.add(t)
            yield from walk()
            prefix.pop()
            placed.discard(t)

    return walk()


def _expand(hbar: History, order: list[int]) -> History:
    events = []
    for t in order:
        events.extend(hbar.projection(t))
    return History(events)


def enumerate_serializations(h: History, bound: Optional[int] = None) -> Iterator[History]:
    """Every t-sequential history equivalent to the completion that respects real-time order."""
    validate_well_formed(h)
    hbar = completion(h)
    for order in _orders(h, bound, lambda prefix, t: True):
        yield _expand(hbar, order)


def _reads_legal_after(hbar: History, prefix: list[int], t: int) -> bool:
    """Whether ``t``'s reads are legal when ``t`` runs right after the committed part of ``prefix``."""
    latest: dict[str, int] = {}
    for k in prefix:
        if k in hbar.commit_positions:
            latest.update(hbar.write_values(k))
    for e in hbar.projection(t):
        if e.is_read and latest.get(e.obj, INIT_VALUE) != e.value:
            return False
    return True


def _txn_constraints(order: ConflictSet) -> set[tuple[int, int]]:
    return {(p.source.txn, p.target.txn) for p in order if p.source.txn != p.target.txn}


def _respects_rt(h: History, s: History) -> bool:
    pos = {t: i for i, t in enumerate(txn_order(s))}
    return all(pos[k] < pos[m] for k, m in real_time_pairs(h))


def is_opaque_bruteforce(h: History, bound: Optional[int] = None) -> Decision:
    """Some real-time respecting t-sequential order of the completion is legal."""
    validate_well_formed(h)
    if not is_valid(h):
        return Decision(False)
    hbar = completion(h)
    for order in _orders(h, bound, lambda prefix, t: _reads_legal_after(hbar, prefix, t)):
        s = _expand(hbar, order)
        if is_legal(s) and _respects_rt(h, s):
            return Decision(True, s)
    return Decision(False)


def is_co_opaque_bruteforce(h: History, bound: Optional[int] = None) -> Decision:
    """As opacity, and the order also keeps every w-w / w-r / r-w pair of ``h``."""
    validate_well_formed(h)
    if not is_valid(h):
        return Decision(False)
    hbar = completion(h)
    co = conflict_order(h)
    must = _txn_constraints(co)

    def extend_ok(prefix: list[int], t: int) -> bool:
        return not any((t, k) in must for k in prefix) and _reads_legal_after(hbar, prefix, t)

    for order in _orders(h, bound, extend_ok):
        s = _expand(hbar, order)
        if is_legal(s) and _respects_rt(h, s) and satisfies(s, co)[0]:
            return Decision(True, s)
    return Decision(False)


def is_mvc_opaque_bruteforce(h: History, bound: Optional[int] = None) -> Decision:
    """Some real-time respecting t-sequential order satisfies the multi-version conflict order.

    Legality of the candidate is not tested. Raises on invalid histories.
    """
    validate_well_formed(h)
    require_valid(h)
    hbar = completion(h)
    mvco = mvc_order(h)
    must = _txn_constraints(mvco)

    def extend_ok(prefix: list[int], t: int) -> bool:
        return not any((t, k) in must for k in prefix)

    for order in _orders(h, bound, extend_ok):
        s = _expand(hbar, order)
        if _respects_rt(h, s) and satisfies(s, mvco)[0]:
            return Decision(True, s)
    return Decision(False)


def is_mvc_opaque_fast(h: History) -> Decision:
    """Acyclicity of the multi-version conflict graph. Raises on invalid histories."""
    validate_well_formed(h)
    g = build_mvcg(h)
    witness = serialization_witness(h, g)
    return Decision(witness is not None, witness)


# -- classification ---------------------------------------------------------

SKIPPED = "skipped"
Verdict = Union[bool, str, None]


@dataclass
class ClassificationReport:
    well_formed: bool
    valid: Optional[bool] = None
    legal: Optional[bool] = None
    multi_versioned: Optional[bool] = None
    co_opaque: Verdict = None
    mvc_opaque: Verdict = None
    opaque: Verdict = None
    witness: dict[str, str] = field(default_factory=dict)
    mvcg_summary: Optional[dict] = None
    errors: dict[str, str] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    # CLI spelling of each class flag
    FLAGS = {
        "valid": "valid",
        "legal": "legal",
        "multi-versioned": "multi_versioned",
        "co-opaque": "co_opaque",
        "mvc-opaque": "mvc_opaque",
        "opaque": "opaque",
    }

    def flag(self, name: str) -> Verdict:
        return getattr(self, self.FLAGS[name])

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "well_formed": self.well_formed,
            "valid": self.valid,
            "legal": self.legal,
            "multi_versioned": self.multi_versioned,
            "co_opaque": self.co_opaque,
            "mvc_opaque": self.mvc_opaque,
            "opaque": self.opaque,
            "witness": dict(self.witness),
            "mvcg_summary": self.mvcg_summary,
            "errors": dict(self.errors),
            "violations": list(self.violations),
        }


def inclusion_violations(r: ClassificationReport) -> list[str]:
    """Class-inclusion laws broken by a report (only among decided flags)."""
    out = []
    if r.legal is True and r.valid is False:
        out.append("legal but not valid")
    if r.co_opaque is True and r.mvc_opaque is False:
        out.append("co-opaque but not mvc-opaque")
    if r.mvc_opaque is True and r.opaque is False:
        out.append("mvc-opaque but not opaque")
    if r.multi_versioned is True and r.co_opaque is True:
        out.append("multi-versioned but co-opaque")
    return out


def classify(h: History, bound: Optional[int] = None) -> ClassificationReport:
    try:
        validate_well_formed(h)
    except HistoryError as err:
        return ClassificationReport(well_formed=False, errors={"well_formed": str(err)})
    r = ClassificationReport(well_formed=True)
    r.valid = is_valid(h)
    r.legal = is_legal(h)
    r.multi_versioned = r.valid and not r.legal

    if not r.valid:
        # every class below requires validity
        r.co_opaque = r.mvc_opaque = r.opaque = False
        r.errors["mvcg"] = "history is not valid"
        r.violations = inclusion_violations(r)
        return r

    g = build_mvcg(h)
    cycle = g.find_cycle()
    r.mvcg_summary = {
        "vertices": len(g.vertices),
        "edges": g.edge_count(),
        "cyclic": cycle is not None,
        "cycle": None if cycle is None else cycle + [cycle[0]],
    }
    fast = is_mvc_opaque_fast(h)
    r.mvc_opaque = fast.holds
    if fast.witness is not None:
        r.witness["mvc_opaque"] = serialize_history(fast.witness)

    for name, decide in (
        ("opaque", is_opaque_bruteforce),
        ("co_opaque", is_co_opaque_bruteforce),
        ("mvc_opaque_bruteforce", is_mvc_opaque_bruteforce),
    ):
        try:
            d = decide(h, bound)
        except BoundExceeded as err:
            if name != "mvc_opaque_bruteforce":
                setattr(r, name, SKIPPED)
            r.errors[name] = str(err)
            continue
        if name == "mvc_opaque_bruteforce":
            if d.holds != fast.holds:
                r.violations.append(f"graph decider says {fast.holds}, brute force says {d.holds}")
            continue
        setattr(r, name, d.holds)
        if d.witness is not None:
            r.witness[name] = serialize_history(d.witness)
    r.violations.extend(inclusion_violations(r))
    return r


# -- generators -------------------------------------------------------------

class ReadPolicy(enum.Enum):
    COMMITTED = "from-any-committed-version"
    ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class GenSpec:
    txn_count: tuple[int, int] = (1, 4)
    object_count: tuple[int, int] = (1, 3)
    ops_per_txn: tuple[int, int] = (1, 4)
    seed: int = 0
    read_value_policy: ReadPolicy = ReadPolicy.COMMITTED
    abort_probability: float = 0.15
    live_probability: float = 0.1
    read_only_fraction: float = 0.3

    def __post_init__(self) -> None:
        for name in ("txn_count", "object_count", "ops_per_txn"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must be a range of counts >= 1, got {(lo, hi)}")


OBJECT_NAMES = ("x", "y", "z", "u", "v", "w")


def object_names(n: int) -> list[str]:
    return list(OBJECT_NAMES[:n]) + [f"o{i}" for i in range(len(OBJECT_NAMES), n)]


def generate(spec: GenSpec) -> History:
    """A well-formed random history, a pure function of ``spec``.

    Under the committed-version policy every read returns some version already
    committed when the read happens, so the history is valid. The adversarial
    policy sometimes returns uncommitted or made-up values instead.
    """
    rng = random.Random(spec.seed)
    n_txns = rng.randint(*spec.txn_count)
    objects = object_names(rng.randint(*spec.object_count))

    plans: dict[int, list[tuple]] = {}
    for t in range(1, n_txns + 1):
        k = rng.randint(*spec.ops_per_txn)
        if rng.random() < spec.read_only_fraction:
            n_reads = k
        else:
            n_reads = rng.randint(0, k - 1)
        plan: list[tuple] = [("r", rng.choice(objects)) for _ in range(n_reads)]
        plan += [("w", rng.choice(objects)) for _ in range(k - n_reads)]
        roll = rng.random()
        if roll < spec.live_probability:
            pass
        elif roll < spec.live_probability + spec.abort_probability:
            plan.append(("abort",))
        else:
            plan.append(("commit",))
        plans[t] = plan

    versions: dict[str, list[int]] = {x: [INIT_VALUE] for x in objects}
    buffers: dict[int, dict[str, int]] = {t: {} for t in plans}
    next_value = 1
    events = []
    pending = {t: list(p) for t, p in plans.items()}
    while pending:
        t = rng.choice(sorted(pending))
        step = pending[t].pop(0)
        if not pending[t]:
            del pending[t]
        if step[0] == "r":
            x = step[1]
            if spec.read_value_policy is ReadPolicy.ADVERSARIAL and rng.random() < 0.3:
                uncommitted = [v for b in buffers.values() for y, v in b.items() if y == x]
                value = rng.choice(uncommitted + [next_value + 1000, versions[x][-1]])
            else:
                value = rng.choice(versions[x])
            events.append(read(t, x, value))
        elif step[0] == "w":
            x = step[1]
            buffers[t][x] = next_value
            events.append(write(t, x, next_value))
            next_value += 1
        elif step[0] == "commit":
            for x, v in buffers[t].items():
                versions[x].append(v)
            events.append(commit(t))
        else:
            events.append(abort(t))
    return History(events)


def corpus(count: int, seed: int, max_txns: int = 5, max_objects: int = 3, max_ops: int = 4) -> Iterator[History]:
    """``count`` generated histories alternating between read policies."""
    rng = random.Random(seed)
    policies = (ReadPolicy.COMMITTED, ReadPolicy.ADVERSARIAL)
    for i in range(count):
        spec = GenSpec(
            txn_count=(1, max_txns),
            object_count=(1, max_objects),
            ops_per_txn=(1, max_ops),
            seed=rng.getrandbits(64),
            read_value_policy=policies[i % 2],
        )
        yield generate(spec)


def generate_workload(
    seed: int,
    max_txns: int = 8,
    max_objects: int = 6,
    max_steps: int = 40,
    read_only_fraction: float = 0.3,
    abort_probability: float = 0.1,
    live_probability: float = 0.05,
) -> list[WorkloadStep]:
    """A random interleaving script for the scheduler with at most ``max_steps`` steps."""
    rng = random.Random(seed)
    objects = object_names(rng.randint(1, max_objects))
    n_txns = rng.randint(1, max_txns)
    budget = max_steps
    scripts: dict[int, list[WorkloadStep]] = {}
    next_value = 1
    for t in range(1, n_txns + 1):
        if budget < 3:  # begin, one operation, terminal
            break
        k = rng.randint(1, min(5, budget - 2))
        if rng.random() < read_only_fraction:
            n_reads = k
        else:
            n_reads = rng.randint(0, k - 1)
        steps = [WorkloadStep("begin", t)]
        steps += [WorkloadStep("read", t, rng.choice(objects)) for _ in range(n_reads)]
        for _ in range(k - n_reads):
            steps.append(WorkloadStep("write", t, rng.choice(objects), next_value))
            next_value += 1
        roll = rng.random()
        if roll >= live_probability:
            steps.append(WorkloadStep("try_abort" if roll < live_probability + abort_probability else "try_commit", t))
        budget -= len(steps)
        scripts[t] = steps
    out = []
    while scripts:
        t = rng.choice(sorted(scripts))
        out.append(scripts[t].pop(0))
        if not scripts[t]:
            del scripts[t]
    return out
