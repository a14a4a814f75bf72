"""Differential harness: graph decider against brute force, plus class inclusions."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .conflicts import mvc_order, satisfies
from .dsl import serialize_history
from .history import History, is_legal, is_valid, real_time_pairs, txn_order
from . import oracles

log = logging.getLogger(__name__)


@dataclass
class Discrepancy:
    kind: str
    history: History
    detail: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "history": serialize_history(self.history), "detail": self.detail}


@dataclass
class FuzzSummary:
    generated: int = 0
    counts: Counter = field(default_factory=Counter)
    discrepancies: list[Discrepancy] = field(default_factory=list)
    repro_files: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def to_json(self) -> dict:
        return {
            "schema_version": oracles.SCHEMA_VERSION,
            "generated": self.generated,
            "counts": dict(sorted(self.counts.items())),
            "discrepancies": [d.to_json() for d in self.discrepancies],
            "repro_files": list(self.repro_files),
        }


def witness_problems(h: History, witness: History) -> list[str]:
    problems = []
    ok, pair = satisfies(witness, mvc_order(h))
    if not ok:
        problems.append(f"witness breaks {pair.describe() if pair else 'equivalence'}")
    pos = {t: i for i, t in enumerate(txn_order(witness))}
    if any(pos[k] > pos[m] for k, m in real_time_pairs(h)):
        problems.append("witness breaks real-time order")
    if not is_legal(witness):
        problems.append("witness is not legal")
    return problems


def check_history(h: History, bound: int, counts: Optional[Counter] = None) -> list[Discrepancy]:
    """Run every differential on one history; return what disagreed."""
    counts = Counter() if counts is None else counts
    if not is_valid(h):
        counts["invalid"] += 1
        return []
    counts["valid"] += 1
    found = []
    try:
        brute = oracles.is_mvc_opaque_bruteforce(h, bound)
        opaque = oracles.is_opaque_bruteforce(h, bound).holds
        co_opaque = oracles.is_co_opaque_bruteforce(h, bound).holds
    except oracles.BoundExceeded:
        counts["skipped"] += 1
        return []
    fast = oracles.is_mvc_opaque_fast(h)
    multi = not is_legal(h)
    counts["decided"] += 1
    counts["mvc_opaque"] += fast.holds
    counts["opaque"] += opaque
    counts["co_opaque"] += co_opaque
    counts["multi_versioned"] += multi

    if fast.holds != brute.holds:
        found.append(Discrepancy("graph-vs-bruteforce", h, f"graph={fast.holds} bruteforce={brute.holds}"))
    if brute.holds and not opaque:
        found.append(Discrepancy("mvc-opaque-not-opaque", h, "mvc-opaque history is not opaque"))
    if co_opaque and not brute.holds:
        found.append(Discrepancy("co-opaque-not-mvc-opaque", h, "co-opaque history is not mvc-opaque"))
    if multi and co_opaque:
        found.append(Discrepancy("multi-versioned-co-opaque", h, "multi-versioned history is co-opaque"))
    if fast.witness is not None:
        counts["witnesses"] += 1
        for problem in witness_problems(h, fast.witness):
            found.append(Discrepancy("witness", h, problem))
    return found


def run(histories: Iterable[History], bound: int, repro_dir: Optional[Path] = None) -> FuzzSummary:
    summary = FuzzSummary()
    for h in histories:
        summary.generated += 1
        for d in check_history(h, bound, summary.counts):
            log.warning("discrepancy %s: %s on %s", d.kind, d.detail, d.history)
            summary.discrepancies.append(d)
            if repro_dir is not None:
                summary.repro_files.append(str(write_repro(repro_dir, len(summary.discrepancies), d)))
    return summary


def write_repro(directory: Path, n: int, d: Discrepancy) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"repro-{n:04d}-{d.kind}.hist"
    path.write_text(f"# {d.kind}: {d.detail}\n{serialize_history(d.history)}\n", encoding="utf-8")
    return path


def fuzz(
    count: int,
    seed: int,
    max_txns: int = 4,
    max_objects: int = 3,
    bound: Optional[int] = None,
    repro_dir: Optional[Path] = None,
) -> FuzzSummary:
    bound = oracles.default_bound() if bound is None else bound
    return run(oracles.corpus(count, seed, max_txns, max_objects), bound, repro_dir)
