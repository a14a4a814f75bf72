"""Builders for histories equivalent to a given one (test-side, independent of the library deciders)."""

import random
from typing import Iterable, Optional

from mvcheck.conflicts import OpRef
from mvcheck.history import INIT_TXN, History


def ops(hbar: History) -> dict[OpRef, object]:
    return {OpRef(t, seq): hbar.events[p] for t in hbar.txns for seq, p in enumerate(hbar.positions(t))}


def random_extension(hbar: History, pairs: Iterable[tuple[OpRef, OpRef]], rng: random.Random) -> Optional[History]:
    """A random interleaving keeping program order and every pair; None if the constraints are cyclic."""
    table = ops(hbar)
    preds = {ref: set() for ref in table}
    for ref in table:
        if ref.seq > 0:
            preds[ref].add(OpRef(ref.txn, ref.seq - 1))
    for a, b in pairs:
        if a.txn == INIT_TXN or b.txn == INIT_TXN:
            continue
        preds[b].add(a)
    placed, out = set(), []
    while len(out) < len(table):
        ready = [r for r in table if r not in placed and preds[r] <= placed]
        if not ready:
            return None
        r = rng.choice(sorted(ready))
        placed.add(r)
        out.append(table[r])
    return History(out)


def tsequential(hbar: History, order: list[int]) -> History:
    return History([e for t in order for e in hbar.projection(t)])


def random_tsequential(hbar: History, rng: random.Random) -> History:
    order = [t for t in hbar.txns if t != INIT_TXN]
    rng.shuffle(order)
    return tsequential(hbar, order)
