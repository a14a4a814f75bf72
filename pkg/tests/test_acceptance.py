"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import random
import time
from collections import Counter

import pytest

from mvcheck import fuzz
from mvcheck.conflicts import conflict_order, equivalent, mvc_order, satisfies
from mvcheck.dsl import DslError, parse_history, parse_workload, serialize_history
from mvcheck.gc import collect
from mvcheck.graph import build_mvcg, find_cycle
from mvcheck.history import completion, is_legal, is_multi_versioned, is_valid
from mvcheck.oracles import (
    classify,
    corpus,
    generate_workload,
    is_mvc_opaque_bruteforce,
    is_mvc_opaque_fast,
)
from mvcheck.scheduler import run_workload

from conftest import ACCEPTANCE_LINES, H1_TEXT, H1_WORKLOAD, H2_TEXT
from equiv import random_extension, random_tsequential
from mutations import corrupt

VALID_TARGET = 10_000
WORKLOADS = 1_000
PAIRS_PER_PROPERTY = 1_000
CORPUS_SEED = 20241015


def verdict(number, title, problems, detail=""):
    status = "PASS" if not problems else "FAIL"
    line = f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    if problems:
        line += f"; {len(problems)} problem(s), first: {problems[0]}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not problems, line


@pytest.fixture(scope="module")
def differential(tmp_path_factory):
    """One pass over the generated corpus shared by criteria 2-4 and 7."""
    repro = tmp_path_factory.mktemp("acceptance-repro")
    histories, summary = [], fuzz.FuzzSummary()
    start = time.perf_counter()
    source = corpus(10**9, CORPUS_SEED, max_txns=5, max_objects=3, max_ops=4)
    while summary.counts["valid"] < VALID_TARGET:
        h = next(source)
        histories.append(h)
        summary.generated += 1
        for d in fuzz.check_history(h, bound=8, counts=summary.counts):
            summary.discrepancies.append(d)
            summary.repro_files.append(str(fuzz.write_repro(repro, len(summary.discrepancies), d)))
    elapsed = time.perf_counter() - start
    return histories, summary, elapsed


def by_kind(summary, *kinds):
    return [f"{d.kind}: {d.detail}: {serialize_history(d.history)}" for d in summary.discrepancies if d.kind in kinds]


def test_criterion_1_fixture_classification():
    start = time.perf_counter()
    h1, h2 = classify(parse_history(H1_TEXT)), classify(parse_history(H2_TEXT))
    elapsed = time.perf_counter() - start
    problems = []
    got1 = (h1.valid, h1.legal, h1.multi_versioned, h1.co_opaque, h1.mvc_opaque, h1.opaque)
    if got1 != (True, False, True, False, True, True):
        problems.append(f"H1 classified as {got1}")
    got2 = (h2.valid, h2.legal, h2.mvc_opaque, h2.opaque)
    if got2 != (True, False, False, True):
        problems.append(f"H2 classified as {got2}")
    if elapsed >= 1.0:
        problems.append(f"took {elapsed:.2f}s")
    verdict(1, "H1/H2 classification", problems, f"{elapsed * 1000:.1f} ms")


def test_criterion_2_graph_matches_brute_force(differential):
    _, summary, elapsed = differential
    problems = by_kind(summary, "graph-vs-bruteforce")
    if summary.counts["valid"] < VALID_TARGET or summary.counts["skipped"]:
        problems.append(f"only {summary.counts['decided']} decided of {summary.counts['valid']} valid")
    if elapsed >= 60:
        problems.append(f"took {elapsed:.1f}s")
    if problems and summary.repro_files:
        problems.append(f"repro files: {summary.repro_files[0]}")
    verdict(2, "graph decider agrees with brute force", problems,
            f"{summary.counts['decided']} valid histories of {summary.generated}, {elapsed:.1f}s")


def test_criterion_3_class_inclusions(differential):
    _, summary, _ = differential
    problems = by_kind(summary, "mvc-opaque-not-opaque", "co-opaque-not-mvc-opaque", "multi-versioned-co-opaque")
    h1, h2 = classify(parse_history(H1_TEXT)), classify(parse_history(H2_TEXT))
    if not (h1.mvc_opaque is True and h1.co_opaque is False):
        problems.append("H1 is not in MVCO minus CO")
    if not (h2.opaque is True and h2.mvc_opaque is False):
        problems.append("H2 is not in OPQ minus MVCO")
    c = summary.counts
    verdict(3, "class inclusions and strictness witnesses", problems,
            f"mvc-opaque {c['mvc_opaque']}, opaque {c['opaque']}, co-opaque {c['co_opaque']}, "
            f"multi-versioned {c['multi_versioned']}")


def test_criterion_4_witness_soundness(differential):
    _, summary, _ = differential
    problems = by_kind(summary, "witness")
    if summary.counts["witnesses"] != summary.counts["mvc_opaque"]:
        problems.append("some acyclic case produced no witness")
    verdict(4, "serialization witnesses are sound", problems, f"{summary.counts['witnesses']} witnesses checked")


def test_criterion_5_scheduler_soundness():
    problems = []
    counts = Counter()
    h, _, _ = run_workload(parse_workload(H1_WORKLOAD))
    if serialize_history(h) != H1_TEXT:
        problems.append(f"H1 workload emitted {serialize_history(h)}")
    for seed in range(WORKLOADS):
        steps = generate_workload(seed, max_txns=8, max_objects=6, max_steps=40)

        def mirror(state, i, seed=seed):
            if state.logged_subgraph() != state.expected_graph():
                problems.append(f"seed {seed}: graph differs from log after step {i}")

        h, stats, state = run_workload(steps, after_step=mirror)
        counts["steps"] += len(steps)
        counts["commits"] += stats.commits
        counts["skips"] += stats.version_skips
        if stats.incidents:
            problems.append(f"seed {seed}: {stats.incidents} read-rule incident(s)")
        if not is_mvc_opaque_fast(h).holds:
            problems.append(f"seed {seed}: graph decider rejects {serialize_history(h)}")
        if not is_mvc_opaque_bruteforce(h, bound=9).holds:
            problems.append(f"seed {seed}: brute force rejects {serialize_history(h)}")
        scripted_aborts = {s.txn for s in steps if s.action == "try_abort"}
        writers = {s.txn for s in steps if s.action == "write"}
        for t, rec in state.records.items():
            if t and t not in writers and t not in scripted_aborts and rec.status.value == "aborted":
                problems.append(f"seed {seed}: read-only T{t} aborted")
    verdict(5, "scheduler output is mvc-opaque and mirrored", problems,
            f"{WORKLOADS} workloads, {counts['steps']} steps, {counts['commits']} commits, "
            f"{counts['skips']} version skips")


def test_criterion_6_garbage_collection():
    problems = []
    removed = 0
    for seed in range(WORKLOADS):
        steps = generate_workload(seed, max_txns=8, max_objects=6, max_steps=40)

        def gc_step(state, i, seed=seed):
            nonlocal removed
            was_acyclic = state.graph.is_acyclic()
            removed += len(collect(state))
            if was_acyclic and not state.graph.is_acyclic():
                problems.append(f"seed {seed} step {i}: collection made the graph cyclic")
            if collect(state):
                problems.append(f"seed {seed} step {i}: collect not idempotent")
            post = state.history()
            if not is_valid(post):
                problems.append(f"seed {seed} step {i}: post-GC history invalid")
            elif not is_mvc_opaque_fast(post).holds:
                problems.append(f"seed {seed} step {i}: post-GC history not mvc-opaque")

        _, stats, state = run_workload(steps, after_step=gc_step)
        if stats.incidents:
            problems.append(f"seed {seed}: read-rule incident after collection")
        if not is_mvc_opaque_bruteforce(state.history(), bound=9).holds:
            problems.append(f"seed {seed}: brute force rejects the post-GC history")

    # second half: on cyclic graphs from unconstrained histories, cycles avoiding a vertex survive its removal
    cyclic = 0
    for h in corpus(3000, CORPUS_SEED + 1):
        if not is_valid(h):
            continue
        g = build_mvcg(h)
        cycle = find_cycle(g)
        if cycle is None:
            continue
        cyclic += 1
        for v in g.vertices:
            if v in cycle:
                continue
            smaller = g.copy()
            smaller.remove_vertex(v)
            if not all(smaller.has_edge(a, b) for a, b in zip(cycle, cycle[1:])):
                problems.append(f"cycle {cycle} lost after removing T{v} from {serialize_history(h)}")
    verdict(6, "garbage collection keeps graphs acyclic and histories mvc-opaque", problems,
            f"{removed} transactions collected, {cyclic} cyclic graphs probed")


def test_criterion_7_dsl_round_trip(differential):
    histories, _, _ = differential
    problems = []
    rng = random.Random(CORPUS_SEED)
    for h in histories:
        text = serialize_history(h)
        if parse_history(text) != h or serialize_history(parse_history(text)) != text:
            problems.append(f"round trip changed {text}")
        bad, col, _ = corrupt(text, rng)
        try:
            parse_history(bad)
            problems.append(f"silently accepted {bad}")
        except DslError as err:
            if (err.line, err.column) != (1, col):
                problems.append(f"{bad}: error at {err.line}:{err.column}, corrupted token at 1:{col}")
    verdict(7, "DSL round trip and positioned errors", problems, f"{len(histories)} histories, one corruption each")


def test_criterion_8_equivalence_properties():
    rng = random.Random(CORPUS_SEED)
    problems = []
    hits = Counter()
    for h in corpus(10**9, CORPUS_SEED + 2, max_txns=5):
        if min(hits[k] for k in ("co-equal", "equal-co-legal", "satisfy-valid", "multi-versioned")) >= PAIRS_PER_PROPERTY:
            break
        h1 = completion(h)
        co1 = conflict_order(h1).relation()

        # permutations of transactions, plus interleavings that keep CO
        for h2 in (random_tsequential(h1, rng), random_extension(h1, co1, rng)):
            if h2 is None or not equivalent(h1, h2):
                continue
            co2 = conflict_order(h2).relation()
            if co1 <= co2:
                hits["co-equal"] += 1
                if co1 != co2:
                    problems.append(f"contained conflict order not equal for {serialize_history(h1)} / {serialize_history(h2)}")
            if co1 == co2:
                hits["equal-co-legal"] += 1
                if is_legal(h1) != is_legal(h2):
                    problems.append(f"equal conflict order but legality differs for {serialize_history(h1)} / {serialize_history(h2)}")

        if not is_valid(h1):
            continue
        mvco = mvc_order(h1)
        candidates = [random_tsequential(h1, rng), random_extension(h1, mvco.relation(), rng),
                      random_extension(h1, (), rng), h1]
        for h2 in candidates:
            if h2 is None:
                continue
            ok = satisfies(h2, mvco)[0]
            if ok:
                hits["satisfy-valid"] += 1
                if not is_valid(h2):
                    problems.append(f"satisfying history is invalid: {serialize_history(h2)}")
                elif {(p.kind, p.source, p.target, p.obj) for p in mvc_order(h2)} != {
                        (p.kind, p.source, p.target, p.obj) for p in mvco}:
                    problems.append(f"satisfying history changes the order: {serialize_history(h2)}")
            if is_multi_versioned(h2):
                hits["multi-versioned"] += 1
                if ok:
                    problems.append(f"multi-versioned {serialize_history(h2)} satisfies mvc_order")
    short = [k for k in ("co-equal", "equal-co-legal", "satisfy-valid", "multi-versioned") if hits[k] < PAIRS_PER_PROPERTY]
    problems += [f"only {hits[k]} pairs for {k}" for k in short]
    verdict(8, "equivalence property suites", problems, ", ".join(f"{k} {v}" for k, v in sorted(hits.items())))
