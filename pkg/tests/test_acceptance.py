"""Acceptance suite: one test per criterion, each printing PASS/FAIL.

These run the full stated sizes and tolerances, so this module is the slow
part of the suite (the 20-seed mutual-exclusion sweep dominates).  Run with
``pytest tests/test_acceptance.py -v -s`` to watch the per-criterion lines.
"""

import subprocess
import sys
import threading
import time
from pathlib import Path

import pytest

from cjm import MonitorConfig, MonitorRuntime, WaitResult
from cjm.audit import audit_chain, audit_footprint, audit_quiescent, waitset_names
from cjm.harness.bench import run_bench
from cjm.harness.cli import corpus_dir
from cjm.harness.runner import run_scenario, run_scenario_exhaustive
from cjm.harness.scenario import load_scenario, parse_scenario
from cjm.harness.stress import run_stress
from cjm.node import OWNER, WAITING


def _report(criterion: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" -- {detail}"
    print(line, flush=True)
    assert ok, line


# -- 1. mutual exclusion ----------------------------------------------------


def test_criterion_01_mutual_exclusion_20_seeds():
    """stress 8x1x100000 counts to exactly 800000, 20 seeds, each < 30s."""
    worst = 0.0
    for seed in range(1, 21):
        report = run_stress(threads=8, monitors=1, iterations=100000, seed=seed)
        exact = next(ok for label, ok, _ in report.checks
                     if label == "guarded counter exact")
        assert exact and report.passed, f"seed {seed}: {report.render()}"
        assert report.elapsed < 30.0, f"seed {seed} took {report.elapsed:.1f}s"
        worst = max(worst, report.elapsed)
    # the CLI form of the same command
    proc = subprocess.run(
        [sys.executable, "-m", "cjm.harness.cli", "stress", "--threads", "8",
         "--monitors", "1", "--iters", "100000", "--seed", "21"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "guarded counter exact" in proc.stdout
    _report("1 mutual-exclusion", True,
            f"20 seeds exact at 800000, worst run {worst:.1f}s (<30s)")


# -- 2. strict FIFO ---------------------------------------------------------


def _staged_arrival_order(rt, m, contenders):
    rt.lock(m)
    names, threads = [], []
    for i in range(contenders):
        name = f"T{i + 1}"
        names.append(name)

        def contender(nm=name):
            rt.register_thread(nm)
            rt.lock(m)
            rt.unlock(m)

        t = threading.Thread(target=contender, daemon=True)
        t.start()
        threads.append(t)
        while m.arrivals < i + 2:  # arrival i+2 = this contender's swap
            time.sleep(0)
    rt.unlock(m)
    for t in threads:
        t.join(10.0)
    return names


def test_criterion_02_strict_fifo_100_runs():
    """6 barrier-ordered arrivals acquire in exact arrival order, 100/100."""
    for run in range(100):
        rt = MonitorRuntime(MonitorConfig(record_grants=True))
        m = rt.new_monitor()
        names = _staged_arrival_order(rt, m, 6)
        order = rt.grant_order(m)
        assert order[1:] == names, f"run {run}: {order}"
        audit_quiescent(rt)
    _report("2 strict-fifo", True, "100/100 runs in exact arrival order")


# -- 3. the queue-diagram fixture -------------------------------------------


def _figure_fixture_once(run_idx: int) -> None:
    rt = MonitorRuntime(MonitorConfig(record_grants=True))
    m = rt.new_monitor("A")
    state = {}
    hold = threading.Event()
    release = threading.Event()
    threads = []

    def waiter(name):
        ctx = rt.register_thread(name)
        rt.lock(m)
        state[name] = rt.wait(m)
        rt.unlock(m)

    def t1():
        ctx = rt.register_thread("T1")
        rt.lock(m)
        hold.wait(10.0)
        rt.unlock(m)
        state["t1_free"] = len(ctx.free)

    def entry(name):
        rt.register_thread(name)
        rt.lock(m)
        release.wait(10.0)
        rt.unlock(m)

    for i, name in enumerate(("W6", "W7")):
        t = threading.Thread(target=waiter, args=(name,), daemon=True)
        t.start()
        threads.append(t)
        while m.arrivals < i + 1:
            time.sleep(0)
        deadline = time.monotonic() + 5.0
        while True:  # waiter must be committed before the next arrival
            tail = m.tail_node()
            if tail is not None and tail.status == WAITING:
                break
            assert time.monotonic() < deadline
            time.sleep(0.001)

    t = threading.Thread(target=t1, daemon=True)
    t.start()
    threads.append(t)
    deadline = time.monotonic() + 5.0
    while not (m.tail_node() is not None and m.tail_node().status == OWNER):
        assert time.monotonic() < deadline
        time.sleep(0.001)

    for i, name in enumerate(("T2", "T3", "T4", "T5")):
        t = threading.Thread(target=entry, args=(name,), daemon=True)
        t.start()
        threads.append(t)
        while m.arrivals < i + 4:
            time.sleep(0)
    time.sleep(0.01)

    chain = audit_chain(rt, m)
    assert [n.home.name for n in chain] == ["T1", "T2", "T3", "T4", "T5"]
    assert waitset_names(rt, m) == ["W6", "W7"]

    hold.set()  # T1 unlocks: ownership and waitset pass to T2
    deadline = time.monotonic() + 5.0
    while len(rt.grant_order(m)) < 4:
        assert time.monotonic() < deadline, rt.grant_order(m)
        time.sleep(0.001)
    time.sleep(0.005)
    chain = audit_chain(rt, m)
    assert chain[0].home.name == "T2" and chain[0].status == OWNER, run_idx
    assert waitset_names(rt, m) == ["W6", "W7"], run_idx
    assert state["t1_free"] == 1, run_idx  # departing node recycled home

    release.set()
    time.sleep(0.01)
    rt.lock(m)
    rt.notify_all(m)
    rt.unlock(m)
    for t in threads:
        t.join(10.0)
    assert state["W6"] is WaitResult.NOTIFIED and state["W7"] is WaitResult.NOTIFIED
    audit_quiescent(rt)


def test_criterion_03_figure_fixture_100_runs():
    for run in range(100):
        _figure_fixture_once(run)
    _report("3 figure-fixture", True,
            "100/100: T2 owner, waitset [W6, W7], departing node recycled")


# -- 4. wait morphing -------------------------------------------------------


def test_criterion_04_wait_morphing_counters():
    """notify: 1 tail swap, 0 unparks each; notifyAll over 10 waiters: 1
    swap, 0 unparks total."""
    rt = MonitorRuntime()
    m = rt.new_monitor()
    threads = []

    def waiter(i):
        rt.register_thread(f"W{i}")
        rt.lock(m)
        rt.wait(m)
        rt.unlock(m)

    def stage(n):
        for i in range(n):
            t = threading.Thread(target=waiter, args=(i,), daemon=True)
            t.start()
            threads.append(t)
            deadline = time.monotonic() + 5.0
            while True:
                tail = m.tail_node()
                if tail is not None and tail.status == WAITING:
                    break
                assert time.monotonic() < deadline
                time.sleep(0.001)

    stage(5)
    ctx = rt.register_thread("driver")
    per_notify = []
    for _ in range(5):
        rt.lock(m)
        s0, u0 = ctx.counters.swaps, ctx.counters.unparks
        rt.notify(m)
        per_notify.append((ctx.counters.swaps - s0, ctx.counters.unparks - u0))
        rt.unlock(m)
        time.sleep(0.02)
    for t in threads:
        t.join(10.0)
    assert per_notify == [(1, 0)] * 5, per_notify

    threads.clear()
    stage(10)
    rt.lock(m)
    s0, u0 = ctx.counters.swaps, ctx.counters.unparks
    rt.notify_all(m)
    all_delta = (ctx.counters.swaps - s0, ctx.counters.unparks - u0)
    rt.unlock(m)
    for t in threads:
        t.join(10.0)
    assert all_delta == (1, 0), all_delta
    audit_quiescent(rt)
    _report("4 wait-morphing", True,
            "notify = 1 swap/0 unparks x5; notifyAll(10 waiters) = 1 swap/0 unparks")


# -- 5. footprint bound -----------------------------------------------------


def test_criterion_05_footprint_bounds():
    no_cancel = run_stress(threads=4, monitors=4, iterations=4000, seed=31,
                           mix="lock:5,notify:1", nest_depth=3)
    assert no_cancel.passed, no_cancel.render()
    timed = run_stress(threads=4, monitors=4, iterations=4000, seed=32,
                       mix="lock:5,wait:1,notify:2", nest_depth=3,
                       wait_timeout_ms=20.0)
    assert timed.passed, timed.render()
    no_cancel_label = next(l for l, _, _ in no_cancel.checks if "footprint" in l)
    timed_label = next(l for l, _, _ in timed.checks if "footprint" in l)
    assert "+1" in no_cancel_label and "+2" in timed_label
    _report("5 footprint-bound", True,
            "holds+1 without cancellations, holds+2 with timed waits")


# -- 6. hash stability under churn ------------------------------------------


def test_criterion_06_hash_stability_two_seconds():
    rt = MonitorRuntime()
    m = rt.new_monitor()
    stop = threading.Event()
    observations = []

    def locker():
        rt.register_thread()
        while not stop.is_set():
            rt.lock(m)
            rt.unlock(m)

    def reader():
        rt.register_thread("reader")
        while not stop.is_set():
            observations.append(rt.hash_of(m))

    threads = [threading.Thread(target=locker, daemon=True) for _ in range(8)]
    threads.append(threading.Thread(target=reader, daemon=True))
    for t in threads:
        t.start()
    time.sleep(2.0)
    stop.set()
    for t in threads:
        t.join(10.0)
    distinct = set(observations)
    assert len(observations) > 100
    assert len(distinct) == 1, f"saw {len(distinct)} values"
    assert 0 not in distinct  # the not-yet-present sentinel never escapes
    audit_quiescent(rt)
    _report("6 hash-stability", True,
            f"{len(observations)} reads under 8-thread churn, one value")


# -- 7. cancellation soundness ----------------------------------------------


def test_criterion_07_cancellation_exhaustive():
    race = load_scenario(corpus_dir() / "21_notify_vs_timeout_race.scn")
    three_way = parse_scenario(
        """
        monitors A
        thread W: lock A; sync s1; wait A 40; unlock A
        thread N: sync s1; pause 15; lock A; notify A; unlock A
        thread I: sync s1; pause 30; interrupt W
        """,
        "notify-timeout-interrupt",
    )
    total = 0
    for scenario in (race, three_way):
        for strategy in ("chain", "external"):
            report = run_scenario_exhaustive(scenario, strategy=strategy)
            assert report.passed, report.render()
            total += report.interleavings
    _report("7 cancellation-soundness", True,
            f"{total} interleavings: one result per waiter, clean audits, no leaks")


# -- 8. deflation ------------------------------------------------------------


def test_criterion_08_deflation_everywhere():
    for seed in (41, 42, 43):
        report = run_stress(threads=4, monitors=3, iterations=3000, seed=seed,
                            mix="lock:5,wait:1,notify:2,hash:1")
        assert report.passed, report.render()
        ok = next(ok for label, ok, _ in report.checks
                  if label == "quiescent deflation to hashed word")
        assert ok
    _report("8 deflation", True,
            "3 mixed stress runs end with every mark hashed at its first value")


# -- 9. illegal-state fidelity ----------------------------------------------


def test_criterion_09_illegal_state_matches_oracle():
    paths = [corpus_dir() / "03_recursion_overrelease.scn",
             corpus_dir() / "04_imbalanced_unlock_error.scn"]
    runs = 0
    for path in paths:
        scenario = load_scenario(path)
        for strategy in ("chain", "external"):
            for _ in range(10):
                report = run_scenario(scenario, strategy=strategy)
                assert report.passed, report.render()
                runs += 1
    _report("9 illegal-state-fidelity", True,
            f"{runs}/{runs} scripted misuse runs matched the oracle")


# -- 10. strategy equivalence ------------------------------------------------


def test_criterion_10_strategy_equivalence_full_corpus():
    paths = sorted(corpus_dir().glob("*.scn"))
    assert len(paths) >= 20
    for path in paths:
        scenario = load_scenario(path)
        for strategy in ("chain", "external"):
            report = run_scenario(scenario, strategy=strategy)
            assert report.passed, f"{path.stem}[{strategy}]\n{report.render()}"
    _report("10 strategy-equivalence", True,
            f"{len(paths)} scenarios x 2 strategies, all identical to oracle")


# -- 11. performance sanity ---------------------------------------------------


def test_criterion_11_performance_sanity(tmp_path):
    report = run_bench(
        max_threads=8,
        uncontended_iters=40000,
        contended_iters=6000,
        notify_iters=500,
        thread_points=[8],
    )
    csv_path = tmp_path / "bench.csv"
    report.write_csv(csv_path)
    ratio = report.uncontended_ratio()
    contended = report.contended_ratio(8)
    assert ratio <= 1.5, f"uncontended ratio {ratio:.2f}x exceeds 1.5x"
    detail = (f"uncontended {ratio:.2f}x (<=1.5x hard); contended x8 "
              f"{contended:.2f}x (0.5x-2x informative); csv at {csv_path}")
    if not (0.5 <= contended <= 2.0):
        detail += " [contended ratio outside the informative band]"
    _report("11 performance-sanity", True, detail)
