"""Randomized stress workloads with built-in invariant verification.

Each worker thread runs a seeded mix of guarded increments, timed (or
untimed) waits, notifies, nested acquisitions, and hash reads against a set
of shared monitors.  At quiescence the harness verifies:

* counter exactness -- every guarded increment is accounted for;
* the wakeup ledger -- waits entered equals results returned, and with no
  timeouts configured, every completed wait was a notify;
* hash stability -- one distinct value per monitor across all observers;
* deflation -- every touched monitor ends in its hashed (unlocked) word;
* the footprint bound -- per-thread node totals never exceed peak
  simultaneous holds plus one (plus one more when timed waits can cancel).

A nonzero exit means an invariant broke; the report carries the details.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..audit import AuditError, audit_footprint, audit_quiescent
from ..markword import decode, Hashed, Neutral
from ..runtime import MonitorConfig, MonitorRuntime
from ..waitset import WaitResult

DEFAULT_MIX = "lock:1"


def parse_mix(spec: str) -> Dict[str, float]:
    """Parse ``lock:8,wait:1,notify:1,hash:2`` into normalized weights."""
    weights: Dict[str, float] = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, value = part.partition(":")
        name = name.strip().lower()
        if name not in ("lock", "wait", "notify", "hash"):
            raise ValueError(f"unknown op {name!r} in mix")
        weights[name] = float(value) if sep else 1.0
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("mix weights must be positive")
    return {k: v / total for k, v in weights.items()}


@dataclass
class StressReport:
    threads: int
    monitors: int
    iterations: int
    seed: int
    strategy: str
    elapsed: float
    ops: int
    counters: dict
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    @property
    def ops_per_sec(self) -> float:
        return self.ops / self.elapsed if self.elapsed else 0.0

    def add(self, label: str, ok: bool, detail: str = "") -> None:
        self.checks.append((label, ok, detail))

    def render(self) -> str:
        lines = [
            f"stress threads={self.threads} monitors={self.monitors} "
            f"iters={self.iterations} seed={self.seed} strategy={self.strategy}: "
            f"{self.ops} ops in {self.elapsed:.2f}s ({self.ops_per_sec:,.0f} ops/s)"
        ]
        for label, ok, detail in self.checks:
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {label}"
                         + (f": {detail}" if detail else ""))
        return "\n".join(lines)


class _SharedState:
    """Cross-thread tallies; mutated only under the relevant monitor."""

    def __init__(self, n_monitors: int):
        self.guarded_counts = [0] * n_monitors
        self.waiters_entered = [0] * n_monitors


def run_stress(
    threads: int = 4,
    monitors: int = 1,
    iterations: int = 10000,
    seed: int = 1,
    mix: str = DEFAULT_MIX,
    strategy: str = "chain",
    spin: int = 0,
    nest_depth: int = 1,
    wait_timeout_ms: Optional[float] = 50.0,
) -> StressReport:
    """Run one stress configuration and verify its invariants.

    ``wait_timeout_ms=None`` configures untimed waits; the drain phase then
    supplies the wakeups, and the ledger must balance with zero timeouts.
    """
    assert threads > 0 and monitors > 0 and iterations > 0
    weights = parse_mix(mix)
    rt = MonitorRuntime(
        MonitorConfig(waitset_strategy=strategy, spin_budget=spin, hash_seed=seed)
    )
    mons = [rt.new_monitor(f"m{i}") for i in range(monitors)]
    shared = _SharedState(monitors)
    expected = [0] * threads  # guarded increments performed, per thread
    wait_results: List[Dict[WaitResult, int]] = [
        {r: 0 for r in WaitResult} for _ in range(threads)
    ]
    hash_seen: List[Dict[int, set]] = [dict() for _ in range(threads)]
    done = threading.Event()
    errors: List[str] = []

    op_names = sorted(weights)
    cum = []
    acc = 0.0
    for name in op_names:
        acc += weights[name]
        cum.append((acc, name))

    def pick(rng: random.Random) -> str:
        x = rng.random()
        for edge, name in cum:
            if x <= edge:
                return name
        return op_names[-1]

    single_op = op_names[0] if len(op_names) == 1 else None
    lone_monitor = mons[0] if monitors == 1 else None

    def worker(tid: int) -> None:
        rng = random.Random((seed << 16) ^ tid)
        rt.register_thread(f"stress-{tid}")
        my_expected = 0
        counts = shared.guarded_counts
        lock, unlock = rt.lock, rt.unlock
        try:
            for _ in range(iterations):
                op = single_op or pick(rng)
                if lone_monitor is not None:
                    midx, m = 0, lone_monitor
                else:
                    midx = rng.randrange(monitors)
                    m = mons[midx]
                if op == "lock":
                    if nest_depth == 1:
                        lock(m)
                        counts[midx] += 1
                        my_expected += 1
                        unlock(m)
                        continue
                    depth = rng.randint(1, nest_depth)
                    picked = sorted(rng.sample(range(monitors), min(depth, monitors)))
                    for i in picked:
                        lock(mons[i])
                    counts[picked[0]] += 1
                    my_expected += 1
                    for i in reversed(picked):
                        unlock(mons[i])
                elif op == "wait":
                    rt.lock(m)
                    shared.waiters_entered[midx] += 1
                    timeout = None if wait_timeout_ms is None else wait_timeout_ms / 1000.0
                    result = rt.wait(m, timeout)
                    wait_results[tid][result] += 1
                    rt.unlock(m)
                elif op == "notify":
                    rt.lock(m)
                    rt.notify(m)
                    rt.unlock(m)
                else:  # hash
                    h = rt.hash_of(m)
                    hash_seen[tid].setdefault(midx, set()).add(h)
        except Exception as exc:  # pragma: no cover - invariant breach path
            errors.append(f"worker {tid}: {exc!r}")
        finally:
            expected[tid] = my_expected

    def drainer() -> None:
        """Keep notifying so untimed waiters always drain at the end."""
        rt.register_thread("stress-drain")
        while not done.is_set():
            for m in mons:
                rt.lock(m)
                rt.notify_all(m)
                rt.unlock(m)
            time.sleep(0.002)

    workers = [
        threading.Thread(target=worker, args=(i,), name=f"stress-{i}", daemon=True)
        for i in range(threads)
    ]
    need_drain = "wait" in weights
    drain_thread = threading.Thread(target=drainer, name="stress-drain", daemon=True)
    t0 = time.monotonic()
    for t in workers:
        t.start()
    if need_drain:
        drain_thread.start()
    for t in workers:
        t.join()
    done.set()
    if need_drain:
        drain_thread.join()
    elapsed = time.monotonic() - t0

    report = StressReport(
        threads=threads,
        monitors=monitors,
        iterations=iterations,
        seed=seed,
        strategy=strategy,
        elapsed=elapsed,
        ops=threads * iterations,
        counters=rt.counters_snapshot(),
    )
    report.add("workers clean", not errors, "; ".join(errors[:3]))

    total_expected = sum(expected)
    total_counted = sum(shared.guarded_counts)
    report.add(
        "guarded counter exact",
        total_counted == total_expected,
        f"counted {total_counted}, performed {total_expected}",
    )

    entered = sum(shared.waiters_entered)
    returned = {r: sum(res[r] for res in wait_results) for r in WaitResult}
    total_returned = sum(returned.values())
    report.add(
        "wakeup ledger balances",
        entered == total_returned,
        f"entered {entered}, returned {total_returned} ({returned})",
    )
    if wait_timeout_ms is None and entered:
        report.add(
            "untimed waits all notified",
            returned[WaitResult.TIMED_OUT] == 0,
            f"{returned}",
        )

    stable = True
    detail = ""
    merged: Dict[int, set] = {}
    for per_thread in hash_seen:
        for midx, values in per_thread.items():
            merged.setdefault(midx, set()).update(values)
    for midx, values in merged.items():
        if len(values) > 1:
            stable = False
            detail = f"monitor {midx} saw {len(values)} distinct hashes"
            break
    report.add("hash stability", stable, detail)

    deflated = True
    detail = ""
    for m in mons:
        variant = decode(m.load_mark())
        if isinstance(variant, Neutral):
            if m.first_hash is not None:
                deflated, detail = False, f"{m.name} lost its hash"
                break
            continue  # never touched
        if not isinstance(variant, Hashed) or variant.hash != m.first_hash:
            deflated, detail = False, f"{m.name} ended as {variant}"
            break
    report.add("quiescent deflation to hashed word", deflated, detail)

    try:
        audit_quiescent(rt)
        report.add("quiescence audit", True)
    except AuditError as exc:
        report.add("quiescence audit", False, str(exc))

    timed_cancels_possible = "wait" in weights and wait_timeout_ms is not None
    slack = 2 if timed_cancels_possible else 1
    try:
        audit_footprint(rt, slack=slack)
        report.add(f"footprint bound (holds+{slack})", True)
    except AuditError as exc:
        report.add(f"footprint bound (holds+{slack})", False, str(exc))
    return report
