"""Execute scenarios against the real runtime and the oracle, and compare.

Every scenario runs twice -- once on a fresh :class:`MonitorRuntime`, once
on the naive :class:`OracleSystem` -- and the two executions must agree on:

* grant order per monitor,
* every thread's event stream (wait results, illegal-state errors,
  in-scenario assertion outcomes),
* hash stability (within each system; values are never compared across).

The real-side run then passes the structural audits (chain shape during the
run is implied by outcomes; quiescence at the end is checked directly).

Exhaustive mode: for small scenarios the runner serializes phases (the
spans between ``sync`` barriers) and enumerates permutations of the barrier
release orders, re-running the scenario once per interleaving.  A released
thread runs until it reaches its next barrier, finishes, or visibly blocks
(no step progress within the settle window); blocked threads may resume
later when another thread unblocks them, which is exactly the cross-thread
effect under test.  This is cheap model checking, not a scheduler hijack.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..audit import AuditError, audit_quiescent
from ..errors import IllegalMonitorStateError
from ..markword import Monitor
from ..runtime import MonitorConfig, MonitorRuntime
from ..waitset import WaitResult
from .oracle import OracleSystem
from .scenario import Scenario, Step

JOIN_TIMEOUT = 30.0

_RESULT_NAMES = {
    WaitResult.NOTIFIED: "notified",
    WaitResult.TIMED_OUT: "timedout",
    WaitResult.INTERRUPTED: "interrupted",
}


@dataclass
class ExecutionRecord:
    """Observable outcome of one scenario execution on one system."""

    label: str
    grant_orders: Dict[str, List[str]] = field(default_factory=dict)
    events: Dict[str, List[Tuple[int, str, str]]] = field(default_factory=dict)
    hash_values: Dict[str, set] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    def record(self, thread: str, idx: int, kind: str, payload: str = "") -> None:
        self.events.setdefault(thread, []).append((idx, kind, payload))

    def hash_stable(self) -> bool:
        return all(len(v) <= 1 for v in self.hash_values.values())


@dataclass
class ScenarioReport:
    name: str
    passed: bool
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)
    interleavings: int = 1

    def add(self, label: str, ok: bool, detail: str = "") -> None:
        self.checks.append((label, ok, detail))
        if not ok:
            self.passed = False

    def render(self) -> str:
        lines = [f"scenario {self.name}: {'PASS' if self.passed else 'FAIL'}"
                 + (f" ({self.interleavings} interleavings)" if self.interleavings > 1 else "")]
        for label, ok, detail in self.checks:
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else ""))
        return "\n".join(lines)


class CjmAdapter:
    """Drives a MonitorRuntime for the scenario worker loop."""

    def __init__(self, scenario: Scenario, strategy: str, spin: int, seed: int):
        self.rt = MonitorRuntime(
            MonitorConfig(
                waitset_strategy=strategy,
                spin_budget=spin,
                hash_seed=seed,
                record_grants=True,
            )
        )
        self.monitors = {name: self.rt.new_monitor(name) for name in scenario.monitors}
        self.contexts: Dict[str, object] = {}

    def attach(self, thread_name: str) -> None:
        self.contexts[thread_name] = self.rt.register_thread(thread_name)

    def lock(self, t: str, m: str) -> None:
        self.rt.lock(self.monitors[m])

    def unlock(self, t: str, m: str) -> None:
        self.rt.unlock(self.monitors[m])

    def wait(self, t: str, m: str, timeout: Optional[float]) -> WaitResult:
        return self.rt.wait(self.monitors[m], timeout)

    def notify(self, t: str, m: str) -> None:
        self.rt.notify(self.monitors[m])

    def notify_all(self, t: str, m: str) -> None:
        self.rt.notify_all(self.monitors[m])

    def hash_of(self, t: str, m: str) -> int:
        return self.rt.hash_of(self.monitors[m])

    def holds(self, t: str, m: str) -> bool:
        return self.rt.holds_lock(self.monitors[m])

    def interrupt(self, t: str, target: str) -> None:
        self.rt.interrupt(self.contexts[target])

    def grant_order(self, m: str) -> List[str]:
        return self.rt.grant_order(self.monitors[m])

    def arrivals_at_least(self, m: str, k: int) -> bool:
        return self.monitors[m].arrivals >= k


class OracleAdapter:
    """Drives the reference system with the same worker loop."""

    def __init__(self, scenario: Scenario, seed: int):
        self.system = OracleSystem(seed)
        for name in scenario.monitors:
            self.system.monitor(name)

    def attach(self, thread_name: str) -> None:
        self.system.thread(thread_name)

    def lock(self, t: str, m: str) -> None:
        self.system.monitor(m).lock(self.system.thread(t))

    def unlock(self, t: str, m: str) -> None:
        self.system.monitor(m).unlock(self.system.thread(t))

    def wait(self, t: str, m: str, timeout: Optional[float]) -> WaitResult:
        return self.system.monitor(m).wait(self.system.thread(t), timeout)

    def notify(self, t: str, m: str) -> None:
        self.system.monitor(m).notify(self.system.thread(t))

    def notify_all(self, t: str, m: str) -> None:
        self.system.monitor(m).notify_all(self.system.thread(t))

    def hash_of(self, t: str, m: str) -> int:
        return self.system.monitor(m).hash

    def holds(self, t: str, m: str) -> bool:
        return self.system.monitor(m).holds(self.system.thread(t))

    def interrupt(self, t: str, target: str) -> None:
        self.system.interrupt(target)

    def grant_order(self, m: str) -> List[str]:
        return list(self.system.monitor(m).grant_log)

    def arrivals_at_least(self, m: str, k: int) -> bool:
        return self.system.monitor(m).arrivals >= k


class _Gates:
    """Plain barrier gates for normal (concurrent) execution."""

    def __init__(self, scenario: Scenario):
        self.barriers = {
            bid: threading.Barrier(parties)
            for bid, parties in scenario.barrier_parties.items()
        }

    def start(self, thread_name: str) -> None:
        pass

    def sync(self, thread_name: str, barrier_id: str) -> None:
        self.barriers[barrier_id].wait(timeout=JOIN_TIMEOUT)

    def done(self, thread_name: str) -> None:
        pass

    def tick(self, thread_name: str) -> None:
        pass


def _run_execution(
    scenario: Scenario,
    adapter,
    record: ExecutionRecord,
    gates,
) -> None:
    """Spawn one worker per program and drive the steps."""

    def worker(tname: str, steps: List[Step]) -> None:
        adapter.attach(tname)
        last_wait: Optional[WaitResult] = None
        gates.start(tname)
        for idx, step in enumerate(steps):
            gates.tick(tname)
            op = step.op
            try:
                if op == "lock":
                    adapter.lock(tname, step.arg)
                elif op == "unlock":
                    adapter.unlock(tname, step.arg)
                elif op == "wait":
                    timeout = None if step.value is None else step.value / 1000.0
                    last_wait = adapter.wait(tname, step.arg, timeout)
                    record.record(tname, idx, "wait", _RESULT_NAMES[last_wait])
                elif op == "notify":
                    adapter.notify(tname, step.arg)
                elif op == "notifyall":
                    adapter.notify_all(tname, step.arg)
                elif op == "hash":
                    h = adapter.hash_of(tname, step.arg)
                    record.hash_values.setdefault(step.arg, set()).add(h)
                    record.record(tname, idx, "hash", "read")
                elif op == "interrupt":
                    adapter.interrupt(tname, step.arg)
                elif op == "sync":
                    gates.sync(tname, step.arg)
                elif op == "await_arrivals":
                    deadline = time.monotonic() + JOIN_TIMEOUT
                    while not adapter.arrivals_at_least(step.arg, int(step.value)):
                        if time.monotonic() > deadline:
                            record.failures.append(
                                f"{tname}: await_arrivals {step.arg} {int(step.value)} timed out"
                            )
                            return
                        time.sleep(0.0005)
                elif op == "pause":
                    time.sleep(step.value / 1000.0)
                elif op == "assert_owned":
                    actual = adapter.holds(tname, step.arg)
                    expected = step.flag == "true"
                    ok = actual == expected
                    record.record(tname, idx, "assert_owned", "ok" if ok else "FAIL")
                    if not ok:
                        record.failures.append(
                            f"{tname} step {idx}: assert_owned {step.arg} {step.flag} "
                            f"but holds={actual}"
                        )
                elif op == "assert_result":
                    actual = _RESULT_NAMES.get(last_wait, "none")
                    ok = actual == step.flag
                    record.record(tname, idx, "assert_result", "ok" if ok else "FAIL")
                    if not ok:
                        record.failures.append(
                            f"{tname} step {idx}: assert_result {step.flag} but got {actual}"
                        )
                else:
                    record.failures.append(f"{tname}: unknown op {op}")
            except IllegalMonitorStateError:
                record.record(tname, idx, "imsx", op)
            except threading.BrokenBarrierError:
                record.failures.append(f"{tname} step {idx}: barrier timeout")
                return
        gates.done(tname)

    threads = [
        threading.Thread(
            target=worker, args=(tname, steps), name=f"scn-{tname}", daemon=True
        )
        for tname, steps in scenario.programs.items()
    ]
    for t in threads:
        t.start()
    deadline = time.monotonic() + JOIN_TIMEOUT
    for t in threads:
        t.join(max(0.0, deadline - time.monotonic()))
        if t.is_alive():
            record.failures.append(f"{t.name} did not finish (deadlock?)")
    for m in scenario.monitors:
        record.grant_orders[m] = adapter.grant_order(m)


def _compare(report: ScenarioReport, cjm: ExecutionRecord, oracle: ExecutionRecord) -> None:
    report.add("cjm run clean", not cjm.failures, "; ".join(cjm.failures))
    report.add("oracle run clean", not oracle.failures, "; ".join(oracle.failures))
    orders_ok = cjm.grant_orders == oracle.grant_orders
    report.add(
        "grant order matches oracle",
        orders_ok,
        "" if orders_ok else f"cjm={cjm.grant_orders} oracle={oracle.grant_orders}",
    )
    events_ok = cjm.events == oracle.events
    detail = ""
    if not events_ok:
        for tname in sorted(set(cjm.events) | set(oracle.events)):
            a, b = cjm.events.get(tname, []), oracle.events.get(tname, [])
            if a != b:
                detail = f"{tname}: cjm={a} oracle={b}"
                break
    report.add("event stream matches oracle", events_ok, detail)
    report.add("cjm hashes stable", cjm.hash_stable())
    report.add("oracle hashes stable", oracle.hash_stable())


def run_scenario(
    scenario: Scenario,
    strategy: str = "chain",
    spin: int = 0,
    seed: int = 0,
) -> ScenarioReport:
    """One concurrent execution on each system, then compare and audit."""
    report = ScenarioReport(name=f"{scenario.name}[{strategy}]", passed=True)

    cjm_adapter = CjmAdapter(scenario, strategy, spin, seed)
    cjm_record = ExecutionRecord("cjm")
    _run_execution(scenario, cjm_adapter, cjm_record, _Gates(scenario))

    oracle_adapter = OracleAdapter(scenario, seed)
    oracle_record = ExecutionRecord("oracle")
    _run_execution(scenario, oracle_adapter, oracle_record, _Gates(scenario))

    _compare(report, cjm_record, oracle_record)
    try:
        audit_quiescent(cjm_adapter.rt)
        report.add("quiescence audit", True)
    except AuditError as exc:
        report.add("quiescence audit", False, str(exc))
    return report


# -- exhaustive (serialized-phase) mode ------------------------------------


class _SerialGates:
    """Release threads one at a time per phase, in a prescribed order.

    The controller owns the schedule; workers wait for their personal go
    signal at start and at every barrier.  ``progress`` ticks on every step
    so the controller can detect a blocked thread and move on.
    """

    def __init__(self, thread_names: Sequence[str]):
        self.cond = threading.Condition()
        self.released: Dict[str, int] = {t: -1 for t in thread_names}  # phase allowed
        self.at_phase: Dict[str, int] = {t: 0 for t in thread_names}  # next gate index
        self.progress: Dict[str, int] = {t: 0 for t in thread_names}
        self.finished: Dict[str, bool] = {t: False for t in thread_names}

    def _wait_for_release(self, thread_name: str, phase: int) -> None:
        deadline = time.monotonic() + JOIN_TIMEOUT
        with self.cond:
            while self.released[thread_name] < phase:
                if time.monotonic() > deadline:
                    raise RuntimeError(f"{thread_name}: never released for phase {phase}")
                self.cond.wait(1.0)

    def start(self, thread_name: str) -> None:
        self._wait_for_release(thread_name, 0)

    def sync(self, thread_name: str, barrier_id: str) -> None:
        with self.cond:
            self.at_phase[thread_name] += 1
            phase = self.at_phase[thread_name]
            self.cond.notify_all()
        self._wait_for_release(thread_name, phase)

    def done(self, thread_name: str) -> None:
        with self.cond:
            self.finished[thread_name] = True
            self.cond.notify_all()

    def tick(self, thread_name: str) -> None:
        self.progress[thread_name] += 1

    # controller side

    def release(self, thread_name: str, phase: int) -> None:
        with self.cond:
            self.released[thread_name] = phase
            self.cond.notify_all()

    def settle(self, thread_name: str, phase: int, settle_s: float) -> None:
        """Wait until the thread leaves this phase or stops progressing."""
        deadline = time.monotonic() + JOIN_TIMEOUT
        last = -1
        while time.monotonic() < deadline:
            with self.cond:
                if self.finished[thread_name] or self.at_phase[thread_name] > phase:
                    return
            current = self.progress[thread_name]
            if current == last:
                return  # no step progress over a settle window: blocked
            last = current
            time.sleep(settle_s)


def _phase_counts(scenario: Scenario) -> Dict[str, int]:
    return {
        t: 1 + sum(1 for s in steps if s.op == "sync")
        for t, steps in scenario.programs.items()
    }


def run_scenario_exhaustive(
    scenario: Scenario,
    strategy: str = "chain",
    spin: int = 0,
    seed: int = 0,
    settle_ms: float = 25.0,
    max_interleavings: int = 2000,
    per_run_check: Optional[Callable[[MonitorRuntime, ExecutionRecord], List[str]]] = None,
) -> ScenarioReport:
    """Run every barrier-release permutation of a small scenario.

    Each interleaving must leave a quiescent runtime, stable hashes, no
    failures, and one result per wait; ``per_run_check`` can add custom
    verification (it returns a list of failure strings).
    """
    names = sorted(scenario.programs)
    if len(names) > 4:
        raise ValueError("exhaustive mode is bounded to 4 threads")
    if any(len(s) > 12 for s in scenario.programs.values()):
        raise ValueError("exhaustive mode is bounded to short programs")
    phases = _phase_counts(scenario)
    rounds = max(phases.values())
    orders_per_round = list(itertools.permutations(names))
    schedules = list(itertools.product(orders_per_round, repeat=rounds))
    if len(schedules) > max_interleavings:
        schedules = schedules[:max_interleavings]

    report = ScenarioReport(
        name=f"{scenario.name}[{strategy},exhaustive]", passed=True,
        interleavings=len(schedules),
    )
    settle_s = settle_ms / 1000.0
    outcomes = set()
    for schedule_idx, schedule in enumerate(schedules):
        adapter = CjmAdapter(scenario, strategy, spin, seed)
        record = ExecutionRecord("cjm")
        gates = _SerialGates(names)

        driver_error: List[str] = []

        def controller() -> None:
            try:
                for phase in range(rounds):
                    for tname in schedule[phase]:
                        if phases[tname] <= phase:
                            continue
                        gates.release(tname, phase)
                        gates.settle(tname, phase, settle_s)
            except Exception as exc:  # pragma: no cover
                driver_error.append(repr(exc))

        ctrl = threading.Thread(target=controller, name="scn-controller", daemon=True)
        ctrl.start()
        _run_execution(scenario, adapter, record, gates)
        ctrl.join(JOIN_TIMEOUT)

        label = f"interleaving {schedule_idx}"
        problems = list(record.failures) + driver_error
        if not record.hash_stable():
            problems.append("hash instability")
        wait_counts = {
            t: sum(1 for (_, kind, _) in evs if kind == "wait")
            for t, evs in record.events.items()
        }
        expected_waits = {
            t: sum(1 for s in steps if s.op == "wait")
            for t, steps in scenario.programs.items()
        }
        for t, expected in expected_waits.items():
            got = wait_counts.get(t, 0)
            if expected and got != expected:
                problems.append(f"{t}: {got} wait results for {expected} waits")
        try:
            audit_quiescent(adapter.rt)
        except AuditError as exc:
            problems.append(f"audit: {exc}")
        if per_run_check is not None:
            problems.extend(per_run_check(adapter.rt, record))
        outcome = tuple(
            (t, tuple(p for (_, kind, p) in evs if kind == "wait"))
            for t, evs in sorted(record.events.items())
        )
        outcomes.add(outcome)
        if problems:
            report.add(label, False, "; ".join(problems))
    report.add(
        f"{len(schedules)} interleavings, {len(outcomes)} distinct outcomes",
        True,
    )
    return report
