"""A deliberately naive reference monitor for outcome comparison.

One big mutex per monitor serializes all state transitions; waiting happens
on per-operation events.  FIFO entry, FIFO waitset, morph-on-notify,
reacquire-at-tail on cancellation: the same observable contract as the real
implementation, with none of its concurrency.  Used only by the scenario
runner to cross-check grant orders, wait results, and error behavior.
"""

from __future__ import annotations

import random
import threading
from collections import deque
from typing import Dict, List, Optional

from ..errors import IllegalMonitorStateError
from ..waitset import WaitResult


class _Entry:
    __slots__ = ("thread", "event", "state", "cause")

    def __init__(self, thread: "OracleThread"):
        self.thread = thread
        self.event = threading.Event()
        self.state = "waiting"  # waiting -> entry -> granted
        self.cause: Optional[WaitResult] = None


class OracleThread:
    """Per-thread bookkeeping mirrored from the real ThreadContext."""

    def __init__(self, name: str):
        self.name = name
        self.interrupt_pending = False
        self.pending_wait: Optional[_Entry] = None
        self._mu = threading.Lock()


class OracleMonitor:
    """Reference monitor: coarse lock, FIFO queues, stable hash."""

    def __init__(self, name: str, rng: random.Random):
        self.name = name
        self._mu = threading.Lock()
        self.owner: Optional[OracleThread] = None
        self.nesting = 0
        self.entry: deque = deque()
        self.waiters: deque = deque()
        h = rng.getrandbits(31)
        self.hash = h if h else 1
        self.grant_log: List[str] = []
        self.arrivals = 0

    # internal; _mu held
    def _grant_next(self) -> None:
        if self.entry:
            rec = self.entry.popleft()
            rec.state = "granted"
            self.owner = rec.thread
            self.grant_log.append(rec.thread.name)
            rec.event.set()
        else:
            self.owner = None

    def lock(self, t: OracleThread) -> None:
        with self._mu:
            if self.owner is t:
                self.nesting += 1
                return
            self.arrivals += 1
            if self.owner is None and not self.entry:
                self.owner = t
                self.grant_log.append(t.name)
                return
            rec = _Entry(t)
            rec.state = "entry"
            self.entry.append(rec)
        while not rec.event.wait(0.2):
            pass

    def unlock(self, t: OracleThread) -> None:
        with self._mu:
            if self.owner is not t:
                raise IllegalMonitorStateError(f"{t.name} does not own {self.name}")
            if self.nesting:
                self.nesting -= 1
                return
            self._grant_next()

    def holds(self, t: OracleThread) -> bool:
        with self._mu:
            return self.owner is t

    def wait(self, t: OracleThread, timeout: Optional[float] = None) -> WaitResult:
        with self._mu:
            if self.owner is not t:
                raise IllegalMonitorStateError(f"{t.name} does not own {self.name}")
            saved = self.nesting
            self.nesting = 0
            rec = _Entry(t)
            self.waiters.append(rec)
            t.pending_wait = rec
            self._grant_next()
        result = self._await(t, rec, timeout)
        with self._mu:
            t.pending_wait = None
            self.nesting = saved
        if result is WaitResult.INTERRUPTED:
            t.interrupt_pending = False
        return result

    def _await(self, t: OracleThread, rec: _Entry, timeout: Optional[float]) -> WaitResult:
        import time

        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            with self._mu:
                if rec.state == "granted":
                    return rec.cause or WaitResult.NOTIFIED
                expired = deadline is not None and time.monotonic() >= deadline
                if (t.interrupt_pending or expired) and rec.cause is None:
                    if rec.state == "waiting":
                        # Cancel: leave the waitset, reacquire at the tail.
                        self.waiters.remove(rec)
                        rec.cause = (
                            WaitResult.INTERRUPTED
                            if t.interrupt_pending
                            else WaitResult.TIMED_OUT
                        )
                        rec.state = "entry"
                        if self.owner is None and not self.entry:
                            rec.state = "granted"
                            self.owner = t
                            self.grant_log.append(t.name)
                        else:
                            self.entry.append(rec)
                    # else: a notify already morphed us; Notified stands.
            # The state check above is authoritative; the event only
            # shortens the poll, so a racing clear is harmless.
            rec.event.wait(0.005)
            rec.event.clear()

    def notify(self, t: OracleThread) -> None:
        with self._mu:
            if self.owner is not t:
                raise IllegalMonitorStateError(f"{t.name} does not own {self.name}")
            if self.waiters:
                rec = self.waiters.popleft()
                rec.state = "entry"
                self.entry.append(rec)

    def notify_all(self, t: OracleThread) -> None:
        with self._mu:
            if self.owner is not t:
                raise IllegalMonitorStateError(f"{t.name} does not own {self.name}")
            while self.waiters:
                rec = self.waiters.popleft()
                rec.state = "entry"
                self.entry.append(rec)


class OracleSystem:
    """The oracle-side counterpart of a MonitorRuntime for scenario runs."""

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)
        self.monitors: Dict[str, OracleMonitor] = {}
        self.threads: Dict[str, OracleThread] = {}

    def monitor(self, name: str) -> OracleMonitor:
        if name not in self.monitors:
            self.monitors[name] = OracleMonitor(name, self._rng)
        return self.monitors[name]

    def thread(self, name: str) -> OracleThread:
        if name not in self.threads:
            self.threads[name] = OracleThread(name)
        return self.threads[name]

    def interrupt(self, name: str) -> None:
        t = self.thread(name)
        t.interrupt_pending = True
        rec = t.pending_wait
        if rec is not None:
            rec.event.set()
