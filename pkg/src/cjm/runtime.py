"""The monitor runtime: thread registry, configuration, public API.

A :class:`MonitorRuntime` owns the pin table, the optional external wait
table, the spin policy, and the per-thread contexts.  All monitor operations
go through it; the calling thread's context is resolved automatically and
created on first use.

Two waitset strategies are selectable per runtime:

* ``chain``    -- waitsets propagate through the entry chain (the default);
* ``external`` -- waitsets live in a global hashed bucket table.

Both present identical observable behavior; the harness verifies that
equivalence scenario by scenario.
"""

from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, List, Optional

from . import core, waitset as waitset_mod
from .extwaitset import WaitTable
from .hashing import PinTable, hash_of
from .markword import Monitor
from .node import Counters, ThreadContext
from .parking import Parker, SpinPolicy
from .waitset import WaitResult

CHAIN = "chain"
EXTERNAL = "external"


@dataclass
class MonitorConfig:
    """Tunables; every field has the stock default.

    The stock spin budget is 0: under the GIL a busy probe steals the
    interpreter from the thread it is waiting on, so the cooperative-
    scheduler mode (omit the spin phase, park immediately) is both the
    faster and the fairer default.  Set a budget explicitly to measure the
    fixed-spin pathology.
    """

    waitset_strategy: str = CHAIN
    spin_budget: int = 0
    pause_hint: bool = True
    pin_stripes: int = 128
    wait_buckets: int = 64
    hash_seed: Optional[int] = None
    record_grants: bool = False

    def __post_init__(self) -> None:
        if self.waitset_strategy not in (CHAIN, EXTERNAL):
            raise ValueError(f"unknown waitset strategy {self.waitset_strategy!r}")


class MonitorRuntime:
    """Factory and entry point for monitors and their operations."""

    def __init__(self, config: Optional[MonitorConfig] = None):
        self.config = config or MonitorConfig()
        self.spin_policy = SpinPolicy(
            spin_budget=self.config.spin_budget, pause_hint=self.config.pause_hint
        )
        self.chain_waitsets = self.config.waitset_strategy == CHAIN
        self.pin_table = PinTable(self.config.pin_stripes)
        self.wait_table = WaitTable(self.config.wait_buckets)
        self.record_grants = self.config.record_grants
        self.monitors: List[Monitor] = []
        self.contexts: Dict[int, ThreadContext] = {}
        self._registry_mu = threading.Lock()
        self._tls = threading.local()
        self._next_ctx_id = 1
        self._grant_log: Dict[int, List[str]] = {}
        self._grant_mu = threading.Lock()
        base = self.config.hash_seed
        self._hash_seed_base = base if base is not None else 0x5DEECE66D
        self._wait_seq = itertools.count(1)

    def next_wait_seq(self) -> int:
        # next() on a count is a single atomic step under CPython.
        return next(self._wait_seq)

    # -- thread registry ---------------------------------------------------

    def register_thread(self, name: Optional[str] = None) -> ThreadContext:
        """Create and install a context for the calling thread."""
        with self._registry_mu:
            ctx_id = self._next_ctx_id
            self._next_ctx_id += 1
            ctx = ThreadContext(
                ctx_id,
                name or threading.current_thread().name,
                Parker(),
                hash_seed=self._hash_seed_base + ctx_id * 0x9E3779B9,
            )
            self.contexts[ctx_id] = ctx
        self._tls.ctx = ctx
        return ctx

    def current(self) -> ThreadContext:
        ctx = getattr(self._tls, "ctx", None)
        if ctx is None:
            ctx = self.register_thread()
        return ctx

    def context_by_id(self, ctx_id: int) -> ThreadContext:
        ctx = self.contexts.get(ctx_id)
        if ctx is None:
            raise KeyError(f"no registered thread context with id {ctx_id}")
        return ctx

    # -- monitors ----------------------------------------------------------

    def new_monitor(self, name: Optional[str] = None) -> Monitor:
        monitor = Monitor(name)
        with self._registry_mu:
            self.monitors.append(monitor)
        return monitor

    # -- operations --------------------------------------------------------

    def lock(self, monitor: Monitor) -> None:
        core.lock(self, self.current(), monitor)

    def unlock(self, monitor: Monitor) -> None:
        core.unlock(self, self.current(), monitor)

    def holds_lock(self, monitor: Monitor) -> bool:
        return core.holds_lock(self.current(), monitor)

    def wait(self, monitor: Monitor, timeout: Optional[float] = None) -> WaitResult:
        return waitset_mod.wait(self, self.current(), monitor, timeout)

    def notify(self, monitor: Monitor) -> None:
        waitset_mod.notify(self, self.current(), monitor)

    def notify_all(self, monitor: Monitor) -> None:
        waitset_mod.notify_all(self, self.current(), monitor)

    def hash_of(self, monitor: Monitor) -> int:
        return hash_of(self, self.current(), monitor)

    def interrupt(self, target: ThreadContext) -> None:
        waitset_mod.interrupt(self, target)

    @contextmanager
    def locked(self, monitor: Monitor):
        self.lock(monitor)
        try:
            yield
        finally:
            self.unlock(monitor)

    # -- instrumentation ---------------------------------------------------

    def log_grant(self, monitor: Monitor, ctx: ThreadContext) -> None:
        with self._grant_mu:
            self._grant_log.setdefault(monitor.uid, []).append(ctx.name)

    def grant_order(self, monitor: Monitor) -> List[str]:
        with self._grant_mu:
            return list(self._grant_log.get(monitor.uid, []))

    def counters_total(self) -> Counters:
        total = Counters()
        with self._registry_mu:
            contexts = list(self.contexts.values())
        for ctx in contexts:
            total.add(ctx.counters)
        return total

    def counters_snapshot(self) -> dict:
        return self.counters_total().snapshot()
