"""Park/unpark and the spin-then-park waiting policy.

The parker is a binary permit: unpark grants one permit (idempotent while a
permit is pending), park consumes it or blocks.  Unpark-before-park never
loses the wakeup, which is exactly the race the handoff path produces.
Park makes no protocol claims -- callers always re-check their predicate in
a loop, so spurious returns are absorbed here and never surfaced.

Spinning in CPython must stay scheduler-friendly: a raw busy loop would sit
on the interpreter for a full switch interval.  The pause hint therefore
yields (``time.sleep(0)``) instead of issuing a CPU relax instruction.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional


def now() -> float:
    """Monotonic clock used for all deadlines."""
    return time.monotonic()


class WakeReason(Enum):
    GRANT_CHECK = "grant-check"
    TIMEOUT = "timeout"
    INTERRUPT_CHECK = "interrupt-check"


@dataclass
class SpinPolicy:
    """Bounded busy-wait before blocking.

    spin_budget counts predicate probes before the first park; 0 disables
    the spin phase entirely (cooperative-scheduler mode).
    """

    spin_budget: int = 1024
    pause_hint: bool = True

    def pause(self) -> None:
        if self.pause_hint:
            time.sleep(0)


class Parker:
    """One-permit blocking point for a single thread.

    Implemented as a lock held while no permit is pending: park acquires
    (consuming the permit or blocking), unpark releases (granting it).  A
    second unpark finds the lock already released and is a no-op, giving
    binary-permit semantics with C-level acquire/release on the hot path.
    """

    __slots__ = ("_gate",)

    def __init__(self) -> None:
        self._gate = threading.Lock()
        self._gate.acquire()  # no permit initially

    def park(self, deadline: Optional[float] = None) -> WakeReason:
        """Block until a permit arrives or the deadline passes.

        Consumes the pending permit if one exists.  Returns a coarse reason;
        the caller re-verifies its own condition either way.
        """
        if deadline is None:
            self._gate.acquire()
            return WakeReason.GRANT_CHECK
        remaining = deadline - now()
        if remaining <= 0:
            return WakeReason.TIMEOUT
        if self._gate.acquire(True, remaining):
            return WakeReason.GRANT_CHECK
        return WakeReason.TIMEOUT

    def unpark(self) -> None:
        """Grant one permit; a no-op if one is already pending."""
        try:
            self._gate.release()
        except RuntimeError:
            pass  # permit already pending


def spin_then_wait(
    ctx,
    predicate: Callable[[], bool],
    policy: SpinPolicy,
    deadline: Optional[float] = None,
    heed_interrupt: bool = False,
) -> bool:
    """Wait for ``predicate`` with a bounded spin phase, then park in a loop.

    Returns True when the predicate held, False on deadline expiry or (if
    ``heed_interrupt``) a pending interrupt.  Lock acquisition passes
    heed_interrupt=False: interrupting a thread blocked on lock has no
    effect beyond a futile wakeup.
    """
    for _ in range(policy.spin_budget):
        if predicate():
            return True
        if heed_interrupt and ctx.interrupt_pending:
            return False
        if deadline is not None and now() >= deadline:
            return False
        policy.pause()
    while True:
        if predicate():
            return True
        if heed_interrupt and ctx.interrupt_pending:
            return False
        if deadline is not None and now() >= deadline:
            return False
        ctx.counters.parks += 1
        ctx.parker.park(deadline)


def spin_until(predicate: Callable[[], bool]) -> None:
    """Unbounded scheduler-friendly spin for protocol interlocks.

    Used where the other side is mid-protocol and resolves in a bounded
    number of its own steps (chain link publication, displaced-mark pull).
    Always yields: the resolving thread needs the interpreter.
    """
    while not predicate():
        time.sleep(0)
