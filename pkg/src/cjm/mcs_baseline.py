"""A classic queue lock on the same machinery, for benchmark comparison.

Same single-word cell, same nodes, same per-thread stacks and parker, but
none of the monitor features: no displaced hash, no waitsets, no recursion,
no usurping.  The word is 0 when free and holds the tail address when held.
The delta between this and the full monitor is the cost of the extra
protocol, which is what the benchmark is after.
"""

from __future__ import annotations

import time

from .markword import Monitor
from .node import OWNER, ThreadContext


class PlainMcsLock:
    """Baseline mutual exclusion: swap to enqueue, CAS-to-zero to deflate."""

    def __init__(self, name: str = "mcs"):
        self.cell = Monitor(name)

    def lock(self, ctx: ThreadContext, spin_budget: int = 0, pause_hint: bool = True) -> None:
        node = ctx.allocate_node(self.cell)
        counters = ctx.counters
        counters.swaps += 1
        prior, pred = self.cell.swap_tail(node)
        if prior == 0:
            node.status = OWNER
            counters.grants += 1
            counters.instant_acquires += 1
            ctx.note_acquire()
            return
        pred.next = node
        spins = spin_budget
        while spins > 0 and node.status != OWNER:
            spins -= 1
            if pause_hint:
                time.sleep(0)
        park = ctx.parker.park
        while node.status != OWNER:
            counters.parks += 1
            park()
        counters.grants += 1
        ctx.note_acquire()

    def unlock(self, ctx: ThreadContext) -> None:
        active = ctx.active
        node = active[-1]
        assert node.monitor_ref is self.cell, "imbalanced baseline usage"
        ctx.note_release()
        succ = node.next
        if succ is None:
            if self.cell.try_transition(node.address, 0):
                ctx.release_node(node)
                return
            succ = node.next
            while succ is None:
                time.sleep(0)
                succ = node.next
        succ.status = OWNER
        ctx.counters.handoffs += 1
        ctx.counters.unparks += 1
        succ.parker.unpark()
        ctx.release_node(node)
