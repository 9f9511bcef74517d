"""Hashed external waitsets: the bucket-table alternative to chain propagation.

Instead of riding the chain from owner to owner, waiting nodes park in a
global array of buckets indexed by the monitor's identity hash.  Buckets may
mix waiters of different monitors (hash collisions); a per-bucket guard
serializes append/remove/pop.  Notify still morphs waiters onto the entry
chain without wakeups, at the cost of guard acquisitions.

This strategy has no placeholder state and no second-node cancellation: a
departing waiter simply releases the chain outright, and a cancelling waiter
self-removes from its bucket and re-enqueues its own node.  The unlock
placeholder-promotion step is unreachable here, which the runtime asserts.
"""

from __future__ import annotations

import threading
from typing import TYPE_CHECKING, List, Optional, Tuple

from .markword import Monitor
from .node import (
    CLAIMED,
    ENTRY,
    PLACE_WAITSET,
    WAITING,
    QueueNode,
    ThreadContext,
)
from .parking import spin_until
from . import core

if TYPE_CHECKING:
    from .runtime import MonitorRuntime
    from .waitset import WaitResult


class WaitBucket:
    """One guarded FIFO of waiting nodes, possibly from several monitors."""

    __slots__ = ("guard", "head", "tail")

    def __init__(self) -> None:
        self.guard = threading.Lock()
        self.head: Optional[QueueNode] = None
        self.tail: Optional[QueueNode] = None

    def append(self, node: QueueNode) -> None:
        node.wait_next = None
        if self.tail is None:
            self.head = node
        else:
            self.tail.wait_next = node
        self.tail = node

    def remove(self, node: QueueNode) -> bool:
        prev = None
        cur = self.head
        while cur is not None:
            if cur is node:
                if prev is None:
                    self.head = cur.wait_next
                else:
                    prev.wait_next = cur.wait_next
                if self.tail is node:
                    self.tail = prev
                node.wait_next = None
                return True
            prev, cur = cur, cur.wait_next
        return False

    def members(self) -> List[QueueNode]:
        out = []
        cur = self.head
        while cur is not None:
            out.append(cur)
            cur = cur.wait_next
        return out


class WaitTable:
    """Fixed power-of-two array of wait buckets, indexed by identity hash."""

    def __init__(self, buckets: int = 64):
        assert buckets & (buckets - 1) == 0, "bucket count must be a power of two"
        self.buckets = [WaitBucket() for _ in range(buckets)]
        self.mask = buckets - 1

    def bucket_for(self, monitor: Monitor, hash_value: int) -> WaitBucket:
        return self.buckets[hash_value & self.mask]

    def depart(
        self,
        rt: "MonitorRuntime",
        ctx: ThreadContext,
        monitor: Monitor,
        node: QueueNode,
    ) -> None:
        """Move the owner's node into its bucket, then release the chain.

        The node must be visibly WAITING before ownership can reach any
        thread that might notify, so the status store precedes the release.
        Locked implies hashed: the displaced mark supplies the index.
        """
        bucket = self.bucket_for(monitor, node.dmw >> 1)
        ctx.counters.guard_acquisitions += 1
        with bucket.guard:
            bucket.append(node)
        node.place = PLACE_WAITSET
        node.status = WAITING
        if not monitor.try_transition(node.address, node.dmw):
            spin_until(lambda: node.next is not None)
            core.grant(ctx, node, node.next)
        # node.next may go stale here; the morph path overwrites it before
        # re-installing the node on a chain.

    def notify(
        self,
        rt: "MonitorRuntime",
        ctx: ThreadContext,
        monitor: Monitor,
        owner_node: QueueNode,
        all_waiters: bool,
    ) -> None:
        """Pop this monitor's waiter(s) under the guard and morph them."""
        from .waitset import _morph_segment

        bucket = self.bucket_for(monitor, owner_node.dmw >> 1)
        survivors: List[QueueNode] = []
        ctx.counters.guard_acquisitions += 1
        with bucket.guard:
            for member in bucket.members():
                if member.monitor_ref is not monitor:
                    continue
                if member.cas_status(WAITING, ENTRY):
                    bucket.remove(member)
                    survivors.append(member)
                    if not all_waiters:
                        break
                else:
                    # Claimed by its canceller, which cannot remove it until
                    # we drop the guard; discard it for them.
                    assert member.status == CLAIMED
                    bucket.remove(member)
        if survivors:
            _morph_segment(rt, ctx, monitor, survivors)

    def cancel(
        self,
        rt: "MonitorRuntime",
        ctx: ThreadContext,
        monitor: Monitor,
        node: QueueNode,
        cause: "WaitResult",
    ) -> Tuple[QueueNode, "WaitResult", bool]:
        """Self-removal after a won claim: leave the bucket, re-enqueue.

        Reuses the same node, so cancellation allocates nothing here.
        """
        bucket = self.bucket_for(monitor, node.dmw >> 1)
        ctx.counters.guard_acquisitions += 1
        with bucket.guard:
            bucket.remove(node)  # a notifier may have discarded it already
        node.reset_for(monitor)
        core.enqueue_and_acquire(rt, ctx, monitor, node, count_arrival=False)
        return node, cause, True
