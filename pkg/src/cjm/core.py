"""Lock and unlock over the single-word monitor.

Acquisition appends a node to the chain with one atomic swap on the mark;
the prior word tells the arriving thread everything it needs:

* neutral        -- instant ownership; generate the hash (locked implies
                    hashed) and stash it as the node's displaced mark;
* hashed         -- instant ownership; the prior word IS the displaced mark;
* queued(P)      -- P is the predecessor.  If P is a waiting placeholder the
                    arrival claims it and takes ownership directly (usurp);
                    otherwise the arrival pulls P's displaced mark forward,
                    publishes P.next, and waits for the handoff.

The pull-forward happens before P.next is published, deliberately freezing
P's succession so the displaced mark can be read race-free.

Release either deflates (restore the hashed word when the owner's node is
still the tail and no waiters exist), promotes the first waiter to a
placeholder (waiters but no successor), or hands off to the successor,
pushing the waitset along the chain.  Node recycling happens after the
critical section.

The handoff path is deliberately flat: every microsecond between the wake
of the successor and this thread's next block raises the odds the woken
thread must take a second kernel round trip for the interpreter lock.
"""

from __future__ import annotations

import time
from typing import TYPE_CHECKING

from .errors import IllegalMonitorStateError
from .markword import Monitor
from .node import (
    CLAIMED,
    OWNER,
    PLACE_CHAIN,
    PLACE_FREE,
    PLACE_WAITSET,
    WAITING,
    QueueNode,
    ThreadContext,
)

if TYPE_CHECKING:
    from .runtime import MonitorRuntime


def lock(rt: "MonitorRuntime", ctx: ThreadContext, monitor: Monitor) -> None:
    """Acquire ``monitor`` for the calling thread, blocking as needed."""
    if ctx.active:
        owned = ctx.find_owned(monitor)
        if owned is not None:
            owned.nesting += 1
            return
    node = ctx.allocate_node(monitor, rt.pin_table)
    enqueue_and_acquire(rt, ctx, monitor, node)


def enqueue_and_acquire(
    rt: "MonitorRuntime",
    ctx: ThreadContext,
    monitor: Monitor,
    node: QueueNode,
    count_arrival: bool = True,
) -> None:
    """Swap ``node`` in as the tail and drive it to ownership.

    ``node`` must be reset (entry status, displaced mark 0, no links).  Also
    used by wait cancellation to re-enqueue an existing node, which does not
    count as a fresh arrival.
    """
    counters = ctx.counters
    counters.swaps += 1
    prior, pred = monitor.swap_tail(node, count_arrival)
    if prior == 0:
        h = ctx.generate_hash()
        monitor.record_first_hash(h)
        node.dmw = (h << 1) | 1
        node.status = OWNER
        counters.grants += 1
        counters.instant_acquires += 1
        _note_acquire(rt, ctx, monitor)
        return
    if prior & 1:
        node.dmw = prior
        node.status = OWNER
        counters.grants += 1
        counters.instant_acquires += 1
        _note_acquire(rt, ctx, monitor)
        return

    while True:
        status = pred.status
        if status == CLAIMED:
            # Transient freeze (mid-promotion or mid-cancel); it resolves to
            # WAITING or OWNER in a bounded number of the claimer's steps.
            time.sleep(0)
            continue
        if status == WAITING and rt.chain_waitsets:
            if pred.cas_status(WAITING, CLAIMED):
                _usurp(rt, ctx, monitor, node, pred)
                return
            continue  # lost the claim race; re-inspect
        break

    # Normal entry: pull the displaced mark forward, then publish the link.
    while pred.dmw == 0:
        time.sleep(0)
    node.dmw = pred.dmw
    pred.next = node
    # Spin-then-park until the handoff store lands.  Lock acquisition heeds
    # neither deadlines nor interrupts, so the wait loop is bare.
    policy = rt.spin_policy
    spins = policy.spin_budget
    pause = policy.pause_hint
    while spins > 0 and node.status != OWNER:
        spins -= 1
        if pause:
            time.sleep(0)
    park = ctx.parker.park
    while node.status != OWNER:
        counters.parks += 1
        park()
    counters.grants += 1
    _note_acquire(rt, ctx, monitor)


def _note_acquire(rt: "MonitorRuntime", ctx: ThreadContext, monitor: Monitor) -> None:
    holds = ctx.cur_holds + 1
    ctx.cur_holds = holds
    if holds > ctx.max_holds:
        ctx.max_holds = holds
    if rt.record_grants:
        rt.log_grant(monitor, ctx)


def _usurp(
    rt: "MonitorRuntime",
    ctx: ThreadContext,
    monitor: Monitor,
    node: QueueNode,
    placeholder: QueueNode,
) -> None:
    """Take ownership over a claimed waiting placeholder.

    The placeholder and its saved waitset move onto the usurper's node, the
    placeholder reverting to a plain waitset member in wait-entry order.  A
    placeholder is always an extremum of the set it carries: the latest
    waiter when wait() left it behind, the earliest when unlock promoted it
    out of the set -- so one comparison against the head settles its slot.
    """
    node.dmw = placeholder.dmw
    node.ws_head = placeholder.ws_head
    node.ws_tail = placeholder.ws_tail
    placeholder.ws_head = None
    placeholder.ws_tail = None
    if node.ws_head is not None and placeholder.wait_seq < node.ws_head.wait_seq:
        node.ws_push_front(placeholder)
    else:
        node.ws_append(placeholder)
    placeholder.place = PLACE_WAITSET
    placeholder.status = WAITING  # release the claim; now a plain member
    node.status = OWNER
    ctx.counters.usurps += 1
    ctx.counters.grants += 1
    _note_acquire(rt, ctx, monitor)


def unlock(rt: "MonitorRuntime", ctx: ThreadContext, monitor: Monitor) -> None:
    """Release ``monitor``; raises if the caller does not own it."""
    active = ctx.active
    node = active[-1] if active else None
    if node is None or node.monitor_ref is not monitor or node.status != OWNER:
        node = ctx.find_owned(monitor)
        if node is None:
            raise IllegalMonitorStateError(
                f"{ctx.name} does not own {monitor.name} at unlock"
            )
    if node.nesting:
        node.nesting -= 1
        return
    ctx.cur_holds -= 1
    if node.ws_head is None:
        succ = node.next
        if succ is None:
            if monitor.try_transition(node.address, node.dmw):
                _recycle(ctx, active, node)  # deflated: hashed word restored
                return
            succ = node.next
            while succ is None:
                time.sleep(0)  # successor is mid-enqueue
                succ = node.next
        succ.status = OWNER
        counters = ctx.counters
        counters.handoffs += 1
        counters.unparks += 1
        succ.parker.unpark()
        _recycle(ctx, active, node)
        return
    release_chain(rt, ctx, node, monitor)
    ctx.release_node(node)


def _recycle(ctx: ThreadContext, active, node: QueueNode) -> None:
    if active and active[-1] is node:
        active.pop()
    else:
        active.remove(node)
    node.monitor_ref = None
    node.place = PLACE_FREE
    node.next = None
    ctx.free.append(node)


def release_chain(
    rt: "MonitorRuntime", ctx: ThreadContext, node: QueueNode, monitor: Monitor
) -> None:
    """Drive the departure of the chain-head ``node``: deflate, promote a
    waiter to placeholder, or hand off to the successor.

    Does not touch the active list; callers recycle the node afterwards.
    """
    while True:
        if node.ws_head is None:
            if node.next is None and monitor.try_transition(node.address, node.dmw):
                return  # deflated: mark restored to the hashed word
            break  # a successor exists (or just swapped in)
        if monitor.load_mark() != node.address:
            break  # successor exists; push the waitset along instead
        # Waiters but no successor: leave the first waiter behind as a
        # waiting placeholder.  Freeze it (claim) so its canceller cannot
        # race the transfer; a cancelled waiter fails the claim and is
        # discarded here, exactly as notify would discard it.
        candidate = node.ws_pop_front()
        if not candidate.cas_status(WAITING, CLAIMED):
            continue
        candidate.ws_head = node.ws_head
        candidate.ws_tail = node.ws_tail
        candidate.place = PLACE_CHAIN
        if monitor.try_transition(node.address, candidate.address, candidate):
            node.ws_head = None
            node.ws_tail = None
            candidate.status = WAITING  # live placeholder
            ctx.counters.promotions += 1
            return
        # A successor arrived mid-promotion: undo and hand off normally.
        candidate.ws_head = None
        candidate.ws_tail = None
        candidate.place = PLACE_WAITSET
        node.ws_push_front(candidate)
        candidate.status = WAITING
        break
    succ = node.next
    while succ is None:
        time.sleep(0)
        succ = node.next
    grant(ctx, node, succ)


def grant(ctx: ThreadContext, from_node: QueueNode, succ: QueueNode) -> None:
    """Pass ownership (and the waitset) from the departing head to ``succ``."""
    succ.ws_head = from_node.ws_head
    succ.ws_tail = from_node.ws_tail
    from_node.ws_head = None
    from_node.ws_tail = None
    succ.status = OWNER
    ctx.counters.handoffs += 1
    ctx.counters.unparks += 1
    succ.parker.unpark()


def holds_lock(ctx: ThreadContext, monitor: Monitor) -> bool:
    """True iff the calling thread currently owns ``monitor``."""
    return ctx.find_owned(monitor) is not None
