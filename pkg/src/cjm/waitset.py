"""wait / notify / notifyAll with wait morphing, plus cancellation.

A waiting thread keeps the node it used to acquire the lock.  The waitset is
a FIFO of such nodes hanging off the chain head's node and pushed to the
successor at every handoff, so only the current owner ever edits it.  Notify
moves the first waiter from the waitset to the chain tail with one swap and
no wakeup (wait morphing); the wake happens later, at lock handoff.

Departing via wait has two flavors:

* a successor exists -- hand it the lock and the waitset (with the departing
  node appended), becoming a plain waitset member;
* the chain is otherwise empty -- stay on the chain as a WAITING placeholder
  so the monitor keeps exactly one word of state.  An arriving locker claims
  such a placeholder and absorbs it into its own waitset (usurping, see
  core).

Timeout/interrupt cancellation arbitrates against notify with a single
status compare-exchange.  A cancelled placeholder owns the lock outright (it
is the chain head); a cancelled waitset member enqueues a second node to
reacquire, then -- as owner -- unlinks its stale node from the waitset.

Status transitions here interlock with core.lock's usurp arm; the node's
``place`` field (chain vs waitset), written only while the writer holds the
node frozen, is what lets each side decide where a node actually resides.
"""

from __future__ import annotations

import time
from enum import Enum
from typing import TYPE_CHECKING, List, Optional, Tuple

from .errors import IllegalMonitorStateError
from .markword import Monitor
from .node import (
    CLAIMED,
    ENTRY,
    OWNER,
    PLACE_CHAIN,
    PLACE_WAITSET,
    WAITING,
    QueueNode,
    ThreadContext,
)
from .parking import now
from . import core

if TYPE_CHECKING:
    from .runtime import MonitorRuntime


class WaitResult(Enum):
    NOTIFIED = "notified"
    TIMED_OUT = "timed-out"
    INTERRUPTED = "interrupted"


def wait(
    rt: "MonitorRuntime",
    ctx: ThreadContext,
    monitor: Monitor,
    timeout: Optional[float] = None,
) -> WaitResult:
    """Release ``monitor`` and sleep until notified, timed out, or interrupted.

    Returns holding the monitor again at the original recursion depth.
    ``timeout`` is in seconds.
    """
    node = ctx.find_owned(monitor)
    if node is None:
        raise IllegalMonitorStateError(f"{ctx.name} does not own {monitor.name} at wait")
    saved_nesting = node.nesting
    node.saved_nesting = saved_nesting
    node.nesting = 0
    node.wait_seq = rt.next_wait_seq()
    ctx.note_release()

    if rt.chain_waitsets:
        _depart_chain_strategy(rt, ctx, monitor, node)
    else:
        rt.wait_table.depart(rt, ctx, monitor, node)

    deadline = None if timeout is None else now() + timeout
    owning, result, reenqueued = _await_grant(rt, ctx, monitor, node, deadline)
    owning.nesting = saved_nesting
    owning.saved_nesting = 0
    if not reenqueued:
        # Reacquired in place (morph handoff or placeholder claim); the
        # re-enqueue paths run the normal acquisition accounting themselves.
        ctx.counters.wait_reacquires += 1
        ctx.note_acquire()
        if rt.record_grants:
            rt.log_grant(monitor, ctx)
    if result is WaitResult.INTERRUPTED:
        ctx.interrupt_pending = False
    return result


def _depart_chain_strategy(
    rt: "MonitorRuntime", ctx: ThreadContext, monitor: Monitor, node: QueueNode
) -> None:
    """Publish the node as waiting and resolve where it will live.

    After status becomes WAITING the node is claimable, so every exit below
    lands in a state someone is responsible for: a committed sole
    placeholder (arrivals usurp it), an absorbed waitset member (the usurper
    grants later), or -- when an arrival linked in before seeing WAITING --
    a handoff performed right here.
    """
    node.place = PLACE_CHAIN  # already true; explicit for the claim protocol
    node.status = WAITING
    while True:
        if node.place == PLACE_WAITSET:
            return  # an usurper absorbed us
        status = node.status
        if status == ENTRY or status == OWNER:
            return  # already morphed back (and possibly granted)
        if status == CLAIMED:
            time.sleep(0)  # usurper mid-absorb
            continue
        if monitor.load_mark() == node.address:
            return  # sole placeholder, committed: any later arrival usurps
        succ = node.next
        if succ is not None and node.status == WAITING:
            # An arrival linked in before observing WAITING, so it will
            # never usurp: hand over the lock ourselves and join the set.
            node.place = PLACE_WAITSET
            _append_self_and_grant(ctx, node, succ)
            return
        time.sleep(0)


def _append_self_and_grant(ctx: ThreadContext, node: QueueNode, succ: QueueNode) -> None:
    """Hand the chain to ``succ`` with ``node`` appended to its own waitset."""
    head, tail = node.ws_head, node.ws_tail
    node.ws_head = None
    node.ws_tail = None
    node.wait_next = None
    if tail is None:
        head = tail = node
    else:
        tail.wait_next = node
        tail = node
    succ.ws_head = head
    succ.ws_tail = tail
    succ.status = OWNER
    ctx.counters.handoffs += 1
    ctx.counters.unparks += 1
    succ.parker.unpark()


def _await_grant(
    rt: "MonitorRuntime",
    ctx: ThreadContext,
    monitor: Monitor,
    node: QueueNode,
    deadline: Optional[float],
) -> Tuple[QueueNode, WaitResult, bool]:
    """Park until granted ownership, cancelling on interrupt or deadline.

    The spin phase is skipped: waits are expected to be long.  Returns the
    node that ends up owning the monitor (the original, or the reacquire
    node after cancellation) and whether ownership came via a fresh enqueue.
    """
    while True:
        if node.status == OWNER:
            return node, WaitResult.NOTIFIED, False
        if ctx.interrupt_pending:
            return _cancel(rt, ctx, monitor, node, WaitResult.INTERRUPTED)
        if deadline is not None and now() >= deadline:
            return _cancel(rt, ctx, monitor, node, WaitResult.TIMED_OUT)
        ctx.counters.parks += 1
        ctx.parker.park(deadline)


def _cancel(
    rt: "MonitorRuntime",
    ctx: ThreadContext,
    monitor: Monitor,
    node: QueueNode,
    cause: WaitResult,
) -> Tuple[QueueNode, WaitResult, bool]:
    """Withdraw from the wait after a timeout or interrupt.

    Arbitrates against notify (and, for a placeholder, against usurping
    arrivals) with one compare-exchange on the node's status.  If notify got
    there first the wait simply completes as Notified.
    """
    while True:
        status = node.status
        if status == OWNER:
            return node, WaitResult.NOTIFIED, False
        if status == ENTRY:
            # Morphed onto the chain; the grant is on its way.
            _park_until_owner(rt, ctx, node)
            return node, WaitResult.NOTIFIED, False
        if status == CLAIMED:
            time.sleep(0)  # usurper or promoter holds us frozen
            continue
        if not node.cas_status(WAITING, CLAIMED):
            continue
        if node.place == PLACE_CHAIN:
            # We are the chain head (a placeholder, possibly with arrivals
            # queued behind): claiming it makes us the owner directly.
            node.status = OWNER
            return node, cause, False
        if rt.chain_waitsets:
            return _cancel_via_beta(rt, ctx, monitor, node, cause)
        return rt.wait_table.cancel(rt, ctx, monitor, node, cause)


def _cancel_via_beta(
    rt: "MonitorRuntime",
    ctx: ThreadContext,
    monitor: Monitor,
    node: QueueNode,
    cause: WaitResult,
) -> Tuple[QueueNode, WaitResult, bool]:
    """Reacquire through a second node, then excise the claimed one.

    The claimed node stays inert on whatever waitset holds it (notify skips
    claimed members); once the second node reaches the head we hold
    exclusive waitset access and can unlink it.
    """
    beta = ctx.allocate_node(monitor, rt.pin_table)
    core.enqueue_and_acquire(rt, ctx, monitor, beta, count_arrival=False)
    removed = beta.ws_remove(node)
    # A notifier or promoter may already have discarded the claimed node;
    # either way it is detached now.
    assert removed or node.wait_next is None
    ctx.release_node(node)
    return beta, cause, True


def _park_until_owner(rt: "MonitorRuntime", ctx: ThreadContext, node: QueueNode) -> None:
    while node.status != OWNER:
        ctx.counters.parks += 1
        ctx.parker.park(None)


def notify(rt: "MonitorRuntime", ctx: ThreadContext, monitor: Monitor) -> None:
    """Morph the first live waiter onto the entry chain.  No wakeups."""
    node = ctx.find_owned(monitor)
    if node is None:
        raise IllegalMonitorStateError(f"{ctx.name} does not own {monitor.name} at notify")
    if rt.chain_waitsets:
        while True:
            waiter = node.ws_pop_front()
            if waiter is None:
                return
            if waiter.cas_status(WAITING, ENTRY):
                _morph_segment(rt, ctx, monitor, [waiter])
                return
            # Claimed by its canceller: drop it and try the next waiter.
    else:
        rt.wait_table.notify(rt, ctx, monitor, node, all_waiters=False)


def notify_all(rt: "MonitorRuntime", ctx: ThreadContext, monitor: Monitor) -> None:
    """Morph every live waiter onto the chain with a single tail swap."""
    node = ctx.find_owned(monitor)
    if node is None:
        raise IllegalMonitorStateError(
            f"{ctx.name} does not own {monitor.name} at notifyAll"
        )
    if rt.chain_waitsets:
        survivors = []
        while True:
            waiter = node.ws_pop_front()
            if waiter is None:
                break
            if waiter.cas_status(WAITING, ENTRY):
                survivors.append(waiter)
        if survivors:
            _morph_segment(rt, ctx, monitor, survivors)
    else:
        rt.wait_table.notify(rt, ctx, monitor, node, all_waiters=True)


def _morph_segment(
    rt: "MonitorRuntime", ctx: ThreadContext, monitor: Monitor, segment: List[QueueNode]
) -> None:
    """Append already-morphed (ENTRY) waiters to the chain in wait order.

    The segment is pre-linked so one swap installs all of it; the prior
    tail's next then points at the segment head, exactly as if each member
    had enqueued itself.
    """
    for i, member in enumerate(segment):
        member.next = segment[i + 1] if i + 1 < len(segment) else None
        member.wait_next = None
        member.place = PLACE_CHAIN
        assert member.dmw != 0  # carried from its original acquisition
    ctx.counters.swaps += 1
    prior, pred = monitor.swap_tail(segment[-1], count_arrival=False)
    assert pred is not None  # the caller owns the monitor, so a chain exists
    pred.next = segment[0]


def interrupt(rt: "MonitorRuntime", target: ThreadContext) -> None:
    """Post an interrupt: pending flag plus a wakeup.

    Only wait observes it; lock acquisition ignores interrupts.
    """
    target.interrupt_pending = True
    target.parker.unpark()
