"""Queue nodes and per-thread node management.

Every lock acquisition contributes one node to the monitor's chain; the node
carries all the state a classic fat monitor would hold (owner, nesting,
waiters, displaced hash).  Nodes live on exactly one of their home thread's
two intrusive stacks:

* ``active`` -- nodes currently enqueued on a chain or parked on a waitset,
  top of stack = most recently acquired monitor;
* ``free``   -- recycled nodes awaiting reuse.

Nodes are only ever recycled to the thread that allocated them, so a thread
that never holds more than K monitors at once ends up owning at most K+1
nodes (one extra for the transient cancellation helper).

Python objects have no stable raw address, so each node is assigned a
synthetic address from a process-wide bump allocator in multiples of
``NODE_ALIGNMENT``; the low tag bit of a queued mark word is therefore always
free.  A registry maps addresses back to live nodes for the slow paths that
must chase a tail word.
"""

from __future__ import annotations

import threading
from typing import TYPE_CHECKING, List, Optional

if TYPE_CHECKING:
    from .markword import Monitor
    from .parking import Parker

NODE_ALIGNMENT = 16

# Node status values.  Interior chain nodes are ENTRY; the chain head is
# OWNER, or WAITING when the head is a placeholder left behind by wait(),
# or CLAIMED while exactly one thread holds the node frozen for a transfer
# (usurp, cancellation, placeholder promotion).
ENTRY = 0
OWNER = 1
WAITING = 2
CLAIMED = 3

STATUS_NAMES = {ENTRY: "entry", OWNER: "owner", WAITING: "waiting", CLAIMED: "claimed"}

# Where the node currently resides, from the point of view of the protocol.
# Maintained so a cancelling waiter that wins the status claim can tell a
# chain placeholder (it now owns the lock) from a waitset member (it must
# take the two-node cancellation path).  Writers update place only while
# they hold the node CLAIMED or before publishing WAITING.
PLACE_FREE = 0
PLACE_CHAIN = 1
PLACE_WAITSET = 2

_addr_mu = threading.Lock()
_next_addr = NODE_ALIGNMENT


def _assign_address(node: "QueueNode") -> int:
    global _next_addr
    with _addr_mu:
        addr = _next_addr
        _next_addr += NODE_ALIGNMENT
    return addr


class QueueNode:
    """One element of a monitor's chain, augmented with monitor state.

    Shared fields (``status``, ``next``, ``dmw``, ``place``) follow a
    single-writer-per-transition discipline; the only read-modify-write is
    the status compare-exchange, serialized by the per-node mutex.  The
    waitset links are touched only by the thread that currently owns the
    monitor the node belongs to.
    """

    __slots__ = (
        "address",
        "status",
        "next",
        "dmw",
        "place",
        "ws_head",
        "ws_tail",
        "wait_next",
        "wait_seq",
        "nesting",
        "saved_nesting",
        "monitor_ref",
        "home",
        "parker",
        "_mu",
    )

    def __init__(self, home: "ThreadContext"):
        self.address = _assign_address(self)
        self.status = ENTRY
        self.next: Optional[QueueNode] = None
        self.dmw = 0
        self.place = PLACE_FREE
        self.ws_head: Optional[QueueNode] = None
        self.ws_tail: Optional[QueueNode] = None
        self.wait_next: Optional[QueueNode] = None
        self.wait_seq = 0
        self.nesting = 0
        self.saved_nesting = 0
        self.monitor_ref: Optional["Monitor"] = None
        self.home = home
        self.parker = home.parker
        self._mu = threading.Lock()

    def cas_status(self, expected: int, desired: int) -> bool:
        """Atomic compare-exchange on the status word."""
        with self._mu:
            if self.status != expected:
                return False
            self.status = desired
            return True

    def reset_for(self, monitor: "Monitor") -> None:
        """Reinitialize a free node for enqueueing on ``monitor``."""
        self.status = ENTRY
        self.next = None
        self.dmw = 0
        self.place = PLACE_CHAIN
        self.ws_head = None
        self.ws_tail = None
        self.wait_next = None
        self.wait_seq = 0
        self.nesting = 0
        self.saved_nesting = 0
        self.monitor_ref = monitor

    # Waitset plumbing.  A waitset is a FIFO of nodes linked through
    # wait_next, rooted in the head/tail fields of the node that currently
    # heads the chain.  Only the monitor's owner may call these.

    def ws_append(self, member: "QueueNode") -> None:
        member.wait_next = None
        if self.ws_tail is None:
            self.ws_head = member
        else:
            self.ws_tail.wait_next = member
        self.ws_tail = member

    def ws_pop_front(self) -> Optional["QueueNode"]:
        member = self.ws_head
        if member is None:
            return None
        self.ws_head = member.wait_next
        if self.ws_head is None:
            self.ws_tail = None
        member.wait_next = None
        return member

    def ws_push_front(self, member: "QueueNode") -> None:
        member.wait_next = self.ws_head
        self.ws_head = member
        if self.ws_tail is None:
            self.ws_tail = member

    def ws_remove(self, member: "QueueNode") -> bool:
        """Unlink ``member`` if present; tolerate absence (idempotent)."""
        prev = None
        cur = self.ws_head
        while cur is not None:
            if cur is member:
                if prev is None:
                    self.ws_head = cur.wait_next
                else:
                    prev.wait_next = cur.wait_next
                if self.ws_tail is member:
                    self.ws_tail = prev
                member.wait_next = None
                return True
            prev, cur = cur, cur.wait_next
        return False

    def ws_members(self) -> List["QueueNode"]:
        out = []
        cur = self.ws_head
        while cur is not None:
            out.append(cur)
            cur = cur.wait_next
        return out

    def __repr__(self) -> str:
        mon = self.monitor_ref.name if self.monitor_ref is not None else "-"
        return (
            f"<node {self.address:#x} t{self.home.id} {STATUS_NAMES[self.status]} "
            f"mon={mon} nest={self.nesting}>"
        )


class Counters:
    """Per-thread instrumentation, single-writer, summed at quiescence."""

    __slots__ = (
        "parks",
        "unparks",
        "swaps",
        "allocations",
        "handoffs",
        "instant_acquires",
        "usurps",
        "grants",
        "wait_reacquires",
        "promotions",
        "guard_acquisitions",
    )

    FIELDS = (
        "parks",
        "unparks",
        "swaps",
        "allocations",
        "handoffs",
        "instant_acquires",
        "usurps",
        "grants",
        "wait_reacquires",
        "promotions",
        "guard_acquisitions",
    )

    def __init__(self) -> None:
        for f in self.FIELDS:
            setattr(self, f, 0)

    def snapshot(self) -> dict:
        return {f: getattr(self, f) for f in self.FIELDS}

    def add(self, other: "Counters") -> None:
        for f in self.FIELDS:
            setattr(self, f, getattr(self, f) + getattr(other, f))


class ThreadContext:
    """Per-thread registry entry: node stacks, interrupt flag, parker.

    ``active`` and ``free`` are owner-thread-only.  ``interrupt_pending``
    and the parker may be poked from any thread.
    """

    def __init__(self, ctx_id: int, name: str, parker: "Parker", hash_seed: int):
        self.id = ctx_id
        self.name = name
        self.active: List[QueueNode] = []
        self.free: List[QueueNode] = []
        self.interrupt_pending = False
        self.parker = parker
        self.counters = Counters()
        self.cur_holds = 0
        self.max_holds = 0
        import random

        self._hash_rng = random.Random(hash_seed)

    def allocate_node(self, monitor: "Monitor", pin_table=None) -> QueueNode:
        """Pop a free node (or grow) and prepare it for ``monitor``.

        A reused node's fields may still be examined by a pinned hash
        reader; when any pins are outstanding, block until the node's pin
        stripe drains before the reset.
        """
        if self.free:
            node = self.free.pop()
            if pin_table is not None and pin_table.outstanding:
                pin_table.drain(node)
        else:
            node = QueueNode(self)
            self.counters.allocations += 1
        node.reset_for(monitor)
        self.active.append(node)
        return node

    def release_node(self, node: QueueNode) -> None:
        """Return a detached node to this thread's free list."""
        assert node.home is self, "nodes are recycled only by their home thread"
        self.active.remove(node)
        node.monitor_ref = None
        node.place = PLACE_FREE
        node.next = None
        node.ws_head = None
        node.ws_tail = None
        node.wait_next = None
        self.free.append(node)

    def find_owned(self, monitor: "Monitor") -> Optional[QueueNode]:
        """Locate this thread's owning node for ``monitor``, if any.

        Scans from the top of the active stack; lexically balanced usage
        hits on the first probe.
        """
        for node in reversed(self.active):
            if node.monitor_ref is monitor and node.status == OWNER:
                return node
        return None

    def find_active(self, monitor: "Monitor") -> Optional[QueueNode]:
        for node in reversed(self.active):
            if node.monitor_ref is monitor:
                return node
        return None

    def generate_hash(self) -> int:
        """Draw a nonzero 31-bit identity hash from the thread-local stream."""
        h = self._hash_rng.getrandbits(31)
        while h == 0:
            h = self._hash_rng.getrandbits(31)
        return h

    def note_acquire(self) -> None:
        self.cur_holds += 1
        if self.cur_holds > self.max_holds:
            self.max_holds = self.cur_holds

    def note_release(self) -> None:
        self.cur_holds -= 1

    def total_nodes(self) -> int:
        return len(self.active) + len(self.free)

    def __repr__(self) -> str:
        return f"<ctx {self.name} active={len(self.active)} free={len(self.free)}>"
