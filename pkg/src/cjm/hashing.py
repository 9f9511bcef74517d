"""Identity-hash assignment and retrieval across all mark states.

The interesting case is reading the hash of a monitor locked by some other
thread: the hash then lives in the displaced mark field of the chain's tail
node, which the mark word points at, and that node may be recycled at any
moment.  Readers pin the node through a striped table of reference counts,
re-validate that the mark still designates the same tail, and only then
trust the displaced word.  If the mark still points at the node, the node
cannot have been recycled: recycling requires detaching it, and detaching
changes the mark.  Threads reusing a node wait for its stripe to drain to
zero first, so a reader never observes fields mid-reset.
"""

from __future__ import annotations

import time
from typing import TYPE_CHECKING

from .markword import Monitor, encode_hashed, is_hashed
from .node import QueueNode

if TYPE_CHECKING:
    from .node import ThreadContext

_MIX = 0x9E3779B97F4A7C15
_WORD = (1 << 64) - 1


class PinTable:
    """Striped reference counts protecting nodes from field reuse.

    Collisions between nodes sharing a stripe only make the recycler wait
    conservatively; they never affect correctness.
    """

    def __init__(self, stripes: int = 128):
        assert stripes & (stripes - 1) == 0, "stripe count must be a power of two"
        self.size = stripes
        self._shift = 64 - stripes.bit_length() + 1
        self.counts = [0] * stripes
        # Total pins across stripes, under its own mutex: recyclers read it
        # (atomically, no lock) to skip the per-stripe drain when no reader
        # is active at all -- the overwhelmingly common case.
        self.outstanding = 0
        import threading

        self._out_mu = threading.Lock()
        self._locks = [threading.Lock() for _ in range(stripes)]

    def index(self, node: QueueNode) -> int:
        x = (node.address >> 4) * _MIX & _WORD
        return (x >> self._shift) & (self.size - 1)

    def pin(self, node: QueueNode) -> int:
        i = self.index(node)
        with self._out_mu:
            self.outstanding += 1
        with self._locks[i]:
            self.counts[i] += 1
        return i

    def unpin(self, node: QueueNode) -> None:
        i = self.index(node)
        with self._locks[i]:
            self.counts[i] -= 1
            assert self.counts[i] >= 0, "pin counter underflow"
        with self._out_mu:
            self.outstanding -= 1

    def count_for(self, node: QueueNode) -> int:
        return self.counts[self.index(node)]

    def drain(self, node: QueueNode) -> None:
        """Block until no reader pin covers this node's stripe."""
        i = self.index(node)
        while self.counts[i] != 0:
            time.sleep(0)

    def total(self) -> int:
        return sum(self.counts)


def hash_of(rt, ctx: "ThreadContext", monitor: Monitor) -> int:
    """Fetch (assigning on first use) the monitor's stable identity hash.

    Loops over the mark states; obstruction-free in the queued case -- a
    reader finishes as soon as chain flux pauses with the tail's displaced
    mark present.
    """
    pins = rt.pin_table
    while True:
        word = monitor.load_mark()
        if word == 0:
            h = ctx.generate_hash()
            if monitor.try_transition(0, encode_hashed(h)):
                monitor.record_first_hash(h)
                return h
            continue  # another assigner or locker won; re-read
        if is_hashed(word):
            return word >> 1
        # Locked: locked implies hashed, so the chain carries the value.
        own = ctx.find_owned(monitor)
        if own is not None:
            assert own.dmw != 0
            return own.dmw >> 1
        tail = monitor.tail_node()
        if tail is None or tail.address != word:
            continue  # shadow raced the word; re-read
        pins.pin(tail)
        try:
            if monitor.load_mark() != word or tail.dmw == 0:
                continue  # chain moved or value not yet pulled forward
            return tail.dmw >> 1
        finally:
            pins.unpin(tail)
