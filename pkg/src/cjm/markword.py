"""Single-word monitor state: encoding, decoding, and the atomic mark cell.

A monitor's entire shared state is one 64-bit word with a one-bit tag:

    ============  =======================  =================================
    bit pattern   state                    meaning
    ============  =======================  =================================
    0             NEUTRAL                  never hashed, never locked
    (h << 1) | 1  HASHED                   unlocked; identity hash is h != 0
    a (even, !=0) QUEUED                   locked; a is the address of the
                                           tail node of the entry chain
    ============  =======================  =================================

Node addresses are multiples of :data:`~cjm.node.NODE_ALIGNMENT` (16), so the
low bit of a queued word is always clear.  Everything else a monitor needs
(owner, nesting, waiters, displaced hash) lives in queue nodes and travels
along the chain.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional, Union

WORD_MASK = (1 << 64) - 1
HASH_BITS = 31

NEUTRAL_WORD = 0


@dataclass(frozen=True)
class Neutral:
    pass


@dataclass(frozen=True)
class Hashed:
    hash: int


@dataclass(frozen=True)
class Queued:
    tail: int  # tail node address


MarkVariant = Union[Neutral, Hashed, Queued]

_NEUTRAL = Neutral()


def decode(word: int) -> MarkVariant:
    """Total decode of a mark word into its variant."""
    if word == 0:
        return _NEUTRAL
    if word & 1:
        return Hashed(word >> 1)
    return Queued(word)


def encode_hashed(hash_value: int) -> int:
    """Encode a nonzero hash into an unlocked mark word."""
    assert 0 < hash_value < (1 << 63), "hash must be nonzero and fit in 63 bits"
    return (hash_value << 1) | 1


def encode(variant: MarkVariant) -> int:
    """Inverse of :func:`decode` for the three legal shapes."""
    if isinstance(variant, Neutral):
        return 0
    if isinstance(variant, Hashed):
        return encode_hashed(variant.hash)
    return variant.tail


def is_hashed(word: int) -> bool:
    return bool(word & 1)


def is_queued(word: int) -> bool:
    return word != 0 and not (word & 1)


class Monitor:
    """A lockable object: one atomic mark cell plus a stable identity.

    The cell supports load/swap/compare-exchange from any thread; under
    CPython these are serialized by an internal mutex, which also provides
    the acquire-release ordering the protocols rely on.  ``arrivals`` counts
    tail swaps on this monitor and is exposed so harness scenarios can
    sequence arrivals deterministically without touching the chain.

    Alongside the word the cell shadows the tail node object itself (Python
    has no way to turn an address back into an object cheaply); the shadow
    is updated in the same critical section and is purely an accelerator --
    the word stays authoritative, and readers re-validate against it.
    """

    __slots__ = (
        "_mark",
        "_tail_node",
        "_mu_acquire",
        "_mu_release",
        "name",
        "uid",
        "first_hash",
        "arrivals",
    )

    _next_uid = 1
    _uid_mu = threading.Lock()

    def __init__(self, name: Optional[str] = None):
        self._mark = NEUTRAL_WORD
        self._tail_node = None
        mu = threading.Lock()
        self._mu_acquire = mu.acquire
        self._mu_release = mu.release
        with Monitor._uid_mu:
            self.uid = Monitor._next_uid
            Monitor._next_uid += 1
        self.name = name if name is not None else f"monitor-{self.uid}"
        self.first_hash: Optional[int] = None  # set once, at hash assignment
        self.arrivals = 0

    def load_mark(self) -> int:
        return self._mark

    def tail_node(self):
        return self._tail_node

    def swap_tail(self, node, count_arrival: bool = True):
        """Atomically install ``node`` as the queued tail.

        Returns ``(prior_word, prior_tail_node)``; the node is None unless
        the prior word was queued.  ``count_arrival`` distinguishes fresh
        lock arrivals from waitset morphs and cancellation re-enqueues, so
        ``arrivals`` counts exactly the lock-path enqueues, linearized with
        the swap itself (scenario sequencing relies on this).
        """
        self._mu_acquire()
        prior = self._mark
        prior_node = self._tail_node
        self._mark = node.address
        self._tail_node = node
        if count_arrival:
            self.arrivals += 1
        self._mu_release()
        return prior, prior_node

    def try_transition(self, expected: int, desired: int, desired_node=None) -> bool:
        """Compare-and-exchange on the mark cell.

        ``desired_node`` must be the node whose address ``desired`` is when
        installing a queued word, None otherwise.
        """
        self._mu_acquire()
        if self._mark != expected:
            self._mu_release()
            return False
        self._mark = desired
        self._tail_node = desired_node
        self._mu_release()
        return True

    def record_first_hash(self, hash_value: int) -> None:
        # Called with the cell mutex NOT held; assignment races are resolved
        # by the mark CAS or the swap total order, so the first writer wins.
        if self.first_hash is None:
            self.first_hash = hash_value

    def __repr__(self) -> str:
        w = self._mark
        return f"<Monitor {self.name} mark={w:#x} ({decode(w).__class__.__name__})>"
