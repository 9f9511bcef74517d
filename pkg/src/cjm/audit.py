"""Structural audits over chains, waitsets, and node footprints.

These walk shared structures without synchronization, so they are only
meaningful at deterministic checkpoints: barrier-stopped phases in scenarios
or full quiescence after joins.  Each audit raises :class:`AuditError` with
a serialized dump on the first violation.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, List, Optional

from .markword import Monitor, decode, Hashed, Neutral, Queued
from .node import (
    ENTRY,
    OWNER,
    PLACE_CHAIN,
    PLACE_FREE,
    STATUS_NAMES,
    WAITING,
    QueueNode,
)

if TYPE_CHECKING:
    from .runtime import MonitorRuntime


class AuditError(AssertionError):
    pass


def _fail(msg: str, dump: str = "") -> None:
    raise AuditError(msg + ("\n" + dump if dump else ""))


def dump_chain(chain: List[QueueNode]) -> str:
    return " -> ".join(
        f"{n.address:#x}[t{n.home.id} {STATUS_NAMES[n.status]}]" for n in chain
    )


def collect_chain(rt: "MonitorRuntime", monitor: Monitor) -> List[QueueNode]:
    """Reconstruct the chain, head first, from the contexts' active nodes."""
    word = monitor.load_mark()
    variant = decode(word)
    if not isinstance(variant, Queued):
        return []
    nodes = [
        n
        for ctx in rt.contexts.values()
        for n in ctx.active
        if n.monitor_ref is monitor and n.place == PLACE_CHAIN
    ]
    successors = {id(n.next) for n in nodes if n.next is not None}
    heads = [n for n in nodes if id(n) not in successors]
    if len(heads) != 1:
        _fail(
            f"{monitor.name}: chain has {len(heads)} heads",
            dump_chain(nodes),
        )
    chain = []
    cur: Optional[QueueNode] = heads[0]
    seen = set()
    while cur is not None:
        if id(cur) in seen:
            _fail(f"{monitor.name}: chain cycle", dump_chain(chain))
        seen.add(id(cur))
        chain.append(cur)
        cur = cur.next
    return chain


def audit_chain(rt: "MonitorRuntime", monitor: Monitor) -> List[QueueNode]:
    """Validate chain shape: one owner-or-waiting head, entry interior,
    tail matching the mark, uniform displaced marks."""
    word = monitor.load_mark()
    variant = decode(word)
    if isinstance(variant, (Neutral, Hashed)):
        return []
    chain = collect_chain(rt, monitor)
    if not chain:
        _fail(f"{monitor.name}: mark is queued but no chain nodes found")
    if chain[-1].address != variant.tail:
        _fail(
            f"{monitor.name}: mark tail {variant.tail:#x} != chain tail "
            f"{chain[-1].address:#x}",
            dump_chain(chain),
        )
    head = chain[0]
    if head.status not in (OWNER, WAITING):
        _fail(
            f"{monitor.name}: head status {STATUS_NAMES[head.status]}",
            dump_chain(chain),
        )
    for node in chain[1:]:
        if node.status != ENTRY:
            _fail(
                f"{monitor.name}: interior node {node.address:#x} is "
                f"{STATUS_NAMES[node.status]}",
                dump_chain(chain),
            )
    dmws = {n.dmw for n in chain if n.dmw != 0}
    if len(dmws) > 1:
        _fail(f"{monitor.name}: mixed displaced marks {dmws}", dump_chain(chain))
    for node in chain:
        if node.monitor_ref is not monitor:
            _fail(
                f"{monitor.name}: foreign node {node.address:#x} on chain",
                dump_chain(chain),
            )
    return chain


def audit_quiescent(rt: "MonitorRuntime") -> None:
    """Full-stop invariants: every monitor deflated to its permanent hash,
    every context drained, no pins outstanding, no leaked nodes."""
    for monitor in rt.monitors:
        word = monitor.load_mark()
        variant = decode(word)
        if isinstance(variant, Queued):
            _fail(f"{monitor.name}: still queued at quiescence ({word:#x})")
        if isinstance(variant, Hashed):
            if monitor.first_hash is not None and variant.hash != monitor.first_hash:
                _fail(
                    f"{monitor.name}: hash drifted {variant.hash:#x} != "
                    f"{monitor.first_hash:#x}"
                )
    for ctx in rt.contexts.values():
        if ctx.active:
            _fail(f"{ctx.name}: active list not empty: {ctx.active}")
        for node in ctx.free:
            if node.place != PLACE_FREE:
                _fail(f"{ctx.name}: free node {node.address:#x} not marked free")
        if ctx.total_nodes() != ctx.counters.allocations:
            _fail(
                f"{ctx.name}: node leak: {ctx.total_nodes()} held vs "
                f"{ctx.counters.allocations} allocated"
            )
    if rt.pin_table.total() != 0:
        _fail(f"pin table not drained: {rt.pin_table.total()}")


def audit_footprint(rt: "MonitorRuntime", slack: int = 1) -> None:
    """Every thread's allocated-node total is bounded by its peak
    simultaneous holds plus ``slack`` (1 normally, 2 with timed waits)."""
    for ctx in rt.contexts.values():
        bound = ctx.max_holds + slack
        if ctx.counters.allocations > bound:
            _fail(
                f"{ctx.name}: allocated {ctx.counters.allocations} nodes, "
                f"bound {bound} (max holds {ctx.max_holds}, slack {slack})"
            )


def waitset_names(rt: "MonitorRuntime", monitor: Monitor) -> List[str]:
    """Thread names on the monitor's waitset, in wait order (chain strategy:
    read from the chain head; external: read from the bucket)."""
    if rt.chain_waitsets:
        chain = collect_chain(rt, monitor)
        if not chain:
            return []
        return [n.home.name for n in chain[0].ws_members()]
    h = monitor.first_hash
    if h is None:
        return []
    bucket = rt.wait_table.bucket_for(monitor, h)
    return [n.home.name for n in bucket.members() if n.monitor_ref is monitor]
