"""The external (hashed bucket) waitset strategy."""

import threading
import time

from cjm import MonitorConfig, MonitorRuntime, WaitResult
from cjm.audit import audit_quiescent


def _ext_runtime(buckets=64, **kw):
    return MonitorRuntime(
        MonitorConfig(waitset_strategy="external", wait_buckets=buckets, **kw)
    )


def _start(fn, *args):
    t = threading.Thread(target=fn, args=args, daemon=True)
    t.start()
    return t


def _spin_until(pred, timeout=5.0):
    deadline = time.monotonic() + timeout
    while not pred():
        assert time.monotonic() < deadline
        time.sleep(0.002)


def test_wait_notify_morphing_preserved():
    rt = _ext_runtime()
    m = rt.new_monitor()
    out = {}

    def waiter():
        rt.register_thread("W")
        rt.lock(m)
        out["r"] = rt.wait(m)
        rt.unlock(m)

    t = _start(waiter)
    h = None
    _spin_until(lambda: any(
        b.head is not None for b in rt.wait_table.buckets))
    ctx = rt.register_thread("N")
    rt.lock(m)
    swaps0, unparks0, guards0 = (
        ctx.counters.swaps, ctx.counters.unparks, ctx.counters.guard_acquisitions)
    rt.notify(m)
    assert ctx.counters.swaps - swaps0 == 1
    assert ctx.counters.unparks - unparks0 == 0  # morphing, no wake
    assert ctx.counters.guard_acquisitions - guards0 >= 1
    rt.unlock(m)
    t.join(10.0)
    assert out["r"] is WaitResult.NOTIFIED
    audit_quiescent(rt)


def test_colliding_monitors_share_a_bucket_independently():
    rt = _ext_runtime(buckets=1)  # force every monitor into one bucket
    a, b = rt.new_monitor("A"), rt.new_monitor("B")
    out = {}

    def waiter(key, mon):
        rt.register_thread(key)
        rt.lock(mon)
        out[key] = rt.wait(mon, timeout=3.0)
        rt.unlock(mon)

    ta = _start(waiter, "wa", a)
    tb = _start(waiter, "wb", b)
    bucket = rt.wait_table.buckets[0]
    _spin_until(lambda: len(bucket.members()) == 2)
    # notify on A must not touch B's waiter
    rt.lock(a)
    rt.notify(a)
    rt.unlock(a)
    ta.join(10.0)
    assert out["wa"] is WaitResult.NOTIFIED
    _spin_until(lambda: len(bucket.members()) == 1)
    assert bucket.members()[0].monitor_ref is b
    rt.lock(b)
    rt.notify(b)
    rt.unlock(b)
    tb.join(10.0)
    assert out["wb"] is WaitResult.NOTIFIED
    audit_quiescent(rt)


def test_timeout_self_removes_without_allocation():
    rt = _ext_runtime()
    m = rt.new_monitor()
    out = {}

    def waiter():
        ctx = rt.register_thread("W")
        rt.lock(m)
        allocs0 = ctx.counters.allocations
        out["r"] = rt.wait(m, timeout=0.05)
        out["alloc_delta"] = ctx.counters.allocations - allocs0
        out["held"] = rt.holds_lock(m)
        rt.unlock(m)

    t = _start(waiter)
    t.join(10.0)
    assert out["r"] is WaitResult.TIMED_OUT
    assert out["held"]
    assert out["alloc_delta"] == 0  # no second node under this strategy
    audit_quiescent(rt)


def test_timeout_under_contention_no_allocation():
    rt = _ext_runtime()
    m = rt.new_monitor()
    out = {}

    def waiter():
        ctx = rt.register_thread("W")
        rt.lock(m)
        allocs0 = ctx.counters.allocations
        out["r"] = rt.wait(m, timeout=0.05)
        out["alloc_delta"] = ctx.counters.allocations - allocs0
        rt.unlock(m)

    t = _start(waiter)
    _spin_until(lambda: any(b.head is not None for b in rt.wait_table.buckets))
    rt.lock(m)
    time.sleep(0.12)  # hold across the deadline
    rt.unlock(m)
    t.join(10.0)
    assert out["r"] is WaitResult.TIMED_OUT
    assert out["alloc_delta"] == 0
    audit_quiescent(rt)


def test_no_placeholder_promotion_under_external():
    rt = _ext_runtime()
    m = rt.new_monitor()
    done = {}

    def waiter(i):
        rt.register_thread(f"W{i}")
        rt.lock(m)
        done[i] = rt.wait(m, timeout=2.0)
        rt.unlock(m)

    threads = [_start(waiter, i) for i in range(3)]
    _spin_until(lambda: sum(len(b.members()) for b in rt.wait_table.buckets) == 3)
    rt.lock(m)
    rt.notify_all(m)
    rt.unlock(m)
    for t in threads:
        t.join(10.0)
    assert all(done[i] is WaitResult.NOTIFIED for i in range(3))
    assert rt.counters_snapshot()["promotions"] == 0
    audit_quiescent(rt)


def test_wait_with_queued_successor_hands_chain_over():
    rt = _ext_runtime()
    m = rt.new_monitor()
    out = {}

    def waiter():
        rt.register_thread("W")
        rt.lock(m)
        while m.arrivals < 2:
            time.sleep(0)
        out["r"] = rt.wait(m, timeout=3.0)
        rt.unlock(m)

    def successor():
        rt.register_thread("S")
        rt.lock(m)
        out["s_owns"] = rt.holds_lock(m)
        rt.notify(m)
        rt.unlock(m)

    t1 = _start(waiter)
    _spin_until(lambda: m.arrivals >= 1)
    t2 = _start(successor)
    t1.join(10.0)
    t2.join(10.0)
    assert out["s_owns"]
    assert out["r"] is WaitResult.NOTIFIED
    audit_quiescent(rt)
