"""Lock/unlock protocol: fast paths, recursion, FIFO, usurping, deflation."""

import threading
import time

import pytest

from cjm import IllegalMonitorStateError, MonitorConfig, MonitorRuntime
from cjm.audit import audit_chain, audit_quiescent, waitset_names
from cjm.markword import decode, Hashed, Queued, is_hashed
from cjm.node import ENTRY, OWNER, WAITING


def test_uncontended_lock_states():
    rt = MonitorRuntime()
    m = rt.new_monitor()
    rt.lock(m)
    node = rt.current().find_owned(m)
    assert decode(m.load_mark()) == Queued(node.address)
    assert node.status == OWNER
    assert node.dmw & 1 == 1 and node.dmw >> 1 != 0  # locked implies hashed
    rt.unlock(m)
    assert decode(m.load_mark()) == Hashed(node.dmw >> 1)


def test_recursion_nets_out():
    rt = MonitorRuntime()
    m = rt.new_monitor()
    for _ in range(4):
        rt.lock(m)
    for _ in range(3):
        rt.unlock(m)
        assert rt.holds_lock(m)
    rt.unlock(m)
    assert not rt.holds_lock(m)
    assert is_hashed(m.load_mark())
    with pytest.raises(IllegalMonitorStateError):
        rt.unlock(m)


def test_unlock_without_lock_raises():
    rt = MonitorRuntime()
    m = rt.new_monitor()
    with pytest.raises(IllegalMonitorStateError):
        rt.unlock(m)


def test_deflation_restores_hash():
    rt = MonitorRuntime()
    m = rt.new_monitor()
    rt.lock(m)
    h1 = rt.hash_of(m)
    rt.unlock(m)
    h2 = rt.hash_of(m)
    assert h1 == h2
    assert m.load_mark() == (h1 << 1) | 1


def _staged_fifo_run(rt, m, arrivals):
    """Stage `arrivals` contenders in strict arrival order behind a holder."""
    rt.lock(m)
    names = [f"T{i}" for i in range(1, arrivals + 1)]
    threads = []
    for i, name in enumerate(names, start=2):
        def contender(nm=name):
            rt.register_thread(nm)
            rt.lock(m)
            rt.unlock(m)

        t = threading.Thread(target=contender)
        t.start()
        threads.append(t)
        while m.arrivals < i:  # wait for the swap to land before the next
            time.sleep(0)
    rt.unlock(m)
    for t in threads:
        t.join(10.0)
    return names


def test_strict_fifo_grant_order():
    for run in range(10):
        rt = MonitorRuntime(MonitorConfig(record_grants=True))
        m = rt.new_monitor()
        names = _staged_fifo_run(rt, m, 5)
        order = rt.grant_order(m)
        assert order[1:] == names, (run, order)
        audit_quiescent(rt)


def test_usurp_takes_ownership_without_parking():
    rt = MonitorRuntime(MonitorConfig(record_grants=True))
    m = rt.new_monitor()
    state = {}

    def waiter():
        rt.register_thread("W")
        rt.lock(m)
        state["result"] = rt.wait(m)
        rt.unlock(m)

    t = threading.Thread(target=waiter)
    t.start()
    deadline = time.monotonic() + 5.0
    while True:  # wait until W is the committed placeholder
        tail = m.tail_node()
        if tail is not None and tail.status == WAITING:
            break
        assert time.monotonic() < deadline
        time.sleep(0.005)

    ctx = rt.register_thread("U")
    rt.lock(m)  # usurp: instant ownership
    assert rt.holds_lock(m)
    assert ctx.counters.usurps == 1
    assert ctx.counters.parks == 0
    assert waitset_names(rt, m) == ["W"]
    rt.notify(m)
    rt.unlock(m)
    t.join(5.0)
    assert state["result"].value == "notified"
    audit_quiescent(rt)


def test_chain_shape_and_dmw_uniformity():
    rt = MonitorRuntime()
    m = rt.new_monitor()
    rt.lock(m)
    gate = threading.Event()
    threads = []
    for i in range(4):
        def contender():
            rt.register_thread()
            rt.lock(m)
            gate.wait(10.0)
            rt.unlock(m)

        t = threading.Thread(target=contender)
        t.start()
        threads.append(t)
        while m.arrivals < i + 2:
            time.sleep(0)
    time.sleep(0.05)  # let links resolve
    chain = audit_chain(rt, m)
    assert len(chain) == 5
    assert chain[0].status == OWNER
    assert all(n.status == ENTRY for n in chain[1:])
    dmws = {n.dmw for n in chain if n.dmw}
    assert len(dmws) == 1
    rt.unlock(m)
    gate.set()
    for t in threads:
        t.join(10.0)
    audit_quiescent(rt)


def test_mutual_exclusion_counter():
    rt = MonitorRuntime()
    m = rt.new_monitor()
    count = [0]

    def worker():
        rt.register_thread()
        for _ in range(2000):
            rt.lock(m)
            count[0] += 1
            rt.unlock(m)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert count[0] == 8000
    audit_quiescent(rt)


def test_figure_one_configuration():
    """Owner with two staged waiters and four entries; unlock hands the
    waitset to the next entry and recycles the departing node."""
    rt = MonitorRuntime(MonitorConfig(record_grants=True))
    m = rt.new_monitor("A")
    done = {}
    ctxs = {}

    def waiter(name):
        ctxs[name] = rt.register_thread(name)
        rt.lock(m)
        done[name] = rt.wait(m)
        rt.unlock(m)

    hold = threading.Event()
    release_entries = threading.Event()

    def t1():
        ctxs["T1"] = rt.register_thread("T1")
        rt.lock(m)
        hold.wait(10.0)
        rt.unlock(m)
        done["t1_free_after"] = len(ctxs["T1"].free)

    def entry(name):
        ctxs[name] = rt.register_thread(name)
        rt.lock(m)
        release_entries.wait(10.0)
        rt.unlock(m)

    threads = []
    for i, name in enumerate(("W6", "W7")):
        t = threading.Thread(target=waiter, args=(name,))
        t.start()
        threads.append(t)
        while m.arrivals < i + 1:
            time.sleep(0)
        time.sleep(0.03)  # allow the wait to commit as placeholder

    t = threading.Thread(target=t1)
    t.start()
    threads.append(t)
    while m.arrivals < 3:
        time.sleep(0)
    time.sleep(0.03)

    for i, name in enumerate(("T2", "T3", "T4", "T5")):
        t = threading.Thread(target=entry, args=(name,))
        t.start()
        threads.append(t)
        while m.arrivals < i + 4:
            time.sleep(0)
    time.sleep(0.03)

    chain = audit_chain(rt, m)
    assert [n.home.name for n in chain] == ["T1", "T2", "T3", "T4", "T5"]
    assert waitset_names(rt, m) == ["W6", "W7"]

    hold.set()  # T1 unlocks
    deadline = time.monotonic() + 5.0
    while len(rt.grant_order(m)) < 4:
        assert time.monotonic() < deadline
        time.sleep(0.005)
    time.sleep(0.02)
    chain = audit_chain(rt, m)
    assert chain[0].home.name == "T2" and chain[0].status == OWNER
    assert waitset_names(rt, m) == ["W6", "W7"]
    assert done["t1_free_after"] == 1  # L1 back on T1's free list

    release_entries.set()
    time.sleep(0.05)
    rt.lock(m)
    rt.notify_all(m)
    rt.unlock(m)
    for t in threads:
        t.join(10.0)
    assert done["W6"].value == "notified" and done["W7"].value == "notified"
    audit_quiescent(rt)
