"""Parker permit semantics and the spin-then-park policy."""

import threading
import time

from cjm.parking import Parker, SpinPolicy, WakeReason, now, spin_then_wait
from cjm.runtime import MonitorRuntime


def test_unpark_before_park_returns_immediately():
    p = Parker()
    p.unpark()
    t0 = time.monotonic()
    assert p.park(deadline=now() + 5.0) == WakeReason.GRANT_CHECK
    assert time.monotonic() - t0 < 0.1


def test_single_permit_double_unpark():
    p = Parker()
    p.unpark()
    p.unpark()  # idempotent while pending
    assert p.park() == WakeReason.GRANT_CHECK
    # the second park must block: give it a short deadline
    assert p.park(deadline=now() + 0.05) == WakeReason.TIMEOUT


def test_deadline_in_past_times_out_immediately():
    p = Parker()
    t0 = time.monotonic()
    assert p.park(deadline=now() - 1.0) == WakeReason.TIMEOUT
    assert time.monotonic() - t0 < 0.05


def test_cross_thread_unpark_wakes_within_tolerance():
    p = Parker()
    woke = {}

    def sleeper():
        t0 = time.monotonic()
        p.park()
        woke["after"] = time.monotonic() - t0

    t = threading.Thread(target=sleeper)
    t.start()
    time.sleep(0.01)
    p.unpark()
    t.join(2.0)
    assert not t.is_alive()
    assert woke["after"] < 1.0  # generous scheduling bound


def test_unpark_running_thread_is_noop_until_next_park():
    p = Parker()
    p.unpark()  # thread not parked: permit stored
    assert p.park() == WakeReason.GRANT_CHECK


def test_spin_then_wait_true_predicate_never_parks():
    rt = MonitorRuntime()
    ctx = rt.register_thread("t")
    assert spin_then_wait(ctx, lambda: True, SpinPolicy(spin_budget=16))
    assert ctx.counters.parks == 0


def test_spin_budget_zero_parks_immediately():
    rt = MonitorRuntime()
    ctx = rt.register_thread("t")
    flag = {"v": False}

    def set_soon():
        time.sleep(0.02)
        flag["v"] = True
        ctx.parker.unpark()

    t = threading.Thread(target=set_soon)
    t.start()
    assert spin_then_wait(ctx, lambda: flag["v"], SpinPolicy(spin_budget=0))
    t.join()
    assert ctx.counters.parks >= 1


def test_predicate_flip_during_spin_phase_avoids_park():
    rt = MonitorRuntime()
    ctx = rt.register_thread("t")
    state = {"n": 0}

    def pred():
        state["n"] += 1
        return state["n"] > 3  # flips inside the budget

    assert spin_then_wait(ctx, pred, SpinPolicy(spin_budget=100, pause_hint=False))
    assert ctx.counters.parks == 0


def test_spin_then_wait_deadline():
    rt = MonitorRuntime()
    ctx = rt.register_thread("t")
    t0 = time.monotonic()
    ok = spin_then_wait(
        ctx, lambda: False, SpinPolicy(spin_budget=0), deadline=now() + 0.05
    )
    assert not ok
    assert 0.04 < time.monotonic() - t0 < 1.0


def test_spin_policy_default_budget():
    assert SpinPolicy().spin_budget == 1024
    assert SpinPolicy(spin_budget=0).spin_budget == 0
