import threading
import time

import pytest

from mactor import (
    EventLog,
    Future,
    FutureFailed,
    MacActor,
    SyncEntry,
    future_get,
    new_actor,
    synced,
)


def make_actor(*args, **kwargs):
    actor = MacActor(*args, **kwargs)
    return actor


@pytest.fixture
def cleanup():
    actors = []
    yield actors.append
    for actor in actors:
        actor.shutdown(drain=False)


# ---- Future

def test_future_resolve_then_get():
    f = Future()
    f.resolve(123)
    assert f.get() == 123
    assert f.get(timeout=0) == 123  # same value on every read


def test_future_settles_once():
    f = Future()
    f.resolve(1)
    with pytest.raises(RuntimeError):
        f.resolve(2)
    with pytest.raises(RuntimeError):
        f.fail("late")
    assert f.get() == 1


def test_future_failure_propagates_cause():
    f = Future()
    boom = ValueError("boom")
    f.fail("ValueError: boom", cause=boom)
    with pytest.raises(FutureFailed) as err:
        f.get()
    assert err.value.__cause__ is boom
    assert "boom" in err.value.diagnostic


def test_future_timeout():
    f = Future()
    with pytest.raises(TimeoutError):
        f.get(timeout=0.05)


def test_future_same_value_across_threads():
    f = Future()
    seen = []
    lock = threading.Lock()

    def reader():
        value = future_get(f, timeout=5)
        with lock:
            seen.append(value)

    threads = [threading.Thread(target=reader) for _ in range(8)]
    for t in threads:
        t.start()
    f.resolve("answer")
    for t in threads:
        t.join()
    assert seen == ["answer"] * 8


# ---- behaviors used below

class Recorder:
    """Appends (method, args, instance-tag, start, end) tuples; ``locked``
    optionally blocks on an event to hold its worker busy."""

    def __init__(self, log, tag=0, gate=None):
        self._log = log
        self._tag = tag
        self._gate = gate

    def _note(self, method, args, wait=False):
        start = time.perf_counter_ns()
        if wait and self._gate is not None:
            self._gate.wait(timeout=10)
        end = time.perf_counter_ns()
        self._log.append((method, args, self._tag, start, end))
        return len(self._log)

    @synced("a", None)
    def locked(self, key, payload):
        return self._note("locked", (key, payload), wait=True)

    def free(self, payload):
        return self._note("free", (payload,))


def test_zero_workers_rejected():
    with pytest.raises(ValueError):
        MacActor(lambda: Recorder([]), workers=0)


def test_single_worker_runs_in_send_order(cleanup):
    log = []
    actor = new_actor(lambda: Recorder(log), 1)
    cleanup(actor)
    futures = [actor.send("free", (i,)) for i in range(25)]
    actor.shutdown(drain=True)
    assert [f.get(timeout=1) for f in futures] == list(range(1, 26))
    assert [args[0] for (_, args, _, _, _) in log] == list(range(25))


def test_two_actors_are_isolated(cleanup):
    log_a, log_b = [], []
    a = MacActor(lambda: Recorder(log_a), 2)
    b = MacActor(lambda: Recorder(log_b), 2)
    cleanup(a)
    cleanup(b)
    for i in range(10):
        a.send("free", (i,))
    b.send("free", (99,))
    a.shutdown(drain=True)
    b.shutdown(drain=True)
    assert len(log_a) == 10 and len(log_b) == 1


def test_conflicting_sends_execute_disjoint_and_ordered(cleanup):
    log = []
    actor = MacActor(lambda: Recorder(log), 4)
    cleanup(actor)
    futures = [actor.send("locked", (7, i)) for i in range(3)]
    actor.shutdown(drain=True)
    for f in futures:
        f.get(timeout=1)
    mine = [(args[1], start, end) for (m, args, _, start, end) in log if m == "locked"]
    assert [payload for payload, _, _ in mine] == [0, 1, 2]  # send order
    for (_, _, end1), (_, start2, _) in zip(mine, mine[1:]):
        assert end1 <= start2  # pairwise disjoint intervals


def test_unrelated_message_overtakes_blocked_data(cleanup):
    log = []
    gate = threading.Event()
    actor = MacActor(lambda: Recorder(log, gate=gate), 2)
    cleanup(actor)
    stuck = actor.send("locked", (1, "hold"), sync_data=[SyncEntry("a", 1)])
    blocked = actor.send("locked", (1, "wait"), sync_data=[SyncEntry("a", 1)])
    free = actor.send("free", ("now",), sync_data=[])
    assert free.get(timeout=5) is not None  # ran while the data was locked
    assert not blocked.done()
    gate.set()
    actor.shutdown(drain=True)
    assert stuck.get(timeout=1) and blocked.get(timeout=1)


def test_add_worker_unblocks_independent_message(cleanup):
    log = []
    gate = threading.Event()
    actor = MacActor(lambda: Recorder(log, gate=gate), 1)
    cleanup(actor)
    actor.send("locked", (1, "hold"))
    pending = actor.send("locked", (2, "independent"))
    time.sleep(0.05)
    assert not pending.done()  # no worker free, even though data is free
    actor.add_worker(Recorder(log, tag=1, gate=gate))
    deadline = time.time() + 5
    while not pending.done() and time.time() < deadline:
        gate.set()  # both blocked calls share the gate
        time.sleep(0.005)
    assert pending.done()
    actor.shutdown(drain=True)


def test_add_worker_while_idle_is_quiet(cleanup):
    actor = MacActor(lambda: Recorder([]), 1)
    cleanup(actor)
    actor.add_worker(Recorder([]))
    time.sleep(0.05)
    stats = actor.stats()
    assert stats["busy"] == 0 and stats["executed"] == 0


def test_n_independent_tasks_run_concurrently(cleanup):
    n = 4
    barrier = threading.Barrier(n + 1, timeout=10)

    class Meet:
        def meet(self):
            barrier.wait()
            return True

    actor = MacActor(Meet, workers=n)
    cleanup(actor)
    futures = [actor.send("meet", sync_data=[]) for _ in range(n)]
    barrier.wait()  # releases only once all n workers are inside
    actor.shutdown(drain=True)
    assert all(f.get(timeout=1) for f in futures)
    assert actor.stats()["max_concurrent"] == n


def test_first_idle_worker_takes_the_message(cleanup):
    log = []
    counter = iter(range(100))
    actor = MacActor(lambda: Recorder(log, tag=next(counter)), 2)
    cleanup(actor)
    actor.send("free", (0,)).get(timeout=5)
    assert log[0][2] == 0  # the first-created worker served it


def test_dispatcher_parks_without_busy_waiting(cleanup):
    log = []
    gate = threading.Event()
    actor = MacActor(lambda: Recorder(log, gate=gate), 1)
    cleanup(actor)
    actor.send("locked", (5, "hold"))
    for i in range(4):  # all conflict with the running message
        actor.send("locked", (5, i))
    time.sleep(0.1)
    before = actor.stats()["dispatch_iterations"]
    time.sleep(0.25)
    after = actor.stats()["dispatch_iterations"]
    assert after == before  # parked, not spinning
    gate.set()
    actor.shutdown(drain=True)


def test_audit_holds_under_load(cleanup):
    accounts = list(range(8))
    actor = MacActor(lambda: Recorder([]), 4)
    cleanup(actor)
    stop = threading.Event()

    def pump():
        i = 0
        while not stop.is_set():
            actor.send("locked", (accounts[i % 8], i))
            i += 1
            if i > 4000:
                break

    feeder = threading.Thread(target=pump)
    feeder.start()
    try:
        for _ in range(300):
            snapshot = actor.audit()
            assert snapshot.ok, snapshot
    finally:
        stop.set()
        feeder.join()
    actor.shutdown(drain=True)
    assert actor.audit().ok


def test_unsupported_method_shadows_conflicting_messages(cleanup):
    log = []
    actor = MacActor(lambda: Recorder(log), 2)
    cleanup(actor)
    ghost = actor.send("ghost", (0,), sync_data=[SyncEntry("a", 1)])
    real = actor.send("locked", (1, "after"))
    time.sleep(0.15)
    assert not real.done()  # strict rule: the skipped message casts a shadow

    class Ghost:
        def ghost(self, x):
            return "ghost ran"

    actor.add_worker(Ghost())
    assert ghost.get(timeout=5) == "ghost ran"
    assert real.get(timeout=5) is not None
    actor.shutdown(drain=True)


def test_relaxed_mode_ignores_unsupported_shadow(cleanup):
    log = []
    actor = MacActor(lambda: Recorder(log), 2, count_unsupported=False)
    cleanup(actor)
    actor.send("ghost", (0,), sync_data=[SyncEntry("a", 1)])
    real = actor.send("locked", (1, "after"))
    assert real.get(timeout=5) is not None


def test_drain_shutdown_counts_everything(cleanup):
    log = []
    actor = MacActor(lambda: Recorder(log), 4)
    cleanup(actor)
    futures = [actor.send("free", (i,)) for i in range(1000)]
    report = actor.shutdown(drain=True)
    assert report.executed == 1000 and report.cancelled == 0 and report.drained
    assert all(f.done() for f in futures)


def test_immediate_shutdown_fails_pending(cleanup):
    log = []
    gate = threading.Event()
    actor = MacActor(lambda: Recorder(log, gate=gate), 1)
    cleanup(actor)
    actor.send("locked", (1, "run"))
    deadline = time.time() + 5
    while actor.stats()["busy"] == 0 and time.time() < deadline:
        time.sleep(0.002)  # wait for the first message to start
    pending = [actor.send("locked", (1, i)) for i in range(5)]
    gate.set()
    report = actor.shutdown(drain=False)
    assert report.cancelled == 5
    for f in pending:
        with pytest.raises(FutureFailed, match="shut down"):
            f.get(timeout=1)


def test_double_shutdown_returns_same_report(cleanup):
    actor = MacActor(lambda: Recorder([]), 1)
    cleanup(actor)
    first = actor.shutdown(drain=True)
    second = actor.shutdown(drain=False)
    assert first is second


def test_send_after_shutdown_rejected(cleanup):
    actor = MacActor(lambda: Recorder([]), 1)
    cleanup(actor)
    actor.shutdown(drain=True)
    fut = actor.send("free", (1,))
    with pytest.raises(FutureFailed, match="rejected"):
        fut.get(timeout=1)
    with pytest.raises(RuntimeError):
        actor.add_worker(Recorder([]))


def test_get_times_out_on_stuck_user_code(cleanup):
    log = []
    gate = threading.Event()  # never set until teardown
    actor = MacActor(lambda: Recorder(log, gate=gate), 1)
    cleanup(actor)
    stuck = actor.send("locked", (1, "never"))
    with pytest.raises(TimeoutError):
        stuck.get(timeout=0.1)
    gate.set()
    actor.shutdown(drain=True)


def test_user_exception_fails_future_and_releases_locks(cleanup):
    class Flaky:
        @synced("a", None)
        def poke(self, key, n):
            if n == 0:
                raise RuntimeError("kaput")
            return n

    actor = MacActor(Flaky, workers=2)
    cleanup(actor)
    bad = actor.send("poke", (9, 0))
    good = actor.send("poke", (9, 5))  # same lock as the failing message
    assert good.get(timeout=5) == 5  # lock was released despite the error
    with pytest.raises(FutureFailed, match="kaput"):
        bad.get(timeout=1)
    report = actor.shutdown(drain=True)
    assert report.failed == 1


def test_sync_derivation_from_annotations(cleanup):
    class Annotated:
        @synced("a", "a", None)
        def move(self, src, dst, amount):
            return (src, dst, amount)

    log = EventLog()
    actor = MacActor(Annotated, workers=1, event_log=log)
    cleanup(actor)
    actor.send("move", (1, 2, 10)).get(timeout=5)
    actor.shutdown(drain=True)
    enq = next(e for e in log.events() if e["event"] == "enqueue")
    assert enq["sync"] == [["a", 1], ["a", 2]]


@pytest.mark.parametrize("strategy", ["scan", "locked"])
def test_strategies_reach_identical_results(cleanup, strategy):
    class Adder:
        data = None

        def __init__(self, shared):
            self.shared = shared

        @synced("k", None)
        def bump(self, key, by):
            value = self.shared.get(key, 0) + by
            self.shared[key] = value
            return value

    shared = {}
    actor = MacActor(lambda: Adder(shared), workers=3, strategy=strategy)
    cleanup(actor)
    futures = [actor.send("bump", (i % 5, 1)) for i in range(500)]
    actor.shutdown(drain=True)
    assert shared == {k: 100 for k in range(5)}
    # per-key results are the running counts, in send order
    per_key = {}
    for i, f in enumerate(futures):
        per_key.setdefault(i % 5, []).append(f.get(timeout=1))
    for key, values in per_key.items():
        assert values == list(range(1, 101))
