"""Thread-backed actor groups sharing one synchronized message queue.

A :class:`MacActor` owns a pool of workers (each wrapping one user-supplied
behavior object and one thread) and a queue of pending messages.  ``send``
enqueues a message together with its (label, value) sync entries and returns
a write-once :class:`Future` immediately.  A dispatcher thread applies the
selection rule from :mod:`mactor.scheduler`: a message starts only when its
sync entries are disjoint from everything currently executing and from every
earlier pending message that overlaps it, and only when an idle worker
supports it.  Workers are handed messages in FIFO order of their idleness.

Locking discipline: one mutex (with a condition variable) guards the queues,
the worker sets and the busy-data aggregate.  The dispatcher parks on the
condition and is woken by sends, completions, worker additions and shutdown,
so nothing busy-waits.  User code runs on worker threads with no internal
lock held.  A message's future is resolved before its sync entries are
released, so a conflicting successor always observes the completed effects.

Blocking on a future from a worker thread of the same actor that the awaited
message needs is a deadlock, as with any pool; keep ``Future.get`` on
application threads.
"""

from __future__ import annotations

import heapq
import json
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .scheduler import QueuedMessage, SyncEntry, select, sync_set_of


class FutureFailed(Exception):
    """The message backing a future raised or was cancelled."""

    def __init__(self, diagnostic: str):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic


class Future:
    """Write-once result of an asynchronous send."""

    PENDING = "pending"
    RESOLVED = "resolved"
    FAILED = "failed"

    __slots__ = ("_cond", "_state", "_value", "_diagnostic", "_cause")

    def __init__(self):
        self._cond = threading.Condition()
        self._state = Future.PENDING
        self._value = None
        self._diagnostic: Optional[str] = None
        self._cause: Optional[BaseException] = None

    @property
    def state(self) -> str:
        return self._state

    def done(self) -> bool:
        return self._state != Future.PENDING

    def get(self, timeout: Optional[float] = None):
        """Block until resolved; every caller sees the same value.

        Raises TimeoutError if the deadline passes first and FutureFailed
        (with the original exception chained) if the message failed.
        """
        with self._cond:
            if not self._cond.wait_for(lambda: self._state != Future.PENDING, timeout):
                raise TimeoutError(f"future not resolved within {timeout}s")
            if self._state == Future.FAILED:
                raise FutureFailed(self._diagnostic) from self._cause
            return self._value

    def resolve(self, value) -> None:
        with self._cond:
            if self._state != Future.PENDING:
                raise RuntimeError("future already settled")
            self._state = Future.RESOLVED
            self._value = value
            self._cond.notify_all()

    def fail(self, diagnostic: str, cause: Optional[BaseException] = None) -> None:
        with self._cond:
            if self._state != Future.PENDING:
                raise RuntimeError("future already settled")
            self._state = Future.FAILED
            self._diagnostic = diagnostic
            self._cause = cause
            self._cond.notify_all()


def future_get(future: Future, timeout: Optional[float] = None):
    """Module-level alias for Future.get."""
    return future.get(timeout)


# --------------------------------------------------------------------------
# event log

def _jsonable(value):
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return repr(value)


class EventLog:
    """Thread-safe append-only log of enqueue/dispatch/complete events."""

    def __init__(self):
        self._lock = threading.Lock()
        self._events: list[dict] = []

    def record(self, event: str, **fields) -> None:
        entry = {"event": event, "t": time.perf_counter_ns()}
        entry.update(fields)
        with self._lock:
            self._events.append(entry)

    def events(self) -> list[dict]:
        with self._lock:
            return list(self._events)

    def write_jsonl(self, path) -> None:
        with self._lock:
            events = list(self._events)
        with open(path, "w", encoding="utf-8") as fh:
            for entry in events:
                fh.write(json.dumps(entry, default=_jsonable) + "\n")


def _sync_payload(sync: frozenset[SyncEntry]) -> list[list]:
    return sorted([e.label, _jsonable(e.value)] for e in sync)


# --------------------------------------------------------------------------
# sync annotations on behavior methods

def synced(*labels: Optional[str]) -> Callable:
    """Mark a behavior method's parameters with sync labels, positionally.

    ``@synced("a", None)`` locks label "a" on the first argument and leaves
    the second free, mirroring a ``sync<a>`` annotation in source programs.
    ``send`` derives the message's sync set from these labels when no
    explicit set is given.
    """

    def mark(fn):
        fn._sync_labels = tuple(labels)
        return fn

    return mark


def sync_labels_of(behavior, method: str) -> Optional[tuple]:
    fn = getattr(type(behavior), method, None)
    return getattr(fn, "_sync_labels", None)


# --------------------------------------------------------------------------
# the actor

@dataclass(frozen=True)
class ShutdownReport:
    drained: bool
    executed: int
    failed: int
    cancelled: int


@dataclass(frozen=True)
class AuditSnapshot:
    busy_data: frozenset
    running: tuple  # sync set of each executing message
    ok: bool  # busy_data equals the union and the parts are pairwise disjoint


class _Worker:
    __slots__ = ("id", "behavior", "supported", "inbox", "thread", "current")

    def __init__(self, worker_id: int, behavior):
        self.id = worker_id
        self.behavior = behavior
        self.supported = frozenset(
            name
            for name in dir(behavior)
            if not name.startswith("_") and callable(getattr(behavior, name))
        )
        self.inbox: queue.Queue = queue.Queue()
        self.thread: Optional[threading.Thread] = None
        self.current: Optional[QueuedMessage] = None


class MacActor:
    """A group of workers sharing one message queue and one identity.

    ``behavior_factory`` is called once per initial worker; the instances it
    returns receive the messages.  ``strategy`` picks the queue layout:
    "scan" keeps a single pending queue that the selection rule walks, and
    "locked" additionally parks blocked messages on a separate queue that is
    flushed back whenever a worker frees.  The two are observably
    equivalent; "locked" exists so that equivalence can be demonstrated.
    """

    def __init__(
        self,
        behavior_factory: Callable[[], object],
        workers: int = 1,
        *,
        strategy: str = "scan",
        count_unsupported: bool = True,
        event_log: Optional[EventLog] = None,
        name: str = "mac",
    ):
        if workers < 1:
            raise ValueError("an actor needs at least one worker")
        if strategy not in ("scan", "locked"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self._name = name
        self._strategy = strategy
        self._count_unsupported = count_unsupported
        self._log = event_log
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._pending: deque[QueuedMessage] = deque()
        self._locked: deque[QueuedMessage] = deque()
        self._available: deque[_Worker] = deque()
        self._busy: dict[int, _Worker] = {}
        self._busy_data: set[SyncEntry] = set()
        self._workers: list[_Worker] = []
        self._sync_specs: dict[str, tuple] = {}
        self._next_priority = 0
        self._next_worker_id = 0
        self._dirty = False
        self._draining = False
        self._stopped = False
        self._report: Optional[ShutdownReport] = None
        self._executed = 0
        self._failed = 0
        self._rejected = 0
        self._iterations = 0
        self._max_concurrent = 0
        for _ in range(workers):
            self._spawn_worker(behavior_factory())
        self._dispatcher = threading.Thread(
            target=self._dispatch_loop, name=f"{name}-dispatch", daemon=True
        )
        self._dispatcher.start()

    # ---- public surface

    def send(
        self,
        method: str,
        args: Sequence = (),
        sync_data: Optional[Iterable[SyncEntry]] = None,
    ) -> Future:
        """Queue an invocation and return its future immediately.

        The sync set is taken from ``sync_data`` when given, otherwise
        derived from the behavior's ``@synced`` annotation (empty if none).
        Sending never blocks on execution.  After shutdown the returned
        future is already failed.
        """
        args = tuple(args)
        if sync_data is not None:
            sync = frozenset(sync_data)
        else:
            labels = self._sync_specs.get(method)
            sync = sync_set_of(labels, args) if labels else frozenset()
        fut = Future()
        with self._lock:
            if self._draining or self._stopped:
                self._rejected += 1
                rejected = True
            else:
                rejected = False
                msg = QueuedMessage(
                    method=method,
                    args=args,
                    future=fut,
                    sync=sync,
                    signature=method,
                    priority=self._next_priority,
                )
                self._next_priority += 1
                self._pending.append(msg)
                if self._log:
                    self._log.record(
                        "enqueue",
                        method=method,
                        priority=msg.priority,
                        sync=_sync_payload(sync),
                    )
                self._dirty = True
                self._cond.notify_all()
        if rejected:
            fut.fail("actor shut down; send rejected")
        return fut

    def add_worker(self, behavior) -> int:
        """Grow the pool by one idle worker; pending messages are re-examined."""
        with self._lock:
            if self._draining or self._stopped:
                raise RuntimeError("actor shut down")
            worker = self._spawn_worker(behavior)
            self._dirty = True
            self._cond.notify_all()
            return worker.id

    def shutdown(self, drain: bool = True) -> ShutdownReport:
        """Stop the actor.  drain=True runs everything already queued first;
        drain=False fails the pending futures.  Idempotent: repeated calls
        return the first report."""
        with self._lock:
            if self._report is not None:
                return self._report
            self._draining = True
            self._cond.notify_all()
            if drain:
                self._cond.wait_for(
                    lambda: not self._pending and not self._locked and not self._busy
                )
                cancelled: list[QueuedMessage] = []
            else:
                cancelled = list(self._locked) + list(self._pending)
                self._locked.clear()
                self._pending.clear()
            self._stopped = True
            self._dirty = True
            self._cond.notify_all()
        for msg in cancelled:
            msg.future.fail("actor shut down")
        for worker in list(self._workers):
            worker.inbox.put(None)
        self._dispatcher.join()
        for worker in list(self._workers):
            if worker.thread is not None:
                worker.thread.join()
        with self._lock:
            report = ShutdownReport(
                drained=drain,
                executed=self._executed,
                failed=self._failed,
                cancelled=len(cancelled),
            )
            self._report = report
        return report

    def audit(self) -> AuditSnapshot:
        """Consistent snapshot of the lock aggregate, for invariant checks."""
        with self._lock:
            running = tuple(w.current.sync for w in self._busy.values() if w.current)
            busy = frozenset(self._busy_data)
        union: set = set()
        total = 0
        for entries in running:
            union |= entries
            total += len(entries)
        ok = union == busy and len(union) == total
        return AuditSnapshot(busy_data=busy, running=running, ok=ok)

    def stats(self) -> dict:
        with self._lock:
            return {
                "workers": len(self._workers),
                "pending": len(self._pending) + len(self._locked),
                "busy": len(self._busy),
                "executed": self._executed,
                "failed": self._failed,
                "rejected": self._rejected,
                "dispatch_iterations": self._iterations,
                "max_concurrent": self._max_concurrent,
            }

    # ---- internals

    def _spawn_worker(self, behavior) -> _Worker:
        worker = _Worker(self._next_worker_id, behavior)
        self._next_worker_id += 1
        if not self._sync_specs:
            for method in worker.supported:
                labels = sync_labels_of(behavior, method)
                if labels is not None:
                    self._sync_specs[method] = labels
        worker.thread = threading.Thread(
            target=self._worker_loop,
            args=(worker,),
            name=f"{self._name}-w{worker.id}",
            daemon=True,
        )
        self._workers.append(worker)
        self._available.append(worker)
        worker.thread.start()
        return worker

    def _queue_view(self) -> Sequence[QueuedMessage]:
        if self._strategy == "locked" and self._locked:
            return list(heapq.merge(self._locked, self._pending, key=lambda m: m.priority))
        return self._pending

    def _remove_message(self, msg: QueuedMessage) -> None:
        if self._pending and self._pending[0] is msg:
            self._pending.popleft()
        elif self._locked and self._locked[0] is msg:
            self._locked.popleft()
        else:
            try:
                self._pending.remove(msg)
            except ValueError:
                self._locked.remove(msg)

    def _dispatch_pass(self) -> None:
        # Runs with the lock held.
        while self._available:
            view = self._queue_view()
            if not view:
                break
            chosen = None
            chosen_worker = None
            for worker in self._available:  # FIFO order over idle workers
                msg = select(
                    worker.supported,
                    self._busy_data,
                    view,
                    count_unsupported=self._count_unsupported,
                )
                if msg is not None:
                    chosen, chosen_worker = msg, worker
                    break
            if chosen is None:
                break
            self._remove_message(chosen)
            self._available.remove(chosen_worker)
            self._busy[chosen_worker.id] = chosen_worker
            chosen_worker.current = chosen
            self._busy_data |= chosen.sync
            self._max_concurrent = max(self._max_concurrent, len(self._busy))
            chosen_worker.inbox.put(chosen)
        if self._strategy == "locked" and self._pending:
            # Everything still pending is blocked right now; park it on the
            # locked queue until a completion or arrival flushes it back.
            self._locked.extend(self._pending)
            self._pending.clear()

    def _dispatch_loop(self) -> None:
        with self._cond:
            while True:
                self._iterations += 1
                self._dispatch_pass()
                self._dirty = False
                if self._stopped:
                    return
                self._cond.wait_for(lambda: self._dirty or self._stopped)
                if self._stopped:
                    return

    def _worker_loop(self, worker: _Worker) -> None:
        while True:
            msg = worker.inbox.get()
            if msg is None:
                return
            if self._log:
                self._log.record(
                    "dispatch",
                    method=msg.method,
                    priority=msg.priority,
                    worker=worker.id,
                    sync=_sync_payload(msg.sync),
                )
            error: Optional[BaseException] = None
            result = None
            try:
                result = getattr(worker.behavior, msg.method)(*msg.args)
            except Exception as exc:  # user code failed; locks still release
                error = exc
            if self._log:
                self._log.record(
                    "complete",
                    method=msg.method,
                    priority=msg.priority,
                    worker=worker.id,
                    sync=_sync_payload(msg.sync),
                    failed=error is not None,
                )
            # Resolve before releasing the sync entries, so whoever runs next
            # on this data can already read the result.
            if error is None:
                msg.future.resolve(result)
            else:
                msg.future.fail(f"{type(error).__name__}: {error}", cause=error)
            self._free_worker(worker, msg, failed=error is not None)

    def _free_worker(self, worker: _Worker, msg: QueuedMessage, failed: bool) -> None:
        with self._lock:
            assert self._busy.get(worker.id) is worker and worker.current is msg, (
                "worker freed twice or with the wrong message"
            )
            del self._busy[worker.id]
            worker.current = None
            self._available.append(worker)
            self._busy_data -= msg.sync
            if failed:
                self._failed += 1
            self._executed += 1
            if self._strategy == "locked" and self._locked:
                merged = list(
                    heapq.merge(self._locked, self._pending, key=lambda m: m.priority)
                )
                self._pending = deque(merged)
                self._locked.clear()
            self._dirty = True
            self._cond.notify_all()


def new_actor(behavior_factory: Callable[[], object], workers: int, **kwargs) -> MacActor:
    """Create a running actor; convenience wrapper over MacActor()."""
    return MacActor(behavior_factory, workers, **kwargs)
