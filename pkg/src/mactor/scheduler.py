"""Synchronized-data bookkeeping and the message selection rule.

A queued message carries a finite set of (label, value) entries derived
from its signature: one entry per parameter marked ``sync<label>``, paired
with the actual argument at that position.  An idle object may only be
handed the first message in queue order whose entry set is disjoint from
everything currently held by the group *and* from the entries of every
message skipped earlier in the scan, and whose signature the object
supports.  Skipped messages shadow later ones even when they were skipped
for signature reasons alone; that literal reading is what guarantees that
conflicting messages start in their enqueue order.

Everything here is pure and operates on immutable snapshots.  Callers that
share queues between threads take their own locks around the call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Container, Hashable, Iterable, Optional, Sequence


@dataclass(frozen=True, slots=True)
class SyncEntry:
    """A lock claim on one piece of data under one user-chosen label."""

    label: str
    value: Hashable


LockSet = frozenset  # of SyncEntry

EMPTY_LOCKS: frozenset[SyncEntry] = frozenset()


@dataclass(frozen=True, slots=True)
class QueuedMessage:
    """One pending asynchronous invocation.

    ``signature`` is any hashable token the idle object's supported set can
    be probed with (a parsed method signature in the interpreter, a method
    name in the thread pool).  ``priority`` is the arrival counter: unique
    per queue and strictly increasing with enqueue order.
    """

    method: str
    args: tuple
    future: object
    sync: frozenset[SyncEntry]
    signature: Hashable
    priority: int


def sync_set_of(labels: Sequence[Optional[str]], args: Sequence) -> frozenset[SyncEntry]:
    """Pair each labelled parameter position with its actual argument.

    ``labels`` holds one entry per parameter, None where the parameter is
    not synchronized.  Two labelled positions with the same label and equal
    argument values collapse to a single entry (set semantics).
    """
    if len(labels) != len(args):
        raise ValueError(f"arity mismatch: {len(labels)} parameter(s), {len(args)} argument(s)")
    return frozenset(SyncEntry(label, arg) for label, arg in zip(labels, args) if label is not None)


def select(
    supported: Container,
    held: Iterable[SyncEntry],
    queue: Sequence[QueuedMessage],
    *,
    count_unsupported: bool = True,
) -> Optional[QueuedMessage]:
    """Pick the message an idle object may activate, or None.

    Scans ``queue`` in order.  A message is returned when its sync set is
    disjoint from the accumulated set (initially ``held``, the union of
    entries locked across the whole group) and its signature is in
    ``supported``.  Every skipped message's sync set is added to the
    accumulator before moving on, so an ineligible message blocks every
    later message that overlaps it.  The queue is never mutated.

    ``count_unsupported=False`` is a non-normative relaxation: messages
    skipped purely because their signature is unsupported then cast no
    shadow.  The default follows the strict rule.
    """
    shadow = set(held)
    for msg in queue:
        if shadow.isdisjoint(msg.sync) and msg.signature in supported:
            return msg
        if count_unsupported or not shadow.isdisjoint(msg.sync):
            shadow |= msg.sync
    return None


def lock_union(lock_sets: Iterable[frozenset[SyncEntry]]) -> frozenset[SyncEntry]:
    """Union of per-object lock sets: everything a group currently holds."""
    out: set[SyncEntry] = set()
    for entries in lock_sets:
        out |= entries
    return frozenset(out)
