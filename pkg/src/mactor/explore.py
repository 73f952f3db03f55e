"""Exhaustive interleaving exploration with invariant checking.

Breadth-first search over :func:`mactor.interp.enabled_steps`, deduplicating
states by their canonical form.  Two invariants are checked along the way:

* lock disjointness: inside every group, the lock sets held by distinct
  objects never intersect;
* dispatch order: a message never starts while an earlier-queued message
  with an overlapping sync set is still waiting in the same queue.

Exploration stops at the first violation and reports the trace that exposed
it.  ``select_fn`` is injectable so a deliberately broken selection rule can
be shown to trip the checks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .interp import Configuration, StepLabel, enabled_steps, step
from .scheduler import select as default_select


@dataclass(frozen=True)
class Violation:
    kind: str  # "theorem1" | "order"
    detail: str
    trace: tuple[StepLabel, ...]


@dataclass
class ExploreReport:
    states: int
    terminals: list[Configuration] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    truncated: bool = False
    faults: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_lock_disjointness(config: Configuration) -> Optional[str]:
    for actor, group in config.actors.items():
        lock_sets = [config.heap[o].locks for o in group]
        union: set = set()
        total = 0
        for entries in lock_sets:
            union |= entries
            total += len(entries)
        if len(union) != total:
            return f"overlapping lock sets inside group {actor}"
    return None


def _check_dispatch_order(config: Configuration, label: StepLabel) -> Optional[str]:
    queue = config.queues.get(label.actor, ())
    chosen = next((m for m in queue if m.priority == label.priority), None)
    if chosen is None:
        return None
    for earlier in queue:
        if earlier.priority < chosen.priority and earlier.sync & chosen.sync:
            return (
                f"message '{chosen.method}' (priority {chosen.priority}) dispatched "
                f"before conflicting '{earlier.method}' (priority {earlier.priority})"
            )
    return None


def explore_all(
    config: Configuration,
    depth: int,
    *,
    select_fn: Callable = default_select,
    checks: tuple[str, ...] = ("theorem1", "order"),
) -> ExploreReport:
    """Visit every configuration reachable within ``depth`` steps.

    Returns the number of distinct states, the terminal configurations
    (quiescent or faulted), whether the depth bound cut anything off, and
    the first invariant violation found, if any, with its trace.
    """
    if depth <= 0:
        raise ValueError("depth must be positive")
    report = ExploreReport(states=0)
    root_key = config.canonical()
    # key -> (parent key, label); the root has no parent
    parents: dict = {root_key: None}
    seen_terminal: set = set()
    frontier: deque = deque([(config, 0)])

    def trace_to(key) -> tuple[StepLabel, ...]:
        steps: list[StepLabel] = []
        while parents[key] is not None:
            key, label = parents[key]
            steps.append(label)
        return tuple(reversed(steps))

    while frontier:
        current, dist = frontier.popleft()
        report.states += 1
        key = current.canonical()
        if "theorem1" in checks:
            problem = _check_lock_disjointness(current)
            if problem:
                report.violations.append(Violation("theorem1", problem, trace_to(key)))
                return report
        labels = enabled_steps(current, select_fn)
        if not labels:
            if key not in seen_terminal:
                seen_terminal.add(key)
                report.terminals.append(current)
                if current.fault is not None:
                    report.faults += 1
            continue
        if dist >= depth:
            report.truncated = True
            continue
        for label in labels:
            if label.rule == "SCHED-MSG" and "order" in checks:
                problem = _check_dispatch_order(current, label)
                if problem:
                    report.violations.append(
                        Violation("order", problem, trace_to(key) + (label,))
                    )
                    return report
            succ = step(current, label, select_fn)
            succ_key = succ.canonical()
            if succ_key in parents:
                continue
            parents[succ_key] = (key, label)
            frontier.append((succ, dist + 1))
    return report
