"""Best-first agenda with FIFO tie-breaking and lazy deletion."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

Priority = Union[float, tuple]


def _heap_key(priority: Priority) -> tuple:
    if isinstance(priority, tuple):
        return tuple(-p for p in priority)
    return (-priority,)


@dataclass
class AgendaItem:
    edge: Any
    priority: Priority
    seq: int = field(default=0)


class Agenda:
    """Max-priority queue.  Priorities are floats or tuples compared lexicographically.

    Items whose edge has since been superseded are dropped when they reach the
    top, given an ``is_current`` predicate.
    """

    def __init__(self):
        self._heap: list[tuple[tuple, int, Any, Priority]] = []
        self._seq = itertools.count()

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)

    def push(self, edge, priority: Priority) -> int:
        """Queue `edge`; returns its insertion number."""
        seq = next(self._seq)
        heapq.heappush(self._heap, (_heap_key(priority), seq, edge, priority))
        return seq

    def _drop_stale(self, is_current: Optional[Callable[[Any], bool]]) -> None:
        if is_current is None:
            return
        heap = self._heap
        while heap and not is_current(heap[0][2]):
            heapq.heappop(heap)

    def pop_best(self, is_current: Optional[Callable[[Any], bool]] = None) -> Optional[AgendaItem]:
        self._drop_stale(is_current)
        if not self._heap:
            return None
        _, seq, edge, priority = heapq.heappop(self._heap)
        return AgendaItem(edge, priority, seq)

    def peek_max_priority(self, is_current: Optional[Callable[[Any], bool]] = None) -> Optional[Priority]:
        self._drop_stale(is_current)
        if not self._heap:
            return None
        return self._heap[0][3]

    def clear(self) -> None:
        self._heap.clear()


def push(agenda: Agenda, edge, priority: Priority) -> int:
    return agenda.push(edge, priority)


def pop_best(agenda: Agenda, is_current=None) -> Optional[AgendaItem]:
    return agenda.pop_best(is_current)


def peek_max_priority(agenda: Agenda, is_current=None) -> Optional[Priority]:
    return agenda.peek_max_priority(is_current)
