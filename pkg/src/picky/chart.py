"""Well-formed substring table for bidirectional dotted-rule edges.

Word spans are 0-based half-open ``[start, end)``.  An edge's recognized
children form a contiguous 1-based inclusive range ``lo..hi`` of its rule's
right-hand side.  The chart keeps one edge per
``(rule, lo, hi, start, end)``: the derivation with the highest inner log
probability (first inserted on ties).
"""

from __future__ import annotations

import enum
from collections import defaultdict
from typing import Callable, Iterator, Optional

from .grammar import Rule, Symbol
from .models import EMPTY_SCORE, Score
from .treebank import ParseTree


class ChartError(RuntimeError):
    pass


class AddResult(enum.Enum):
    ADDED = "added"
    IMPROVED = "improved"
    DUPLICATE = "duplicate"


Added, Improved, Duplicate = AddResult.ADDED, AddResult.IMPROVED, AddResult.DUPLICATE


class Leaf:
    """Preterminal constituent for one (word position, tag) pair."""

    __slots__ = ("tag", "position", "word", "seq", "label", "start", "end", "lc_tag", "key")

    complete = True
    rule = None
    processed = True
    score = EMPTY_SCORE
    phase = None
    own = None

    def __init__(self, tag: Symbol, position: int, word: str):
        self.tag = self.label = self.lc_tag = tag
        self.position = self.start = position
        self.end = position + 1
        self.word = word
        self.seq = -1
        self.key = ("leaf", position, tag.id)

    def __repr__(self) -> str:
        return f"Leaf({self.tag.name} {self.word!r} @{self.position})"


class Edge:
    """A rule with a contiguous block of recognized children.

    ``score`` covers the internal constituents strictly below this edge's own
    rule node; ``own`` is the log of the prediction probability that proposed
    the edge (None for length-scored predictions).
    """

    __slots__ = ("rule", "lo", "hi", "start", "end", "children", "score", "phase",
                 "priority", "own", "lc_tag", "support", "processed", "seq", "key", "complete")

    def __init__(self, rule: Rule, lo: int, hi: int, start: int, end: int, children: tuple,
                 score: Score = EMPTY_SCORE, phase: str = "I", own: float | None = None,
                 support: int = 0):
        self.rule = rule
        self.lo = lo
        self.hi = hi
        self.start = start
        self.end = end
        self.children = children
        self.score = score
        self.phase = phase
        self.own = own
        self.priority = None
        self.lc_tag = children[0].lc_tag
        self.support = support
        self.processed = False
        self.seq = -1
        self.key = (rule.id, lo, hi, start, end)
        self.complete = lo == 1 and hi == len(rule.rhs)

    @property
    def label(self) -> Symbol:
        return self.rule.lhs

    @property
    def needs_right(self) -> Symbol | None:
        return self.rule.rhs[self.hi] if self.hi < len(self.rule.rhs) else None

    @property
    def needs_left(self) -> Symbol | None:
        return self.rule.rhs[self.lo - 2] if self.lo > 1 else None

    def check(self) -> None:
        arity = len(self.rule.rhs)
        if not 1 <= self.lo <= self.hi <= arity:
            raise ChartError(f"bad child range {self.lo}..{self.hi} for {self.rule}")
        if self.start >= self.end:
            raise ChartError("empty span")
        if len(self.children) != self.hi - self.lo + 1:
            raise ChartError("children do not match child range")
        pos = self.start
        for i, child in zip(range(self.lo, self.hi + 1), self.children):
            if child.start != pos:
                raise ChartError(f"child {i} of {self.rule} does not tile the span")
            if child.label != self.rule.rhs[i - 1]:
                raise ChartError(f"child {i} of {self.rule} is a {child.label.name}")
            pos = child.end
        if pos != self.end:
            raise ChartError("children do not reach the end of the span")

    def __repr__(self) -> str:
        return f"Edge([{self.start},{self.end}) {self.rule} {self.lo}..{self.hi} phase={self.phase})"


class Chart:
    def __init__(self, n_words: int, debug: bool = False):
        self.n = n_words
        self.debug = debug
        self.leaves: list[Leaf] = []
        self._edges: dict[tuple, Edge] = {}
        self._seq = 0
        self._leaf_start: dict[tuple[int, int], list[Leaf]] = defaultdict(list)
        self._complete_start: dict[tuple[int, int], list[tuple]] = defaultdict(list)
        self._complete_end: dict[tuple[int, int], list[tuple]] = defaultdict(list)
        self._need_left: dict[tuple[int, int], list[tuple]] = defaultdict(list)
        self._need_right: dict[tuple[int, int], list[tuple]] = defaultdict(list)
        self.edges_created = 0
        self.completions = 0
        self.predictions = 0
        self.duplicates = 0
        self.improvements = 0
        self.predictions_by_phase: dict[str, int] = defaultdict(int)
        self.completions_by_phase: dict[str, int] = defaultdict(int)

    def __len__(self) -> int:
        return len(self._edges)

    def __contains__(self, key) -> bool:
        return key in self._edges

    def get(self, key) -> Edge | None:
        return self._edges.get(key)

    def is_current(self, edge: Edge) -> bool:
        return self._edges.get(edge.key) is edge

    def add_leaf(self, leaf: Leaf) -> None:
        leaf.seq = self._seq
        self._seq += 1
        self.leaves.append(leaf)
        self._leaf_start[(leaf.tag.id, leaf.position)].append(leaf)

    def note_prediction(self, phase: str) -> None:
        self.predictions += 1
        self.predictions_by_phase[phase] += 1

    def add_edge(self, edge: Edge) -> AddResult:
        if self.debug:
            edge.check()
        key = edge.key
        old = self._edges.get(key)
        if old is None:
            edge.seq = self._seq
            self._seq += 1
            self._edges[key] = edge
            self._index(key, edge)
            self.edges_created += 1
            if edge.complete:
                self.completions += 1
                self.completions_by_phase[edge.phase] += 1
            return Added
        if edge.score.log_prob_sum > old.score.log_prob_sum:
            edge.seq = old.seq
            self._edges[key] = edge
            self.improvements += 1
            return Improved
        self.duplicates += 1
        return Duplicate

    def redundant(self, key: tuple, log_prob_sum: float) -> bool:
        """True (and counted as a duplicate) if an edge with `key` would not be
        added or improved by a derivation scoring `log_prob_sum`."""
        old = self._edges.get(key)
        if old is not None and log_prob_sum <= old.score[0]:
            self.duplicates += 1
            return True
        return False

    def _index(self, key: tuple, edge: Edge) -> None:
        rule = edge.rule
        if edge.complete:
            lhs = rule.lhs.id
            self._complete_start[(lhs, edge.start)].append(key)
            self._complete_end[(lhs, edge.end)].append(key)
            return
        if edge.hi < len(rule.rhs):
            self._need_right[(rule.rhs[edge.hi].id, edge.end)].append(key)
        if edge.lo > 1:
            self._need_left[(rule.rhs[edge.lo - 2].id, edge.start)].append(key)

    # queries

    def completes_at(self, sym: Symbol, pos: int, side: str = "starting") -> list:
        """Complete constituents labelled `sym` starting (or ending) at `pos`."""
        if side == "starting":
            leaves = self._leaf_start.get((sym.id, pos))
            keys = self._complete_start.get((sym.id, pos))
        elif side == "ending":
            leaves = self._leaf_start.get((sym.id, pos - 1))
            keys = self._complete_end.get((sym.id, pos))
        else:
            raise ValueError(f"side must be 'starting' or 'ending', not {side!r}")
        found = list(leaves) if leaves else []
        if keys:
            edges = self._edges
            found.extend([edges[k] for k in keys])
        return found

    def waiting(self, sym: Symbol, pos: int, side: str) -> list[Edge]:
        """Incomplete edges needing `sym` to their right at `pos` (side='right') or left."""
        index = self._need_right if side == "right" else self._need_left
        edges = self._edges
        return [edges[k] for k in index.get((sym.id, pos), ())]

    def edges(self) -> Iterator[Edge]:
        """Stored edges in key order."""
        for key in sorted(self._edges):
            yield self._edges[key]

    def constituents(self) -> list:
        """Leaves in position order, then complete edges in key order."""
        return list(self.leaves) + [e for e in self.edges() if e.complete]

    def best_complete(self, sym: Symbol, score: Optional[Callable] = None):
        """Highest-scoring complete constituent labelled `sym`.

        Ties go to the longer span, then the leftmost start, then the earliest
        insertion.
        """
        score = score or (lambda c: c.score.value)
        best = None
        best_key = None
        candidates = [l for l in self.leaves if l.tag == sym]
        candidates += [e for e in self._edges.values() if e.complete and e.rule.lhs == sym]
        for c in candidates:
            k = (score(c), c.end - c.start, -c.start, -c.seq)
            if best_key is None or k > best_key:
                best, best_key = c, k
        return best

    def full_span(self, sym: Symbol) -> list[Edge]:
        return [self._edges[k] for k in self._complete_start.get((sym.id, 0), ())
                if self._edges[k].end == self.n]

    def check_consistency(self) -> None:
        """Rebuild every index from the stored edges and compare."""
        fresh = Chart(self.n)
        for leaf in self.leaves:
            fresh._leaf_start[(leaf.tag.id, leaf.position)].append(leaf)
        for key, edge in self._edges.items():
            if key != edge.key:
                raise ChartError(f"edge stored under wrong key {key}")
            edge.check()
            fresh._index(key, edge)
        for name in ("_leaf_start", "_complete_start", "_complete_end", "_need_left", "_need_right"):
            mine = {k: sorted(map(repr, v)) for k, v in getattr(self, name).items() if v}
            theirs = {k: sorted(map(repr, v)) for k, v in getattr(fresh, name).items() if v}
            if mine != theirs:
                raise ChartError(f"index {name} is inconsistent")

    def dump(self) -> str:
        lines = []
        for e in self.edges():
            lines.append(f"[{e.start},{e.end}) {e.rule} {e.lo}..{e.hi} score={e.score.value:.6f} phase={e.phase}")
        return "\n".join(lines)


def completes_at(chart: Chart, sym: Symbol, pos: int, side: str = "starting") -> list:
    return chart.completes_at(sym, pos, side)


def best_complete(chart: Chart, sym: Symbol, score=None):
    return chart.best_complete(sym, score)


def add_edge(chart: Chart, edge: Edge) -> AddResult:
    return chart.add_edge(edge)


def extract_tree(constituent) -> ParseTree:
    if isinstance(constituent, Leaf):
        return ParseTree(constituent.tag.name, (), constituent.word, constituent.position)
    if not isinstance(constituent, Edge):
        raise ChartError(f"dangling child reference {constituent!r}")
    if not constituent.complete:
        raise ChartError(f"cannot read a tree off incomplete edge {constituent!r}")
    return ParseTree(constituent.rule.lhs.name, tuple(extract_tree(c) for c in constituent.children))
