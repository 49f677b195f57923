"""Three-phase agenda-driven chart parser.

Phase I (covered left-corner) proposes, at every word, the rules whose first
child has nonzero prediction probability under the POS trigram centred on
that word, plus every rule whose first child is the word's own tag.  Phase II
(covered bidirectional) proposes rules from any child position of any
complete constituent and grows them in both directions.  Phase III (tree
completion) falls back to over-the-top prediction and top-down filtering,
ordered by the length of the predicting subtree.

Edges are scored by the geometric mean of the probabilities of the
constituents they contain (plus the prediction probability that proposed
them); the chart keeps, per edge key, the derivation with the highest inner
log probability so that the best full-span tree is exact once every phase
has run to completion.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .agenda import Agenda
from .chart import Added, Chart, Duplicate, Edge, Leaf, extract_tree
from .grammar import BOS, EOS, Grammar, Lexicon, Rule, Symbol, SymbolKind
from .models import EMPTY_SCORE, Models, Score, safe_log
from .treebank import ROOT, ParseTree, Sentence

log = logging.getLogger("picky")

PHASES = ("I", "II", "III")
EXCEPTION_FLOOR = 1e-9

PARSED, PARTIAL, NO_PARSE, LEXICAL_GAP = "parsed", "partial", "no_parse", "lexical_gap"


def parse_phases(phases) -> frozenset[str]:
    if isinstance(phases, str):
        phases = [p.strip() for p in phases.replace("+", ",").split(",") if p.strip()]
    phases = frozenset(phases)
    unknown = phases - set(PHASES)
    if unknown:
        raise ValueError(f"unknown phase(s): {', '.join(sorted(unknown))}")
    if not phases:
        raise ValueError("at least one phase is required")
    return phases


def phases_label(phases: Iterable[str]) -> str:
    return ",".join(p for p in PHASES if p in set(phases))


@dataclass(frozen=True)
class ParserConfig:
    phases: frozenset = frozenset(PHASES)
    max_edges: int | None = None
    min_score: float | None = None
    stop_on_first_span: bool = True

    def __post_init__(self):
        object.__setattr__(self, "phases", parse_phases(self.phases))
        if self.max_edges is not None and self.max_edges < 1:
            raise ValueError("max_edges must be positive")
        if self.min_score is not None and not 0.0 < self.min_score <= 1.0:
            raise ValueError("min_score must lie in (0, 1]")


@dataclass
class ParseStats:
    predictions: int = 0
    completions: int = 0
    edges_created: int = 0
    predictions_by_phase: dict = field(default_factory=dict)
    completions_by_phase: dict = field(default_factory=dict)
    duplicates: int = 0
    improvements: int = 0
    needed_constituents: int | None = None


@dataclass
class ParseResult:
    status: str
    tree: ParseTree | None
    phase_reached: str | None
    stats: ParseStats
    log_prob: float | None = None
    halted: str | None = None
    chart: Chart | None = field(default=None, compare=False, repr=False)

    @property
    def parsed(self) -> bool:
        return self.status == PARSED

    @property
    def probability(self) -> float | None:
        return None if self.log_prob is None else math.exp(self.log_prob)


class _Halt(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def phase3_priority(support: int, value: float) -> tuple[int, float]:
    """Longer predicting subtrees first, then higher score; FIFO is the agenda's job."""
    return (support, value)


def _edge_value(edge) -> float:
    lp = edge.score.log_prob_sum
    n = edge.score.constituent_count
    if edge.own is not None:
        lp += edge.own
        n += 1
    if n == 0:
        return 1.0
    return math.exp(lp / n) if lp != -math.inf else 0.0


def _priority_value(priority) -> float:
    return priority[1] if isinstance(priority, tuple) else priority


class ParseState:
    """Chart, agenda and bookkeeping for one sentence."""

    def __init__(self, words: Sequence[str], tag_options: Sequence[Sequence[Symbol]],
                 grammar: Grammar, models: Models, config: ParserConfig | None = None,
                 debug: bool = False):
        self.words = list(words)
        self.tags = [tuple(sorted(opts, key=lambda s: s.id)) for opts in tag_options]
        self.n = len(self.words)
        self.grammar = grammar
        self.models = models
        self.config = config or ParserConfig()
        self.chart = Chart(self.n, debug=debug)
        self.agenda = Agenda()
        self.phase: str | None = None
        self.phase_reached: str | None = None
        self.spanned = False
        self.halted: str | None = None
        self._rules = grammar.rules
        self._left = [tuple(t.name for t in self.tags[j - 1]) if j > 0 else (BOS,) for j in range(self.n)]
        self._right = [tuple(t.name for t in self.tags[j + 1]) if j + 1 < self.n else (EOS,) for j in range(self.n)]
        self._pred_cache: dict[tuple[int, str], dict[tuple[int, int], float]] = {}
        self._factor_cache: dict[tuple, float] = {}
        self._seek_keys: set[tuple] = set()
        self._seeks_start: dict[tuple[int, int], list[tuple]] = defaultdict(list)
        self._seeks_end: dict[tuple[int, int], list[tuple]] = defaultdict(list)
        self._direct: dict[tuple, dict[tuple[int, int], tuple]] = defaultdict(dict)
        self._phase2_seen: set[tuple] = set()
        self._limit = self.config.max_edges

    # model lookups

    def trigrams(self, j: int, center: str) -> list[tuple[str, str, str]]:
        return [(l, center, r) for l in self._left[j] for r in self._right[j]]

    def _predictions(self, j: int, center: str) -> dict[tuple[int, int], float]:
        """(rule id, child index) -> best prediction probability at word j."""
        key = (j, center)
        found = self._pred_cache.get(key)
        if found is None:
            tables = [self.models.prediction.table(t) for t in self.trigrams(j, center)]
            if len(tables) == 1:
                found = tables[0]
            else:
                found = {}
                for table in tables:
                    for pair, p in table.items():
                        if p > found.get(pair, 0.0):
                            found[pair] = p
            self._pred_cache[key] = found
        return found

    def _factor(self, rule: Rule, ctx, j: int, center: str) -> float:
        key = (rule.id, ctx, j, center)
        lp = self._factor_cache.get(key)
        if lp is None:
            csp = self.models.csp
            p = max(csp.rule_prob(rule, ctx, t) for t in self.trigrams(j, center))
            lp = self._factor_cache[key] = safe_log(p)
        return lp

    def child_score(self, parent: Rule, i: int, child) -> Score:
        if child.rule is None:
            return EMPTY_SCORE
        key = (child.rule.id, (parent.id, i), child.start, child.lc_tag.name)
        lp = self._factor_cache.get(key)
        if lp is None:
            lp = self._factor(child.rule, key[1], child.start, key[3])
        s = child.score
        return Score(s[0] + lp, s[1] + 1)

    def rooted_score(self, edge: Edge) -> Score:
        """Score of `edge` read as the root of a (possibly partial) tree."""
        lp = self._factor(edge.rule, ROOT, edge.start, edge.lc_tag.name)
        return Score(edge.score.log_prob_sum + lp, edge.score.constituent_count + 1)

    # chart and agenda plumbing

    def _priority(self, edge: Edge):
        value = _edge_value(edge)
        if self.phase == "III":
            return phase3_priority(edge.support, value)
        return value

    def _add(self, edge: Edge, prediction: bool = False):
        chart = self.chart
        limit = self._limit
        if limit is not None and chart.edges_created >= limit and edge.key not in chart._edges:
            raise _Halt("max_edges")
        res = chart.add_edge(edge)
        if res is Duplicate:
            return res
        if prediction and res is Added:
            chart.note_prediction(self.phase)
        # inlined _priority
        s = edge.score
        lp, n = s[0], s[1]
        if edge.own is not None:
            lp += edge.own
            n += 1
        value = 1.0 if n == 0 else (0.0 if lp == -math.inf else math.exp(lp / n))
        priority = (edge.support, value) if self.phase == "III" else value
        edge.priority = priority
        self.agenda.push(edge, priority)
        if edge.complete and edge.start == 0 and edge.end == self.n and edge.rule.lhs == self.grammar.start:
            self.spanned = True
            if self.config.stop_on_first_span:
                raise _Halt("span")
        return res

    def _over(self, rule: Rule, i: int, child, own: float | None, support: int,
              prediction: bool = False):
        """Propose `rule` with child `i` recognized as `child`."""
        start, end = child.start, child.end
        crule = child.rule
        if crule is None:
            lp, n = 0.0, 0
        else:
            fkey = (crule.id, (rule.id, i), start, child.lc_tag.name)
            f = self._factor_cache.get(fkey)
            if f is None:
                f = self._factor(crule, fkey[1], start, fkey[3])
            s = child.score
            lp, n = s[0], s[1]
            lp += f
            n += 1
        chart = self.chart
        old = chart._edges.get((rule.id, i, i, start, end))
        if old is not None and lp <= old.score[0]:
            chart.duplicates += 1
            return Duplicate
        return self._add(Edge(rule, i, i, start, end, (child,), Score(lp, n), self.phase, own,
                              support if support > end - start else end - start), prediction)

    def _extend(self, edge: Edge, child, right: bool):
        rule = edge.rule
        if right:
            i = edge.hi + 1
            lo, hi, start, end = edge.lo, i, edge.start, child.end
        else:
            i = edge.lo - 1
            lo, hi, start, end = i, edge.hi, child.start, edge.end
        s = edge.score
        lp, n = s[0], s[1]
        crule = child.rule
        if crule is not None:
            fkey = (crule.id, (rule.id, i), child.start, child.lc_tag.name)
            f = self._factor_cache.get(fkey)
            if f is None:
                f = self._factor(crule, fkey[1], child.start, fkey[3])
            cs = child.score
            lp += cs[0] + f
            n += cs[1] + 1
        chart = self.chart
        old = chart._edges.get((rule.id, lo, hi, start, end))
        if old is not None and lp <= old.score[0]:
            chart.duplicates += 1
            return Duplicate
        children = edge.children + (child,) if right else (child,) + edge.children
        support = edge.support
        return self._add(Edge(rule, lo, hi, start, end, children, Score(lp, n), self.phase, edge.own,
                              support if support > end - start else end - start))

    def _register_seek(self, rule: Rule, pos: int, side: str, own: float | None, support: int) -> bool:
        """Predict `rule` anchored by its first child at `pos` (side 'start')
        or by its last child ending at `pos` (side 'end')."""
        key = (rule.id, pos, side)
        if key in self._seek_keys:
            return False
        self._seek_keys.add(key)
        chart = self.chart
        chart.predictions += 1
        chart.predictions_by_phase[self.phase] += 1
        if side == "start":
            i = 1
            index = (rule.rhs[0].id, pos)
            self._seeks_start[index].append((rule, 1, own, support))
            leaves = chart._leaf_start.get(index)
            keys = chart._complete_start.get(index)
        else:
            i = len(rule.rhs)
            index = (rule.rhs[-1].id, pos)
            self._seeks_end[index].append((rule, i, own, support))
            leaves = chart._leaf_start.get((index[0], pos - 1))
            keys = chart._complete_end.get(index)
        if leaves:
            for leaf in leaves:
                self._over(rule, i, leaf, own, support)
        if keys:
            edges = chart._edges
            for k in keys:
                child = edges[k]
                if child.processed:
                    self._over(rule, i, child, own, support)
        return True

    # operations

    def seed_preterminals(self) -> None:
        for j, (word, options) in enumerate(zip(self.words, self.tags)):
            for tag in options:
                self.chart.add_leaf(Leaf(tag, j, word))

    def _phase1_plan(self, j: int, center: Symbol) -> tuple[tuple[Rule, float], ...]:
        """Left-corner seeks for `center` at word j, with their log probabilities.

        Depends only on the flanking tags, so it is memoized on the model."""
        pm = self.models.prediction
        key = (self._left[j], center.name, self._right[j])
        plan = pm._plans.get(key)
        if plan is not None:
            return plan
        best: dict[int, float] = {}
        floors = []
        for t in self.trigrams(j, center.name):
            some, least = pm.left_corner_table(t)
            for rid, p in some:
                best[rid] = max(p, best.get(rid, 0.0))
            if least is not None:
                floors.append(least)
        floor = math.log(min(floors) if floors else EXCEPTION_FLOOR)
        out = {rid: math.log(p) for rid, p in sorted(best.items())}
        for rule in self.grammar.left_corner_rules(center):
            out.setdefault(rule.id, floor)
        plan = pm._plans[key] = tuple((self._rules[rid], lp) for rid, lp in out.items())
        return plan

    def phase1_predict(self) -> None:
        seek = self._register_seek
        for j in range(self.n):
            for center in self.tags[j]:
                for rule, own in self._phase1_plan(j, center):
                    seek(rule, j, "start", own, 0)

    def phase2_predict(self) -> None:
        for c in self.chart.constituents():
            self.phase2_predict_from(c)

    def phase2_predict_from(self, c) -> None:
        self._phase2_seen.add(c.key)
        made = self._direct[c.key]
        for (rid, i), p in sorted(self._predictions(c.start, c.lc_tag.name).items()):
            rule = self._rules[rid]
            if rule.rhs[i - 1] != c.label or (rid, i) in made:
                continue
            own = math.log(p)
            if self._over(rule, i, c, own, 0, prediction=True) is Added:
                made[(rid, i)] = (rule, i, own, 0)

    def covered_first_child(self, rule: Rule, c) -> bool:
        return (rule.id, 1) in self._predictions(c.start, c.lc_tag.name)

    def over_the_top(self, c) -> None:
        span = c.end - c.start
        made = self._direct[c.key]
        for rule in self.grammar.left_corner_rules(c.label):
            if (rule.id, 1) in made:
                continue
            if self.covered_first_child(rule, c) and ("I" in self.config.phases or c.key in self._phase2_seen):
                continue
            if self._over(rule, 1, c, None, span, prediction=True) is Added:
                made[(rule.id, 1)] = (rule, 1, None, span)

    def top_down_filter(self, edge: Edge) -> None:
        if edge.complete:
            return
        support = max(edge.support, edge.end - edge.start)
        right = edge.needs_right
        if right is not None and right.kind is SymbolKind.NONTERMINAL and edge.end < self.n:
            for q in self.grammar.rules_for(right):
                self._register_seek(q, edge.end, "start", None, support)
        left = edge.needs_left
        if left is not None and left.kind is SymbolKind.NONTERMINAL and edge.start > 0:
            for q in self.grammar.rules_for(left):
                self._register_seek(q, edge.start, "end", None, support)

    def phase3_sweep(self) -> None:
        for c in self.chart.constituents():
            self.over_the_top(c)
        for e in list(self.chart.edges()):
            if not e.complete:
                self.top_down_filter(e)

    def advance(self, edge: Edge) -> None:
        chart = self.chart
        rule = edge.rule
        if edge.hi < len(rule.rhs):
            for c in chart.completes_at(rule.rhs[edge.hi], edge.end, "starting"):
                if c.processed:
                    self._extend(edge, c, right=True)
        if edge.lo > 1:
            for c in chart.completes_at(rule.rhs[edge.lo - 2], edge.start, "ending"):
                if c.processed:
                    self._extend(edge, c, right=False)

    def _complete(self, c: Edge) -> None:
        chart = self.chart
        for e in chart.waiting(c.label, c.start, "right"):
            if e.processed:
                self._extend(e, c, right=True)
        for e in chart.waiting(c.label, c.end, "left"):
            if e.processed:
                self._extend(e, c, right=False)
        for rule, i, own, support in self._seeks_start.get((c.label.id, c.start), ()):
            self._over(rule, i, c, own, support)
        for rule, i, own, support in self._seeks_end.get((c.label.id, c.end), ()):
            self._over(rule, i, c, own, support)
        # an improved constituent must refresh edges predicted directly over it
        for rule, i, own, support in list(self._direct.get(c.key, {}).values()):
            self._over(rule, i, c, own, support)

    def _process(self, edge: Edge) -> None:
        edge.processed = True
        if edge.complete:
            self._complete(edge)
            if self.phase == "II":
                self.phase2_predict_from(edge)
            elif self.phase == "III":
                self.over_the_top(edge)
        else:
            self.advance(edge)
            if self.phase == "III":
                self.top_down_filter(edge)

    def _loop(self) -> None:
        agenda = self.agenda
        is_current = self.chart.is_current
        floor = self.config.min_score
        while True:
            if floor is not None:
                top = agenda.peek_max_priority(is_current)
                if top is not None and _priority_value(top) < floor:
                    raise _Halt("min_score")
            item = agenda.pop_best(is_current)
            if item is None:
                return
            self._process(item.edge)

    def run(self) -> ParseResult:
        entry = {"I": self.phase1_predict, "II": self.phase2_predict, "III": self.phase3_sweep}
        self.seed_preterminals()
        try:
            for phase in PHASES:
                if phase not in self.config.phases:
                    continue
                if self.spanned and self.config.stop_on_first_span:
                    break
                self.phase = self.phase_reached = phase
                entry[phase]()
                self._loop()
        except _Halt as halt:
            self.halted = halt.reason
        if log.isEnabledFor(logging.DEBUG):
            log.debug("chart for %r:\n%s", " ".join(self.words), self.chart.dump())
        return self.result()

    def best_full_span(self) -> Edge | None:
        full = self.chart.full_span(self.grammar.start)
        if not full:
            return None

        def rank(e):
            s = self.rooted_score(e)
            return (s.log_prob_sum, s.value, -e.seq)

        return max(full, key=rank)

    def result(self) -> ParseResult:
        chart = self.chart
        stats = ParseStats(
            predictions=chart.predictions,
            completions=chart.completions,
            edges_created=chart.edges_created,
            predictions_by_phase={p: chart.predictions_by_phase.get(p, 0) for p in PHASES},
            completions_by_phase={p: chart.completions_by_phase.get(p, 0) for p in PHASES},
            duplicates=chart.duplicates,
            improvements=chart.improvements,
        )
        best = self.best_full_span()
        status = PARSED
        if best is None:
            best = chart.best_complete(self.grammar.start, score=lambda e: self.rooted_score(e).value)
            status = PARTIAL if best is not None else NO_PARSE
        if best is None:
            return ParseResult(status, None, self.phase_reached, stats, None, self.halted, chart)
        return ParseResult(status, extract_tree(best), self.phase_reached, stats,
                           self.rooted_score(best).log_prob_sum, self.halted, chart)


def tag_options(sentence, grammar: Grammar, lexicon: Lexicon | None = None) -> tuple[list[str], list[tuple[Symbol, ...]]]:
    """Words and candidate tags per position; an empty tuple marks a lexical gap."""
    if isinstance(sentence, str):
        sentence = sentence.split()
    if isinstance(sentence, Sentence):
        words = list(sentence.words)
        if sentence.tags is not None:
            options = []
            for t in sentence.tags:
                sym = grammar.symbol(t)
                if sym.kind is not SymbolKind.PRETERMINAL:
                    raise ValueError(f"{t!r} is not a part of speech")
                options.append((sym,))
            return words, options
    else:
        words = list(sentence)
    lex = lexicon if lexicon is not None else grammar.lexicon
    return words, [tuple(sorted(lex.pos_tags(w), key=lambda s: s.id)) for w in words]


def parse(sentence, grammar: Grammar, lexicon: Lexicon | None, models: Models,
          config: ParserConfig | None = None, debug: bool = False) -> ParseResult:
    """Parse a tagged :class:`Sentence`, or a word sequence tagged through `lexicon`."""
    config = config or ParserConfig()
    words, options = tag_options(sentence, grammar, lexicon)
    if not words:
        raise ValueError("empty sentence")
    if any(not opts for opts in options):
        return ParseResult(LEXICAL_GAP, None, None,
                           ParseStats(predictions_by_phase={p: 0 for p in PHASES},
                                      completions_by_phase={p: 0 for p in PHASES}))
    return ParseState(words, options, grammar, models, config, debug=debug).run()
