"""Trigram prediction model, context-sensitive rule model and geometric-mean scores.

Both models are raw relative frequencies over treebank events.  The
prediction model is never smoothed: a zero means "not covered by training"
and decides which parser phase may propose an edge.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .grammar import Grammar, GrammarError, Rule, serialize
from .treebank import ROOT, ParseTree, Sentence, TrainingEvent, node_rule, trigram_at

Trigram = tuple[str, str, str]
NEG_INF = float("-inf")

FORMAT_HEADER = "picky-model v1"


class ModelFormatError(ValueError):
    def __init__(self, message: str, record: int | None = None):
        self.record = record
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)


def safe_log(p: float) -> float:
    return math.log(p) if p > 0.0 else NEG_INF


class Score(NamedTuple):
    """Accumulated log probability over a number of constituents.

    ``value`` is the geometric mean of the constituent probabilities; an empty
    score has value 1.  A score over a single constituent also remembers that
    constituent's probability, so its value is exact rather than exp(log p).
    """

    log_prob_sum: float = 0.0
    constituent_count: int = 0
    probability: float | None = None

    @classmethod
    def of(cls, p: float) -> "Score":
        return cls(safe_log(p), 1, p)

    @property
    def value(self) -> float:
        n = self.constituent_count
        if n == 0:
            return 1.0
        if n == 1 and self.probability is not None:
            return self.probability
        return math.exp(self.log_prob_sum / n) if self.log_prob_sum > NEG_INF else 0.0

    def __add__(self, other: "Score") -> "Score":
        return combine_scores((self, other))


EMPTY_SCORE = Score()


def combine_scores(parts: Iterable[Score | tuple[float, int]]) -> Score:
    total = 0.0
    count = 0
    single = None
    for part in parts:
        if isinstance(part, Score):
            lp, n = part.log_prob_sum, part.constituent_count
            if n == 1:
                single = part.probability
        else:
            lp, n = part
        if math.isnan(lp) or lp == math.inf:
            raise ValueError(f"non-finite log probability {lp}")
        if n < 0:
            raise ValueError("negative constituent count")
        total += lp
        count += n
    return Score(total, count, single if count == 1 else None)


class PredictionModel:
    """P(rule, child index | POS trigram centred on that child's left-corner word)."""

    def __init__(self, grammar: Grammar):
        self.grammar = grammar
        self.counts: dict[Trigram, Counter] = defaultdict(Counter)
        self.totals: Counter = Counter()
        self._tables: dict[Trigram, dict[tuple[int, int], float]] = {}
        self._first: dict[Trigram, tuple[list[tuple[int, float]], float | None]] = {}
        # derived per-context tables the parser memoizes here
        self._plans: dict = {}

    def observe(self, trigram: Trigram, rule_id: int, child_index: int, count: int = 1) -> None:
        self.counts[trigram][(rule_id, child_index)] += count
        self.totals[trigram] += count
        self._tables.clear()
        self._first.clear()
        self._plans.clear()

    def left_corner_table(self, trigram: Trigram) -> tuple[list[tuple[int, float]], float | None]:
        """Rules predicted at child 1 with their probabilities, and the
        smallest positive probability at `trigram` (None if unseen).  Cached."""
        found = self._first.get(trigram)
        if found is None:
            table = self.table(trigram)
            firsts = [(rid, p) for (rid, i), p in table.items() if i == 1]
            found = self._first[trigram] = (firsts, min(table.values()) if table else None)
        return found

    def table(self, trigram: Trigram) -> dict[tuple[int, int], float]:
        """(rule id, child index) -> probability, nonzero entries only.  Cached."""
        found = self._tables.get(trigram)
        if found is None:
            total = self.totals.get(trigram, 0)
            found = {pair: c / total for pair, c in sorted(self.counts[trigram].items())} if total else {}
            self._tables[trigram] = found
        return found

    def predict_prob(self, rule: Rule, i: int, trigram: Trigram) -> float:
        if not 1 <= i <= rule.arity:
            raise ValueError(f"child index {i} out of range for {rule}")
        total = self.totals.get(trigram, 0)
        if not total:
            return 0.0
        return self.counts[trigram].get((rule.id, i), 0) / total

    def predictions(self, trigram: Trigram) -> list[tuple[Rule, int, float]]:
        """All (rule, child index, probability) with nonzero mass at `trigram`."""
        total = self.totals.get(trigram, 0)
        if not total:
            return []
        rules = self.grammar.rules
        return [(rules[rid], i, c / total) for (rid, i), c in sorted(self.counts[trigram].items())]

    def min_positive(self, trigram: Trigram) -> float | None:
        total = self.totals.get(trigram, 0)
        if not total:
            return None
        return min(self.counts[trigram].values()) / total


# conditioning levels of the rule model, finest first
LEVEL_CONTEXT, LEVEL_PARENT, LEVEL_TRIGRAM, LEVEL_LHS = range(4)
_LEVEL_ARITY = {LEVEL_CONTEXT: 5, LEVEL_PARENT: 5, LEVEL_TRIGRAM: 4, LEVEL_LHS: 1}


def context_name(ctx) -> str:
    return ROOT if ctx == ROOT else f"{ctx[0]}:{ctx[1]}"


class CspModel:
    """P(A -> alpha | parent rule and position, POS trigram at A's left corner).

    Unseen contexts back off, strictly, to the parent label, then the trigram
    alone, then the relative frequency of the rule among expansions of A.
    Every level conditions on A itself.
    """

    def __init__(self, grammar: Grammar):
        self.grammar = grammar
        self.counts: list[dict[tuple[str, ...], Counter]] = [defaultdict(Counter) for _ in range(4)]
        self.totals: list[Counter] = [Counter() for _ in range(4)]
        self._cache: dict[tuple, float] = {}

    def _parent_label(self, ctx) -> str:
        return ROOT if ctx == ROOT else self.grammar.rules[ctx[0]].lhs.name

    def keys(self, lhs: str, ctx, trigram: Trigram) -> list[tuple[str, ...]]:
        return [
            (context_name(ctx), lhs, *trigram),
            (self._parent_label(ctx), lhs, *trigram),
            (lhs, *trigram),
            (lhs,),
        ]

    def observe(self, rule: Rule, ctx, trigram: Trigram, count: int = 1) -> None:
        for level, key in enumerate(self.keys(rule.lhs.name, ctx, trigram)):
            self.counts[level][key][rule.id] += count
            self.totals[level][key] += count
        self._cache.clear()

    def rule_prob(self, rule: Rule, ctx, trigram: Trigram) -> float:
        key = (rule.id, ctx, trigram)
        p = self._cache.get(key)
        if p is None:
            p = self._cache[key] = self._rule_prob(rule, ctx, trigram)
        return p

    def _rule_prob(self, rule: Rule, ctx, trigram: Trigram) -> float:
        if ctx != ROOT:
            parent = self.grammar.rules[ctx[0]]
            pos = ctx[1]
            if not 1 <= pos <= parent.arity or parent.rhs[pos - 1] != rule.lhs:
                raise ValueError(f"{rule} cannot fill child {pos} of {parent}")
        for level, key in enumerate(self.keys(rule.lhs.name, ctx, trigram)):
            total = self.totals[level].get(key, 0)
            if total:
                return self.counts[level][key].get(rule.id, 0) / total
        # A never observed at all: uniform over its expansions
        return 1.0 / len(self.grammar.rules_for(rule.lhs))

    def distributions(self, level: int):
        for key, counter in self.counts[level].items():
            yield key, counter, self.totals[level][key]


def train(events: Iterable[TrainingEvent], grammar: Grammar) -> tuple[PredictionModel, CspModel]:
    pm = PredictionModel(grammar)
    csp = CspModel(grammar)
    for ev in events:
        pm.observe(ev.trigram, ev.rule.id, ev.child_index)
        if ev.child_index == 1:
            csp.observe(ev.rule, ev.parent_context, ev.trigram)
    return pm, csp


def tree_logprob(csp: CspModel, tree: ParseTree, sentence: Sentence | Sequence[str]) -> float:
    """Sum of log rule probabilities over the internal nodes of `tree`."""
    tags = sentence.tags if isinstance(sentence, Sentence) else tuple(sentence)
    leaves = list(tree.leaves())
    if tuple(l.label for l in leaves) != tuple(tags):
        raise ValueError("tree yield does not match the sentence")
    grammar = csp.grammar
    total = 0.0

    def walk(node: ParseTree, ctx) -> None:
        nonlocal total
        rule = node_rule(grammar, node)
        total += safe_log(csp.rule_prob(rule, ctx, trigram_at(tags, node.start)))
        for i, child in enumerate(node.children, start=1):
            if not child.is_leaf:
                walk(child, (rule.id, i))

    if not tree.is_leaf:
        walk(tree, ROOT)
    return total


def tree_prob(csp: CspModel, tree: ParseTree, sentence: Sentence | Sequence[str]) -> float:
    return math.exp(tree_logprob(csp, tree, sentence))


def tree_score(csp: CspModel, tree: ParseTree, sentence: Sentence | Sequence[str]) -> Score:
    n = tree.constituent_count()
    if n == 1:
        tags = sentence.tags if isinstance(sentence, Sentence) else tuple(sentence)
        return Score.of(csp.rule_prob(node_rule(csp.grammar, tree), ROOT, trigram_at(tags, tree.start)))
    return Score(tree_logprob(csp, tree, sentence), n)


@dataclass
class Models:
    """Trained models plus the grammar they are indexed against."""

    grammar: Grammar
    prediction: PredictionModel
    csp: CspModel

    @classmethod
    def train(cls, events: Iterable[TrainingEvent], grammar: Grammar) -> "Models":
        pm, csp = train(events, grammar)
        return cls(grammar, pm, csp)

    @classmethod
    def empty(cls, grammar: Grammar) -> "Models":
        return cls(grammar, PredictionModel(grammar), CspModel(grammar))


def dump_models(models: Models) -> str:
    g = models.grammar
    records = []
    for sym in g.symbols:
        records.append(f"SYM {sym.id} {sym.kind.value} {sym.name}")
    records.append(f"START {g.start.name}")
    for rule in g.rules:
        records.append(f"RULE {rule.id} {rule.lhs.name} {' '.join(s.name for s in rule.rhs)}")
    if g.has_lexicon:
        for word, tags in g.lexicon.items():
            records.append(f"LEX {word} {' '.join(t.name for t in tags)}")
    pm = models.prediction
    for trigram in sorted(pm.counts):
        for (rid, i), c in sorted(pm.counts[trigram].items()):
            records.append(f"P {' '.join(trigram)} {rid} {i} {c}")
    for level in range(4):
        for key in sorted(models.csp.counts[level]):
            for rid, c in sorted(models.csp.counts[level][key].items()):
                records.append(f"C {level} {' '.join(key)} {rid} {c}")
    lines = [FORMAT_HEADER, *records, f"END {len(records)}"]
    return "\n".join(lines) + "\n"


def save_models(path, models: Models) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_models(models))


def parse_models(text: str) -> Models:
    lines = text.splitlines()
    if not lines:
        raise ModelFormatError("empty model file")
    if lines[0].strip() != FORMAT_HEADER:
        raise ModelFormatError(f"unsupported header {lines[0].strip()!r}, expected {FORMAT_HEADER!r}")
    symbols: list[tuple[int, str, str]] = []
    start = None
    productions: list[tuple[str, list[str]]] = []
    rule_ids: list[int] = []
    lexicon: list[tuple[str, list[str]]] | None = None
    p_records: list[tuple[int, Trigram, int, int, int]] = []
    c_records: list[tuple[int, int, tuple[str, ...], int, int]] = []
    ended = False
    n = 0
    for n, line in enumerate(lines[1:], start=1):
        fields = line.split()
        if not fields:
            raise ModelFormatError("blank record", n)
        if ended:
            raise ModelFormatError("record after END", n)
        tag = fields[0]
        try:
            if tag == "SYM":
                symbols.append((int(fields[1]), fields[2], fields[3]))
                if len(fields) != 4:
                    raise ValueError
            elif tag == "START":
                start = fields[1]
            elif tag == "RULE":
                rule_ids.append(int(fields[1]))
                if len(fields) < 4:
                    raise ValueError
                productions.append((fields[2], fields[3:]))
            elif tag == "LEX":
                if len(fields) < 3:
                    raise ValueError
                lexicon = lexicon or []
                lexicon.append((fields[1], fields[2:]))
            elif tag == "P":
                if len(fields) != 7:
                    raise ValueError
                trigram = (fields[1], fields[2], fields[3])
                p_records.append((n, trigram, int(fields[4]), int(fields[5]), int(fields[6])))
            elif tag == "C":
                level = int(fields[1])
                if level not in _LEVEL_ARITY or len(fields) != 2 + _LEVEL_ARITY[level] + 2:
                    raise ValueError
                key = tuple(fields[2:-2])
                c_records.append((n, level, key, int(fields[-2]), int(fields[-1])))
            elif tag == "END":
                if int(fields[1]) != n - 1:
                    raise ModelFormatError(f"END expects {fields[1]} records, found {n - 1}", n)
                ended = True
            else:
                raise ModelFormatError(f"unknown record type {tag!r}", n)
        except (ValueError, IndexError) as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"malformed {tag} record: {line.strip()!r}", n) from None
    if not ended:
        raise ModelFormatError("truncated model file (no END record)", n + 1)
    if rule_ids != list(range(len(rule_ids))):
        raise ModelFormatError("rule ids are not dense")
    try:
        grammar = Grammar.build(productions, start=start, lexicon=lexicon)
    except GrammarError as exc:
        raise ModelFormatError(f"embedded grammar is invalid: {exc}") from None
    for sid, kind, name in symbols:
        if sid >= len(grammar.symbols) or grammar.symbols[sid].name != name or grammar.symbols[sid].kind.value != kind:
            raise ModelFormatError(f"symbol table disagrees with rules at {name!r}")
    models = Models.empty(grammar)
    n_rules = len(grammar.rules)
    for rec, trigram, rid, i, c in p_records:
        if not 0 <= rid < n_rules or not 1 <= i <= grammar.rules[rid].arity or c <= 0:
            raise ModelFormatError("P record out of range", rec)
        models.prediction.observe(trigram, rid, i, c)
    for rec, level, key, rid, c in c_records:
        if not 0 <= rid < n_rules or c <= 0:
            raise ModelFormatError("C record out of range", rec)
        models.csp.counts[level][key][rid] += c
        models.csp.totals[level][key] += c
    return models


def load_models(path) -> Models:
    with open(path, encoding="utf-8") as f:
        return parse_models(f.read())


def grammar_matches(a: Grammar, b: Grammar) -> bool:
    return serialize(a) == serialize(b) and [s.name for s in a.symbols] == [s.name for s in b.symbols]
