"""Exhaustive parsing for small grammars.

Deliberately naive: every parse tree of every cell is materialized, so this
is only usable on toy grammars and short sentences.  It exists to check the
chart parser against ground truth.
"""

from __future__ import annotations

import math
from collections import defaultdict

from .grammar import Grammar, Lexicon
from .models import CspModel, tree_logprob
from .treebank import ParseTree

DEFAULT_CAP = 10_000


class OracleError(RuntimeError):
    pass


class TreeCapExceeded(OracleError):
    pass


class LexicalGap(OracleError):
    pass


def _tagging(sentence, grammar: Grammar, lexicon: Lexicon | None):
    from .engine import tag_options

    words, options = tag_options(sentence, grammar, lexicon)
    for word, opts in zip(words, options):
        if not opts:
            raise LexicalGap(f"no part of speech for {word!r}")
    return words, options


def parse_forest(grammar: Grammar, sentence, cap: int = DEFAULT_CAP,
                 lexicon: Lexicon | None = None) -> dict[tuple[int, int, int], set[ParseTree]]:
    """Map (symbol id, start, end) to the set of trees rooted there."""
    words, options = _tagging(sentence, grammar, lexicon)
    n = len(words)
    cells: dict[tuple[int, int, int], set[ParseTree]] = defaultdict(set)
    for i, (word, opts) in enumerate(zip(words, options)):
        for tag in opts:
            cells[(tag.id, i, i + 1)].add(ParseTree(tag.name, (), word, i))

    branching = [r for r in grammar.rules if len(r.rhs) > 1]
    unary = [r for r in grammar.rules if len(r.rhs) == 1]

    def fill(rhs, k, pos, end, acc):
        if k == len(rhs):
            if pos == end:
                yield tuple(acc)
            return
        remaining = len(rhs) - k - 1
        for stop in range(pos + 1, end - remaining + 1):
            for tree in cells.get((rhs[k].id, pos, stop), ()):
                acc.append(tree)
                yield from fill(rhs, k + 1, stop, end, acc)
                acc.pop()

    def add(key, tree):
        cell = cells[key]
        if tree in cell:
            return False
        cell.add(tree)
        if len(cell) > cap:
            raise TreeCapExceeded(f"more than {cap} trees in one cell")
        return True

    for length in range(1, n + 1):
        for i in range(n - length + 1):
            j = i + length
            if length > 1:
                for rule in branching:
                    for kids in fill(rule.rhs, 0, i, j, []):
                        add((rule.lhs.id, i, j), ParseTree(rule.lhs.name, kids))
            # unary closure; terminates because unary chains are acyclic
            changed = True
            while changed:
                changed = False
                for rule in unary:
                    for tree in list(cells.get((rule.rhs[0].id, i, j), ())):
                        changed |= add((rule.lhs.id, i, j), ParseTree(rule.lhs.name, (tree,)))
    return cells


def recognize(grammar: Grammar, options) -> bool:
    """Cheap recognizer over symbol sets; `options` lists the tags per word.

    Works right to left: for each start position, the set of end positions
    reachable by each symbol is closed under the rules, using the already
    final sets of later start positions.
    """
    n = len(options)
    ends: list[dict[int, set[int]]] = [defaultdict(set) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        here = ends[i]
        for tag in options[i]:
            here[tag.id].add(i + 1)
        changed = True
        while changed:
            changed = False
            for rule in grammar.rules:
                reach = here.get(rule.rhs[0].id)
                if not reach:
                    continue
                for sym in rule.rhs[1:]:
                    step: set[int] = set()
                    for p in reach:
                        step |= ends[p].get(sym.id, set())
                    reach = step
                    if not reach:
                        break
                if reach and not reach <= here[rule.lhs.id]:
                    here[rule.lhs.id] |= reach
                    changed = True
    return n in ends[0].get(grammar.start.id, ())


def all_parses(grammar: Grammar, sentence, cap: int = DEFAULT_CAP,
               lexicon: Lexicon | None = None) -> set[ParseTree]:
    """Every start-symbol tree over the whole sentence."""
    words, options = _tagging(sentence, grammar, lexicon)
    if not recognize(grammar, options):
        return set()
    cells = parse_forest(grammar, sentence, cap, lexicon)
    return set(cells.get((grammar.start.id, 0, len(words)), ()))


def _yield_tags(tree: ParseTree) -> tuple[str, ...]:
    return tuple(leaf.label for leaf in tree.leaves())


def scored_parses(grammar: Grammar, sentence, csp: CspModel, cap: int = DEFAULT_CAP,
                  lexicon: Lexicon | None = None) -> list[tuple[ParseTree, float]]:
    """All parses with their log probabilities, best first."""
    ranked = []
    for tree in all_parses(grammar, sentence, cap, lexicon):
        lp = tree_logprob(csp, tree, _yield_tags(tree))
        n = tree.constituent_count()
        value = math.exp(lp / n) if lp > -math.inf else 0.0
        ranked.append((lp, value, str(tree), tree))
    ranked.sort(key=lambda r: (-r[0], -r[1], r[2]))
    return [(tree, lp) for lp, _, _, tree in ranked]


def best_parse_bruteforce(grammar: Grammar, sentence, csp: CspModel, cap: int = DEFAULT_CAP,
                          lexicon: Lexicon | None = None) -> tuple[ParseTree, float] | None:
    """The most probable parse and its probability, or None if ungrammatical.

    Ties go to the higher geometric mean, then to the lexicographically
    smallest bracketing.
    """
    ranked = scored_parses(grammar, sentence, csp, cap, lexicon)
    if not ranked:
        return None
    tree, lp = ranked[0]
    return tree, math.exp(lp)


def argmax_is_unique(ranked: list[tuple[ParseTree, float]], tol: float = 1e-12) -> bool:
    return len(ranked) < 2 or ranked[0][1] - ranked[1][1] > tol
