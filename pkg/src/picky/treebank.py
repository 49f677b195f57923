"""Bracketed treebank reading, training-event extraction and grammar induction."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .grammar import BOS, EOS, Grammar, Lexicon, Rule, SymbolKind

ROOT = "ROOT"

_TOKENS = re.compile(r"\(|\)|[^\s()]+")


class TreebankError(ValueError):
    pass


@dataclass(frozen=True)
class ParseTree:
    """A labelled tree.  Leaves are preterminal nodes carrying a word."""

    label: str
    children: tuple["ParseTree", ...] = ()
    word: str | None = None
    index: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    def leaves(self) -> Iterator["ParseTree"]:
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def internal_nodes(self) -> Iterator["ParseTree"]:
        """Preorder over non-leaf nodes."""
        if not self.is_leaf:
            yield self
            for child in self.children:
                yield from child.internal_nodes()

    @property
    def start(self) -> int:
        node = self
        while not node.is_leaf:
            node = node.children[0]
        return node.index

    @property
    def end(self) -> int:
        node = self
        while not node.is_leaf:
            node = node.children[-1]
        return node.index + 1

    def constituent_count(self) -> int:
        return sum(1 for _ in self.internal_nodes())

    def __str__(self) -> str:
        if self.is_leaf:
            return f"({self.label} {self.word})"
        return f"({self.label} {' '.join(str(c) for c in self.children)})"


@dataclass(frozen=True)
class Sentence:
    words: tuple[str, ...]
    tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.words:
            raise TreebankError("empty sentence")
        if self.tags is not None and len(self.tags) != len(self.words):
            raise TreebankError("words and tags differ in length")

    def __len__(self) -> int:
        return len(self.words)

    def trigram(self, i: int) -> tuple[str, str, str]:
        return trigram_at(self.tags, i)


@dataclass(frozen=True)
class TrainingEvent:
    rule: Rule
    child_index: int
    trigram: tuple[str, str, str]
    # (parent rule id, 1-based position of this node under it) or ROOT
    parent_context: tuple[int, int] | str = field(default=ROOT)


def trigram_at(tags: Sequence[str], i: int) -> tuple[str, str, str]:
    left = tags[i - 1] if i > 0 else BOS
    right = tags[i + 1] if i + 1 < len(tags) else EOS
    return (left, tags[i], right)


def _tokenize(text: str) -> list[str]:
    return _TOKENS.findall(text)


def _read(tokens: list[str], pos: int, counter: list[int]) -> tuple[ParseTree, int]:
    if pos >= len(tokens) or tokens[pos] != "(":
        raise TreebankError(f"expected '(' at token {pos}")
    pos += 1
    if pos >= len(tokens):
        raise TreebankError("unbalanced brackets: input ends inside a node")
    label = tokens[pos]
    if label in "()":
        raise TreebankError(f"missing label at token {pos}")
    pos += 1
    if pos >= len(tokens):
        raise TreebankError("unbalanced brackets: input ends inside a node")
    if tokens[pos] == ")":
        raise TreebankError(f"empty node ({label})")
    if tokens[pos] != "(":
        word = tokens[pos]
        pos += 1
        if pos >= len(tokens):
            raise TreebankError("unbalanced brackets: input ends inside a node")
        if tokens[pos] != ")":
            raise TreebankError(f"leaf ({label} {word}) has extra content")
        counter[0] += 1
        return ParseTree(label, (), word, counter[0] - 1), pos + 1
    children = []
    while pos < len(tokens) and tokens[pos] == "(":
        child, pos = _read(tokens, pos, counter)
        children.append(child)
    if pos >= len(tokens):
        raise TreebankError("unbalanced brackets: input ends inside a node")
    if tokens[pos] != ")":
        raise TreebankError(f"leaf with missing word: bare token {tokens[pos]!r} inside ({label} ...)")
    return ParseTree(label, tuple(children)), pos + 1


def parse_tree_text(text: str) -> ParseTree:
    """Read one bracketed tree such as ``(S (NP (det the) (n cow)) (VP (v mooed)))``."""
    tokens = _tokenize(text)
    if not tokens:
        raise TreebankError("no tree in input")
    if tokens.count("(") != tokens.count(")"):
        raise TreebankError("unbalanced brackets")
    tree, pos = _read(tokens, 0, [0])
    if pos != len(tokens):
        raise TreebankError("trailing material after tree")
    return tree


def read_treebank(text: str) -> list[ParseTree]:
    """All trees in `text`; layout (one per line or pretty-printed) does not matter."""
    tokens = _tokenize(text)
    trees = []
    pos = 0
    while pos < len(tokens):
        tree, pos = _read(tokens, pos, [0])
        trees.append(tree)
    return trees


def load_treebank(path) -> list[ParseTree]:
    with open(path, encoding="utf-8") as f:
        return read_treebank(f.read())


def yield_sentence(tree: ParseTree) -> Sentence:
    leaves = list(tree.leaves())
    return Sentence(tuple(l.word for l in leaves), tuple(l.label for l in leaves))


def node_rule(grammar: Grammar, node: ParseTree) -> Rule:
    rule = grammar.find_rule(node.label, [c.label for c in node.children])
    if rule is None:
        rhs = " ".join(c.label for c in node.children)
        raise TreebankError(f"no grammar rule {node.label} -> {rhs}")
    return rule


def validate_tree(tree: ParseTree, grammar: Grammar) -> None:
    """Raise TreebankError unless every node of `tree` is licensed by `grammar`."""
    for node in tree.internal_nodes():
        node_rule(grammar, node)
    for leaf in tree.leaves():
        if not grammar.has_symbol(leaf.label) or grammar.symbol(leaf.label).kind is not SymbolKind.PRETERMINAL:
            raise TreebankError(f"leaf label {leaf.label!r} is not a preterminal")


def extract_events(tree: ParseTree, grammar: Grammar) -> list[TrainingEvent]:
    """One event per (internal node, child) pair, preorder, children left to right."""
    tags = [leaf.label for leaf in tree.leaves()]
    events: list[TrainingEvent] = []

    def walk(node: ParseTree, context) -> None:
        rule = node_rule(grammar, node)
        for i, child in enumerate(node.children, start=1):
            events.append(TrainingEvent(rule, i, trigram_at(tags, child.start), context))
        for i, child in enumerate(node.children, start=1):
            if not child.is_leaf:
                walk(child, (rule.id, i))

    if not tree.is_leaf:
        walk(tree, ROOT)
    return events


def induce_grammar(trees: Iterable[ParseTree], start: str | None = None) -> tuple[Grammar, Lexicon]:
    productions: list[tuple[str, list[str]]] = []
    seen: set[tuple[str, tuple[str, ...]]] = set()
    lexicon: dict[str, list[str]] = {}
    count = 0
    for tree in trees:
        count += 1
        if tree.is_leaf:
            raise TreebankError(f"tree {tree} has no internal node")
        for node in tree.internal_nodes():
            sig = (node.label, tuple(c.label for c in node.children))
            if sig not in seen:
                seen.add(sig)
                productions.append((sig[0], list(sig[1])))
        for leaf in tree.leaves():
            tags = lexicon.setdefault(leaf.word, [])
            if leaf.label not in tags:
                tags.append(leaf.label)
    if not count:
        raise TreebankError("cannot induce a grammar from an empty corpus")
    grammar = Grammar.build(productions, start=start, lexicon=list(lexicon.items()))
    return grammar, grammar.lexicon
