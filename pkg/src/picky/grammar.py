"""Context-free rule base, symbol table and lexicon.

Grammar files are plain text::

    # comment
    %start S
    S -> NP VP
    NP -> det n
    %lexicon
    the : det
    cow : n

Symbols that appear on the left of some rule are nonterminals; every other
symbol is a preterminal (part of speech).  When a lexicon section is present,
each preterminal used in a rule must be one of its parts of speech.
"""

from __future__ import annotations

import enum
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"

_TOKEN = re.compile(r"\S+")


class GrammarError(ValueError):
    """Invalid grammar text or grammar structure."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class SymbolKind(enum.Enum):
    NONTERMINAL = "nonterminal"
    PRETERMINAL = "preterminal"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class Symbol:
    id: int
    name: str
    kind: SymbolKind

    def __hash__(self) -> int:
        return hash((self.id, self.name))

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if other.__class__ is not Symbol:
            return NotImplemented
        return self.id == other.id and self.name == other.name and self.kind is other.kind

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Rule:
    id: int
    lhs: Symbol
    rhs: tuple[Symbol, ...]

    def __hash__(self) -> int:
        return hash((self.id, self.lhs.name))

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if other.__class__ is not Rule:
            return NotImplemented
        return self.id == other.id and self.lhs == other.lhs and self.rhs == other.rhs

    @property
    def arity(self) -> int:
        return len(self.rhs)

    def __str__(self) -> str:
        return f"{self.lhs.name} -> {' '.join(s.name for s in self.rhs)}"


class Lexicon:
    """Map from word to the parts of speech it may carry."""

    def __init__(self, entries: dict[str, tuple[Symbol, ...]] | None = None):
        self.entries: dict[str, tuple[Symbol, ...]] = dict(entries or {})

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Lexicon) and self.entries == other.entries

    def pos_tags(self, word: str) -> frozenset[Symbol]:
        return frozenset(self.entries.get(word, ()))

    def items(self):
        return self.entries.items()


def pos_tags(lexicon: Lexicon, word: str) -> frozenset[Symbol]:
    """Parts of speech for `word`; empty when the word is unknown."""
    return lexicon.pos_tags(word)


class Grammar:
    """Validated grammar with lookup indexes.

    Build through :meth:`build` or :func:`load_grammar`; symbol and rule ids
    follow first appearance so that serialising and reloading preserves them.
    """

    def __init__(self, symbols: list[Symbol], rules: list[Rule], start: Symbol, lexicon: Lexicon | None):
        self.symbols = symbols
        self.rules = rules
        self.start = start
        self.lexicon = lexicon if lexicon is not None else Lexicon()
        self.has_lexicon = lexicon is not None
        self._by_name = {s.name: s for s in symbols}
        self._index()
        self._check_unary_cycles()

    @classmethod
    def build(
        cls,
        productions: Sequence[tuple[str, Sequence[str]]],
        start: str | None = None,
        lexicon: Sequence[tuple[str, Sequence[str]]] | None = None,
        lines: Sequence[int] | None = None,
    ) -> "Grammar":
        if not productions:
            raise GrammarError("grammar has no rules")
        lhs_names = {lhs for lhs, _ in productions}
        order: list[str] = []
        seen: set[str] = set()

        def note(name: str) -> None:
            if name not in seen:
                seen.add(name)
                order.append(name)

        for k, (lhs, rhs) in enumerate(productions):
            line = lines[k] if lines else None
            if not rhs:
                raise GrammarError(f"epsilon rule for {lhs!r} is not allowed", line)
            for name in (lhs, *rhs):
                if name in (BOS, EOS):
                    raise GrammarError(f"boundary symbol {name!r} used in a rule", line)
                note(name)
        lex_pos: list[str] = []
        if lexicon is not None:
            for word, tags in lexicon:
                if not tags:
                    raise GrammarError(f"lexicon entry {word!r} has no parts of speech")
                for tag in tags:
                    if tag in lhs_names:
                        raise GrammarError(f"lexicon tag {tag!r} is a nonterminal")
                    if tag in (BOS, EOS):
                        raise GrammarError(f"boundary symbol {tag!r} used as a tag")
                    note(tag)
                    lex_pos.append(tag)
            declared = set(lex_pos)
            for k, (_, rhs) in enumerate(productions):
                for name in rhs:
                    if name not in lhs_names and name not in declared:
                        raise GrammarError(f"undeclared symbol {name!r}", lines[k] if lines else None)

        symbols = [Symbol(0, BOS, SymbolKind.BOUNDARY), Symbol(1, EOS, SymbolKind.BOUNDARY)]
        for name in order:
            kind = SymbolKind.NONTERMINAL if name in lhs_names else SymbolKind.PRETERMINAL
            symbols.append(Symbol(len(symbols), name, kind))
        by_name = {s.name: s for s in symbols}

        rules: list[Rule] = []
        seen_rules: set[tuple[str, tuple[str, ...]]] = set()
        for k, (lhs, rhs) in enumerate(productions):
            sig = (lhs, tuple(rhs))
            if sig in seen_rules:
                raise GrammarError(f"duplicate rule {lhs} -> {' '.join(rhs)}", lines[k] if lines else None)
            seen_rules.add(sig)
            rules.append(Rule(len(rules), by_name[lhs], tuple(by_name[n] for n in rhs)))

        start_name = start if start is not None else productions[0][0]
        if start_name not in lhs_names:
            raise GrammarError(f"undeclared start symbol {start_name!r}")
        lex = None
        if lexicon is not None:
            entries: dict[str, tuple[Symbol, ...]] = {}
            for word, tags in lexicon:
                merged = list(entries.get(word, ()))
                for tag in tags:
                    if by_name[tag] not in merged:
                        merged.append(by_name[tag])
                entries[word] = tuple(merged)
            lex = Lexicon(entries)
        return cls(symbols, rules, by_name[start_name], lex)

    def _index(self) -> None:
        by_lhs: dict[Symbol, list[Rule]] = defaultdict(list)
        members: dict[Symbol, list[tuple[Rule, int]]] = defaultdict(list)
        by_lc: dict[Symbol, list[Rule]] = defaultdict(list)
        for rule in self.rules:
            by_lhs[rule.lhs].append(rule)
            by_lc[rule.rhs[0]].append(rule)
            for i, sym in enumerate(rule.rhs, start=1):
                members[sym].append((rule, i))
        self.rules_by_lhs = {k: tuple(v) for k, v in by_lhs.items()}
        self.rules_by_member = {k: tuple(v) for k, v in members.items()}
        self.rules_by_left_corner = {k: tuple(v) for k, v in by_lc.items()}
        self._by_signature = {(r.lhs.name, tuple(s.name for s in r.rhs)): r for r in self.rules}
        # id-indexed copies for the parser's inner loop
        self._lhs_by_id = [self.rules_by_lhs.get(s, ()) for s in self.symbols]
        self._lc_by_id = [self.rules_by_left_corner.get(s, ()) for s in self.symbols]

    def _check_unary_cycles(self) -> None:
        edges: dict[Symbol, list[Symbol]] = defaultdict(list)
        for rule in self.rules:
            if rule.arity == 1 and rule.rhs[0].kind is SymbolKind.NONTERMINAL:
                edges[rule.lhs].append(rule.rhs[0])
        WHITE, GREY, BLACK = 0, 1, 2
        colour: dict[Symbol, int] = defaultdict(int)

        def visit(sym: Symbol, path: list[str]) -> None:
            colour[sym] = GREY
            for nxt in edges[sym]:
                if colour[nxt] == GREY:
                    cycle = path[path.index(nxt.name):] + [nxt.name] if nxt.name in path else [sym.name, nxt.name]
                    raise GrammarError("cyclic unary chain: " + " -> ".join(cycle))
                if colour[nxt] == WHITE:
                    visit(nxt, path + [nxt.name])
            colour[sym] = BLACK

        for sym in list(edges):
            if colour[sym] == WHITE:
                visit(sym, [sym.name])

    # lookups

    @property
    def bos(self) -> Symbol:
        return self.symbols[0]

    @property
    def eos(self) -> Symbol:
        return self.symbols[1]

    @property
    def nonterminals(self) -> list[Symbol]:
        return [s for s in self.symbols if s.kind is SymbolKind.NONTERMINAL]

    @property
    def preterminals(self) -> list[Symbol]:
        return [s for s in self.symbols if s.kind is SymbolKind.PRETERMINAL]

    def symbol(self, name: str) -> Symbol:
        try:
            return self._by_name[name]
        except KeyError:
            raise GrammarError(f"undeclared symbol {name!r}") from None

    def has_symbol(self, name: str) -> bool:
        return name in self._by_name

    def find_rule(self, lhs: str, rhs: Sequence[str]) -> Rule | None:
        return self._by_signature.get((lhs, tuple(rhs)))

    def rules_for(self, lhs: Symbol) -> tuple[Rule, ...]:
        return self._lhs_by_id[lhs.id]

    def left_corner_rules(self, sym: Symbol) -> tuple[Rule, ...]:
        return self._lc_by_id[sym.id]

    def __repr__(self) -> str:
        return f"<Grammar start={self.start.name} rules={len(self.rules)} symbols={len(self.symbols)}>"


def rules_with_member(grammar: Grammar, sym: Symbol | str) -> list[tuple[Rule, int]]:
    """Every ``(rule, i)`` with ``rule.rhs[i-1] == sym`` (1-based child index)."""
    if isinstance(sym, str):
        sym = grammar.symbol(sym)
    elif sym.id >= len(grammar.symbols) or grammar.symbols[sym.id] != sym:
        raise GrammarError(f"undeclared symbol {sym.name!r}")
    return list(grammar.rules_by_member.get(sym, ()))


def load_grammar(text: str) -> Grammar:
    productions: list[tuple[str, list[str]]] = []
    lines: list[int] = []
    lexicon: list[tuple[str, list[str]]] | None = None
    start: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        stripped = line.strip()
        if stripped.startswith("%"):
            parts = stripped.split()
            if parts[0] == "%lexicon" and len(parts) == 1:
                if lexicon is not None:
                    raise GrammarError("duplicate %lexicon section", lineno, col)
                lexicon = []
            elif parts[0] == "%start":
                if len(parts) != 2:
                    raise GrammarError("%start takes exactly one symbol", lineno, col)
                start = parts[1]
            else:
                raise GrammarError(f"unknown directive {parts[0]!r}", lineno, col)
            continue
        if lexicon is not None:
            if ":" not in line:
                raise GrammarError("expected 'word : pos ...'", lineno, col)
            word, _, tags = line.partition(":")
            word = word.strip()
            if not word or len(word.split()) != 1:
                raise GrammarError("lexicon entry needs exactly one word", lineno, col)
            tag_list = tags.split()
            if not tag_list:
                raise GrammarError(f"no parts of speech for {word!r}", lineno, line.index(":") + 2)
            lexicon.append((word, tag_list))
            continue
        if "->" not in line:
            raise GrammarError("expected 'LHS -> RHS ...'", lineno, col)
        lhs, _, rhs = line.partition("->")
        if "->" in rhs:
            raise GrammarError("more than one '->'", lineno, line.index("->", line.index("->") + 2) + 1)
        lhs_tokens = lhs.split()
        if len(lhs_tokens) != 1:
            raise GrammarError("left-hand side must be a single symbol", lineno, col)
        rhs_tokens = rhs.split()
        if not rhs_tokens:
            raise GrammarError(f"epsilon rule for {lhs_tokens[0]!r} is not allowed", lineno, line.index("->") + 3)
        productions.append((lhs_tokens[0], rhs_tokens))
        lines.append(lineno)
    return Grammar.build(productions, start=start, lexicon=lexicon, lines=lines)


def serialize(grammar: Grammar) -> str:
    out = []
    if grammar.start != grammar.rules[0].lhs:
        out.append(f"%start {grammar.start.name}")
    out.extend(str(rule) for rule in grammar.rules)
    if grammar.has_lexicon:
        out.append("%lexicon")
        for word, tags in grammar.lexicon.items():
            out.append(f"{word} : {' '.join(t.name for t in tags)}")
    return "\n".join(out) + "\n"


def read_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as f:
        return load_grammar(f.read())


def productions_of(rules: Iterable[Rule]) -> list[tuple[str, list[str]]]:
    return [(r.lhs.name, [s.name for s in r.rhs]) for r in rules]
