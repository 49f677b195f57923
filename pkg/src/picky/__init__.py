"""A three-phase probabilistic chart parser with trained prediction and rule models."""

from .engine import ParseResult, ParserConfig, parse
from .evaluation import evaluate, sweep_edge_limit, sweep_phases
from .grammar import Grammar, Lexicon, Rule, Symbol, load_grammar, read_grammar
from .models import Models, load_models, save_models
from .oracle import all_parses, best_parse_bruteforce
from .treebank import ParseTree, Sentence, load_treebank, parse_tree_text, read_treebank

__all__ = [
    "Grammar", "Lexicon", "Models", "ParseResult", "ParseTree", "ParserConfig", "Rule", "Sentence", "Symbol",
    "all_parses", "best_parse_bruteforce", "evaluate", "load_grammar", "load_models", "load_treebank", "parse",
    "parse_tree_text", "read_grammar", "read_treebank", "save_models", "sweep_edge_limit", "sweep_phases",
]
