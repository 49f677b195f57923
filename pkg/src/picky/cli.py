"""picky command line: train, parse, eval, sweep, oracle.

Exit status is 0 on success, 1 when some sentence failed to parse (the
failure is still reported on stdout), and 2 for usage, input or I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from .engine import PARSED, PARTIAL, ParserConfig, parse_phases
from .evaluation import (STANDARD_EDGE_LIMITS, TABLE1_HEADER, TABLE1_ORDER, EvalError, EvalReport,
                         accuracy_by_phase, evaluate, probability_pairs, read_overrides, run_parser,
                         sweep_edge_limit, sweep_phases)
from .grammar import GrammarError, Grammar, read_grammar, serialize
from .models import ModelFormatError, Models, grammar_matches, load_models, save_models
from .oracle import DEFAULT_CAP, OracleError, scored_parses
from .treebank import Sentence, TreebankError, extract_events, induce_grammar, load_treebank, validate_tree

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    pass


# argument types


def phases_arg(text: str) -> frozenset[str]:
    try:
        return parse_phases(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def edges_arg(text: str) -> int | None:
    if text.lower() in ("unlimited", "none", "inf"):
        return None
    try:
        value = int(text.replace(",", "").replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an edge count: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("edge count must be positive")
    return value


def score_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError("score floor must lie in (0, 1]")
    return value


def limits_arg(text: str) -> list[int | None]:
    return [edges_arg(part) for part in text.split(",") if part.strip()]


def subsets_arg(text: str) -> list[frozenset[str]]:
    return [phases_arg(part) for part in text.split(";") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grammar", type=Path, help="grammar file")
    common.add_argument("--model", type=Path, help="trained model file")
    common.add_argument("--phases", type=phases_arg, default=frozenset(("I", "II", "III")),
                        help="comma-separated subset of I,II,III (default: all)")
    common.add_argument("--max-edges", type=edges_arg, default=None, metavar="N|unlimited")
    common.add_argument("--min-score", type=score_arg, default=None, metavar="X")
    common.add_argument("--exhaustive", action="store_true",
                        help="keep parsing after the first spanning parse so the best one is exact")
    common.add_argument("--allow-partial", action="store_true")
    common.add_argument("--stats", action="store_true")
    common.add_argument("--format", choices=("text", "csv"), default="text")
    common.add_argument("--jobs", type=int, default=1, metavar="N")

    parser = argparse.ArgumentParser(prog="picky", description="Three-phase probabilistic chart parser.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train models from a treebank")
    p.add_argument("treebank", type=Path)
    p.add_argument("--out", type=Path, required=True, help="model file to write")

    p = sub.add_parser("parse", parents=[common], help="parse sentences, one per line")
    p.add_argument("input", nargs="?", default="-", help="input file (default: stdin)")

    p = sub.add_parser("eval", parents=[common], help="evaluate against a test treebank")
    p.add_argument("test", type=Path)
    p.add_argument("--overrides", type=Path, help="manual adjudication file")
    p.add_argument("--by-phase", action="store_true", help="also print accuracy by phase reached")
    p.add_argument("--pairs", type=Path, help="write per-sentence (log probability, correct) CSV")
    p.add_argument("--raw", action="store_true", help="tag test sentences through the lexicon")

    p = sub.add_parser("sweep", parents=[common], help="phase-subset or edge-limit sweep")
    p.add_argument("test", type=Path)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--sweep-phases", nargs="?", const="", type=str, metavar="SUBSETS",
                       help="';'-separated phase subsets (default: the seven standard rows)")
    group.add_argument("--sweep-edges", nargs="?", const=[], type=limits_arg, metavar="LIMITS",
                       help="comma-separated edge limits, e.g. 15000,1000,500,300,150,100")
    p.add_argument("--overrides", type=Path)
    p.add_argument("--raw", action="store_true")

    p = sub.add_parser("oracle", parents=[common], help="list every parse with its probability")
    p.add_argument("sentence", nargs="*", help="sentence (default: read lines from stdin)")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    return parser


# helpers


def config_from(args) -> ParserConfig:
    return ParserConfig(phases=args.phases, max_edges=args.max_edges, min_score=args.min_score,
                        stop_on_first_span=not args.exhaustive)


def load_resources(args, need_model: bool = True) -> tuple[Grammar, Models]:
    if args.model is None:
        if need_model or args.grammar is None:
            raise CliError(f"{args.command} needs --model" + ("" if need_model else " or --grammar"))
        grammar = read_grammar(args.grammar)
        return grammar, Models.empty(grammar)
    models = load_models(args.model)
    if args.grammar is not None and not grammar_matches(read_grammar(args.grammar), models.grammar):
        raise CliError(f"{args.grammar} is not the grammar {args.model} was trained with")
    return models.grammar, models


def read_lines(source: str) -> list[str]:
    if source == "-":
        text = sys.stdin.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def to_sentence(line: str, grammar: Grammar) -> Sentence:
    """``word_TAG`` tokens are taken as pre-tagged; anything else is tagged by the lexicon."""
    tokens = line.split()
    pairs = [tok.rsplit("_", 1) for tok in tokens]
    if all(len(p) == 2 and p[0] and grammar.has_symbol(p[1]) for p in pairs):
        return Sentence(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))
    return Sentence(tuple(tokens))


def stats_line(result) -> str:
    s = result.stats
    return (f"# status={result.status} phase={result.phase_reached or '-'} predictions={s.predictions} "
            f"completions={s.completions} edges={s.edges_created}")


# subcommands


def cmd_train(args) -> int:
    trees = load_treebank(args.treebank)
    if not trees:
        raise CliError(f"{args.treebank}: no trees")
    if args.grammar is not None:
        grammar = read_grammar(args.grammar)
        for k, tree in enumerate(trees, 1):
            try:
                validate_tree(tree, grammar)
            except TreebankError as e:
                raise CliError(f"{args.treebank}: tree {k} {tree}: {e}") from None
    else:
        grammar, _ = induce_grammar(trees)
        grammar_path = Path(f"{args.out}.grammar")
        grammar_path.write_text(serialize(grammar), encoding="utf-8")
    events = [ev for tree in trees for ev in extract_events(tree, grammar)]
    save_models(args.out, Models.train(events, grammar))
    print(f"trained on {len(trees)} trees, {len(events)} events, {len(grammar.rules)} rules -> {args.out}")
    return EXIT_OK


def cmd_parse(args) -> int:
    grammar, models = load_resources(args)
    config = config_from(args)
    sentences = [to_sentence(line, grammar) for line in read_lines(args.input)]
    results = run_parser(sentences, grammar, grammar.lexicon if grammar.has_lexicon else None,
                         models, config, args.jobs)
    status = EXIT_OK
    for result in results:
        if result.status == PARSED:
            print(result.tree)
        elif result.status == PARTIAL and args.allow_partial:
            print(f"PARTIAL({result.tree})")
            status = EXIT_FAILURE
        else:
            print("NOPARSE")
            status = EXIT_FAILURE
        if args.stats:
            print(stats_line(result))
    return status


def _test_corpus(args):
    trees = load_treebank(args.test)
    overrides = read_overrides(args.overrides) if getattr(args, "overrides", None) else None
    return trees, overrides


def cmd_eval(args) -> int:
    grammar, models = load_resources(args)
    trees, overrides = _test_corpus(args)
    row = evaluate(trees, grammar, grammar.lexicon if grammar.has_lexicon else None, models,
                   config_from(args), overrides=overrides, jobs=args.jobs, tagged=not args.raw)
    print(EvalReport(TABLE1_HEADER, [row]).render(args.format), end="")
    if args.by_phase:
        print()
        print(accuracy_by_phase(row).render(args.format), end="")
    if args.pairs:
        args.pairs.write_text(probability_pairs(row.outcomes), encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args) -> int:
    grammar, models = load_resources(args)
    trees, overrides = _test_corpus(args)
    lexicon = grammar.lexicon if grammar.has_lexicon else None
    base = config_from(args)
    kwargs = dict(overrides=overrides, jobs=args.jobs, tagged=not args.raw)
    if args.sweep_edges is not None:
        limits = args.sweep_edges or list(STANDARD_EDGE_LIMITS)
        report = sweep_edge_limit(trees, grammar, lexicon, models, limits, base, **kwargs)
    else:
        subsets = subsets_arg(args.sweep_phases) if args.sweep_phases else list(TABLE1_ORDER)
        report = sweep_phases(trees, grammar, lexicon, models, subsets, base, **kwargs)
    print(report.render(args.format), end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    grammar, models = load_resources(args, need_model=False)
    lines = [" ".join(args.sentence)] if args.sentence else read_lines("-")
    lexicon = grammar.lexicon if grammar.has_lexicon else None
    found_any = False
    for line in lines:
        ranked = scored_parses(grammar, to_sentence(line, grammar), models.csp, args.cap, lexicon)
        print(f"# {len(ranked)} parse(s): {line}")
        for tree, lp in ranked:
            print(f"{_prob(lp)}\t{tree}")
        found_any |= bool(ranked)
    return EXIT_OK if found_any else EXIT_FAILURE


def _prob(lp: float) -> str:
    return f"{math.exp(lp):.6g}"


COMMANDS = {"train": cmd_train, "parse": cmd_parse, "eval": cmd_eval, "sweep": cmd_sweep, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    if os.environ.get("PICKY_LOG", "").lower() == "debug":
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return COMMANDS[args.command](args)
    except (CliError, GrammarError, ModelFormatError, TreebankError, EvalError, OracleError, OSError) as e:
        print(f"picky: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
