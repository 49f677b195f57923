"""Accuracy, coverage and efficiency accounting over a test treebank.

Coverage is the share of all test sentences whose top parse matches the gold
tree exactly; %Error is the share that received a full parse that is wrong;
whatever remains (partial parses, no parse) is reported as %NoParse in CSV
output.  The prediction ratio divides all predictions by the number of
constituents the gold trees need; the completion ratio divides completed
edges by predictions.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .engine import PARSED, ParserConfig, ParseResult, parse, phases_label
from .grammar import Grammar, Lexicon
from .models import Models
from .treebank import ParseTree, Sentence, TreebankError, validate_tree, yield_sentence

TABLE1_HEADER = ("Phases", "Pred. Ratio", "Comp. Ratio", "Coverage", "%Error")
TABLE2_HEADER = ("Phase", "No.", "Accuracy", "Coverage", "%Error")
TABLE3_HEADER = ("Maximum Edge Count", "Pred. Ratio", "Comp. Ratio", "Coverage", "%Error")
CSV_COLUMNS = ("config", "pred_ratio", "comp_ratio", "coverage", "pct_error", "pct_no_parse", "n")
TABLE2_CSV_COLUMNS = ("phase", "n", "accuracy", "coverage", "pct_error")

TABLE1_ORDER = ("I", "I,II", "II", "I,III", "III", "I,II,III", "II,III")
STANDARD_EDGE_LIMITS = (15_000, 1_000, 500, 300, 150, 100)


class EvalError(ValueError):
    pass


# formatting


def ratio(x: float) -> str:
    return f"{x:.2f}"


def percent(x: float, digits: int = 1) -> str:
    return f"{x:.{digits}f}%"


def format_row(label: str, pred_ratio: float, comp_ratio: float, coverage: float,
               pct_error: float, digits: int = 1) -> str:
    """One row of the phase-sweep or edge-limit table, cells separated by two spaces."""
    return "  ".join((label, ratio(pred_ratio), ratio(comp_ratio),
                      percent(coverage, digits), percent(pct_error, digits)))


def format_phase_row(label: str, n: int, accuracy: float, coverage: float, pct_error: float,
                     digits: int = 0) -> str:
    """One row of the by-phase table, e.g. ``I + II  238  97%  77%  3%``."""
    return "  ".join((label, str(n), percent(accuracy, digits), percent(coverage, digits),
                      percent(pct_error, digits)))


def edge_limit_label(limit: int | None) -> str:
    return "unlimited" if limit is None else f"{limit:,}"


def aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """First column left-justified, the rest right-justified, two-space gutters."""
    table = [list(header)] + [list(r) for r in rows]
    widths = [max(len(r[k]) for r in table) for k in range(len(header))]
    lines = []
    for r in table:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


# per-sentence outcomes


@dataclass(frozen=True)
class SentenceOutcome:
    index: int
    gold: ParseTree
    result: ParseResult
    correct: bool
    needed: int

    def __post_init__(self):
        if self.correct and self.result.status != PARSED:
            raise EvalError("a sentence cannot be correct without a full parse")

    @property
    def parsed_wrong(self) -> bool:
        return self.result.status == PARSED and not self.correct


@dataclass
class EvalRow:
    config: str
    outcomes: tuple[SentenceOutcome, ...]

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def predictions(self) -> int:
        return sum(o.result.stats.predictions for o in self.outcomes)

    @property
    def completions(self) -> int:
        return sum(o.result.stats.completions for o in self.outcomes)

    @property
    def needed(self) -> int:
        return sum(o.needed for o in self.outcomes)

    @property
    def correct(self) -> int:
        return sum(o.correct for o in self.outcomes)

    @property
    def wrong(self) -> int:
        return sum(o.parsed_wrong for o in self.outcomes)

    @property
    def no_parse(self) -> int:
        return self.n - self.correct - self.wrong

    @property
    def prediction_ratio(self) -> float:
        return self.predictions / self.needed if self.needed else 0.0

    @property
    def completion_ratio(self) -> float:
        return self.completions / self.predictions if self.predictions else 0.0

    @property
    def coverage(self) -> float:
        return 100.0 * self.correct / self.n

    @property
    def pct_error(self) -> float:
        return 100.0 * self.wrong / self.n

    @property
    def pct_no_parse(self) -> float:
        return 100.0 * self.no_parse / self.n

    def cells(self) -> list[str]:
        return [self.config, ratio(self.prediction_ratio), ratio(self.completion_ratio),
                percent(self.coverage), percent(self.pct_error)]

    def csv_cells(self) -> list[str]:
        return [self.config, f"{self.prediction_ratio:.4f}", f"{self.completion_ratio:.4f}",
                f"{self.coverage:.2f}", f"{self.pct_error:.2f}", f"{self.pct_no_parse:.2f}", str(self.n)]


@dataclass
class EvalReport:
    header: tuple[str, ...]
    rows: list[EvalRow] = field(default_factory=list)

    def to_text(self) -> str:
        return aligned(self.header, [r.cells() for r in self.rows])

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(r.csv_cells())
        return out.getvalue()

    def render(self, fmt: str = "text") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "text":
            return self.to_text()
        raise ValueError(f"unknown format {fmt!r}")


@dataclass(frozen=True)
class PhaseRow:
    label: str
    n: int
    correct: int
    wrong: int
    total: int
    digits: int = 0

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.n if self.n else 0.0

    @property
    def coverage(self) -> float:
        return 100.0 * self.correct / self.total

    @property
    def pct_error(self) -> float:
        return 100.0 * self.wrong / self.n if self.n else 0.0

    def cells(self) -> list[str]:
        d = self.digits
        return [self.label, str(self.n), percent(self.accuracy, d), percent(self.coverage, d),
                percent(self.pct_error, d)]


@dataclass
class PhaseTable:
    rows: list[PhaseRow]
    header: tuple[str, ...] = TABLE2_HEADER

    def to_text(self) -> str:
        return aligned(self.header, [r.cells() for r in self.rows])

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(TABLE2_CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([r.label, r.n, f"{r.accuracy:.2f}", f"{r.coverage:.2f}", f"{r.pct_error:.2f}"])
        return out.getvalue()

    def render(self, fmt: str = "text") -> str:
        return self.to_csv() if fmt == "csv" else self.to_text()


# running the parser


def read_overrides(path) -> dict[int, bool]:
    """Manual adjudications: lines ``<sentence index> correct|wrong``; ``#`` comments."""
    found: dict[int, bool] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or not parts[0].isdigit() or parts[1] not in ("correct", "wrong"):
                raise EvalError(f"{path}:{lineno}: expected '<index> correct|wrong'")
            found[int(parts[0])] = parts[1] == "correct"
    return found


def _sentence(gold: ParseTree, tagged: bool) -> Sentence:
    s = yield_sentence(gold)
    return s if tagged else Sentence(s.words)


def _parse_job(args) -> ParseResult:
    sentence, grammar, lexicon, models, config = args
    result = parse(sentence, grammar, lexicon, models, config)
    result.chart = None
    return result


def run_parser(sentences: Sequence[Sentence], grammar: Grammar, lexicon: Lexicon | None,
               models: Models, config: ParserConfig, jobs: int = 1) -> list[ParseResult]:
    """Parse every sentence; results come back in input order."""
    jobs_args = [(s, grammar, lexicon, models, config) for s in sentences]
    if jobs > 1 and len(sentences) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_parse_job, jobs_args, chunksize=max(1, len(sentences) // (4 * jobs))))
    return [_parse_job(a) for a in jobs_args]


def _check_corpus(test: Sequence[ParseTree], grammar: Grammar) -> None:
    if not test:
        raise EvalError("empty test corpus")
    for k, gold in enumerate(test):
        try:
            validate_tree(gold, grammar)
        except TreebankError as e:
            raise EvalError(f"test tree {k} does not match the grammar: {e}") from None


def outcomes_for(test: Sequence[ParseTree], results: Sequence[ParseResult],
                 overrides: Mapping[int, bool] | None = None) -> tuple[SentenceOutcome, ...]:
    overrides = overrides or {}
    out = []
    for k, (gold, result) in enumerate(zip(test, results)):
        needed = gold.constituent_count()
        result.stats.needed_constituents = needed
        correct = result.status == PARSED and result.tree == gold
        if result.status == PARSED and k in overrides:
            correct = overrides[k]
        out.append(SentenceOutcome(k, gold, result, correct, needed))
    return tuple(out)


def evaluate(test: Sequence[ParseTree], grammar: Grammar, lexicon: Lexicon | None, models: Models,
             config: ParserConfig | None = None, overrides: Mapping[int, bool] | None = None,
             jobs: int = 1, label: str | None = None, tagged: bool = True) -> EvalRow:
    """Parse every gold tree's yield and score the top parse against the tree."""
    config = config or ParserConfig()
    test = list(test)
    _check_corpus(test, grammar)
    sentences = [_sentence(g, tagged) for g in test]
    results = run_parser(sentences, grammar, lexicon, models, config, jobs)
    return EvalRow(label or phases_label(config.phases), outcomes_for(test, results, overrides))


def sweep_phases(test: Sequence[ParseTree], grammar: Grammar, lexicon: Lexicon | None, models: Models,
                 subsets: Iterable = TABLE1_ORDER, base: ParserConfig | None = None,
                 **kwargs) -> EvalReport:
    base = base or ParserConfig()
    report = EvalReport(TABLE1_HEADER)
    for subset in subsets:
        config = replace(base, phases=subset)
        report.rows.append(evaluate(test, grammar, lexicon, models, config, **kwargs))
    return report


def sweep_edge_limit(test: Sequence[ParseTree], grammar: Grammar, lexicon: Lexicon | None, models: Models,
                     limits: Iterable = STANDARD_EDGE_LIMITS, base: ParserConfig | None = None,
                     **kwargs) -> EvalReport:
    base = base or ParserConfig()
    report = EvalReport(TABLE3_HEADER)
    for limit in limits:
        config = replace(base, max_edges=limit)
        report.rows.append(evaluate(test, grammar, lexicon, models, config,
                                    label=edge_limit_label(limit), **kwargs))
    return report


def accuracy_by_phase(outcomes: Sequence[SentenceOutcome] | EvalRow) -> PhaseTable:
    """Split sentences by the last phase the parser entered."""
    if isinstance(outcomes, EvalRow):
        outcomes = outcomes.outcomes
    outcomes = list(outcomes)
    if not outcomes:
        raise EvalError("no outcomes")
    total = len(outcomes)
    groups = (("I + II", ("I", "II")), ("III", ("III",)))
    rows = []
    for label, phases in groups:
        group = [o for o in outcomes if o.result.phase_reached in phases]
        rows.append(PhaseRow(label, len(group), sum(o.correct for o in group),
                             sum(o.parsed_wrong for o in group), total))
    rows.append(PhaseRow("Overall", total, sum(o.correct for o in outcomes),
                         sum(o.parsed_wrong for o in outcomes), total, digits=1))
    return PhaseTable(rows)


def probability_pairs(outcomes: Sequence[SentenceOutcome]) -> str:
    """CSV of (index, log probability of top parse, correct) for every sentence."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("index", "log_prob", "correct"))
    for o in outcomes:
        lp = "" if o.result.log_prob is None else repr(o.result.log_prob)
        writer.writerow((o.index, lp, int(o.correct)))
    return out.getvalue()

