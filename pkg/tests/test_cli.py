import io
import os
import subprocess
import sys

import pytest

from picky.cli import main
from picky.models import load_models


@pytest.fixture(scope="module")
def model(tmp_path_factory, fixtures):
    out = tmp_path_factory.mktemp("m") / "g0.model"
    assert main(["train", str(fixtures / "c0.trees"), "--grammar", str(fixtures / "g0.grammar"),
                 "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def directions_model(tmp_path_factory, fixtures):
    out = tmp_path_factory.mktemp("d") / "dir.model"
    assert main(["train", str(fixtures / "directions.trees"), "--out", str(out)]) == 0
    return out


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_train_round_trip(model, g0):
    loaded = load_models(model)
    assert len(loaded.grammar.rules) == len(g0.rules)
    assert loaded.prediction.counts


def test_train_induces_grammar(directions_model):
    grammar_file = directions_model.parent / "dir.model.grammar"
    assert grammar_file.exists()
    assert "SQ -> aux NP VP" in grammar_file.read_text()


def test_train_missing_file(tmp_path, capsys):
    code, _, err = run(["train", str(tmp_path / "nope.trees"), "--out", str(tmp_path / "m")], capsys)
    assert code == 2 and "picky: error:" in err


def test_train_names_offending_tree(tmp_path, fixtures, capsys):
    code, _, err = run(["train", str(fixtures / "directions.trees"), "--grammar", str(fixtures / "g0.grammar"),
                        "--out", str(tmp_path / "m")], capsys)
    assert code == 2 and "tree 1" in err


def test_parse_fixture_sentence(model, capsys, monkeypatch):
    code, out, _ = run(["parse", "--model", str(model)], capsys, "the cow mooed\n", monkeypatch)
    assert code == 0
    assert out == "(S (NP (det the) (n cow)) (VP (v mooed)))\n"


def test_parse_stats_and_pretagged(model, capsys, monkeypatch):
    code, out, _ = run(["parse", "--model", str(model), "--stats"], capsys,
                       "a_det b_n c_v\n", monkeypatch)
    assert code == 0
    assert out.splitlines() == ["(S (NP (det a) (n b)) (VP (v c)))",
                                "# status=parsed phase=I predictions=6 completions=3 edges=8"]


def test_parse_budget_gives_noparse(model, capsys, monkeypatch):
    code, out, _ = run(["parse", "--model", str(model), "--phases", "I", "--max-edges", "5"], capsys,
                       "the cow raced past the barn\n", monkeypatch)
    assert code == 1 and out == "NOPARSE\n"


def test_parse_allow_partial(directions_model, capsys, monkeypatch):
    line = "how do I how do I get to MIT\n"
    code, out, _ = run(["parse", "--model", str(directions_model)], capsys, line, monkeypatch)
    assert code == 1 and out == "NOPARSE\n"
    code, out, _ = run(["parse", "--model", str(directions_model), "--allow-partial"], capsys, line, monkeypatch)
    assert code == 1
    assert out == "PARTIAL((S (wh how) (SQ (aux do) (NP (pro I)) (VP (v get) (PP (p to) (NP (prop MIT)))))))\n"


def test_parse_from_file(model, tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("the cow mooed\n\nthe cow raced past the barn\n")
    code, out, _ = run(["parse", "--model", str(model), str(src)], capsys)
    assert code == 0 and len(out.splitlines()) == 2


def test_parse_needs_model(capsys):
    code, _, err = run(["parse"], capsys)
    assert code == 2 and "--model" in err


def test_grammar_must_match_model(model, fixtures, capsys):
    code, _, err = run(["parse", "--model", str(model), "--grammar", str(fixtures / "directions.grammar")], capsys)
    assert code == 2 and "not the grammar" in err


@pytest.mark.parametrize("argv", [
    ["parse", "--phases", "IV"],
    ["parse", "--max-edges", "lots"],
    ["parse", "--min-score", "2"],
    ["eval", "x", "--format", "xml"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_eval_table(model, fixtures, capsys):
    code, out, _ = run(["eval", str(fixtures / "c0.trees"), "--model", str(model), "--by-phase"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split() == ["Phases", "Pred.", "Ratio", "Comp.", "Ratio", "Coverage", "%Error"]
    assert lines[1].startswith("I,II,III") and "100.0%" in lines[1]
    assert lines[3].startswith("Phase    No.  Accuracy")


def test_eval_csv_and_pairs(model, fixtures, tmp_path, capsys):
    pairs = tmp_path / "pairs.csv"
    code, out, _ = run(["eval", str(fixtures / "c0.trees"), "--model", str(model), "--format", "csv",
                        "--pairs", str(pairs)], capsys)
    assert code == 0 and out.count("config,") == 1
    assert pairs.read_text().startswith("index,log_prob,correct\n")


def test_sweeps(model, fixtures, capsys):
    code, out, _ = run(["sweep", str(fixtures / "c0.trees"), "--model", str(model), "--sweep-phases"], capsys)
    assert code == 0 and len(out.splitlines()) == 8
    code, out, _ = run(["sweep", str(fixtures / "c0.trees"), "--model", str(model),
                        "--sweep-edges", "100,150,300,500,1000,15000"], capsys)
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()[1:]] == ["100", "150", "300", "500", "1,000", "15,000"]
    code, out, _ = run(["sweep", str(fixtures / "c0.trees"), "--model", str(model),
                        "--sweep-phases", "I;I,II"], capsys)
    assert [line.split()[0] for line in out.splitlines()[1:]] == ["I", "I,II"]


def test_oracle(model, fixtures, capsys, monkeypatch):
    code, out, _ = run(["oracle", "--model", str(model), "the", "cow", "raced", "past", "the", "barn"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "# 1 parse(s): the cow raced past the barn"
    assert out.splitlines()[1].startswith("0.666667\t(S ")
    code, out, _ = run(["oracle", "--grammar", str(fixtures / "g0.grammar")], capsys,
                       "the cow mooed\nthe the the\n", monkeypatch)
    assert code == 0 and "# 0 parse(s): the the the" in out


def test_oracle_cap(tmp_path, capsys):
    g = tmp_path / "amb.grammar"
    g.write_text("S -> S S\nS -> x\n")
    code, out, _ = run(["oracle", "--grammar", str(g), "a_x a_x a_x a_x a_x a_x"], capsys)
    assert code == 0 and out.startswith("# 42 parse(s)")
    code, _, err = run(["oracle", "--grammar", str(g), "--cap", "10", "a_x a_x a_x a_x a_x a_x"], capsys)
    assert code == 2 and "more than 10" in err


def test_deterministic_output(model, fixtures, capsys):
    argv = ["sweep", str(fixtures / "c0.trees"), "--model", str(model), "--sweep-edges"]
    first = run(argv, capsys)
    assert run(argv, capsys) == first


def test_console_script_and_debug_log(model):
    env = dict(os.environ, PICKY_LOG="debug")
    proc = subprocess.run([sys.executable, "-m", "picky.cli", "parse", "--model", str(model)],
                          input="the cow mooed\n", capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "[0,3) S -> NP VP 1..2" in proc.stderr
    assert proc.stdout.strip() == "(S (NP (det the) (n cow)) (VP (v mooed)))"
