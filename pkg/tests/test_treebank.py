import pytest

from picky.grammar import BOS, EOS
from picky.treebank import (ROOT, TreebankError, extract_events, induce_grammar, parse_tree_text,
                            read_treebank, validate_tree, yield_sentence)

T2 = "(S (NP (det the) (n cow)) (VP (v mooed)))"


def test_t1_yield(c0):
    s = yield_sentence(c0[0])
    assert s.words == ("the", "cow", "raced", "past", "the", "barn")
    assert s.tags == ("det", "n", "v", "p", "det", "n")


def test_t2_words(c0):
    assert yield_sentence(c0[1]).words == ("the", "cow", "mooed")


def test_str_round_trip(c0):
    for tree in c0:
        assert parse_tree_text(str(tree)) == tree
    assert str(parse_tree_text(T2)) == T2


def test_layout_does_not_matter():
    pretty = "(S\n  (NP (det the)\n      (n cow))\n  (VP (v mooed)))\n\n" + T2
    trees = read_treebank(pretty)
    assert len(trees) == 2 and trees[0] == trees[1]


def test_spans_and_counts(c0):
    t1 = c0[0]
    assert (t1.start, t1.end) == (0, 6)
    assert t1.constituent_count() == 5
    assert c0[1].constituent_count() == 3


def test_t2_np_events(g0, c0):
    events = extract_events(c0[1], g0)
    np_rule = g0.find_rule("NP", ["det", "n"])
    np_events = {(e.child_index, e.trigram) for e in events if e.rule == np_rule}
    assert np_events == {(1, (BOS, "det", "n")), (2, ("det", "n", "v"))}
    assert all(e.parent_context == ROOT for e in events if e.rule.lhs.name == "S")
    s_rule = g0.find_rule("S", ["NP", "VP"])
    assert {e.parent_context for e in events if e.rule == np_rule} == {(s_rule.id, 1)}
    assert len(events) == 5
    assert events[-1].trigram == ("n", "v", EOS)


def test_induced_grammar_is_g0_minus_transitive_vp(g0, c0):
    induced, lexicon = induce_grammar(c0)
    assert {str(r) for r in g0.rules} - {str(r) for r in induced.rules} == {"VP -> v NP"}
    assert {str(r) for r in induced.rules} <= {str(r) for r in g0.rules}
    assert {w for w, _ in lexicon.items()} == {"the", "cow", "raced", "past", "barn", "mooed"}


def test_validate(g0):
    validate_tree(parse_tree_text(T2), g0)
    with pytest.raises(TreebankError, match="no grammar rule"):
        validate_tree(parse_tree_text("(S (VP (v mooed)))"), g0)


@pytest.mark.parametrize("text", [
    "(S (NP (det the) (n cow))",
    "(S (NP))",
    "(S (NP the cow))",
    "(S (NP (det the) cow))",
    "",
    "(S (v x)) extra",
])
def test_malformed(text):
    with pytest.raises(TreebankError):
        parse_tree_text(text)


def test_empty_corpus_cannot_induce():
    with pytest.raises(TreebankError):
        induce_grammar([])
