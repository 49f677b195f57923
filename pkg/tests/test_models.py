import math
from collections import Counter, defaultdict

import pytest

from picky.grammar import BOS, EOS
from picky.models import (EMPTY_SCORE, LEVEL_CONTEXT, LEVEL_LHS, LEVEL_PARENT, LEVEL_TRIGRAM,
                          ModelFormatError, Models, Score, combine_scores, dump_models, parse_models,
                          tree_logprob, tree_prob)
from picky.treebank import ROOT, parse_tree_text, yield_sentence


def _tri(tags, i):
    return (tags[i - 1] if i else BOS, tags[i], tags[i + 1] if i + 1 < len(tags) else EOS)


def count_by_hand(trees):
    """Independent relative-frequency tables keyed by rule strings."""
    pred = defaultdict(Counter)
    ctx_level = defaultdict(Counter)
    lhs_level = defaultdict(Counter)
    for tree in trees:
        tags = [l.label for l in tree.leaves()]

        def walk(node, parent):
            rule = f"{node.label} -> {' '.join(c.label for c in node.children)}"
            pos = node.start
            for i, child in enumerate(node.children, 1):
                pred[_tri(tags, child.start)][(rule, i)] += 1
            ctx_level[(parent, _tri(tags, pos))][rule] += 1
            lhs_level[node.label][rule] += 1
            for i, child in enumerate(node.children, 1):
                if child.children:
                    walk(child, (rule, i))

        walk(tree, ROOT)
    return pred, ctx_level, lhs_level


def test_prediction_model_matches_hand_count(g0, c0, m0):
    pred, _, _ = count_by_hand(c0)
    assert set(pred) == set(m0.prediction.counts)
    for trigram, counter in pred.items():
        total = sum(counter.values())
        for (rule_text, i), c in counter.items():
            rule = next(r for r in g0.rules if str(r) == rule_text)
            assert m0.prediction.predict_prob(rule, i, trigram) == pytest.approx(c / total, abs=1e-12)


def test_csp_context_level_matches_hand_count(g0, c0, m0):
    _, ctx_level, _ = count_by_hand(c0)
    by_text = {str(r): r for r in g0.rules}
    for (parent, trigram), counter in ctx_level.items():
        ctx = parent if parent == ROOT else (by_text[parent[0]].id, parent[1])
        lhs_totals = Counter()
        for rule_text, c in counter.items():
            lhs_totals[by_text[rule_text].lhs.name] += c
        for rule_text, c in counter.items():
            rule = by_text[rule_text]
            assert m0.csp.rule_prob(rule, ctx, trigram) == pytest.approx(c / lhs_totals[rule.lhs.name])


def test_subject_np_probability(g0, m0):
    # three subject NPs at the sentence start, one of them with a PP
    s = g0.find_rule("S", ["NP", "VP"])
    np = g0.find_rule("NP", ["det", "n"])
    assert m0.csp.rule_prob(np, (s.id, 1), (BOS, "det", "n")) == pytest.approx(2 / 3)


def test_backoff_levels(g0, m0):
    s = g0.find_rule("S", ["NP", "VP"])
    pp = g0.find_rule("PP", ["p", "NP"])
    np = g0.find_rule("NP", ["det", "n"])
    # NP as object of PP, trigram never seen in that context: falls to the trigram-only level
    seen = m0.csp.rule_prob(np, (pp.id, 2), ("p", "det", "n"))
    assert seen == 1.0
    unseen_tri = ("v", "det", "n")
    assert m0.csp.rule_prob(np, (pp.id, 2), unseen_tri) == pytest.approx(
        m0.csp.counts[LEVEL_LHS][("NP",)][np.id] / m0.csp.totals[LEVEL_LHS][("NP",)])
    with pytest.raises(ValueError):
        m0.csp.rule_prob(np, (s.id, 2), unseen_tri)


def test_unseen_lhs_is_uniform(g0):
    empty = Models.empty(g0)
    vp_rules = g0.rules_for(g0.symbol("VP"))
    assert all(empty.csp.rule_prob(r, ROOT, ("a", "b", "c")) == pytest.approx(1 / 3) for r in vp_rules)
    assert empty.prediction.predict_prob(vp_rules[0], 1, ("a", "b", "c")) == 0.0


def test_tree_probabilities(g0, c0, m0):
    t1, t2, t3 = c0
    assert tree_prob(m0.csp, t1, yield_sentence(t1)) == pytest.approx(2 / 3)
    assert tree_prob(m0.csp, t2, yield_sentence(t2)) == pytest.approx(2 / 3)
    assert tree_prob(m0.csp, t3, yield_sentence(t3)) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        tree_logprob(m0.csp, t2, ["det", "n", "p"])


def test_unseen_rule_gives_zero(g0, m0):
    tree = parse_tree_text("(S (NP (det the) (n cow)) (VP (v raced) (NP (det the) (n barn))))")
    assert tree_logprob(m0.csp, tree, yield_sentence(tree)) == -math.inf


def test_score_arithmetic():
    assert EMPTY_SCORE.value == 1.0
    assert Score(math.log(0.25), 1).value == pytest.approx(0.25)
    assert (Score(-1.0, 1) + Score(-3.0, 1)) == Score(-4.0, 2)
    assert combine_scores([(-1.0, 1), Score(-2.0, 2)]) == Score(-3.0, 3)
    with pytest.raises(ValueError):
        combine_scores([(float("nan"), 1)])
    with pytest.raises(ValueError):
        combine_scores([(-1.0, -1)])


def test_model_file_round_trip(m0):
    text = dump_models(m0)
    again = parse_models(text)
    assert dump_models(again) == text
    for level in (LEVEL_CONTEXT, LEVEL_PARENT, LEVEL_TRIGRAM, LEVEL_LHS):
        assert again.csp.counts[level] == m0.csp.counts[level]


@pytest.mark.parametrize("mangle", [
    lambda t: "",
    lambda t: t.replace("picky-model v1", "picky-model v9"),
    lambda t: "\n".join(t.splitlines()[:-1]),
    lambda t: t.replace("\nP ", "\nP x ", 1),
    lambda t: t + "P a b c 0 1 1\n",
])
def test_model_file_errors(m0, mangle):
    with pytest.raises(ModelFormatError):
        parse_models(mangle(dump_models(m0)))


def test_pp_object_prediction(g0, m0):
    # at (p, det, n): PP -> p NP child 2 twice, NP -> det n child 1 twice
    pp = g0.find_rule("PP", ["p", "NP"])
    np = g0.find_rule("NP", ["det", "n"])
    assert m0.prediction.predict_prob(pp, 2, ("p", "det", "n")) == 0.5
    assert m0.prediction.predict_prob(np, 1, ("p", "det", "n")) == 0.5
