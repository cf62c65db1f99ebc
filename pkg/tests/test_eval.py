import random
import time

import numpy as np
import pytest

from seqparse.eval import (
    EvalError, attention_stats, boundary_hits, bracket_f1, brackets, compare_speed, speed_bench,
)
from seqparse.linearize import linearize
from seqparse.seq2seq import model as M
from seqparse.seq2seq.decode import Decoder
from seqparse.treebank import Leaf, Tree, parse_ptb, random_tree, yield_of

from conftest import tiny_params


def _flat_pred(sample_tree):
    w = yield_of(sample_tree)
    return Tree("S", (Tree("NP", tuple(w[:2])), Tree("VP", tuple(w[2:5])), w[5]))


def test_identity_is_100(sample_tree, random_trees):
    sc = bracket_f1(random_trees[:50] + [sample_tree], random_trees[:50] + [sample_tree])
    assert (sc.precision, sc.recall, sc.f1) == (100.0, 100.0, 100.0)
    assert sc.report().splitlines()[-1] == "F1=100.0"


def test_sample_tree_against_flat_prediction(sample_tree):
    sc = bracket_f1([sample_tree], [_flat_pred(sample_tree)])
    assert (sc.gold, sc.predicted, sc.matched) == (5, 3, 3)
    assert sc.precision == pytest.approx(100.0)
    assert sc.recall == pytest.approx(60.0)
    assert sc.f1 == pytest.approx(75.0)
    assert "Precision: 100.0\nRecall: 60.0\nF1: 75.0\nF1=75.0" in sc.report()


def test_root_counts_so_different_single_labels_score_zero():
    (a,), (b,) = parse_ptb("(X (T w))"), parse_ptb("(Y (T w))")
    assert bracket_f1([a], [b]).f1 == 0.0


def test_duplicate_spans_match_as_multiset():
    (g,) = parse_ptb("(X (X (T a) (T b)))")
    (p,) = parse_ptb("(X (T a) (T b))")
    sc = bracket_f1([g], [p])
    assert (sc.gold, sc.predicted, sc.matched) == (2, 1, 1)


def test_f1_is_symmetric_and_bounded(random_trees):
    rng = random.Random(0)
    for _ in range(200):
        g = random_trees[rng.randrange(1000)]
        words = yield_of(g)
        p = random_tree(rng, max_depth=5, max_fanout=3)
        # give the random tree the gold yield
        it = iter(words)
        def relabel(node):
            if isinstance(node, Leaf):
                return next(it, None)
            kids = tuple(k for k in (relabel(c) for c in node.children) if k is not None)
            return Tree(node.label, kids) if kids else None
        p = relabel(p)
        rest = list(it)
        if p is None or rest:
            p = Tree("S", ((p,) if p is not None else ()) + tuple(rest))
        if yield_of(p) != words:
            continue
        a, b = bracket_f1([g], [p]), bracket_f1([p], [g])
        assert a.f1 == pytest.approx(b.f1)
        assert a.precision == pytest.approx(b.recall)
        assert 0.0 <= a.f1 <= 100.0
        assert (a.f1 == 100.0) == (brackets(g) == brackets(p))


def test_yield_mismatch_names_the_sentence(sample_tree):
    (other,) = parse_ptb("(X (T w))")
    with pytest.raises(EvalError, match="sentence 2"):
        bracket_f1([sample_tree, sample_tree], [sample_tree, other])
    with pytest.raises(EvalError):
        bracket_f1([sample_tree], [])


def test_punctuation_exclusion(sample_tree):
    # attaching the final period elsewhere changes the S span only when punctuation counts
    (moved,) = parse_ptb("(S (NP (DT The) (NN public)) (VP (VBZ is) (ADVP (RB still)) "
                         "(ADJP (JJ cautious)) (. .)))")
    assert bracket_f1([sample_tree], [moved]).f1 < 100.0
    assert bracket_f1([sample_tree], [moved], exclude_punct=True).f1 == 100.0
    assert ("S", 0, 5) in brackets(sample_tree, exclude_punct=True)
    assert ("S", 0, 6) in brackets(sample_tree)
    (only,) = parse_ptb("(S (X (. .)) (NN a))")
    assert brackets(only, exclude_punct=True) == {("S", 0, 1): 1}


# -- attention statistics ---------------------------------------------------------

def test_uniform_attention_two_words_split_one_is_all_boundary():
    assert boundary_hits([(1, np.zeros(2))]) == (1, 1)


def test_peak_on_last_word_with_split_zero():
    for n in (2, 3, 5, 9):
        beta = np.zeros(n)
        beta[-1] = 5.0
        assert boundary_hits([(0, beta)] * 4) == (0, 4)
    # a one-word sentence: the only word is the first of the right segment
    assert boundary_hits([(0, np.array([5.0]))]) == (1, 1)


def test_attention_stats_on_a_model(small_trees):
    p = tiny_params(small_trees, "td-sr", seed=2)
    sents = [yield_of(t) for t in small_trees[:10]]
    st = attention_stats(sents, p)
    dec = Decoder(p, "prob")
    dec.trace = []
    total = 0
    for s in sents:
        total += len(dec.greedy(s))
    assert st["steps"] == total
    assert 0.0 <= st["frequency_argmax_at_p_or_p1"] <= 1.0
    # flat scores put every argmax on the first word, a boundary exactly while p <= 1
    p["U"] = np.zeros_like(p["U"])
    dec = Decoder(p, "prob")
    dec.trace = []
    for s in sents:
        dec.greedy(s)
    expected = sum(1 for split, _ in dec.trace if split <= 1) / len(dec.trace)
    assert attention_stats(sents, p)["frequency_argmax_at_p_or_p1"] == pytest.approx(expected)


# -- speed ----------------------------------------------------------------------

def _forced(params, n, k=4, seed=0):
    rng = random.Random(seed)
    trees = [random_tree(rng, max_depth=8, max_fanout=4, max_words=n, leaf_prob=0.3)
             for _ in range(k)]
    return [yield_of(t) for t in trees], [linearize(t, params.scheme) for t in trees]


def test_speed_bench_reports_runs(small_trees):
    p = tiny_params(small_trees, "td-sr")
    sents = [yield_of(t) for t in small_trees[:5]]
    res = speed_bench(sents, p, "det", runs=3)
    assert len(res.runs) == 3 and res.mean > 0
    with pytest.raises(ValueError):
        speed_bench(sents, p, runs=0)
    with pytest.raises(ValueError):
        speed_bench([], p)


def test_forced_mode_checks_lengths(small_trees):
    p = tiny_params(small_trees, "td-sr")
    sents, forced = _forced(p, 10)
    with pytest.raises(ValueError):
        speed_bench(sents, p, forced=forced[:-1])


def test_prob_throughput_does_not_increase_with_length(small_trees):
    from seqparse.linearize import build_vocab
    from seqparse.seq2seq.config import Config
    from seqparse.seq2seq.params import ModelParams

    trees = [random_tree(random.Random(i), max_depth=8, max_fanout=4, max_words=80, leaf_prob=0.3)
             for i in range(20)]
    p = ModelParams.initialize(Config(scheme="td-sr", seed=1), build_vocab(trees, "td-sr"))
    rates = []
    for n in (5, 20, 80):
        rng = random.Random(n)
        sized = []
        while len(sized) < 3:
            t = random_tree(rng, max_depth=8, max_fanout=4, max_words=n, leaf_prob=0.3)
            if len(yield_of(t)) >= n // 2:
                sized.append(t)
        sents = [yield_of(t) for t in sized]
        forced = [linearize(t, "td-sr") for t in sized]
        rates.append(speed_bench(sents, p, "prob", runs=2, forced=forced).mean)
    assert rates[0] >= rates[1] >= rates[2]


def test_det_step_time_is_flat_in_length(small_trees):
    p = tiny_params(small_trees, "td-sr", enc_hidden=100, dec_hidden=200, att_hidden=50)
    d = np.ones(200)

    def per_call(n):
        H = np.random.default_rng(n).normal(size=(n, 200))
        best = float("inf")
        for _ in range(5):
            t0 = time.perf_counter()
            for i in range(200):
                M.attention_det(H, d, i % n, p)
            best = min(best, time.perf_counter() - t0)
        return best / 200

    assert per_call(100) < 2.0 * per_call(10)
    counter = {}
    dec = Decoder(p, "det", counter)
    s = yield_of(small_trees[0])
    toks = dec.greedy(s)
    assert counter["beta"] <= 2 * len(toks)


def test_compare_speed_interleaves_setups(small_trees):
    p = tiny_params(small_trees, "td-sr")
    sents, forced = _forced(p, 10)
    out = compare_speed(sents, {"prob": (p, "prob"), "det": (p, "det")}, runs=2, forced=forced)
    assert set(out) == {"prob", "det"}
    assert all(len(r.runs) == 2 for r in out.values())
