"""Acceptance criteria 1 to 9, one PASS/FAIL line each.

The lines are written straight to the terminal (bypassing capture) so that
``pytest -v`` output records them. Criterion 9 is not reproducible at this
scale; its test reports the substitute measurement and is skipped.
"""

import random
import time

import pytest

from seqparse import transitions as tr
from seqparse.delinearize import delinearize
from seqparse.eval import attention_stats, bracket_f1, compare_speed
from seqparse.linearize import Scheme, build_vocab, format_tokens, linearize, token_bijection_check
from seqparse.seq2seq import model as M
from seqparse.seq2seq.config import Config
from seqparse.seq2seq.decode import Decoder
from seqparse.seq2seq.params import ModelParams
from seqparse.seq2seq.train import train
from seqparse.transitions import System
from seqparse.treebank import random_tree, yield_of

from conftest import tiny_params
from test_decode import EXHAUSTIVE_TREES, _enumerate, _sequence_score
from test_linearize import GOLDEN
from test_model import GRAD_VARIANTS, TINY_TREES, gradient_errors


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def test_criterion_1_sample_tree_goldens(capsys, sample_tree):
    start = time.perf_counter()
    bad = []
    for scheme in Scheme:
        toks = linearize(sample_tree, scheme)
        if format_tokens(toks) != GOLDEN[scheme]:
            bad.append(f"{scheme.value} linearize")
        if delinearize(GOLDEN[scheme].split(), yield_of(sample_tree), scheme) != sample_tree:
            bad.append(f"{scheme.value} delinearize")
    secs = time.perf_counter() - start
    report(capsys, 1, not bad and secs < 1.0,
           f"5 schemes exact, failures {bad or 'none'}, {secs:.3f}s (limit 1s)")


def test_criterion_2_round_trip(capsys, random_trees):
    start = time.perf_counter()
    failures = 0
    for t in random_trees:
        s = yield_of(t)
        for scheme in Scheme:
            if delinearize(linearize(t, scheme), s, scheme) != t:
                failures += 1
    secs = time.perf_counter() - start
    report(capsys, 2, failures == 0 and secs < 30.0,
           f"{len(random_trees)} trees x 5 schemes, {failures} failures, {secs:.1f}s (limit 30s)")


def test_criterion_3_oracle_replay(capsys, random_trees):
    failures = short_reduces = 0
    for t in random_trees:
        s = yield_of(t)
        for system in System:
            c = tr.INITIAL
            for a in tr.oracle(t, system):
                if system is System.IN_ORDER and a == tr.REDUCE:
                    if len(c.stack) - c.opens[-1] + 1 < 2:
                        short_reduces += 1
                c = tr.apply(c, a, s, system)
            if not tr.is_terminal(c, system, s) or tr.result(c) != t:
                failures += 1
    report(capsys, 3, failures == 0 and short_reduces == 0,
           f"{len(random_trees)} trees x 2 systems, {failures} replay failures, "
           f"{short_reduces} in-order reduces over fewer than 2 items")


def test_criterion_4_bracket_bijection(capsys, random_trees, sample_tree):
    failures = sum(not token_bijection_check(t) for t in random_trees + [sample_tree])
    report(capsys, 4, failures == 0, f"{len(random_trees) + 1} trees, {failures} failures")


def test_criterion_5_gradient_check(capsys):
    start = time.perf_counter()
    worst, sizes = 0.0, []
    for variant in GRAD_VARIANTS:
        p = tiny_params(TINY_TREES, seed=11, scale=0.5, **variant)
        sizes.append(p.n_parameters())
        worst = max(worst, max(gradient_errors(p, TINY_TREES).values()))
    secs = time.perf_counter() - start
    report(capsys, 5, worst < 1e-4 and max(sizes) <= 500 and secs < 60.0,
           f"{len(GRAD_VARIANTS)} model variants of {min(sizes)}-{max(sizes)} parameters, "
           f"worst per-tensor relative error {worst:.2e} (limit 1e-4), {secs:.1f}s (limit 60s)")


def test_criterion_6_overfit(capsys, overfit):
    trees, result, secs = overfit
    params = result.params
    examples = [M.make_example(params, yield_of(t), linearize(t, params.scheme)) for t in trees]
    acc = M.token_accuracy(examples, params)
    dec = Decoder(params)
    pred = [delinearize(dec.greedy(yield_of(t)), yield_of(t), params.scheme, "repair")
            for t in trees]
    f1 = bracket_f1(trees, pred).f1
    epochs = len(result.history)
    ok = acc >= 0.99 and f1 >= 99.0 and epochs <= 200 and secs < 600
    report(capsys, 6, ok,
           f"{len(trees)} sentences, {params.scheme.value}, token accuracy {100 * acc:.2f}% "
           f"(>= 99), greedy bracket F1 {f1:.2f} (>= 99), {epochs} epochs (<= 200), "
           f"{secs:.0f}s (limit 600s)")


def _forty_word_trees(n_sent=20, length=40, seed=3):
    rng = random.Random(seed)
    trees = []
    while len(trees) < n_sent:
        t = random_tree(rng, max_depth=8, max_fanout=4, max_words=length, leaf_prob=0.3)
        if len(yield_of(t)) == length:
            trees.append(t)
    return trees


def _det_score_counts(params, n):
    """Score evaluations per deterministic attention step, for every split p."""
    import numpy as np

    H = np.random.default_rng(n).normal(size=(n, 2 * params.config.enc_hidden))
    d = np.zeros(params.config.dec_hidden)
    out = []
    for p in range(n + 1):
        counter = {}
        M.attention_det(H, d, p, params, counter)
        out.append(counter["beta"])
    return out


def test_criterion_7_det_attention_speed(capsys):
    start = time.perf_counter()
    trees = _forty_word_trees()
    params = ModelParams.initialize(Config(scheme="td-sr", seed=1), build_vocab(trees, "td-sr"))
    sents = [yield_of(t) for t in trees]
    gold = [linearize(t, "td-sr") for t in trees]
    res = compare_speed(sents, {m: (params, m) for m in ("prob", "det")}, runs=3, forced=gold)
    ratio = res["det"].mean / res["prob"].mean
    counts_ok = True
    for n in (5, 50, 500):
        c = _det_score_counts(params, n)
        counts_ok &= set(c[1:-1]) == {2} and c[0] == c[-1] == 1
    secs = time.perf_counter() - start
    report(capsys, 7, ratio >= 1.5 and counts_ok and secs < 120,
           f"det {res['det'].mean:.2f} vs prob {res['prob'].mean:.2f} sentences/s on 20 "
           f"40-word sentences, ratio {ratio:.2f} (>= 1.5); score evaluations per step exactly 2 "
           f"at every interior split for n in (5, 50, 500): {counts_ok}; {secs:.0f}s (limit 120s)")


def test_criterion_8_beam_sanity(capsys, small_trees):
    rng = random.Random(0)
    from seqparse.treebank import random_sentence

    sents = [random_sentence(rng, rng.randint(1, 12)) for _ in range(100)]
    mismatches = 0
    for scheme in Scheme:
        dec = Decoder(tiny_params(small_trees, scheme.value, seed=3, scale=0.8))
        mismatches += sum(dec.beam(s, 1) != dec.greedy(s) for s in sents)
    argmax_fail = instances = 0
    from seqparse.transitions import Limits
    from seqparse.treebank import Leaf

    limits = Limits(2, 1)
    for scheme in Scheme:
        for mode in ("prob", "det"):
            p = tiny_params(EXHAUSTIVE_TREES, scheme.value, seed=7, scale=1.5, max_open_nts=2,
                            max_unary=1)
            for sentence in ([Leaf("a", "T"), Leaf("b", "T")], [Leaf(".", "."), Leaf("a", "T")]):
                seqs = _enumerate(p, sentence, limits)
                scores = [_sequence_score(p, sentence, q, limits, mode) for q in seqs]
                best = seqs[max(range(len(seqs)), key=scores.__getitem__)]
                instances += 1
                argmax_fail += Decoder(p, mode).beam(sentence, width=len(seqs)) != best
    report(capsys, 8, mismatches == 0 and argmax_fail == 0,
           f"width 1 vs greedy on 100 sentences x 5 schemes: {mismatches} mismatches; "
           f"exhaustive-width beam vs enumerated argmax on {instances} two-word instances: "
           f"{argmax_fail} failures")


def test_criterion_9_not_reproducible(capsys, small_trees):
    trees = small_trees[:20]
    config = Config(epochs=200, target_accuracy=1.0, eval_every=5, seed=1)
    result = train(trees, "td-sr", config)
    st = attention_stats([yield_of(t) for t in trees], result.params)
    with capsys.disabled():
        print("\nCRITERION 9: NOT REPRODUCIBLE - absolute F1 on the full treebank and absolute "
              "sentences per second need the full corpus, large pretrained embeddings and the "
              "original hardware. Substitute measurement: on a top-down model overfit to "
              f"{len(trees)} synthetic sentences, the attention peak sits at position p or p+1 "
              f"in {100 * st['frequency_argmax_at_p_or_p1']:.1f}% of {st['steps']} decoding steps "
              "(reported only, no target).")
    pytest.skip("criterion 9 is not reproducible at desk scale; see the printed measurement")
