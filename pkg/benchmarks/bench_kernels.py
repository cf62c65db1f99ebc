"""Compare the compiled and numpy kernel backends, and det vs prob attention.

Usage: python benchmarks/bench_kernels.py [--n 10 40 100] [--repeat 2000]

Prints microseconds per call for each kernel and backend, then the decoding
throughput of det and prob attention on 40-word sentences (forced along gold
sequences, so both modes do the same number of steps) under each backend.
The numpy backend runs in a child process with SEQPARSE_PURE_PYTHON=1, since
the backend is fixed at import.
"""

import argparse
import os
import random
import subprocess
import sys
import timeit

import numpy as np

from seqparse.eval import compare_speed
from seqparse.linearize import build_vocab, linearize
from seqparse.seq2seq.config import Config
from seqparse.seq2seq.kernels import BACKEND, backends
from seqparse.seq2seq.params import ModelParams
from seqparse.treebank import random_tree, yield_of


def time_us(fn, repeat):
    fn()
    return 1e6 * min(timeit.repeat(fn, number=repeat, repeat=3)) / repeat


def kernel_table(ns, repeat, cfg):
    rng = np.random.default_rng(0)
    h2, dh, a = 2 * cfg.enc_hidden, cfg.dec_hidden, cfg.att_hidden
    W_att = rng.normal(0, 0.05, (a, h2 + dh))
    b_att, U = np.zeros(a), rng.normal(0, 0.1, a)
    W_dec = rng.normal(0, 0.03, (dh, dh + 2 * h2))
    W_pred = rng.normal(0, 0.05, (60, dh))
    u, d = rng.normal(size=dh + 2 * h2), rng.normal(size=dh)
    G = rng.normal(size=(40, 4 * cfg.enc_hidden))
    Wh = rng.normal(0, 0.05, (4 * cfg.enc_hidden, cfg.enc_hidden))
    mods = backends()
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name in mods) + "   (us/call)")
    rows = []
    for n in ns:
        H = rng.normal(size=(n, h2))
        p = n // 2
        rows.append((f"attend_prob n={n}", lambda k, H=H, p=p: k.attend_prob(H, d, p, W_att, b_att, U, False)))
        rows.append((f"attend_det  n={n}", lambda k, H=H, p=p: k.attend_det(H, d, p, W_att, b_att, U)))
    rows.append(("decoder_out", lambda k: k.decoder_out(u, W_dec, np.zeros(dh), W_pred, np.zeros(60))))

    def lstm(k):
        hd = cfg.enc_hidden
        k.lstm_recur(G, Wh, np.zeros((41, hd)), np.zeros((41, hd)), np.empty((40, 4 * hd)))
    rows.append(("lstm_recur T=40", lstm))
    w = rng.normal(size=1_000_000)
    g, m, v = rng.normal(size=w.size), np.zeros(w.size), np.zeros(w.size)
    rows.append(("adam_step 1M", lambda k: k.adam_step(w, g, m, v, 1e-6, 1e-9, 0.9, 0.9, 0.1, 0.1, 1e-8)))
    for name, fn in rows:
        reps = max(1, repeat // 100) if "adam" in name or "lstm" in name else repeat
        print(f"{name:<22}" + "".join(f"{time_us(lambda: fn(k), reps):12.1f}" for k in mods.values()))


def decode_speed(cfg, n_sent=20, length=40, seed=3, runs=3):
    rng = random.Random(seed)
    trees = []
    while len(trees) < n_sent:
        t = random_tree(rng, max_depth=8, max_fanout=4, max_words=length, leaf_prob=0.3)
        if len(yield_of(t)) == length:
            trees.append(t)
    scheme = "td-sr"
    params = ModelParams.initialize(cfg.replace(scheme=scheme), build_vocab(trees, scheme))
    sents = [yield_of(t) for t in trees]
    gold = [linearize(t, scheme) for t in trees]
    res = compare_speed(sents, {m: (params, m) for m in ("prob", "det")}, runs=runs, forced=gold)
    print(f"decoding with the {BACKEND} backend, {n_sent} sentences of {length} words")
    for mode, r in res.items():
        print(f"{mode:>5} attention: {r.mean:8.2f} sentences/s")
    print(f"det / prob speedup: {res['det'].mean / res['prob'].mean:.2f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[10, 40, 100])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--decode-only", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    cfg = Config()
    if args.decode_only:
        decode_speed(cfg)
        return
    kernel_table(args.n, args.repeat, cfg)
    print()
    decode_speed(cfg)
    if BACKEND == "compiled":
        print()
        sys.stdout.flush()
        env = dict(os.environ, SEQPARSE_PURE_PYTHON="1")
        subprocess.run([sys.executable, __file__, "--decode-only"], env=env, check=True)


if __name__ == "__main__":
    main()
