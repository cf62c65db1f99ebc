"""Bracket scoring plus measurements of decoding speed and attention."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .treebank import Leaf, Tree

# EVALB's usual punctuation tags, ignored in span indices when asked to
PUNCT_TAGS = frozenset({",", ":", "``", "''", "."})


class EvalError(ValueError):
    pass


def brackets(tree: Tree, exclude_punct: bool = False) -> Counter:
    """Multiset of (label, start, end) over the constituents of ``tree``.

    Preterminals are leaves here and never count. With ``exclude_punct``,
    punctuation leaves take no index, so spans differing only by edge
    punctuation coincide; constituents covering nothing else are dropped.
    """
    out: Counter = Counter()

    def walk(node, start: int) -> int:
        if isinstance(node, Leaf):
            return start + (0 if exclude_punct and node.pos in PUNCT_TAGS else 1)
        end = start
        for child in node.children:
            end = walk(child, end)
        if end > start or not exclude_punct:
            out[(node.label, start, end)] += 1
        return end

    walk(tree, 0)
    return out


@dataclass(frozen=True)
class Score:
    matched: int
    gold: int
    predicted: int

    @property
    def precision(self) -> float:
        return 100.0 * self.matched / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.matched / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def report(self) -> str:
        return (f"Brackets: gold {self.gold} predicted {self.predicted} matched {self.matched}\n"
                f"Precision: {self.precision:.1f}\n"
                f"Recall: {self.recall:.1f}\n"
                f"F1: {self.f1:.1f}\n"
                f"F1={self.f1:.1f}")


def bracket_f1(gold: Sequence[Tree], pred: Sequence[Tree], exclude_punct: bool = False) -> Score:
    """Corpus-level labeled bracket scores, as percentages."""
    if len(gold) != len(pred):
        raise EvalError(f"{len(gold)} gold trees but {len(pred)} predicted")
    matched = n_gold = n_pred = 0
    for i, (g, p) in enumerate(zip(gold, pred)):
        gw = [leaf.word for leaf in g.leaves()]
        pw = [leaf.word for leaf in p.leaves()]
        if gw != pw:
            raise EvalError(f"sentence {i + 1}: yields differ ({' '.join(gw)!r} vs {' '.join(pw)!r})")
        gb, pb = brackets(g, exclude_punct), brackets(p, exclude_punct)
        matched += sum((gb & pb).values())
        n_gold += sum(gb.values())
        n_pred += sum(pb.values())
    return Score(matched, n_gold, n_pred)


# -- speed ---------------------------------------------------------------------

@dataclass
class SpeedResult:
    runs: list[float]  # sentences per second, one per timed run

    @property
    def mean(self) -> float:
        return float(np.mean(self.runs))


def _decode_jobs(dec, sentences, beam, forced):
    if forced is not None:
        if len(forced) != len(sentences):
            raise ValueError("need one forced sequence per sentence")
        return [(lambda s=s, t=t: dec.score(s, t)) for s, t in zip(sentences, forced)]
    if beam == 1:
        return [(lambda s=s: dec.greedy(s)) for s in sentences]
    return [(lambda s=s: dec.beam(s, beam)) for s in sentences]


def speed_bench(sentences: Sequence[Sequence[Leaf]], params, attention_mode: str | None = None,
                runs: int = 3, warmup: bool = True, beam: int = 1,
                forced: Sequence[Sequence] | None = None) -> SpeedResult:
    """Decoding throughput in sentences per second, averaged over ``runs``.

    By default sentences are parsed greedily (or with a beam). With
    ``forced`` token sequences the decoder instead walks those sequences,
    doing the full per-step work but with the output length fixed, so two
    models can be timed on equal footing even when one of them is untrained.
    """
    return compare_speed(sentences, {"_": (params, attention_mode)}, runs, warmup, beam,
                         forced)["_"]


def compare_speed(sentences, setups: dict, runs: int = 3, warmup: bool = True, beam: int = 1,
                  forced=None) -> dict[str, SpeedResult]:
    """Time several (params, attention_mode) setups with their runs interleaved.

    Alternating the setups run by run spreads any background load evenly over
    them, which matters when comparing throughputs on a shared machine.
    """
    from .seq2seq.decode import Decoder

    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not sentences:
        raise ValueError("no sentences to time")
    jobs = {name: _decode_jobs(Decoder(params, mode), sentences, beam, forced)
            for name, (params, mode) in setups.items()}
    if warmup:
        for js in jobs.values():
            js[0]()
    out = {name: SpeedResult([]) for name in jobs}
    for _ in range(runs):
        for name, js in jobs.items():
            start = time.perf_counter()
            for job in js:
                job()
            out[name].runs.append(len(js) / (time.perf_counter() - start))
    return out


# -- attention statistics -------------------------------------------------------

def boundary_hits(trace: Iterable[tuple[int, np.ndarray]]) -> tuple[int, int]:
    """Count steps whose highest-scoring position is next to the split point.

    ``trace`` holds (p, scores) per decoding step, where p words have been
    shifted. The two boundary positions are p-1 and p (0-based), i.e. the
    last word of the left segment and the first of the right one.
    """
    hits = steps = 0
    for p, beta in trace:
        steps += 1
        if int(np.argmax(beta)) in (p - 1, p):
            hits += 1
    return hits, steps


def attention_stats(sentences: Sequence[Sequence[Leaf]], params) -> dict:
    """Fraction of greedy decoding steps whose attention peak sits at the boundary."""
    from .seq2seq.decode import Decoder

    dec = Decoder(params, "prob")
    dec.trace = []
    for s in sentences:
        dec.greedy(s)
    hits, steps = boundary_hits(dec.trace)
    return {"steps": steps, "boundary_steps": hits,
            "frequency_argmax_at_p_or_p1": hits / steps if steps else 0.0}
