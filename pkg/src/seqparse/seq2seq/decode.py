"""Greedy and beam decoding under transition-system legality masking."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .. import transitions as tr
from ..linearize import Token, parse_token, token_to_action
from ..transitions import Configuration, Limits
from ..treebank import PUNCT_WORDS, Leaf
from . import model
from .params import ModelParams


class TokenMasker:
    """Vocabulary ids of the tokens that may be emitted in a configuration.

    Token ids are grouped once by what they do, so masking a step costs a
    handful of array lookups instead of one legality test per token.
    """

    def __init__(self, params: ModelParams):
        self.scheme = scheme = params.scheme
        self.system = scheme.system
        c = params.config
        self.limits = Limits(c.max_open_nts, c.max_unary)
        self.tokens: list[Token] = [parse_token(t, scheme) for t in params.vocab.tokens]
        self.actions = [token_to_action(t) for t in self.tokens]
        self.shift = np.array([a.kind == "SH" for a in self.actions])
        plain_sh, lex_sh, nt, re_plain, fi = [], {}, [], [], []
        re_labeled: dict[str, list[int]] = {}
        for i, a in enumerate(self.actions):
            if a.kind == "SH":
                (lex_sh.setdefault(a.arg, []) if a.arg else plain_sh).append(i)
            elif a.kind == "NT":
                nt.append(i)
            elif a.kind == "RE":
                (re_labeled.setdefault(a.arg, []) if a.arg else re_plain).append(i)
            elif a.kind == "FI":
                fi.append(i)
        ids = lambda xs: np.array(xs, dtype=np.intp)
        self.plain_sh, self.nt, self.fi = ids(plain_sh), ids(nt), ids(fi)
        self.lex_sh = {w: ids(v) for w, v in lex_sh.items()}
        self.re_plain = ids(re_plain)
        self.re_labeled = {k: ids(v) for k, v in re_labeled.items()}
        self._empty = ids([])
        self._cache: dict[tuple, np.ndarray] = {}

    def legal_ids(self, config: Configuration, sentence: list[Leaf]) -> np.ndarray:
        """Sorted ids of the tokens allowed next."""
        sh, nt, re, fi = tr.legal_kinds(config, self.system, len(sentence), self.limits)
        word = sentence[config.buffer_pos].word if sh else None
        if not (self.scheme.lexical_shift and word in PUNCT_WORDS):
            word = None
        label = config.open_label if re and self.scheme.labeled_reduce else None
        key = (sh, nt, re, fi, word, label)
        ids = self._cache.get(key)
        if ids is None:
            ids = self._cache[key] = self._build(*key)
        if not len(ids):
            raise ValueError("no token in the model's vocabulary can continue this derivation")
        return ids

    def _build(self, sh, nt, re, fi, word, label) -> np.ndarray:
        groups = []
        if sh:
            # punctuation never shifted in training falls back to a plain shift
            groups.append(self.lex_sh.get(word, self.plain_sh) if word is not None else self.plain_sh)
        if nt:
            groups.append(self.nt)
        if re:
            if self.scheme.labeled_reduce:
                groups.append(self.re_labeled.get(label, self._empty))
            else:
                groups.append(self.re_plain)
        if fi:
            groups.append(self.fi)
        if not groups:
            return self._empty
        return np.sort(np.concatenate(groups))

    def apply(self, config: Configuration, token_id: int, sentence: list[Leaf]) -> Configuration:
        return tr._apply(config, self.actions[token_id], sentence, self.system)

    def is_terminal(self, config: Configuration, sentence: list[Leaf]) -> bool:
        return tr.is_terminal(config, self.system, sentence)


@dataclass
class DecodeState:
    d: np.ndarray
    p: int
    config: Configuration
    tokens: list[int] = field(default_factory=list)
    score: float = 0.0


class Decoder:
    """Decoding session for one model; holds the token masker and attention mode."""

    def __init__(self, params: ModelParams, attention_mode: str | None = None,
                 counter: dict | None = None):
        self.params = params
        self.mode = attention_mode or params.config.attention_mode
        if self.mode not in ("prob", "det"):
            raise ValueError(f"unknown attention mode {self.mode!r}")
        self.masker = TokenMasker(params)
        self.counter = counter
        self.trace = None

    def encode(self, sentence: list[Leaf]) -> np.ndarray:
        return model.encode(model.make_example(self.params, sentence), self.params)

    def initial(self) -> DecodeState:
        return DecodeState(np.zeros(self.params.config.dec_hidden), 0, tr.INITIAL)

    def step(self, H, state: DecodeState):
        """Decoder state after ``state`` and the output logits for the next token."""
        P = self.params
        if self.mode == "det":
            left, right = model.attention_det(H, state.d, state.p, P, self.counter)
        else:
            left, right = model.attention_prob(H, state.d, state.p, P, counter=self.counter)
            if self.trace is not None:
                beta = model.kernels.scores(H, state.d, P["W_att"], P["b_att"], P["U"])
                self.trace.append((state.p, beta))
        prev = None
        if P.config.feed_prev_token:
            prev = model.prev_embedding(P, state.tokens[-1] if state.tokens else None)
        return model.decoder_logits(state.d, left, right, P, prev)

    def masked_logprobs(self, logits: np.ndarray, legal: np.ndarray) -> np.ndarray:
        """Log-probabilities renormalised over the legal ids (illegal ones get no mass).

        Equal to log(p[legal] / p[legal].sum()) for p = softmax(logits).
        """
        z = logits[legal]
        z = z - z.max()
        return z - np.log(np.exp(z).sum())

    def advance(self, state: DecodeState, d, token_id: int, logp: float,
                sentence) -> DecodeState:
        config = self.masker.apply(state.config, token_id, sentence)
        return DecodeState(d, state.p + int(self.masker.shift[token_id]), config,
                           state.tokens + [token_id], state.score + logp)

    def greedy(self, sentence: list[Leaf]) -> list[Token]:
        H = self.encode(sentence)
        state = self.initial()
        while not self.masker.is_terminal(state.config, sentence):
            legal = self.masker.legal_ids(state.config, sentence)
            d, logits = self.step(H, state)
            lp = self.masked_logprobs(logits, legal)
            k = int(np.argmax(lp))
            state = self.advance(state, d, int(legal[k]), float(lp[k]), sentence)
        self.last_score = state.score
        return [self.masker.tokens[i] for i in state.tokens]

    def beam(self, sentence: list[Leaf], width: int = 10) -> list[Token]:
        """Beam search over summed log-probabilities.

        Each round expands every live hypothesis and keeps the ``width`` best
        candidates; completed ones leave the beam and compete on total score.
        Search stops once no live hypothesis can beat the best completed one.
        """
        if width < 1:
            raise ValueError("beam width must be >= 1")
        H = self.encode(sentence)
        alive = [self.initial()]
        finished: list[DecodeState] = []
        while alive:
            candidates = []
            for h, state in enumerate(alive):
                legal = self.masker.legal_ids(state.config, sentence)
                d, logits = self.step(H, state)
                lp = self.masked_logprobs(logits, legal)
                for k in range(len(legal)):
                    candidates.append((state.score + float(lp[k]), h, k, state, d,
                                       int(legal[k]), float(lp[k])))
            kept = heapq.nsmallest(width, candidates, key=lambda c: (-c[0], c[1], c[2]))
            alive = []
            for _, _, _, state, d, tid, lp in kept:
                new = self.advance(state, d, tid, lp, sentence)
                if self.masker.is_terminal(new.config, sentence):
                    finished.append(new)
                else:
                    alive.append(new)
            if finished and alive and max(f.score for f in finished) >= max(a.score for a in alive):
                break
        best = max(finished, key=lambda s: s.score)
        self.last_score = best.score
        return [self.masker.tokens[i] for i in best.tokens]

    def score(self, sentence: list[Leaf], tokens) -> float:
        """Summed masked log-probability of a complete token sequence."""
        H = self.encode(sentence)
        state = self.initial()
        for tok in tokens:
            tid = self.params.vocab.token_id(tok)
            legal = self.masker.legal_ids(state.config, sentence)
            pos = np.searchsorted(legal, tid)
            if pos >= len(legal) or legal[pos] != tid:
                raise ValueError(f"{tok} is not legal here")
            d, logits = self.step(H, state)
            lp = self.masked_logprobs(logits, legal)
            state = self.advance(state, d, tid, float(lp[pos]), sentence)
        if not self.masker.is_terminal(state.config, sentence):
            raise ValueError("sequence is incomplete")
        return state.score


def decode_greedy(sentence, params: ModelParams, attention_mode: str | None = None) -> list[Token]:
    return Decoder(params, attention_mode).greedy(sentence)


def decode_beam(sentence, params: ModelParams, width: int = 10,
                attention_mode: str | None = None) -> list[Token]:
    return Decoder(params, attention_mode).beam(sentence, width)
