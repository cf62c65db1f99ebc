"""Forward computations of the network together with its training loss.

Inference goes through :mod:`kernels` one step at a time. Training runs a
teacher-forced pass over a whole sequence and backpropagates by hand; the
score projection of the encoder states is shared across steps there, which
is the same function computed in fewer operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linearize import Token, parse_token, token_to_action
from ..treebank import Leaf
from . import kernels
from .params import ModelParams, lstm_names


def sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def log_softmax(x):
    z = x - x.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(x):
    return np.exp(log_softmax(x))


@dataclass
class Example:
    """A sentence mapped to ids, with its gold token ids (if any)."""

    pre_ids: np.ndarray
    word_ids: np.ndarray
    pos_ids: np.ndarray
    token_ids: np.ndarray | None = None
    shifts: np.ndarray | None = None  # per gold token: does it consume a word

    def __len__(self):
        return len(self.word_ids)


def is_shift(token) -> bool:
    return token_to_action(token).kind == "SH"


def shift_flags(params: ModelParams) -> np.ndarray:
    """For every vocabulary token, whether emitting it advances the split point."""
    return np.array([is_shift(parse_token(t, params.scheme)) for t in params.vocab.tokens])


def make_example(params: ModelParams, sentence: list[Leaf],
                 tokens: list[Token] | None = None) -> Example:
    v = params.vocab
    ids = np.array([v.word_id(leaf.word) for leaf in sentence], dtype=np.intp)
    pos = np.array([v.pos_id(leaf.pos) for leaf in sentence], dtype=np.intp)
    ex = Example(ids, ids.copy(), pos)
    if tokens is not None:
        ex.token_ids = np.array([v.token_id(t) for t in tokens], dtype=np.intp)
        ex.shifts = np.array([is_shift(t) for t in tokens], dtype=bool)
    return ex


# -- encoder ----------------------------------------------------------------

def lstm_forward(X, Wx, Wh, b):
    """Run an LSTM over the rows of X; gate blocks stacked in i f o g order."""
    T = X.shape[0]
    hd = Wh.shape[1]
    G = X @ Wx.T + b
    H = np.zeros((T + 1, hd))  # H[0] is the initial state
    C = np.zeros((T + 1, hd))
    acts = np.empty((T, 4 * hd))
    kernels.lstm_recur(G, Wh, H, C, acts)
    return H[1:], (X, H, C, acts)


def lstm_backward(dH, cache, Wx, Wh):
    X, H, C, acts = cache
    T, hd = dH.shape
    dG = np.empty((T, 4 * hd))
    dh_next = np.zeros(hd)
    dc_next = np.zeros(hd)
    for t in range(T - 1, -1, -1):
        a = acts[t]
        i, f, o, g = a[:hd], a[hd:2 * hd], a[2 * hd:3 * hd], a[3 * hd:]
        tc = np.tanh(C[t + 1])
        dh = dH[t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dg = dG[t]
        dg[:hd] = dc * g * i * (1.0 - i)
        dg[hd:2 * hd] = dc * C[t] * f * (1.0 - f)
        dg[2 * hd:3 * hd] = dh * tc * o * (1.0 - o)
        dg[3 * hd:] = dc * i * (1.0 - g * g)
        dc_next = dc * f
        dh_next = Wh.T @ dg
    return dG @ Wx, dG.T @ X, dG.T @ H[:-1], dG.sum(axis=0)


def encode(example: Example, params: ModelParams, keep_cache: bool = False):
    """Encoder states (n x 2h) for ``example``; with ``keep_cache`` also the
    intermediates needed by :func:`encoder_backward`."""
    c = params.config
    n = len(example)
    if n == 0:
        raise ValueError("cannot encode an empty sentence")
    emb = np.concatenate([params["E_pre"][example.pre_ids], params["E_word"][example.word_ids],
                          params["E_pos"][example.pos_ids]], axis=1)
    a = emb @ params["W_enc"].T + params["b_enc"]
    X = np.maximum(a, 0.0)
    layers = []
    for layer in range(c.enc_layers):
        fwd, fcache = lstm_forward(X, *(params[k] for k in lstm_names(layer, "f")))
        bwd, bcache = lstm_forward(np.ascontiguousarray(X[::-1]), *(params[k] for k in lstm_names(layer, "b")))
        layers.append((fcache, bcache))
        X = np.concatenate([fwd, bwd[::-1]], axis=1)
    H = np.ascontiguousarray(X)
    if keep_cache:
        return H, (emb, a, layers)
    return H


def encoder_backward(dH, example: Example, params: ModelParams, cache, grads):
    c = params.config
    emb, a, layers = cache
    hd = c.enc_hidden
    dX = dH
    for layer in range(c.enc_layers - 1, -1, -1):
        fcache, bcache = layers[layer]
        fnames, bnames = lstm_names(layer, "f"), lstm_names(layer, "b")
        dXf, dWx, dWh, db = lstm_backward(dX[:, :hd], fcache, params[fnames[0]], params[fnames[1]])
        for k, g in zip(fnames, (dWx, dWh, db)):
            grads[k] += g
        dXb, dWx, dWh, db = lstm_backward(dX[::-1, hd:], bcache, params[bnames[0]], params[bnames[1]])
        for k, g in zip(bnames, (dWx, dWh, db)):
            grads[k] += g
        dX = dXf + dXb[::-1]
    da = dX * (a > 0)
    grads["W_enc"] += da.T @ emb
    grads["b_enc"] += da.sum(axis=0)
    demb = da @ params["W_enc"]
    p0 = c.pretrained_dim
    p1 = p0 + c.word_dim
    np.add.at(grads["E_word"], example.word_ids, demb[:, p0:p1])
    np.add.at(grads["E_pos"], example.pos_ids, demb[:, p1:])


# -- single decoding step -----------------------------------------------------

def attention_prob(H, d_prev, p, params: ModelParams, global_norm: bool | None = None,
                   counter: dict | None = None):
    """Probabilistic attention: weighted sums over the left (first ``p``) and
    right encoder states. Returns (left, right)."""
    if not 0 <= p <= H.shape[0]:
        raise ValueError(f"split index {p} outside [0, {H.shape[0]}]")
    if global_norm is None:
        global_norm = params.config.attention_norm == "global"
    left, right, _ = kernels.attend_prob(H, d_prev, p, params["W_att"], params["b_att"],
                                         params["U"], global_norm)
    if counter is not None:
        counter["beta"] = counter.get("beta", 0) + H.shape[0]
    return left, right


def attention_det(H, d_prev, p, params: ModelParams, counter: dict | None = None):
    """Deterministic attention: the states at positions p and p+1 (1-based)
    scaled by their raw scores. Returns (left, right)."""
    if not 0 <= p <= H.shape[0]:
        raise ValueError(f"split index {p} outside [0, {H.shape[0]}]")
    left, right, count = kernels.attend_det(H, d_prev, p, params["W_att"], params["b_att"],
                                            params["U"])
    if counter is not None:
        counter["beta"] = counter.get("beta", 0) + count
    return left, right


def prev_embedding(params: ModelParams, prev_token_id: int | None) -> np.ndarray:
    """[action; label] embedding of the previous output (start symbol when None)."""
    if prev_token_id is None:
        kind, label = 0, 0
    else:
        kind, label = params.token_kind[prev_token_id], params.token_label[prev_token_id]
    return np.concatenate([params["E_act"][kind], params["E_label"][label]])


def decoder_logits(d_prev, left, right, params: ModelParams, prev_emb=None):
    """New decoder state and the output logits computed from it."""
    parts = [d_prev, left, right]
    if params.config.feed_prev_token:
        if prev_emb is None:
            raise ValueError("model is fed the previous token; pass prev_emb")
        parts.append(prev_emb)
    return kernels.decoder_out(np.concatenate(parts), params["W_dec"], params["b_dec"],
                               params["W_pred"], params["b_pred"])


def decoder_step(d_prev, left, right, params: ModelParams, prev_emb=None):
    """New decoder state and the token distribution predicted from it."""
    d, logits = decoder_logits(d_prev, left, right, params, prev_emb)
    return d, softmax(logits)


# -- teacher-forced loss ------------------------------------------------------

def split_points(shifts: np.ndarray) -> np.ndarray:
    """p at each step: the number of shift tokens strictly before it."""
    return np.concatenate([[0], np.cumsum(shifts)[:-1]]).astype(np.intp)


def _segment_softmax(beta, p, global_norm):
    return kernels.weights(beta, p, global_norm) if beta.size else beta


def sequence_nll(example: Example, params: ModelParams, grads: dict | None = None,
                 return_logp: bool = False):
    """Negative log-likelihood of the gold tokens under teacher forcing.

    If ``grads`` is given, gradients are accumulated into it.
    """
    c = params.config
    det = c.attention_mode == "det"
    global_norm = c.attention_norm == "global"
    need_grad = grads is not None
    H, enc_cache = encode(example, params, keep_cache=True)
    n, h2 = H.shape
    dh = c.dec_hidden
    W_att = params["W_att"]
    W_att_h, W_att_d = W_att[:, :h2], W_att[:, h2:]
    b_att, U = params["b_att"], params["U"]
    W_dec, b_dec = params["W_dec"], params["b_dec"]
    y = example.token_ids
    m = len(y)
    ps = split_points(example.shifts)
    KH = H @ W_att_h.T  # score projection of every encoder state

    feed = c.feed_prev_token
    D = np.zeros((m + 1, dh))  # D[0] is the initial state
    inputs = []
    pre = np.empty((m, dh))
    steps = []
    for j in range(m):
        d_prev = D[j]
        p = int(ps[j])
        kd = W_att_d @ d_prev + b_att
        if det:
            idx = [i for i in (p - 1, p) if 0 <= i < n]
            T = np.tanh(KH[idx] + kd)
            beta = T @ U
            left = beta[0] * H[p - 1] if p > 0 else np.zeros(h2)
            right = beta[-1] * H[p] if p < n else np.zeros(h2)
            steps.append((idx, T, beta, None))
        else:
            T = np.tanh(KH + kd)
            beta = T @ U
            alpha = _segment_softmax(beta, p, global_norm)
            left = alpha[:p] @ H[:p]
            right = alpha[p:] @ H[p:]
            steps.append((None, T, beta, alpha))
        parts = [d_prev, left, right]
        if feed:
            parts.append(prev_embedding(params, int(y[j - 1]) if j else None))
        u = np.concatenate(parts)
        inputs.append(u)
        pre[j] = W_dec @ u + b_dec
        D[j + 1] = np.maximum(pre[j], 0.0)
    logits = D[1:] @ params["W_pred"].T + params["b_pred"]
    logp = log_softmax(logits)
    nll = -logp[np.arange(m), y].sum()
    if not need_grad:
        return (nll, logp) if return_logp else nll

    dlogits = np.exp(logp)
    dlogits[np.arange(m), y] -= 1.0
    grads["W_pred"] += dlogits.T @ D[1:]
    grads["b_pred"] += dlogits.sum(axis=0)
    dD = dlogits @ params["W_pred"]
    dH = np.zeros_like(H)
    dKH = np.zeros_like(KH)
    dpre = np.empty((m, dh))
    dkd_all = np.empty((m, W_att.shape[0]))
    dd_next = np.zeros(dh)
    for j in range(m - 1, -1, -1):
        p = int(ps[j])
        dpre[j] = (dD[j] + dd_next) * (pre[j] > 0)
        du = W_dec.T @ dpre[j]
        dd_prev = du[:dh].copy()
        dl = du[dh:dh + h2]
        dr = du[dh + h2:dh + 2 * h2]
        if feed and j:
            de = du[dh + 2 * h2:]
            prev = int(y[j - 1])
            grads["E_act"][params.token_kind[prev]] += de[:c.action_dim]
            grads["E_label"][params.token_label[prev]] += de[c.action_dim:]
        elif feed:
            de = du[dh + 2 * h2:]
            grads["E_act"][0] += de[:c.action_dim]
            grads["E_label"][0] += de[c.action_dim:]
        idx, T, beta, alpha = steps[j]
        if det:
            dbeta = np.zeros(len(idx))
            k = 0
            if p > 0:
                dbeta[k] = dl @ H[p - 1]
                dH[p - 1] += beta[k] * dl
                k += 1
            if p < n:
                dbeta[k] = dr @ H[p]
                dH[p] += beta[k] * dr
        else:
            dalpha = np.empty(n)
            dalpha[:p] = H[:p] @ dl
            dalpha[p:] = H[p:] @ dr
            dH[:p] += np.outer(alpha[:p], dl)
            dH[p:] += np.outer(alpha[p:], dr)
            if global_norm:
                dbeta = alpha * (dalpha - alpha @ dalpha)
            else:
                dbeta = np.empty(n)
                for lo, hi in ((0, p), (p, n)):
                    if hi > lo:
                        a_ = alpha[lo:hi]
                        dbeta[lo:hi] = a_ * (dalpha[lo:hi] - a_ @ dalpha[lo:hi])
        grads["U"] += dbeta @ T
        dK = np.outer(dbeta, U) * (1.0 - T * T)
        if det:
            dKH[idx] += dK
        else:
            dKH += dK
        dkd = dK.sum(axis=0)
        dkd_all[j] = dkd
        dd_next = dd_prev + W_att_d.T @ dkd
    grads["W_dec"] += dpre.T @ np.array(inputs)
    grads["b_dec"] += dpre.sum(axis=0)
    grads["b_att"] += dkd_all.sum(axis=0)
    grads["W_att"][:, h2:] += dkd_all.T @ D[:-1]
    grads["W_att"][:, :h2] += dKH.T @ H
    dH += dKH @ W_att_h
    encoder_backward(dH, example, params, enc_cache, grads)
    return (nll, logp) if return_logp else nll


def zero_grads(params: ModelParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(params[k]) for k in params.trainable}


def l2_term(params: ModelParams, lam: float) -> float:
    return 0.5 * lam * sum(float(np.sum(params[k] ** 2)) for k in params.trainable)


def loss(batch: list[Example], params: ModelParams, lam: float | None = None) -> float:
    """Cross-entropy of the gold tokens plus (lam/2)||theta||^2 over trainable tensors."""
    lam = params.config.l2 if lam is None else lam
    return sum(sequence_nll(ex, params) for ex in batch) + l2_term(params, lam)


def nll_and_grad(batch: list[Example], params: ModelParams):
    """Cross-entropy and its gradient, without the regularizer."""
    grads = zero_grads(params)
    total = 0.0
    for ex in batch:
        total += sequence_nll(ex, params, grads)
    return total, grads


def loss_and_grad(batch: list[Example], params: ModelParams, lam: float | None = None):
    lam = params.config.l2 if lam is None else lam
    total, grads = nll_and_grad(batch, params)
    for k in params.trainable:
        grads[k] += lam * params[k]
    return total + l2_term(params, lam), grads


def token_accuracy(examples: list[Example], params: ModelParams) -> float:
    """Fraction of gold tokens that are the teacher-forced argmax prediction."""
    right = total = 0
    for ex in examples:
        _, logp = sequence_nll(ex, params, return_logp=True)
        right += int((logp.argmax(axis=1) == ex.token_ids).sum())
        total += len(ex.token_ids)
    return right / max(total, 1)
