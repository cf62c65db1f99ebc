"""Pure-numpy decoder kernels; reference and fallback for the compiled core.

``H`` holds the encoder states (n x 2h), ``d`` the previous decoder state and
``p`` the number of words shifted so far, so the left segment is ``H[:p]``.
"""

import numpy as np


def scores(H, d, W_att, b_att, U):
    """Attention score of every encoder state: U . tanh(W_att [h_i; d] + b_att)."""
    n, h2 = H.shape
    X = np.empty((n, h2 + d.shape[0]))
    X[:, :h2] = H
    X[:, h2:] = d
    return np.tanh(X @ W_att.T + b_att) @ U


def score_at(H, d, i, W_att, b_att, U):
    x = np.concatenate((H[i], d))
    return float(U @ np.tanh(W_att @ x + b_att))


def _softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


def weights(beta, p, global_norm):
    """Attention weights from scores: one softmax per segment, or one over all."""
    if global_norm:
        return _softmax(beta)
    alpha = np.empty_like(beta)
    if p > 0:
        alpha[:p] = _softmax(beta[:p])
    if p < beta.shape[0]:
        alpha[p:] = _softmax(beta[p:])
    return alpha


def attend_prob(H, d, p, W_att, b_att, U, global_norm=False):
    """Return (left context, right context, scores)."""
    beta = scores(H, d, W_att, b_att, U)
    alpha = weights(beta, p, global_norm)
    return alpha[:p] @ H[:p], alpha[p:] @ H[p:], beta


def attend_det(H, d, p, W_att, b_att, U):
    """Return (left, right, n_scores): the boundary states scaled by raw scores."""
    n, h2 = H.shape
    left = np.zeros(h2)
    right = np.zeros(h2)
    count = 0
    if p > 0:
        left = score_at(H, d, p - 1, W_att, b_att, U) * H[p - 1]
        count += 1
    if p < n:
        right = score_at(H, d, p, W_att, b_att, U) * H[p]
        count += 1
    return left, right, count


def decoder_out(u, W_dec, b_dec, W_pred, b_pred):
    """Return (new decoder state, output logits)."""
    d = np.maximum(W_dec @ u + b_dec, 0.0)
    return d, W_pred @ d + b_pred


def lstm_recur(G, Wh, H, C, acts):
    """LSTM recurrence over precomputed input projections ``G`` (T x 4h).

    Fills H and C (rows 0..T, row 0 the initial state) and the gate
    activations ``acts`` in place; gate blocks are stacked in i f o g order.
    """
    hd = Wh.shape[1]
    for t in range(G.shape[0]):
        g = G[t] + Wh @ H[t]
        a = acts[t]
        a[:3 * hd] = 0.5 * (np.tanh(0.5 * g[:3 * hd]) + 1.0)
        a[3 * hd:] = np.tanh(g[3 * hd:])
        C[t + 1] = a[hd:2 * hd] * C[t] + a[:hd] * a[3 * hd:]
        H[t + 1] = a[2 * hd:3 * hd] * np.tanh(C[t + 1])


def adam_step(w, g, m, v, lam, lr, beta1, beta2, c1, c2, eps):
    """One Adam update of ``w`` in place on the gradient ``g + lam * w``.

    c1 and c2 are the bias corrections. Returns the squared norm of ``w``
    before the update, which the caller needs for the regularizer value.
    """
    sq = float(np.vdot(w, w))
    g = g + lam * w
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    w -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return sq
