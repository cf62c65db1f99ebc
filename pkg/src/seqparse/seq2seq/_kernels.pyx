# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled decoder kernels. Signatures mirror ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt, tanh
from scipy.linalg.cython_blas cimport dgemm, dgemv

cnp.import_array()


cdef inline double _tanh(double x) noexcept nogil:
    # exp-based form is faster than libm tanh; fall back near zero for accuracy
    cdef double e
    if fabs(x) < 0.02 or fabs(x) > 19.0:
        return tanh(x)
    e = exp(2.0 * x)
    return (e - 1.0) / (e + 1.0)


cdef void _gemv(const double[:, ::1] A, const double* x, double* y) noexcept nogil:
    # y = A x for a C-contiguous A
    cdef int m = A.shape[0], k = A.shape[1], one = 1
    cdef double alpha = 1.0, zero = 0.0
    cdef char trans = b'T'
    dgemv(&trans, &k, &m, &alpha, <double*>&A[0, 0], &k, <double*>x, &one, &zero, y, &one)


def scores(const double[:, ::1] H, const double[::1] d, const double[:, ::1] W_att,
           const double[::1] b_att, const double[::1] U):
    cdef int n = H.shape[0], h2 = H.shape[1], dd = d.shape[0], a = W_att.shape[0]
    cdef int k = h2 + dd
    cdef double[:, ::1] X = np.empty((n, k))
    cdef double[:, ::1] Z = np.empty((n, a))
    cdef double[::1] beta = np.empty(n)
    cdef int i, j
    cdef double s, one = 1.0, zero = 0.0
    cdef char tr_t = b'T', tr_n = b'N'
    with nogil:
        for i in range(n):
            for j in range(h2):
                X[i, j] = H[i, j]
            for j in range(dd):
                X[i, h2 + j] = d[j]
        # Z^T (a x n, column-major) = W_att (a x k) . X^T (k x n)
        dgemm(&tr_t, &tr_n, &a, &n, &k, &one, <double*>&W_att[0, 0], &k,
              &X[0, 0], &k, &zero, &Z[0, 0], &a)
        for i in range(n):
            s = 0.0
            for j in range(a):
                s += U[j] * _tanh(Z[i, j] + b_att[j])
            beta[i] = s
    return np.asarray(beta)


cdef double _score_at(const double[:, ::1] H, const double[::1] d, int i,
                      const double[:, ::1] W_att, const double[::1] b_att,
                      const double[::1] U, double* x, double* z) noexcept nogil:
    cdef int h2 = H.shape[1], dd = d.shape[0], a = W_att.shape[0], j
    cdef double s = 0.0
    for j in range(h2):
        x[j] = H[i, j]
    for j in range(dd):
        x[h2 + j] = d[j]
    _gemv(W_att, x, z)
    for j in range(a):
        s += U[j] * _tanh(z[j] + b_att[j])
    return s


def score_at(const double[:, ::1] H, const double[::1] d, int i, const double[:, ::1] W_att,
             const double[::1] b_att, const double[::1] U):
    cdef double[::1] x = np.empty(H.shape[1] + d.shape[0])
    cdef double[::1] z = np.empty(W_att.shape[0])
    return _score_at(H, d, i, W_att, b_att, U, &x[0], &z[0])


cdef void _softmax_into(const double* beta, double* alpha, int lo, int hi) noexcept nogil:
    cdef int i
    cdef double m, s = 0.0
    if hi <= lo:
        return
    m = beta[lo]
    for i in range(lo + 1, hi):
        if beta[i] > m:
            m = beta[i]
    for i in range(lo, hi):
        alpha[i] = exp(beta[i] - m)
        s += alpha[i]
    for i in range(lo, hi):
        alpha[i] /= s


def weights(const double[::1] beta, int p, bint global_norm):
    cdef int n = beta.shape[0]
    cdef double[::1] alpha = np.empty(n)
    if global_norm:
        _softmax_into(&beta[0], &alpha[0], 0, n)
    else:
        _softmax_into(&beta[0], &alpha[0], 0, p)
        _softmax_into(&beta[0], &alpha[0], p, n)
    return np.asarray(alpha)


def attend_prob(const double[:, ::1] H, const double[::1] d, int p, const double[:, ::1] W_att,
                const double[::1] b_att, const double[::1] U, bint global_norm=False):
    cdef int n = H.shape[0], h2 = H.shape[1], i, j
    cdef double[::1] beta = scores(H, d, W_att, b_att, U)
    cdef double[::1] alpha = weights(beta, p, global_norm)
    cdef double[::1] left = np.zeros(h2)
    cdef double[::1] right = np.zeros(h2)
    cdef double w
    with nogil:
        for i in range(n):
            w = alpha[i]
            if i < p:
                for j in range(h2):
                    left[j] += w * H[i, j]
            else:
                for j in range(h2):
                    right[j] += w * H[i, j]
    return np.asarray(left), np.asarray(right), np.asarray(beta)


def attend_det(const double[:, ::1] H, const double[::1] d, int p, const double[:, ::1] W_att,
               const double[::1] b_att, const double[::1] U):
    cdef int n = H.shape[0], h2 = H.shape[1], j, count = 0
    cdef double[::1] left = np.zeros(h2)
    cdef double[::1] right = np.zeros(h2)
    cdef double[::1] x = np.empty(h2 + d.shape[0])
    cdef double[::1] z = np.empty(W_att.shape[0])
    cdef double b
    with nogil:
        if p > 0:
            b = _score_at(H, d, p - 1, W_att, b_att, U, &x[0], &z[0])
            for j in range(h2):
                left[j] = b * H[p - 1, j]
            count += 1
        if p < n:
            b = _score_at(H, d, p, W_att, b_att, U, &x[0], &z[0])
            for j in range(h2):
                right[j] = b * H[p, j]
            count += 1
    return np.asarray(left), np.asarray(right), count


def decoder_out(const double[::1] u, const double[:, ::1] W_dec, const double[::1] b_dec,
                const double[:, ::1] W_pred, const double[::1] b_pred):
    cdef int dh = W_dec.shape[0], v = W_pred.shape[0], j
    cdef double[::1] d = np.empty(dh)
    cdef double[::1] logits = np.empty(v)
    with nogil:
        _gemv(W_dec, &u[0], &d[0])
        for j in range(dh):
            d[j] += b_dec[j]
            if d[j] < 0.0:
                d[j] = 0.0
        _gemv(W_pred, &d[0], &logits[0])
        for j in range(v):
            logits[j] += b_pred[j]
    return np.asarray(d), np.asarray(logits)


def lstm_recur(const double[:, ::1] G, const double[:, ::1] Wh, double[:, ::1] H,
               double[:, ::1] C, double[:, ::1] acts):
    cdef int T = G.shape[0], hd = Wh.shape[1], t, j
    cdef double[::1] g = np.empty(4 * hd)
    cdef double c
    with nogil:
        for t in range(T):
            _gemv(Wh, &H[t, 0], &g[0])
            for j in range(3 * hd):
                acts[t, j] = 0.5 * (_tanh(0.5 * (g[j] + G[t, j])) + 1.0)
            for j in range(3 * hd, 4 * hd):
                acts[t, j] = _tanh(g[j] + G[t, j])
            for j in range(hd):
                c = acts[t, hd + j] * C[t, j] + acts[t, j] * acts[t, 3 * hd + j]
                C[t + 1, j] = c
                H[t + 1, j] = acts[t, 2 * hd + j] * _tanh(c)


def adam_step(w, g, m, v, double lam, double lr, double beta1, double beta2, double c1,
              double c2, double eps):
    # contiguous tensors of any shape are updated through flat views
    return _adam_flat(w.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1), lam, lr,
                      beta1, beta2, c1, c2, eps)


cdef double _adam_flat(double[::1] w, const double[::1] g, double[::1] m, double[::1] v,
                       double lam, double lr, double beta1, double beta2, double c1, double c2,
                       double eps):
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double gi, wi, sq = 0.0, step = lr / c1, ic2 = 1.0 / c2
    with nogil:
        for i in range(n):
            wi = w[i]
            sq += wi * wi
            gi = g[i] + lam * wi
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
            w[i] = wi - step * m[i] / (sqrt(v[i] * ic2) + eps)
    return sq
