# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: co-occurrence accumulation and fused recurrent sequences.

Calling convention matches :mod:`regenn.kernels.reference`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

cdef enum:
    ELMAN = 0
    GRU = 1
    LSTM = 2


def cooccurrence(double[:, :, ::1] values):
    cdef Py_ssize_t s = values.shape[0], w = values.shape[1], v = values.shape[2]
    cdef Py_ssize_t i, j, a, b
    cdef double xa, xb
    out = np.zeros((v, v))
    cdef double[:, ::1] adj = out
    for i in range(s):
        for j in range(w):
            for a in range(v):
                xa = values[i, j, a]
                if xa == 0.0:
                    continue
                for b in range(v):
                    xb = values[i, j, b]
                    if xb != 0.0:
                        adj[a, b] += xa + xb
    return out


# exp-based forms: libm tanh is several times slower than exp
cdef inline double _sig(double x) noexcept nogil:
    return 1.0 / (1.0 + exp(-x))


cdef inline double _tanh(double x) noexcept nogil:
    return 2.0 / (1.0 + exp(-2.0 * x)) - 1.0


def _fused(w):
    # (G, K, H) -> (K, G, H): all gates of one input feature are contiguous
    return np.ascontiguousarray(np.transpose(w, (1, 0, 2)))


def rnn_forward(int kind, double[:, :, ::1] x, double[:, :, ::1] w_ih, double[:, :, ::1] w_hh,
                double[:, ::1] b_ih, double[:, ::1] b_hh, bint reverse):
    """Input projections for every step go through one GEMM; the recurrence runs compiled."""
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], I = x.shape[2]
    cdef Py_ssize_t G = w_ih.shape[0], H = w_ih.shape[2], GH = G * H
    if kind not in (ELMAN, GRU, LSTM):
        raise ValueError(f"unknown cell kind {kind}")
    xa = np.asarray(x)
    pre_np = (xa.reshape(B * L, I) @ _fused(w_ih).reshape(I, GH)).reshape(B, L, G, H) + np.asarray(b_ih)
    h_np = np.zeros((B, L, H))
    gates_np = np.zeros((B, L, G, H))
    aux_np = np.zeros((B, L, H))
    cdef double[:, :, :, ::1] pi = np.ascontiguousarray(pre_np)
    cdef double[:, :, ::1] h_all = h_np
    cdef double[:, :, :, ::1] gates = gates_np
    cdef double[:, :, ::1] aux = aux_np
    wh2 = _fused(w_hh).reshape(H, GH)
    bh2 = np.asarray(b_hh).reshape(GH)
    h_np_state = np.zeros((B, H))
    cdef double[:, ::1] h = h_np_state
    cdef double[:, ::1] c = np.zeros((B, H))
    cdef double[:, :, ::1] ph
    cdef Py_ssize_t step, t, b, m
    cdef double r, u, n, f, i, o, g
    for step in range(L):
        t = L - 1 - step if reverse else step
        ph = (h_np_state @ wh2 + bh2).reshape(B, G, H)
        with nogil:
            for b in range(B):
                if kind == ELMAN:
                    for m in range(H):
                        h[b, m] = _tanh(pi[b, t, 0, m] + ph[b, 0, m])
                        gates[b, t, 0, m] = h[b, m]
                elif kind == GRU:
                    for m in range(H):
                        r = _sig(pi[b, t, 0, m] + ph[b, 0, m])
                        u = _sig(pi[b, t, 1, m] + ph[b, 1, m])
                        n = _tanh(pi[b, t, 2, m] + r * ph[b, 2, m])
                        h[b, m] = (1.0 - u) * n + u * h[b, m]
                        gates[b, t, 0, m] = r
                        gates[b, t, 1, m] = u
                        gates[b, t, 2, m] = n
                        aux[b, t, m] = ph[b, 2, m]
                else:
                    for m in range(H):
                        f = _sig(pi[b, t, 0, m] + ph[b, 0, m])
                        i = _sig(pi[b, t, 1, m] + ph[b, 1, m])
                        o = _sig(pi[b, t, 2, m] + ph[b, 2, m])
                        g = _tanh(pi[b, t, 3, m] + ph[b, 3, m])
                        c[b, m] = f * c[b, m] + i * g
                        h[b, m] = o * _tanh(c[b, m])
                        gates[b, t, 0, m] = f
                        gates[b, t, 1, m] = i
                        gates[b, t, 2, m] = o
                        gates[b, t, 3, m] = g
                        aux[b, t, m] = c[b, m]
                for m in range(H):
                    h_all[b, t, m] = h[b, m]
    return h_np, gates_np, aux_np


def rnn_backward(int kind, double[:, :, ::1] dh_all, double[:, :, ::1] x,
                 double[:, :, ::1] w_ih, double[:, :, ::1] w_hh,
                 double[:, :, ::1] h_all, double[:, :, :, ::1] gates, double[:, :, ::1] aux,
                 bint reverse):
    """Compiled reverse sweep for the pre-activation grads; weight grads as GEMMs afterwards."""
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], I = x.shape[2]
    cdef Py_ssize_t G = w_ih.shape[0], H = w_ih.shape[2], GH = G * H
    # da: input-side pre-activation grads, dz: hidden-side grads (differ only for GRU candidate)
    da_np = np.zeros((B, L, G, H))
    dz_np = np.zeros((B, L, G, H))
    hp_np = np.zeros((B, L, H))
    cdef double[:, :, :, ::1] da = da_np
    cdef double[:, :, :, ::1] dz = dz_np
    cdef double[:, :, ::1] h_prev = hp_np
    wh2t = np.ascontiguousarray(_fused(w_hh).reshape(H, GH).T)
    dh_next_np = np.zeros((B, H))
    cdef double[:, ::1] dh_next = dh_next_np
    cdef double[:, ::1] dc_next = np.zeros((B, H))
    cdef Py_ssize_t step, t, tp, b, m
    cdef bint has_prev
    cdef double dh, hc, r, u, n, hn, dn, du, dan, f, i, o, g, c, cp, tc, do_, dc, hp
    for step in range(L - 1, -1, -1):
        t = L - 1 - step if reverse else step
        has_prev = step > 0
        tp = (L - step if reverse else step - 1) if has_prev else 0
        with nogil:
            for b in range(B):
                for m in range(H):
                    h_prev[b, t, m] = h_all[b, tp, m] if has_prev else 0.0
                for m in range(H):
                    dh = dh_all[b, t, m] + dh_next[b, m]
                    if kind == ELMAN:
                        hc = gates[b, t, 0, m]
                        da[b, t, 0, m] = dh * (1.0 - hc * hc)
                        dz[b, t, 0, m] = da[b, t, 0, m]
                    elif kind == GRU:
                        r = gates[b, t, 0, m]
                        u = gates[b, t, 1, m]
                        n = gates[b, t, 2, m]
                        hn = aux[b, t, m]
                        hp = h_prev[b, t, m]
                        dn = dh * (1.0 - u)
                        du = dh * (hp - n)
                        dan = dn * (1.0 - n * n)
                        da[b, t, 0, m] = dan * hn * r * (1.0 - r)
                        da[b, t, 1, m] = du * u * (1.0 - u)
                        da[b, t, 2, m] = dan
                        dz[b, t, 0, m] = da[b, t, 0, m]
                        dz[b, t, 1, m] = da[b, t, 1, m]
                        dz[b, t, 2, m] = dan * r
                        dh_next[b, m] = dh * u
                    else:
                        f = gates[b, t, 0, m]
                        i = gates[b, t, 1, m]
                        o = gates[b, t, 2, m]
                        g = gates[b, t, 3, m]
                        c = aux[b, t, m]
                        cp = aux[b, tp, m] if has_prev else 0.0
                        tc = _tanh(c)
                        do_ = dh * tc
                        dc = dc_next[b, m] + dh * o * (1.0 - tc * tc)
                        da[b, t, 0, m] = dc * cp * f * (1.0 - f)
                        da[b, t, 1, m] = dc * g * i * (1.0 - i)
                        da[b, t, 2, m] = do_ * o * (1.0 - o)
                        da[b, t, 3, m] = dc * i * (1.0 - g * g)
                        dc_next[b, m] = dc * f
                        dz[b, t, 0, m] = da[b, t, 0, m]
                        dz[b, t, 1, m] = da[b, t, 1, m]
                        dz[b, t, 2, m] = da[b, t, 2, m]
                        dz[b, t, 3, m] = da[b, t, 3, m]
        carry = dz_np[:, t].reshape(B, GH) @ wh2t
        if kind == GRU:
            carry += dh_next_np
        dh_next_np[...] = carry
    da2 = da_np.reshape(B * L, GH)
    dz2 = dz_np.reshape(B * L, GH)
    xa = np.asarray(x).reshape(B * L, I)
    dx = (da2 @ _fused(w_ih).reshape(I, GH).T).reshape(B, L, I)
    dw_ih = np.ascontiguousarray((xa.T @ da2).reshape(I, G, H).transpose(1, 0, 2))
    dw_hh = np.ascontiguousarray((hp_np.reshape(B * L, H).T @ dz2).reshape(H, G, H).transpose(1, 0, 2))
    return dx, dw_ih, dw_hh, da2.sum(axis=0).reshape(G, H), dz2.sum(axis=0).reshape(G, H)
