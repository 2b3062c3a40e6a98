"""Pure numpy kernels, used when the compiled extension is unavailable.

Both backends share one calling convention:

* recurrent cells are ``ELMAN = 0``, ``GRU = 1``, ``LSTM = 2`` with gate
  stacks ``(tanh,)``, ``(reset, update, candidate)`` and
  ``(forget, input, output, candidate)``;
* weights are ``w_ih[g]: (I, H)``, ``w_hh[g]: (H, H)``, biases ``(G, H)``;
* the forward pass returns the emitted hidden states plus the per-step
  gate activations and an auxiliary state (LSTM cell, GRU ``h @ W_hn + b_hn``)
  that the backward pass consumes.
"""

from __future__ import annotations

import numpy as np

ELMAN, GRU, LSTM = 0, 1, 2
GATES = {ELMAN: 1, GRU: 3, LSTM: 4}


def cooccurrence(values: np.ndarray) -> np.ndarray:
    s, w, v = values.shape
    adj = np.zeros((v, v))
    for i in range(s):
        for j in range(w):
            row = values[i, j]
            present = row != 0.0
            if not present.any():
                continue
            both = present[:, None] & present[None, :]
            adj += np.where(both, row[:, None] + row[None, :], 0.0)
    return adj


def _sig(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def rnn_forward(kind, x, w_ih, w_hh, b_ih, b_hh, reverse):
    B, L, _ = x.shape
    G, _, H = w_ih.shape
    h_all = np.zeros((B, L, H))
    gates = np.zeros((B, L, G, H))
    aux = np.zeros((B, L, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    steps = range(L - 1, -1, -1) if reverse else range(L)
    for t in steps:
        xt = x[:, t]
        if kind == ELMAN:
            h = np.tanh(xt @ w_ih[0] + b_ih[0] + h @ w_hh[0] + b_hh[0])
            gates[:, t, 0] = h
        elif kind == GRU:
            r = _sig(xt @ w_ih[0] + b_ih[0] + h @ w_hh[0] + b_hh[0])
            u = _sig(xt @ w_ih[1] + b_ih[1] + h @ w_hh[1] + b_hh[1])
            hn = h @ w_hh[2] + b_hh[2]
            n = np.tanh(xt @ w_ih[2] + b_ih[2] + r * hn)
            h = (1.0 - u) * n + u * h
            gates[:, t, 0], gates[:, t, 1], gates[:, t, 2] = r, u, n
            aux[:, t] = hn
        elif kind == LSTM:
            f = _sig(xt @ w_ih[0] + b_ih[0] + h @ w_hh[0] + b_hh[0])
            i = _sig(xt @ w_ih[1] + b_ih[1] + h @ w_hh[1] + b_hh[1])
            o = _sig(xt @ w_ih[2] + b_ih[2] + h @ w_hh[2] + b_hh[2])
            g = np.tanh(xt @ w_ih[3] + b_ih[3] + h @ w_hh[3] + b_hh[3])
            c = f * c + i * g
            h = o * np.tanh(c)
            gates[:, t, 0], gates[:, t, 1], gates[:, t, 2], gates[:, t, 3] = f, i, o, g
            aux[:, t] = c
        else:
            raise ValueError(f"unknown cell kind {kind}")
        h_all[:, t] = h
    return h_all, gates, aux


def rnn_backward(kind, dh_all, x, w_ih, w_hh, h_all, gates, aux, reverse):
    B, L, _ = x.shape
    G, _, H = w_ih.shape
    dx = np.zeros_like(x)
    dw_ih = np.zeros_like(w_ih)
    dw_hh = np.zeros_like(w_hh)
    db_ih = np.zeros((G, H))
    db_hh = np.zeros((G, H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    order = list(range(L - 1, -1, -1)) if reverse else list(range(L))
    for pos, t in reversed(list(enumerate(order))):
        prev = order[pos - 1] if pos > 0 else None
        h_prev = h_all[:, prev] if prev is not None else np.zeros((B, H))
        xt = x[:, t]
        dh = dh_all[:, t] + dh_next
        if kind == ELMAN:
            hcur = gates[:, t, 0]
            da = (dh * (1.0 - hcur * hcur),)
            dhh = da
        elif kind == GRU:
            r, u, n = gates[:, t, 0], gates[:, t, 1], gates[:, t, 2]
            hn = aux[:, t]
            dn = dh * (1.0 - u)
            du = dh * (h_prev - n)
            dan = dn * (1.0 - n * n)
            dr = dan * hn
            dar = dr * r * (1.0 - r)
            dau = du * u * (1.0 - u)
            da = (dar, dau, dan)
            dhh = (dar, dau, dan * r)
        else:
            f, i, o, g = gates[:, t, 0], gates[:, t, 1], gates[:, t, 2], gates[:, t, 3]
            c = aux[:, t]
            c_prev = aux[:, prev] if prev is not None else np.zeros((B, H))
            tc = np.tanh(c)
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            da = (dc * c_prev * f * (1.0 - f), dc * g * i * (1.0 - i),
                  do * o * (1.0 - o), dc * i * (1.0 - g * g))
            dhh = da
            dc_next = dc * f
        dxt = np.zeros_like(xt)
        dh_prev = dh * gates[:, t, 1] if kind == GRU else np.zeros((B, H))
        for k in range(G):
            dw_ih[k] += xt.T @ da[k]
            db_ih[k] += da[k].sum(axis=0)
            dw_hh[k] += h_prev.T @ dhh[k]
            db_hh[k] += dhh[k].sum(axis=0)
            dxt += da[k] @ w_ih[k].T
            dh_prev += dhh[k] @ w_hh[k].T
        dx[:, t] = dxt
        dh_next = dh_prev
    return dx, dw_ih, dw_hh, db_ih, db_hh
