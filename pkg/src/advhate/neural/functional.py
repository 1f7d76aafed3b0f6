"""Single-step cell math shared by the encoders.

Row-vector convention throughout: ``x @ W`` with ``W`` of shape (in, out),
so every function accepts either one vector or a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteInput, SequenceTooShort, ShapeMismatch


def sigmoid(x):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


LSTM_GATES = ("i", "g", "f", "o")
LSTM_NAMES = tuple(f"W_x{g}" for g in LSTM_GATES) + tuple(f"U_h{g}" for g in LSTM_GATES) \
    + tuple(f"b_{g}" for g in LSTM_GATES)
GRU_GATES = ("z", "r", "n")
GRU_NAMES = tuple(f"W_{g}" for g in GRU_GATES) + tuple(f"U_{g}" for g in GRU_GATES) \
    + tuple(f"b_{g}" for g in GRU_GATES)


@dataclass
class LSTMParams:
    W_xi: np.ndarray
    W_xg: np.ndarray
    W_xf: np.ndarray
    W_xo: np.ndarray
    U_hi: np.ndarray
    U_hg: np.ndarray
    U_hf: np.ndarray
    U_ho: np.ndarray
    b_i: np.ndarray
    b_g: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray

    @classmethod
    def from_dict(cls, d, prefix=""):
        return cls(**{n: d[prefix + n] for n in LSTM_NAMES})

    @classmethod
    def zeros(cls, E, H):
        return cls(*[np.zeros((E, H))] * 4, *[np.zeros((H, H))] * 4, *[np.zeros(H)] * 4)

    @property
    def dims(self):
        return self.W_xi.shape

    def check(self):
        E, H = self.dims
        for g in LSTM_GATES:
            for name, want in ((f"W_x{g}", (E, H)), (f"U_h{g}", (H, H)), (f"b_{g}", (H,))):
                got = getattr(self, name).shape
                if got != want:
                    raise ShapeMismatch(f"{name}: expected {want}, got {got}")
        return E, H

    def stacked(self):
        """Gate-concatenated (W, U, b) in i, g, f, o order."""
        W = np.concatenate([self.W_xi, self.W_xg, self.W_xf, self.W_xo], axis=1)
        U = np.concatenate([self.U_hi, self.U_hg, self.U_hf, self.U_ho], axis=1)
        b = np.concatenate([self.b_i, self.b_g, self.b_f, self.b_o])
        return W, U, b


@dataclass
class LSTMState:
    h: np.ndarray
    s: np.ndarray

    @classmethod
    def zeros(cls, H):
        return cls(np.zeros(H), np.zeros(H))


@dataclass
class GRUParams:
    W_z: np.ndarray
    W_r: np.ndarray
    W_n: np.ndarray
    U_z: np.ndarray
    U_r: np.ndarray
    U_n: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_n: np.ndarray

    @classmethod
    def from_dict(cls, d, prefix=""):
        return cls(**{n: d[prefix + n] for n in GRU_NAMES})

    @classmethod
    def zeros(cls, E, H):
        return cls(*[np.zeros((E, H))] * 3, *[np.zeros((H, H))] * 3, *[np.zeros(H)] * 3)

    def check(self):
        E, H = self.W_z.shape
        for g in GRU_GATES:
            for name, want in ((f"W_{g}", (E, H)), (f"U_{g}", (H, H)), (f"b_{g}", (H,))):
                got = getattr(self, name).shape
                if got != want:
                    raise ShapeMismatch(f"{name}: expected {want}, got {got}")
        return E, H


def lstm_gates(x, h_prev, W, U, b):
    """Activated gates (i, g, f, o) from stacked weights."""
    H = U.shape[0]
    a = x @ W + h_prev @ U + b
    i = sigmoid(a[..., :H])
    g = np.tanh(a[..., H:2 * H])
    f = sigmoid(a[..., 2 * H:3 * H])
    o = sigmoid(a[..., 3 * H:])
    return i, g, f, o


def lstm_output(s, g, o, paper_exact):
    """Standard output ``o * tanh(s)``, or ``tanh(s) * g`` as literally printed."""
    return np.tanh(s) * (g if paper_exact else o)


def lstm_step(x, prev, p, paper_exact=False):
    """One LSTM time step; returns the new :class:`LSTMState`."""
    E, H = p.check()
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != E or prev.h.shape[-1] != H or prev.s.shape[-1] != H:
        raise ShapeMismatch(f"x/h/s last dims {x.shape[-1]}/{prev.h.shape[-1]}/"
                            f"{prev.s.shape[-1]} vs E={E}, H={H}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(prev.h)) and np.all(np.isfinite(prev.s))):
        raise NonFiniteInput("non-finite input to lstm_step")
    W, U, b = p.stacked()
    i, g, f, o = lstm_gates(x, prev.h, W, U, b)
    s = f * prev.s + i * g
    return LSTMState(lstm_output(s, g, o, paper_exact), s)


def gru_gates(x, h_prev, p):
    z = sigmoid(x @ p.W_z + h_prev @ p.U_z + p.b_z)
    r = sigmoid(x @ p.W_r + h_prev @ p.U_r + p.b_r)
    n = np.tanh(x @ p.W_n + (r * h_prev) @ p.U_n + p.b_n)
    return z, r, n


def gru_step(x, prev_h, p):
    """One GRU step: ``h' = (1 - z) * n + z * h``."""
    E, H = p.check()
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != E or prev_h.shape[-1] != H:
        raise ShapeMismatch(f"x/h last dims {x.shape[-1]}/{prev_h.shape[-1]} vs E={E}, H={H}")
    z, r, n = gru_gates(x, prev_h, p)
    return (1.0 - z) * n + z * prev_h


def conv1d_forward(seq, W, b):
    """Valid convolution + ReLU + global max pool.

    ``seq`` is (L, E), ``W`` is (k, E, F), ``b`` is (F,). Returns the
    pooled F-vector and the (L-k+1, F) activation map.
    """
    seq = np.asarray(seq, dtype=np.float64)
    k, E, F = W.shape
    L = seq.shape[0]
    if seq.shape[1] != E or b.shape != (F,):
        raise ShapeMismatch(f"seq {seq.shape} / bias {b.shape} vs filters {W.shape}")
    if L < k:
        raise SequenceTooShort(f"sequence length {L} < kernel width {k}")
    cols = np.stack([seq[j:L - k + 1 + j] for j in range(k)], axis=1)  # (P, k, E)
    fmap = np.maximum(cols.reshape(L - k + 1, k * E) @ W.reshape(k * E, F) + b, 0.0)
    return fmap.max(axis=0), fmap
