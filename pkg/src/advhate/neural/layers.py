"""Batched encoders with exact backward passes.

Each encoder maps embedded inputs ``X`` (B, T, E) plus a 0/1 ``mask``
(B, T) to a fixed-size representation (B, D). ``forward`` returns the
output and a cache; ``backward`` turns the output gradient into parameter
gradients and ``dX``. Masked steps carry the previous state through
unchanged, so the final state is the one at each sequence's true length.
"""

from __future__ import annotations

import numpy as np

from .functional import GRU_NAMES, LSTM_GATES, LSTM_NAMES, GRUParams, LSTMParams, \
    gru_gates, lstm_gates, lstm_output


def uniform_init(rng, shape, fan_in):
    r = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-r, r, size=shape)


class LSTMEncoder:
    prefix = "lstm."

    def __init__(self, embed_dim, hidden, paper_exact=False):
        self.E, self.H = embed_dim, hidden
        self.paper_exact = paper_exact

    @property
    def out_dim(self):
        return self.H

    def param_shapes(self):
        E, H = self.E, self.H
        shapes = {}
        for g in LSTM_GATES:
            shapes[f"W_x{g}"] = (E, H)
        for g in LSTM_GATES:
            shapes[f"U_h{g}"] = (H, H)
        for g in LSTM_GATES:
            shapes[f"b_{g}"] = (H,)
        return {self.prefix + k: v for k, v in shapes.items()}

    def init_params(self, rng):
        out = {}
        for name, shape in self.param_shapes().items():
            short = name[len(self.prefix):]
            if short.startswith("W_"):
                out[name] = uniform_init(rng, shape, self.E)
            elif short.startswith("U_"):
                out[name] = uniform_init(rng, shape, self.H)
            else:
                out[name] = np.full(shape, 1.0 if short == "b_f" else 0.0)
        return out

    def forward(self, params, X, mask):
        p = LSTMParams.from_dict(params, self.prefix)
        W, U, b = p.stacked()
        B, T, _ = X.shape
        H = self.H
        h = np.zeros((B, H))
        s = np.zeros((B, H))
        steps = []
        for t in range(T):
            i, g, f, o = lstm_gates(X[:, t], h, W, U, b)
            s_new = f * s + i * g
            tanh_s = np.tanh(s_new)
            h_new = lstm_output(s_new, g, o, self.paper_exact)
            m = mask[:, t, None]
            steps.append((h, s, i, g, f, o, tanh_s, m))
            h = m * h_new + (1.0 - m) * h
            s = m * s_new + (1.0 - m) * s
        return h, (X, W, U, steps)

    def backward(self, params, dh_out, cache):
        X, W, U, steps = cache
        B, T, E = X.shape
        H = self.H
        dW = np.zeros_like(W)
        dU = np.zeros_like(U)
        db = np.zeros(4 * H)
        dX = np.zeros_like(X)
        dh_next = dh_out
        ds_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            h_prev, s_prev, i, g, f, o, tanh_s, m = steps[t]
            dh = m * dh_next
            dtanh = 1.0 - tanh_s ** 2
            if self.paper_exact:
                ds = m * ds_next + dh * g * dtanh
                do = np.zeros_like(o)
                dg = ds * i + dh * tanh_s
            else:
                ds = m * ds_next + dh * o * dtanh
                do = dh * tanh_s
                dg = ds * i
            di = ds * g
            df = ds * s_prev
            da = np.concatenate([
                di * i * (1.0 - i),
                dg * (1.0 - g ** 2),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
            ], axis=1)
            dW += X[:, t].T @ da
            dU += h_prev.T @ da
            db += da.sum(axis=0)
            dX[:, t] = da @ W.T
            dh_next = da @ U.T + (1.0 - m) * dh_next
            ds_next = ds * f + (1.0 - m) * ds_next
        grads = {}
        for k, gate in enumerate(LSTM_GATES):
            cols = slice(k * H, (k + 1) * H)
            grads[f"{self.prefix}W_x{gate}"] = dW[:, cols]
            grads[f"{self.prefix}U_h{gate}"] = dU[:, cols]
            grads[f"{self.prefix}b_{gate}"] = db[cols]
        return grads, dX


class GRUEncoder:
    prefix = "gru."

    def __init__(self, embed_dim, hidden):
        self.E, self.H = embed_dim, hidden

    @property
    def out_dim(self):
        return self.H

    def param_shapes(self):
        E, H = self.E, self.H
        shapes = {}
        for n in GRU_NAMES:
            shapes[n] = (E, H) if n.startswith("W_") else (H, H) if n.startswith("U_") else (H,)
        return {self.prefix + k: v for k, v in shapes.items()}

    def init_params(self, rng):
        out = {}
        for name, shape in self.param_shapes().items():
            short = name[len(self.prefix):]
            if short.startswith("W_"):
                out[name] = uniform_init(rng, shape, self.E)
            elif short.startswith("U_"):
                out[name] = uniform_init(rng, shape, self.H)
            else:
                out[name] = np.zeros(shape)
        return out

    def forward(self, params, X, mask):
        p = GRUParams.from_dict(params, self.prefix)
        B, T, _ = X.shape
        h = np.zeros((B, self.H))
        steps = []
        for t in range(T):
            z, r, n = gru_gates(X[:, t], h, p)
            h_new = (1.0 - z) * n + z * h
            m = mask[:, t, None]
            steps.append((h, z, r, n, m))
            h = m * h_new + (1.0 - m) * h
        return h, (X, p, steps)

    def backward(self, params, dh_out, cache):
        X, p, steps = cache
        B, T, E = X.shape
        grads = {n: np.zeros_like(getattr(p, n)) for n in GRU_NAMES}
        dX = np.zeros_like(X)
        dh_next = dh_out
        for t in range(T - 1, -1, -1):
            h_prev, z, r, n, m = steps[t]
            dh = m * dh_next
            dz = dh * (h_prev - n)
            dn = dh * (1.0 - z)
            dh_prev = dh * z
            dan = dn * (1.0 - n ** 2)
            drh = dan @ p.U_n.T
            dr = drh * h_prev
            dh_prev += drh * r
            daz = dz * z * (1.0 - z)
            dar = dr * r * (1.0 - r)
            x = X[:, t]
            grads["W_z"] += x.T @ daz
            grads["W_r"] += x.T @ dar
            grads["W_n"] += x.T @ dan
            grads["U_z"] += h_prev.T @ daz
            grads["U_r"] += h_prev.T @ dar
            grads["U_n"] += (r * h_prev).T @ dan
            grads["b_z"] += daz.sum(axis=0)
            grads["b_r"] += dar.sum(axis=0)
            grads["b_n"] += dan.sum(axis=0)
            dX[:, t] = daz @ p.W_z.T + dar @ p.W_r.T + dan @ p.W_n.T
            dh_prev += daz @ p.U_z.T + dar @ p.U_r.T
            dh_next = dh_prev + (1.0 - m) * dh_next
        return {self.prefix + k: v for k, v in grads.items()}, dX


class CNNEncoder:
    """Valid 1D convolution, ReLU, global max pool over the true length.

    Windows start at positions ``0 .. max(len - k, 0)``; a sequence shorter
    than the kernel uses the single window at 0 (PAD rows are zero).
    """

    prefix = "cnn."

    def __init__(self, embed_dim, filters, kernel):
        self.E, self.F, self.k = embed_dim, filters, kernel

    @property
    def out_dim(self):
        return self.F

    def param_shapes(self):
        return {self.prefix + "W": (self.k, self.E, self.F), self.prefix + "b": (self.F,)}

    def init_params(self, rng):
        return {
            self.prefix + "W": uniform_init(rng, (self.k, self.E, self.F), self.k * self.E),
            self.prefix + "b": np.zeros(self.F),
        }

    def forward(self, params, X, mask):
        W = params[self.prefix + "W"]
        b = params[self.prefix + "b"]
        k, E, F = W.shape
        B, T, _ = X.shape
        if T < k:
            X = np.concatenate([X, np.zeros((B, k - T, E))], axis=1)
            mask = np.concatenate([mask, np.zeros((B, k - T))], axis=1)
            T = k
        P = T - k + 1
        cols = np.stack([X[:, j:j + P] for j in range(k)], axis=2).reshape(B, P, k * E)
        Z = cols @ W.reshape(k * E, F) + b
        A = np.maximum(Z, 0.0)
        lengths = mask.sum(axis=1).astype(np.int64)
        last = np.maximum(lengths - k, 0)
        valid = np.arange(P)[None, :] <= last[:, None]
        A_masked = np.where(valid[:, :, None], A, -np.inf)
        arg = A_masked.argmax(axis=1)  # (B, F)
        pooled = np.take_along_axis(A, arg[:, None, :], axis=1)[:, 0, :]
        return pooled, (X.shape, cols, Z, arg, W)

    def backward(self, params, dpool, cache):
        (B, T, E), cols, Z, arg, W = cache
        k, _, F = W.shape
        P = T - k + 1
        dA = np.zeros_like(Z)
        np.put_along_axis(dA, arg[:, None, :], dpool[:, None, :], axis=1)
        dZ = dA * (Z > 0)
        dW = (cols.reshape(B * P, k * E).T @ dZ.reshape(B * P, F)).reshape(k, E, F)
        db = dZ.sum(axis=(0, 1))
        dcols = (dZ @ W.reshape(k * E, F).T).reshape(B, P, k, E)
        dX = np.zeros((B, T, E))
        for j in range(k):
            dX[:, j:j + P] += dcols[:, :, j]
        return {self.prefix + "W": dW, self.prefix + "b": db}, dX
