"""Embedding -> encoder -> dense -> softmax text classifier."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from ..errors import ConfigInvalid, IndexOutOfVocab, NumericError, ShapeMismatch
from .functional import log_softmax, softmax
from .layers import CNNEncoder, GRUEncoder, LSTMEncoder, uniform_init

CHECKPOINT_VERSION = 1


class Arch(str, Enum):
    LSTM = "LSTM"
    GRU = "GRU"
    CNN1D = "CNN1D"


@dataclass(frozen=True)
class ModelConfig:
    arch: Arch = Arch.LSTM
    vocab_size: int = 2
    embed_dim: int = 50
    hidden: int = 64
    filters: int = 64
    kernel: int = 3
    seq_len: int = 64
    n_classes: int = 3
    embedding_trainable: bool = False
    paper_exact_cell: bool = False

    def __post_init__(self):
        object.__setattr__(self, "arch", Arch(self.arch))
        for name in ("vocab_size", "embed_dim", "hidden", "filters", "kernel", "seq_len"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(name, "must be >= 1")
        if self.n_classes != 3:
            raise ConfigInvalid("n_classes", "this task has exactly 3 classes")

    def to_dict(self):
        d = asdict(self)
        d["arch"] = self.arch.value
        return d


def make_encoder(cfg):
    if cfg.arch is Arch.LSTM:
        return LSTMEncoder(cfg.embed_dim, cfg.hidden, cfg.paper_exact_cell)
    if cfg.arch is Arch.GRU:
        return GRUEncoder(cfg.embed_dim, cfg.hidden)
    return CNNEncoder(cfg.embed_dim, cfg.filters, cfg.kernel)


class Classifier:
    """Parameters live in ``self.params`` (name -> float64 array).

    Row 0 of the embedding belongs to PAD and is pinned to zero.
    """

    def __init__(self, config, seed=0, params=None):
        self.config = config
        self.encoder = make_encoder(config)
        if params is None:
            params = self._init_params(np.random.default_rng(seed))
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self._check_shapes()

    def param_shapes(self):
        c = self.config
        D = self.encoder.out_dim
        return {
            "embedding": (c.vocab_size, c.embed_dim),
            **self.encoder.param_shapes(),
            "dense.W": (D, c.n_classes),
            "dense.b": (c.n_classes,),
        }

    def _init_params(self, rng):
        c = self.config
        emb = rng.standard_normal((c.vocab_size, c.embed_dim))
        emb[0] = 0.0
        params = {"embedding": emb}
        params.update(self.encoder.init_params(rng))
        params["dense.W"] = uniform_init(rng, (self.encoder.out_dim, c.n_classes), self.encoder.out_dim)
        params["dense.b"] = np.zeros(c.n_classes)
        return params

    def _check_shapes(self):
        want = self.param_shapes()
        if set(want) != set(self.params):
            raise ShapeMismatch(f"parameter names differ: {sorted(set(want) ^ set(self.params))}")
        for name, shape in want.items():
            if self.params[name].shape != tuple(shape):
                raise ShapeMismatch(f"{name}: expected {shape}, got {self.params[name].shape}")

    def trainable_names(self):
        return [n for n in self.params if n != "embedding" or self.config.embedding_trainable]

    def copy_params(self):
        return {k: v.copy() for k, v in self.params.items()}

    def _prepare(self, ids, lengths):
        ids = np.asarray(ids)
        single = ids.ndim == 1
        if single:
            ids = ids[None, :]
            lengths = [len(ids[0]) if lengths is None else lengths]
        lengths = np.asarray(lengths, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            raise IndexOutOfVocab(f"ids must lie in [0, {self.config.vocab_size})")
        if lengths.shape != (ids.shape[0],) or np.any(lengths < 0) or np.any(lengths > ids.shape[1]):
            raise ShapeMismatch("lengths must be one value per row within [0, seq_len]")
        T = max(int(lengths.max()) if lengths.size else 0, 1)
        ids = ids[:, :T]
        mask = (np.arange(T)[None, :] < lengths[:, None]).astype(np.float64)
        return ids, mask, single

    def _forward(self, ids, lengths):
        ids, mask, single = self._prepare(ids, lengths)
        X = self.params["embedding"][ids]
        feat, enc_cache = self.encoder.forward(self.params, X, mask)
        logits = feat @ self.params["dense.W"] + self.params["dense.b"]
        return logits, (ids, X, feat, enc_cache), single

    def logits(self, ids, lengths=None):
        out, _, single = self._forward(ids, lengths)
        return out[0] if single else out

    def forward(self, ids, lengths=None):
        """Class probabilities, (B, C) or (C,) for a single sequence."""
        out, _, single = self._forward(ids, lengths)
        p = softmax(out)
        return p[0] if single else p

    def predict_proba(self, ids, lengths, batch_size=256):
        out = [self.forward(ids[i:i + batch_size], lengths[i:i + batch_size])
               for i in range(0, len(ids), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, self.config.n_classes))

    def loss(self, ids, lengths, labels):
        logits, _, _ = self._forward(ids, lengths)
        labels = np.asarray(labels)
        return float(-log_softmax(logits)[np.arange(len(labels)), labels].mean())

    def loss_and_gradients(self, ids, lengths, labels, clip_norm=5.0):
        """Mean cross-entropy and its exact gradient for every trainable array.

        Gradients are rescaled to global norm ``clip_norm`` when they exceed
        it; pass ``None`` to get the raw gradient.
        """
        loss, grads, _ = self.loss_gradients_probs(ids, lengths, labels, clip_norm)
        return loss, grads

    def loss_gradients_probs(self, ids, lengths, labels, clip_norm=5.0):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size == 0:
            raise ShapeMismatch("empty batch")
        logits, (ids_t, X, feat, enc_cache), _ = self._forward(ids, lengths)
        B = len(labels)
        logp = log_softmax(logits)
        loss = float(-logp[np.arange(B), labels].mean())
        if not np.isfinite(loss):
            raise NumericError("non-finite loss")
        dlogits = np.exp(logp)
        dlogits[np.arange(B), labels] -= 1.0
        dlogits /= B
        grads = {
            "dense.W": feat.T @ dlogits,
            "dense.b": dlogits.sum(axis=0),
        }
        dfeat = dlogits @ self.params["dense.W"].T
        enc_grads, dX = self.encoder.backward(self.params, dfeat, enc_cache)
        grads.update(enc_grads)
        if self.config.embedding_trainable:
            dX = dX[:, :ids_t.shape[1]]
            demb = np.zeros_like(self.params["embedding"])
            np.add.at(demb, ids_t.reshape(-1), dX.reshape(-1, dX.shape[-1]))
            demb[0] = 0.0
            grads["embedding"] = demb
        grads = {n: grads[n] for n in self.trainable_names()}
        if clip_norm is not None:
            grads, _ = clip_grad_norm(grads, clip_norm)
        return loss, grads, np.exp(logp)


def clip_grad_norm(grads, max_norm):
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm


def count_parameters(model):
    """(trainable, total) by enumerating the stored arrays."""
    total = sum(int(v.size) for v in model.params.values())
    trainable = sum(int(model.params[n].size) for n in model.trainable_names())
    return trainable, total


def analytic_parameter_count(cfg):
    """Closed-form (trainable, total) for a :class:`ModelConfig`."""
    E, H, C, V = cfg.embed_dim, cfg.hidden, cfg.n_classes, cfg.vocab_size
    if cfg.arch is Arch.LSTM:
        cell, D = 4 * (E * H + H * H + H), H
    elif cfg.arch is Arch.GRU:
        cell, D = 3 * (E * H + H * H + H), H
    else:
        cell, D = cfg.kernel * E * cfg.filters + cfg.filters, cfg.filters
    dense = D * C + C
    emb = V * E
    trainable = cell + dense + (emb if cfg.embedding_trainable else 0)
    return trainable, cell + dense + emb


def save_checkpoint(path, model, vocab_hash=None, extra=None):
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "vocab_hash": vocab_hash,
        "params": [{"name": k, "shape": list(v.shape)} for k, v in model.params.items()],
        "extra": extra or {},
    }
    arrays = {f"param:{k}": v for k, v in model.params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ConfigInvalid("format_version", f"unsupported checkpoint version {meta.get('format_version')}")
        params = {p["name"]: z[f"param:{p['name']}"] for p in meta["params"]}
    model = Classifier(ModelConfig(**meta["config"]), params=params)
    return model, meta
