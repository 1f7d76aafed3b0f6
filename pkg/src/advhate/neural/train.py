"""Adam optimizer and the seeded minibatch training loop."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigInvalid, EmptySplit, NumericError


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigInvalid("epochs", "must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigInvalid("learning_rate", "must be > 0")
        if self.batch_size < 1:
            raise ConfigInvalid("batch_size", "must be >= 1")


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m, self.v, self.steps = {}, {}, {}

    def step(self, params, grads):
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
                self.steps[name] = 0
            self.steps[name] += 1
            t = self.steps[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1 ** t)
            v_hat = self.v[name] / (1 - self.beta2 ** t)
            params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class EncodedSplit:
    ids: np.ndarray
    lengths: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)

    def take(self, idx):
        return EncodedSplit(self.ids[idx], self.lengths[idx], self.labels[idx])


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


CURVE_FIELDS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


@dataclass
class TrainResult:
    curve: list
    best_epoch: int
    best_val_acc: float
    best_params: dict = field(repr=False)
    optimizer: Adam = field(repr=False)

    def write_curve(self, path):
        write_curve(self.curve, path)


def write_curve(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_FIELDS)
        for row in curve:
            w.writerow([row.epoch, repr(row.train_loss), repr(row.train_acc),
                        repr(row.val_loss), repr(row.val_acc)])


def evaluate(model, split, batch_size=256):
    """(mean loss, accuracy, probabilities) over ``split``."""
    probs = model.predict_proba(split.ids, split.lengths, batch_size)
    picked = np.clip(probs[np.arange(len(split)), split.labels], 1e-300, None)
    loss = float(-np.log(picked).mean())
    acc = float((probs.argmax(axis=1) == split.labels).mean())
    return loss, acc, probs


def train(model, train_split, val_split, cfg=None, log=None):
    """Fit ``model`` in place; the best-validation parameters are kept in
    the result (ties keep the earlier epoch)."""
    cfg = cfg or TrainConfig()
    if len(train_split) == 0:
        raise EmptySplit("training split is empty")
    if len(val_split) == 0:
        raise EmptySplit("validation split is empty")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    curve = []
    best_epoch, best_acc, best_params = 0, -1.0, model.copy_params()
    n = len(train_split)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        tot_loss = tot_correct = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = train_split.take(order[start:start + cfg.batch_size])
            loss, grads, probs = model.loss_gradients_probs(
                batch.ids, batch.lengths, batch.labels, clip_norm=cfg.clip_norm)
            # running loss/accuracy from the pre-update forward pass
            tot_loss += loss * len(batch)
            tot_correct += int((probs.argmax(axis=1) == batch.labels).sum())
            opt.step(model.params, grads)
            if model.config.embedding_trainable:
                model.params["embedding"][0] = 0.0
        for name in model.trainable_names():
            if not np.all(np.isfinite(model.params[name])):
                raise NumericError(f"non-finite parameter {name} after epoch {epoch}")
        val_loss, val_acc, _ = evaluate(model, val_split)
        stats = EpochStats(epoch, tot_loss / n, tot_correct / n, val_loss, val_acc)
        curve.append(stats)
        if log:
            log(stats)
        if val_acc > best_acc:
            best_epoch, best_acc, best_params = epoch, val_acc, model.copy_params()
    return TrainResult(curve, best_epoch, best_acc, best_params, opt)

