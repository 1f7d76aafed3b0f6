"""Central finite-difference gradients, used to audit the analytic backward passes."""

import numpy as np


def finite_difference_gradients(model, ids, lengths, labels, eps=1e-4, names=None):
    """Numerical d(loss)/d(param) for every entry of the named arrays.

    Only ``model.loss`` (a forward pass) is used, so this is independent of
    the backward code it checks.
    """
    names = model.trainable_names() if names is None else names
    out = {}
    for name in names:
        p = model.params[name]
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            up = model.loss(ids, lengths, labels)
            p[idx] = orig - eps
            down = model.loss(ids, lengths, labels)
            p[idx] = orig
            g[idx] = (up - down) / (2 * eps)
        out[name] = g
    return out


def max_relative_error(analytic, numeric, floor=1e-6):
    """max |a - n| / max(|a|, |n|, floor) over all entries of all arrays.

    ``floor`` keeps entries that are zero up to rounding (e.g. the unused
    output gate of the literal LSTM variant) from producing 0/0.
    """
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
