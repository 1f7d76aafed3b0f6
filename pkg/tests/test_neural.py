import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advhate.errors import (ConfigInvalid, EmptySplit, IndexOutOfVocab, NonFiniteInput,
                            SequenceTooShort, ShapeMismatch)
from advhate.neural import (Adam, Arch, Classifier, EncodedSplit, GRUParams, LSTMParams,
                            LSTMState, ModelConfig, TrainConfig, analytic_parameter_count,
                            clip_grad_norm, conv1d_forward, count_parameters,
                            finite_difference_gradients, gru_step, load_checkpoint, lstm_step,
                            max_relative_error, save_checkpoint, sigmoid, softmax, train)
from advhate.neural.functional import lstm_gates

getcontext().prec = 40


def _dexp(x):
    return Decimal(x).exp()


def _dsig(x):
    return 1 / (1 + _dexp(-Decimal(x)))


def _dtanh(x):
    x = Decimal(x)
    return (_dexp(x) - _dexp(-x)) / (_dexp(x) + _dexp(-x))


def _unit_lstm():
    p = LSTMParams.zeros(1, 1)
    for g in "igfo":
        setattr(p, f"W_x{g}", np.ones((1, 1)))
    return p


def _small(arch, V=12, E=4, H=3, L=5, seed=0, **kw):
    cfg = ModelConfig(arch=arch, vocab_size=V, embed_dim=E, hidden=H, filters=H, kernel=2,
                      seq_len=L, **kw)
    return Classifier(cfg, seed=seed)


def _batch(rng, V=12, L=5, B=4, min_len=1):
    lengths = rng.integers(min_len, L + 1, size=B)
    ids = np.zeros((B, L), dtype=np.int64)
    for r, n in enumerate(lengths):
        ids[r, :n] = rng.integers(2, V, size=n)
    return ids, lengths, rng.integers(0, 3, size=B)


# LSTM step ------------------------------------------------------------------------

def test_lstm_all_zero():
    for exact in (False, True):
        st_ = lstm_step(np.zeros(2), LSTMState.zeros(3), LSTMParams.zeros(2, 3), exact)
        assert np.all(st_.h == 0) and np.all(st_.s == 0)
    W, U, b = LSTMParams.zeros(2, 3).stacked()
    i, g, f, o = lstm_gates(np.zeros(2), np.zeros(3), W, U, b)
    assert np.all(i == 0.5) and np.all(f == 0.5) and np.all(o == 0.5) and np.all(g == 0)


def test_lstm_scalar_against_decimal_oracle():
    i = _dsig(1)
    g = _dtanh(1)
    s = i * g
    h_std = i * _dtanh(s)
    h_paper = _dtanh(s) * g
    std = lstm_step(np.ones(1), LSTMState.zeros(1), _unit_lstm())
    paper = lstm_step(np.ones(1), LSTMState.zeros(1), _unit_lstm(), paper_exact=True)
    assert std.s[0] == pytest.approx(float(s), abs=1e-12)
    assert std.h[0] == pytest.approx(float(h_std), abs=1e-12)
    assert paper.h[0] == pytest.approx(float(h_paper), abs=1e-12)
    # six-decimal pins of the independent evaluation
    assert round(float(i), 6) == 0.731059 and round(float(g), 6) == 0.761594
    assert round(float(s), 6) == 0.55677 and round(float(h_std), 6) == 0.369606
    assert round(float(h_paper), 6) == 0.385044


def test_lstm_errors():
    with pytest.raises(ShapeMismatch):
        lstm_step(np.ones(3), LSTMState.zeros(1), _unit_lstm())
    with pytest.raises(NonFiniteInput):
        lstm_step(np.array([np.nan]), LSTMState.zeros(1), _unit_lstm())
    bad = _unit_lstm()
    bad.U_hf = np.zeros((2, 2))
    with pytest.raises(ShapeMismatch):
        lstm_step(np.ones(1), LSTMState.zeros(1), bad)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.1, 20))
def test_lstm_state_bounded(seed, scale):
    rng = np.random.default_rng(seed)
    E, H = 3, 4
    p = LSTMParams(*[rng.normal(0, scale, (E, H)) for _ in range(4)],
                   *[rng.normal(0, scale, (H, H)) for _ in range(4)],
                   *[rng.normal(0, scale, H) for _ in range(4)])
    state = LSTMState.zeros(H)
    for _ in range(5):
        state = lstm_step(rng.normal(0, scale, E), state, p)
        assert np.all(np.abs(state.h) <= 1.0)
    W, U, b = p.stacked()
    i, g, f, o = lstm_gates(rng.normal(size=E), state.h, W, U, b)
    for gate in (i, f, o):
        assert np.all((gate >= 0) & (gate <= 1))


# GRU step --------------------------------------------------------------------------

def test_gru_all_zero():
    assert np.all(gru_step(np.zeros(2), np.zeros(3), GRUParams.zeros(2, 3)) == 0)


def test_gru_carry_limit():
    p = GRUParams.zeros(2, 3)
    p.b_z = np.full(3, 40.0)
    h = np.array([0.3, -0.7, 0.9])
    np.testing.assert_allclose(gru_step(np.ones(2), h, p), h, atol=1e-6)


def test_gru_scalar_against_decimal_oracle():
    p = GRUParams(*[np.ones((1, 1))] * 6, *[np.zeros(1)] * 3)
    h0 = Decimal("0.5")
    z = _dsig(1 + h0)
    r = _dsig(1 + h0)
    n = _dtanh(1 + r * h0)
    expected = (1 - z) * n + z * h0
    got = gru_step(np.ones(1), np.array([0.5]), p)
    assert got[0] == pytest.approx(float(expected), abs=1e-12)
    assert round(float(expected), 6) == 0.570642


# CNN ---------------------------------------------------------------------------------

def test_conv_zero_input_gives_rectified_bias():
    b = np.array([0.5, -1.0, 0.0])
    pooled, _ = conv1d_forward(np.zeros((4, 2)), np.ones((2, 2, 3)), b)
    np.testing.assert_array_equal(pooled, np.maximum(b, 0))


def test_conv_width_one_is_max():
    seq = np.array([[0.2], [1.7], [-3.0], [0.9]])
    pooled, _ = conv1d_forward(seq, np.ones((1, 1, 1)), np.zeros(1))
    assert pooled[0] == 1.7


def test_conv_brute_force():
    rng = np.random.default_rng(3)
    seq = rng.normal(size=(4, 2))
    W = rng.normal(size=(2, 2, 1))
    b = np.array([0.1])
    expected = []
    for t in range(3):
        acc = b[0]
        for j in range(2):
            for e in range(2):
                acc += seq[t + j, e] * W[j, e, 0]
        expected.append(max(acc, 0.0))
    pooled, fmap = conv1d_forward(seq, W, b)
    np.testing.assert_allclose(fmap[:, 0], expected, atol=1e-14)
    assert pooled[0] == pytest.approx(max(expected), abs=1e-14)


def test_conv_too_short():
    with pytest.raises(SequenceTooShort):
        conv1d_forward(np.zeros((2, 2)), np.ones((3, 2, 1)), np.zeros(1))


# forward ---------------------------------------------------------------------------

@pytest.mark.parametrize("arch", list(Arch))
def test_zero_dense_is_uniform(arch):
    m = _small(arch)
    m.params["dense.W"][:] = 0
    m.params["dense.b"][:] = 0
    np.testing.assert_allclose(m.forward(np.array([2, 3, 4, 0, 0]), 3), [1 / 3] * 3, atol=1e-15)


def test_softmax_normalisation_and_shift():
    rng = np.random.default_rng(0)
    logits = rng.normal(0, 30, size=(1000, 3))
    p = softmax(logits)
    assert np.all(p > 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(softmax(logits + 123.4), p, atol=1e-12)
    assert sigmoid(0.0) == 0.5 and sigmoid(800.0) == 1.0 and sigmoid(-800.0) == 0.0


@pytest.mark.parametrize("arch", list(Arch))
def test_probabilities_sum_to_one(arch):
    rng = np.random.default_rng(1)
    for seed in range(20):
        m = _small(arch, seed=seed)
        ids, lengths, _ = _batch(rng, B=50)
        p = m.forward(ids, lengths)
        assert np.all(p > 0)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_out_of_vocab_ids():
    m = _small(Arch.LSTM)
    with pytest.raises(IndexOutOfVocab):
        m.forward(np.array([2, 99]), 2)


def test_lstm_encoder_matches_stepping():
    m = _small(Arch.LSTM, seed=4)
    ids = np.array([5, 2, 7, 0, 0])
    p = LSTMParams.from_dict(m.params, "lstm.")
    state = LSTMState.zeros(3)
    for t in range(3):
        state = lstm_step(m.params["embedding"][ids[t]], state, p)
    logits = state.h @ m.params["dense.W"] + m.params["dense.b"]
    np.testing.assert_allclose(m.logits(ids, 3), logits, atol=1e-14)


def test_gru_encoder_matches_stepping():
    m = _small(Arch.GRU, seed=4)
    ids = np.array([5, 2, 7, 3, 0])
    p = GRUParams.from_dict(m.params, "gru.")
    h = np.zeros(3)
    for t in range(4):
        h = gru_step(m.params["embedding"][ids[t]], h, p)
    np.testing.assert_allclose(m.logits(ids, 4), h @ m.params["dense.W"] + m.params["dense.b"],
                               atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(list(Arch)), st.integers(0, 2**32), st.integers(1, 6), st.integers(0, 6))
def test_pad_neutrality(arch, seed, n, extra):
    rng = np.random.default_rng(seed)
    m = _small(arch, L=12, seed=seed % 1000)
    tokens = rng.integers(2, 12, size=n)
    longer = np.concatenate([tokens, np.zeros(extra, dtype=np.int64)])
    np.testing.assert_array_equal(m.forward(tokens, n), m.forward(longer, n))
    # junk beyond the true length is ignored as well
    junk = longer.copy()
    junk[n:] = rng.integers(1, 12, size=len(junk) - n)
    np.testing.assert_array_equal(m.forward(junk, n), m.forward(longer, n))


# loss and gradients ------------------------------------------------------------------

def test_certain_prediction_has_zero_loss_and_gradients():
    m = _small(Arch.LSTM)
    m.params["dense.W"][:] = 0
    m.params["dense.b"][:] = [1000.0, 0.0, 0.0]
    loss, grads = m.loss_and_gradients(np.array([[2, 3, 0]]), np.array([2]), np.array([0]))
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads.values())


def test_uniform_prediction_loss_is_ln3():
    m = _small(Arch.GRU)
    m.params["dense.W"][:] = 0
    m.params["dense.b"][:] = 0
    loss = m.loss(np.array([[2, 3, 0]]), np.array([2]), np.array([1]))
    assert loss == pytest.approx(math.log(3), abs=1e-12)


CASES = [(Arch.LSTM, False), (Arch.LSTM, True), (Arch.GRU, False), (Arch.CNN1D, False)]


@pytest.mark.parametrize("arch, exact", CASES)
@pytest.mark.parametrize("trainable", [False, True])
def test_gradients_match_finite_differences(arch, exact, trainable):
    rng = np.random.default_rng(11)
    for seed in range(3):
        m = _small(arch, V=8, E=3, H=3, L=5, seed=seed, paper_exact_cell=exact,
                   embedding_trainable=trainable)
        ids, lengths, labels = _batch(rng, V=8, B=3, min_len=2)
        _, analytic = m.loss_and_gradients(ids, lengths, labels, clip_norm=None)
        numeric = finite_difference_gradients(m, ids, lengths, labels)
        assert set(analytic) == set(numeric)
        assert max_relative_error(analytic, numeric) < 1e-3


def test_clipping():
    rng = np.random.default_rng(0)
    g = {"a": rng.normal(0, 10, (4, 4)), "b": rng.normal(0, 10, 3)}
    clipped, norm = clip_grad_norm(g, 5.0)
    assert norm > 5.0
    assert math.sqrt(sum(float(np.sum(v * v)) for v in clipped.values())) == pytest.approx(5.0)
    small = {"a": np.full(2, 0.1)}
    assert clip_grad_norm(small, 5.0)[0]["a"] is small["a"]


# training ------------------------------------------------------------------------------

def _toy_split(rng, n=40, V=12, L=5):
    ids, lengths, _ = _batch(rng, V=V, L=L, B=n)
    labels = (ids[:, 0] % 3).astype(np.int64)
    return EncodedSplit(ids, lengths.astype(np.int64), labels)


def test_one_epoch_one_batch_is_one_step():
    rng = np.random.default_rng(0)
    data = _toy_split(rng, n=8)
    m = _small(Arch.LSTM)
    res = train(m, data, data, TrainConfig(epochs=1, batch_size=32))
    assert len(res.curve) == 1
    assert res.optimizer.steps == {n: 1 for n in m.trainable_names()}


@pytest.mark.parametrize("arch", list(Arch))
def test_training_is_deterministic(arch):
    rng = np.random.default_rng(2)
    tr, va = _toy_split(rng), _toy_split(rng)
    runs = []
    for _ in range(2):
        m = _small(arch, seed=9)
        res = train(m, tr, va, TrainConfig(epochs=3, batch_size=8, seed=5))
        runs.append((m.params, res.curve, res.best_epoch))
    for name in runs[0][0]:
        np.testing.assert_array_equal(runs[0][0][name], runs[1][0][name])
    assert runs[0][1] == runs[1][1] and runs[0][2] == runs[1][2]


def test_curve_length_and_best_snapshot():
    rng = np.random.default_rng(3)
    tr, va = _toy_split(rng), _toy_split(rng)
    res = train(_small(Arch.GRU), tr, va, TrainConfig(epochs=4, batch_size=10))
    assert [r.epoch for r in res.curve] == [1, 2, 3, 4]
    assert res.best_val_acc == max(r.val_acc for r in res.curve)
    assert res.curve[res.best_epoch - 1].val_acc == res.best_val_acc


def test_train_errors():
    rng = np.random.default_rng(0)
    data = _toy_split(rng)
    empty = data.take(np.array([], dtype=np.int64))
    with pytest.raises(EmptySplit):
        train(_small(Arch.LSTM), empty, data)
    with pytest.raises(ConfigInvalid):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigInvalid):
        TrainConfig(learning_rate=0)


def test_adam_first_step_is_lr_times_sign():
    params = {"w": np.array([1.0, -2.0])}
    Adam(lr=0.1).step(params, {"w": np.array([3.0, -0.5])})
    np.testing.assert_allclose(params["w"], [0.9, -1.9], atol=1e-7)


def test_frozen_embedding_unchanged_and_pad_row_zero():
    rng = np.random.default_rng(4)
    data = _toy_split(rng)
    m = _small(Arch.LSTM)
    emb = m.params["embedding"].copy()
    train(m, data, data, TrainConfig(epochs=2, batch_size=8))
    np.testing.assert_array_equal(m.params["embedding"], emb)
    m2 = _small(Arch.LSTM, embedding_trainable=True)
    train(m2, data, data, TrainConfig(epochs=2, batch_size=8))
    assert np.all(m2.params["embedding"][0] == 0)
    assert not np.array_equal(m2.params["embedding"][2:], emb[2:])


# parameter counting and checkpoints ----------------------------------------------------

def test_parameter_count_example():
    cfg = ModelConfig(arch=Arch.LSTM, vocab_size=10, embed_dim=8, hidden=4)
    assert count_parameters(Classifier(cfg)) == (223, 303)
    assert analytic_parameter_count(cfg) == (223, 303)
    cfg_t = ModelConfig(arch=Arch.LSTM, vocab_size=10, embed_dim=8, hidden=4, embedding_trainable=True)
    assert count_parameters(Classifier(cfg_t)) == (303, 303)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(list(Arch)), st.integers(1, 30), st.integers(1, 12), st.integers(1, 12),
       st.integers(1, 4), st.booleans())
def test_count_matches_formula(arch, V, E, H, k, trainable):
    cfg = ModelConfig(arch=arch, vocab_size=V, embed_dim=E, hidden=H, filters=H, kernel=k,
                      embedding_trainable=trainable)
    assert count_parameters(Classifier(cfg)) == analytic_parameter_count(cfg)


def test_reference_parameter_counts_unreachable():
    # no single-layer LSTM + dense config with E, H <= 400 and an integer vocab size
    # reproduces 100,227 trainable / 2,144,127 total
    hits = []
    for H in range(1, 401):
        for E in range(1, 401):
            trainable = 4 * (E * H + H * H + H) + 3 * H + 3
            if trainable == 100_227 and (2_144_127 - trainable) % E == 0:
                hits.append((E, H))
    assert hits == []


def test_checkpoint_round_trip(tmp_path):
    m = _small(Arch.CNN1D, seed=3)
    p = tmp_path / "m.npz"
    save_checkpoint(p, m, vocab_hash="abc", extra={"k": 1})
    back, meta = load_checkpoint(p)
    assert meta["format_version"] == 1 and meta["vocab_hash"] == "abc"
    assert back.config == m.config
    for name in m.params:
        np.testing.assert_array_equal(back.params[name], m.params[name])


def test_model_config_validation():
    with pytest.raises(ConfigInvalid):
        ModelConfig(n_classes=2)
    with pytest.raises(ConfigInvalid):
        ModelConfig(hidden=0)
