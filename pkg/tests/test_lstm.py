import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from medalcast import lstm
from medalcast.errors import DegenerateError, NumericError, ShapeError, StateError, TrainingError
from medalcast.lstm import LstmParams, LstmState, TrainConfig


def params(seed, D=6, H=4, O=3, scale=0.5):
    return LstmParams.init(D, H, O, np.random.default_rng(seed), init_scale=scale, forget_bias=0.3)


def scalar_step(p, h, c, x):
    """Straight-line reference: one loop per gate unit, no vectorization."""
    H, D, O = p.hidden_dim, p.input_dim, p.output_dim
    z = list(h) + list(x)
    def pre(Wg, bg, k):
        return bg[k] + sum(Wg[k, j] * z[j] for j in range(H + D))
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    h_new, c_new = [], []
    for k in range(H):
        f = sig(pre(p.W_f, p.b_f, k))
        i = sig(pre(p.W_i, p.b_i, k))
        g = math.tanh(pre(p.W_c, p.b_c, k))
        o = sig(pre(p.W_o, p.b_o, k))
        ck = f * c[k] + i * g
        c_new.append(ck)
        h_new.append(o * math.tanh(ck))
    y = [p.b_y[m] + sum(p.W_y[m, k] * h_new[k] for k in range(H)) for m in range(O)]
    return np.array(h_new), np.array(c_new), np.array(y)


def test_zero_weights_give_half_gates():
    p = LstmParams.zeros(5, 3, 2)
    g = lstm.gates(p, LstmState.zeros(3), np.arange(5.0))
    for k in ("f", "i", "o"):
        assert np.array_equal(g[k], np.full(3, 0.5))
    assert not g["c_tilde"].any() and not g["c"].any()
    state, y = lstm.forward_step(p, LstmState.zeros(3), np.arange(5.0))
    assert not state.h.any() and not y.any()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_forward_step_matches_scalar_oracle(seed):
    p = params(seed)
    rng = np.random.default_rng(100 + seed)
    h, c, x = rng.uniform(-0.9, 0.9, 4), rng.normal(size=4), rng.normal(size=6)
    state, y = lstm.forward_step(p, LstmState(h, c), x)
    h_ref, c_ref, y_ref = scalar_step(p, h, c, x)
    assert np.abs(state.h - h_ref).max() <= 1e-12
    assert np.abs(state.c - c_ref).max() <= 1e-12
    assert np.abs(y - y_ref).max() <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), arrays(np.float64, 6, elements=st.floats(-50, 50)))
def test_gates_bounded(seed, x):
    p = params(seed, scale=2.0)
    state = LstmState.zeros(4)
    for _ in range(3):
        g = lstm.gates(p, state, x)
        for k in ("f", "i", "o"):
            assert np.all((g[k] >= 0) & (g[k] <= 1))
        assert np.all(np.abs(g["c_tilde"]) <= 1)
        state, _ = lstm.forward_step(p, state, x)
        assert np.all(np.abs(state.h) <= 1)


def test_forward_errors():
    p = params(0)
    with pytest.raises(ShapeError):
        lstm.forward_step(p, LstmState.zeros(4), np.zeros(5))
    with pytest.raises(NumericError):
        lstm.forward_step(p, LstmState.zeros(4), np.array([np.nan] * 6))
    with pytest.raises(ShapeError):
        lstm.forward_sequence(p, np.zeros((0, 6)))


def test_sequence_threads_state():
    p = params(3)
    X = np.random.default_rng(4).normal(size=(5, 6))
    out = lstm.forward_sequence(p, X)
    assert out.shape == (5, 3)
    state = LstmState.zeros(4)
    for t in range(5):
        state, y = lstm.forward_step(p, state, X[t])
        assert np.abs(y - out[t]).max() <= 1e-13
    assert np.array_equal(lstm.forward_sequence(p, X[:1])[0], lstm.forward_step(p, LstmState.zeros(4), X[0])[1])


def test_repeated_input_converges():
    p = params(5, scale=0.3)
    X = np.tile(np.random.default_rng(6).normal(size=6), (40, 1))
    steps = np.linalg.norm(np.diff(lstm.forward_sequence(p, X), axis=0), axis=1)
    assert steps[-1] < steps[5] and steps[-1] < 1e-6


def test_metric_hand_example():
    A, B = [[1, 2], [3, 4]], [[1, 3], [3, 6]]
    assert lstm.loss_mae(A, B) == pytest.approx(0.75, abs=1e-6)
    assert lstm.loss_mse(A, B) == pytest.approx(1.25, abs=1e-6)
    assert lstm.loss_rmse(A, B) == pytest.approx(1.118034, abs=1e-6)
    assert lstm.loss_mae(A, A) == lstm.loss_mse(A, A) == lstm.loss_rmse(A, A) == 0.0


def test_metric_errors():
    with pytest.raises(ShapeError):
        lstm.loss_mse([[1, 2]], [[1, 2, 3]])
    with pytest.raises(DegenerateError):
        lstm.loss_mae(np.zeros((0, 2)), np.zeros((0, 2)))


@settings(max_examples=50)
@given(arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)), arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)))
def test_metric_identities(A, B):
    mse = lstm.loss_mse(A, B)
    assert abs(lstm.loss_rmse(A, B) ** 2 - mse) <= 1e-12 * max(1.0, mse)
    assert lstm.loss_mae(A, B) <= lstm.loss_rmse(A, B) * (1 + 1e-12) + 1e-12
    assert lstm.loss_mse(B, A) == mse


def toy(seed, T=3, D=6, O=3):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(T, D)), rng.normal(size=(T, O))


def numeric_grad(p, X, Y, eps=1e-5):
    out = {}
    for name, arr in p.arrays().items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = lstm.loss_mse(lstm.forward_sequence(p, X), Y)
            arr[idx] = old - eps
            down = lstm.loss_mse(lstm.forward_sequence(p, X), Y)
            arr[idx] = old
            g[idx] = (up - down) / (2 * eps)
        out[name] = g
    return out


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_check(seed):
    p = params(seed)
    X, Y = toy(seed)
    analytic = lstm.backward(p, X, Y).arrays()
    numeric = numeric_grad(p, X, Y)
    for name in analytic:
        rel = np.abs(analytic[name] - numeric[name]) / (np.abs(analytic[name]) + 1e-8)
        assert rel.max() < 1e-4, name


def test_zero_loss_gives_zero_gradients():
    p = params(7)
    X, _ = toy(7)
    g = lstm.backward(p, X, lstm.forward_sequence(p, X))
    assert g.loss == 0.0
    assert all(np.abs(v).max() <= 1e-10 for v in g.arrays().values())


def test_gradients_linear_in_loss_scale():
    p = params(8)
    X, Y = toy(8)
    g1, g2 = lstm.backward(p, X, Y), lstm.backward(p, X, Y, loss_scale=2.0)
    for k in g1.arrays():
        assert np.allclose(g2.arrays()[k], 2 * g1.arrays()[k], rtol=1e-12, atol=0)


def test_backward_target_shape():
    with pytest.raises(ShapeError):
        lstm.backward(params(0), np.zeros((3, 6)), np.zeros((2, 3)))


def test_train_is_deterministic_and_decreases_loss():
    data = [toy(s, T=4) for s in range(3)]
    cfg = TrainConfig(epochs=60, learning_rate=0.1, hidden_dim=8, seed=3)
    a, b = lstm.train(data, cfg), lstm.train(data, cfg)
    assert a.losses == b.losses
    for k in a.params.arrays():
        assert np.array_equal(a.params.arrays()[k], b.params.arrays()[k])
    assert a.losses[-1] <= a.losses[0]
    assert a.params.trained


def test_train_divergence_reports_epoch():
    X, Y = toy(0)
    with pytest.raises(TrainingError) as info:
        lstm.train([(X, Y * 1e308)], TrainConfig(epochs=5, hidden_dim=4))
    assert info.value.epoch == 0


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)


def test_training_beats_constant_predictor():
    rng = np.random.default_rng(1)
    data = []
    for _ in range(4):
        X = rng.normal(size=(5, 6))
        data.append((X, np.tanh(X[:, :3])))
    res = lstm.train(data, TrainConfig(epochs=300, hidden_dim=8, learning_rate=0.5))
    Ys = np.vstack([y for _, y in data])
    baseline = lstm.loss_rmse(Ys, np.broadcast_to(Ys.mean(axis=0), Ys.shape))
    fitted = np.mean([lstm.loss_rmse(y, lstm.forward_sequence(res.params, x)) for x, y in data])
    assert fitted < baseline


def test_predict_next():
    p = params(2, D=10, O=5)
    with pytest.raises(StateError):
        lstm.predict_next(p, [np.zeros((2, 5))])
    p.trained = True
    states = [np.random.default_rng(s).normal(size=(2, 5)) for s in range(3)]
    out = lstm.predict_next(p, states)
    assert out.shape == (5,)
    assert np.array_equal(out, lstm.forward_sequence(p, np.array([s.ravel() for s in states]))[-1])


def test_params_json_round_trip(tmp_path):
    p = params(4)
    p.trained = True
    p.save(tmp_path / "m.json")
    q = LstmParams.load(tmp_path / "m.json")
    assert q.trained and all(np.array_equal(p.arrays()[k], q.arrays()[k]) for k in p.arrays())


def test_save_trace(tmp_path):
    lstm.save_trace([0.5, 0.25], tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines() == ["epoch,mse", "0,0.5", "1,0.25"]
