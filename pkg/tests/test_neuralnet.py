import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ckdmlp import neuralnet
from ckdmlp.dataio import Dataset
from ckdmlp.neuralnet import Layer, MlpModel, TrainConfig
from oracles import central_difference_grads, extended_precision_loss, scalar_forward_loss


def tiny_net(w1, b1, w2, b2):
    return MlpModel(
        [
            Layer(np.array(w1, float), np.array(b1, float).reshape(-1, 1), "relu"),
            Layer(np.array(w2, float), np.array(b2, float).reshape(-1, 1), "sigmoid"),
        ]
    )


def zero_model(hidden=(4, 3)):
    m = neuralnet.init_model(hidden, seed=0)
    for p in m.params():
        p[:] = 0.0
    return m


def random_case(seed, hidden=(4, 3), rows=8):
    rng = np.random.default_rng(seed)
    m = neuralnet.init_model(hidden, seed=seed)
    for layer in m.layers:
        layer.bias[:] = rng.normal(0, 0.1, layer.bias.shape)
    return m, rng.standard_normal((rows, 10)), rng.integers(0, 2, rows)


def test_init_shapes_and_zero_bias():
    m = neuralnet.init_model((32, 16), seed=3)
    assert [l.weights.shape for l in m.layers] == [(32, 10), (16, 32), (1, 16)]
    assert [l.activation for l in m.layers] == ["relu", "relu", "sigmoid"]
    assert all(not l.bias.any() for l in m.layers)
    for l in m.layers:
        bound = math.sqrt(6.0 / (l.in_dim + l.out_dim))
        assert np.abs(l.weights).max() <= bound


def test_init_deterministic():
    assert neuralnet.init_model((5, 4), 11) == neuralnet.init_model((5, 4), 11)
    assert neuralnet.init_model((5, 4), 11) != neuralnet.init_model((5, 4), 12)


def test_forward_zero_model_is_half():
    out = neuralnet.forward(zero_model(), np.random.default_rng(0).standard_normal((5, 10)))
    assert out.shape == (5, 1) and np.all(out == 0.5)


def test_forward_negative_relu_contributes_nothing():
    m = MlpModel(
        [
            Layer(np.array([[1.0]]), np.array([[-5.0]]), "relu"),
            Layer(np.array([[100.0]]), np.array([[0.0]]), "sigmoid"),
        ]
    )
    assert neuralnet.forward(m, np.array([[2.0]]))[0, 0] == 0.5


def test_forward_hand_evaluated():
    m = tiny_net([[1, 1]], [0], [[1]], [0])
    out = neuralnet.forward(m, np.array([[1.0, 2.0]]))[0, 0]
    assert out == pytest.approx(1 / (1 + math.exp(-3)), abs=1e-15)
    assert out == pytest.approx(0.95257, abs=5e-6)


def test_forward_rejects_non_finite_and_bad_shape():
    m = neuralnet.init_model((3, 2), 0)
    with pytest.raises(neuralnet.InputError):
        neuralnet.forward(m, np.full((1, 10), np.nan))
    with pytest.raises(ValueError):
        neuralnet.forward(m, np.ones((1, 9)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 30))
def test_forward_output_strictly_inside_unit_interval(seed, scale):
    m, x, _ = random_case(seed)
    out = neuralnet.forward(m, x * scale)
    assert np.all((out > 0) & (out < 1))
    cache, _ = neuralnet._forward_cache(m, x * scale)
    for (a, _z), layer in zip(cache[1:], m.layers[:-1]):
        assert np.all(a >= 0)


def test_bce_examples():
    assert neuralnet.bce_loss(np.full((4, 1), 0.5), [0, 1, 1, 0]) == pytest.approx(math.log(2), abs=1e-15)
    assert neuralnet.bce_loss(np.array([[1e-12], [1 - 1e-12]]), [0, 1]) < 1e-10
    assert neuralnet.bce_loss(np.array([[0.9]]), [1]) == pytest.approx(-math.log(0.9), abs=1e-15)
    with pytest.raises(ValueError):
        neuralnet.bce_loss(np.array([[0.2], [0.3]]), [1])


def test_bce_matches_scalar_oracle():
    m, x, y = random_case(4)
    layers = [(l.weights.tolist(), l.bias.tolist(), l.activation) for l in m.layers]
    got = neuralnet.bce_loss(neuralnet.forward(m, x), y)
    assert got == pytest.approx(scalar_forward_loss(layers, x, y), rel=1e-13)


def numeric_grads(m, x, y):
    params = [p.astype(np.longdouble) for p in m.params()]
    layers = [(params[2 * k], params[2 * k + 1], l.activation) for k, l in enumerate(m.layers)]
    return central_difference_grads(lambda: extended_precision_loss(layers, x, y), params, h=1e-6)


def max_relative_error(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        den = np.maximum(np.abs(a), np.abs(n))
        rel = np.divide(np.abs(a - n), den, out=np.zeros_like(den), where=den > 0)
        worst = max(worst, float(rel.max()))
    return worst


@pytest.mark.parametrize("seed", range(5))
def test_backward_matches_finite_differences(seed):
    m, x, y = random_case(seed)
    assert max_relative_error(neuralnet.backward(m, x, y), numeric_grads(m, x, y)) < 1e-5


def test_backward_shapes():
    m, x, y = random_case(0, hidden=(6, 2))
    grads = neuralnet.backward(m, x, y)
    assert [g.shape for g in grads] == [p.shape for p in m.params()]


def test_backward_zero_at_saturated_correct_prediction():
    m = tiny_net([[1.0, 0.0]], [0.0], [[100.0]], [0.0])
    grads = neuralnet.backward(m, np.array([[1.0, 0.0]]), [1])
    assert max(np.abs(g).max() for g in grads) < 1e-8


def test_backward_dead_unit_outgoing_weight_zero():
    m, x, y = random_case(2, hidden=(4, 3))
    m.layers[0].weights[1, :] = 0.0
    m.layers[0].bias[1] = -1.0
    grads = neuralnet.backward(m, x, y)
    assert np.all(grads[2][:, 1] == 0.0)


def separable(n=64, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 10))
    y = (x[:, 0] + x[:, 3] > 0).astype(int)
    return Dataset(x, y)


def test_train_zero_lr_is_identity():
    cfg = TrainConfig(epochs=1, learning_rate=0.0, seed=5, hidden_dims=(4, 3))
    model, _ = neuralnet.train(separable(), cfg)
    assert model == neuralnet.init_model((4, 3), 5)


def test_train_log_length_and_ranges():
    d = separable()
    model, log = neuralnet.train(d, TrainConfig(epochs=7, seed=1, validation=separable(20, 1)))
    assert len(log) == 7 and [r.epoch for r in log.records] == list(range(1, 8))
    for r in log.records:
        assert r.train_loss >= 0 and 0 <= r.train_accuracy <= 1
        assert r.val_loss >= 0 and 0 <= r.val_accuracy <= 1


def test_train_without_validation_leaves_fields_empty():
    _, log = neuralnet.train(separable(), TrainConfig(epochs=2))
    assert log.records[-1].val_loss is None


def test_train_deterministic():
    a = neuralnet.train(separable(), TrainConfig(epochs=5, seed=3, batch_size=7))
    b = neuralnet.train(separable(), TrainConfig(epochs=5, seed=3, batch_size=7))
    assert a[0] == b[0]
    assert a[1].records == b[1].records


def test_train_reduces_loss(synthetic_run):
    log = synthetic_run["log"]
    assert log.records[-1].train_loss < log.records[0].train_loss
    assert log.records[-1].train_accuracy >= 0.95


@pytest.mark.parametrize(
    "bad", [{"epochs": 0}, {"learning_rate": -1.0}, {"batch_size": 0}, {"hidden_dims": (0, 3)}]
)
def test_train_rejects_bad_config(bad):
    with pytest.raises(neuralnet.ConfigError):
        neuralnet.train(separable(), TrainConfig(**bad))


def test_predict_tie_and_threshold_monotonicity():
    assert neuralnet.predict(zero_model(), np.ones((3, 10))).tolist() == [1, 1, 1]
    m, x, _ = random_case(8, rows=50)
    for lo, hi in [(0.1, 0.9), (0.3, 0.31), (0.5, 0.7)]:
        p_lo, p_hi = neuralnet.predict(m, x, lo), neuralnet.predict(m, x, hi)
        assert np.all(p_hi <= p_lo)
    with pytest.raises(ValueError):
        neuralnet.predict(m, x, 1.0)


def test_save_load_round_trip(tmp_path):
    m, _, _ = random_case(6, hidden=(32, 16))
    neuralnet.save_model(m, tmp_path / "m.txt")
    assert neuralnet.load_model(tmp_path / "m.txt") == m
    lines = (tmp_path / "m.txt").read_text().splitlines()
    assert lines[0] == "ckdmlp-model v1" and lines[1] == "3" and lines[2] == "10 32 relu"


def test_load_rejects_dim_mismatch(tmp_path):
    m, _, _ = random_case(0)
    p = tmp_path / "m.txt"
    neuralnet.save_model(m, p)
    lines = p.read_text().splitlines()
    lines[2] = "10 5 relu"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(neuralnet.FormatError, match="layer 0 weights"):
        neuralnet.load_model(p)


def test_load_rejects_other_version(tmp_path):
    m, _, _ = random_case(0)
    p = tmp_path / "m.txt"
    neuralnet.save_model(m, p)
    p.write_text(p.read_text().replace("v1", "v2", 1))
    with pytest.raises(neuralnet.FormatError, match="v2.*v1"):
        neuralnet.load_model(p)


def test_load_rejects_trailing_content(tmp_path):
    m, _, _ = random_case(0)
    p = tmp_path / "m.txt"
    neuralnet.save_model(m, p)
    p.write_text(p.read_text() + "extra\n")
    with pytest.raises(neuralnet.FormatError):
        neuralnet.load_model(p)


def test_curves_round_trip(tmp_path, synthetic_run):
    neuralnet.write_curves(synthetic_run["log"], tmp_path / "c.csv")
    assert neuralnet.read_curves(tmp_path / "c.csv").records == synthetic_run["log"].records


def test_sigmoid_stays_open_at_extremes():
    s = neuralnet.sigmoid(np.array([[-1000.0, -40.0, 0.0, 40.0, 1000.0]]))
    assert np.all((s > 0) & (s < 1))
    assert s[0, 2] == 0.5
