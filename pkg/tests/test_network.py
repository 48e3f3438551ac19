import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netsynth.activations import ActivationSpec
from netsynth.network import (FormatError, NetworkWeights, eliminate_output_bias, forward, from_json,
                              hidden_activations, to_json)

TANH = ActivationSpec("tanh")
IDENT = ActivationSpec.from_table([-10.0, 10.0], [-10.0, 10.0])


def test_shapes_and_accessors():
    W = NetworkWeights(np.arange(6.0).reshape(2, 3), np.ones((4, 2)))
    assert (W.n, W.N, W.m) == (1, 3, 2)
    assert W.direction(1).tolist() == [4.0]
    assert W.directions.shape == (3, 1)
    with pytest.raises(ValueError):
        NetworkWeights(np.ones((2, 3)), np.ones((3, 1)))
    with pytest.raises(ValueError):
        W.W1[0, 0] = 5.0


def test_zero_network():
    W = NetworkWeights(np.zeros((3, 4)), np.zeros((5, 2)))
    assert forward(W, TANH, [0.3, -0.2]).tolist() == [0.0, 0.0]


def test_identity_wiring():
    W = NetworkWeights([[0.0], [1.0]], [[0.0], [1.0]])
    x = np.linspace(-2, 2, 9)[:, None]
    assert np.array_equal(forward(W, TANH, x)[:, 0], np.tanh(x[:, 0]))


def test_two_unit_linear_identity():
    x = np.array([[-1.0], [0.25], [3.0]])
    # 2 sigma(x) - sigma(2x) vanishes for sigma(y) = y
    W = NetworkWeights([[0.0, 0.0], [1.0, 2.0]], [[0.0], [2.0], [-1.0]])
    assert np.allclose(forward(W, IDENT, x)[:, 0], 0.0)
    # 3 sigma(x) - sigma(2x) = x
    W = NetworkWeights([[0.0, 0.0], [1.0, 2.0]], [[0.0], [3.0], [-1.0]])
    assert np.allclose(forward(W, IDENT, x)[:, 0], x[:, 0])


def test_dimension_mismatch():
    W = NetworkWeights(np.ones((3, 2)), np.ones((3, 1)))
    with pytest.raises(ValueError):
        forward(W, TANH, [1.0])


def test_compensated_matches():
    rng = np.random.default_rng(0)
    W = NetworkWeights(rng.normal(size=(3, 50)), rng.normal(size=(51, 2)))
    x = rng.normal(size=(5, 2))
    assert np.allclose(forward(W, TANH, x), forward(W, TANH, x, compensated=True), rtol=1e-13, atol=1e-13)
    assert hidden_activations(W, TANH, x).shape == (5, 50)


def test_bias_elimination_examples():
    W = NetworkWeights([[0.0], [1.0]], [[3.0], [1.0]])
    s = ActivationSpec.from_table([-1.0, 1.0], [0.0, 1.0])  # sigma(0) = 0.5
    W2 = eliminate_output_bias(W, s, 0.0)
    assert W2.W2[-1, 0] == 6.0 and W2.output_biases.tolist() == [0.0]
    assert W2.W1[:, -1].tolist() == [0.0, 0.0]
    Z = eliminate_output_bias(NetworkWeights([[0.0], [1.0]], [[0.0], [1.0]]), TANH, 1.0)
    assert Z.W2[-1].tolist() == [0.0]
    with pytest.raises(ValueError):
        eliminate_output_bias(W, TANH, 0.0)


@given(st.integers(1, 3), st.integers(1, 8), st.integers(1, 3), st.integers(0, 2 ** 31),
       st.sampled_from(["tanh", "logistic", "softplus"]))
def test_bias_elimination_preserves_function(n, N, m, seed, kind):
    rng = np.random.default_rng(seed)
    s = ActivationSpec(kind)
    W = NetworkWeights(rng.normal(size=(n + 1, N)), rng.normal(size=(N + 1, m)), kind)
    y0 = 0.7
    T = eliminate_output_bias(W, s, y0)
    x = rng.uniform(-2, 2, (50, n))
    a, b = forward(W, s, x), forward(T, s, x)
    assert T.N == N + 1 and not np.any(T.output_biases)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


@given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(-3, 3))
def test_forward_affine_in_output_layer(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    W1 = rng.normal(size=(3, 5))
    A, B = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    x = rng.normal(size=(7, 2))
    mix = forward(NetworkWeights(W1, alpha * A + beta * B), TANH, x)
    sep = alpha * forward(NetworkWeights(W1, A), TANH, x) + beta * forward(NetworkWeights(W1, B), TANH, x)
    assert np.allclose(mix, sep, rtol=1e-12, atol=1e-12 * (1 + abs(alpha) + abs(beta)) * 10)


def test_json_round_trip_exact():
    rng = np.random.default_rng(2)
    W = NetworkWeights(rng.normal(size=(3, 4)), rng.normal(size=(5, 2)), "tanh")
    text = to_json(W, TANH, {"note": "x"})
    back, sigma, meta = from_json(text)
    assert np.array_equal(back.W1, W.W1) and np.array_equal(back.W2, W.W2)
    assert sigma == TANH and meta == {"note": "x"}
    doc = json.loads(text)
    assert set(doc) >= {"version", "n", "m", "N", "sigma_kind", "W1", "W2"}


def test_json_table_sigma():
    s = ActivationSpec.from_table([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    W = NetworkWeights(np.ones((2, 1)), np.ones((2, 1)), "table")
    _, back, _ = from_json(to_json(W, s))
    assert np.array_equal(back.table, s.table)


def test_json_errors():
    W = NetworkWeights(np.ones((2, 1)), np.ones((2, 1)))
    doc = json.loads(to_json(W))
    with pytest.raises(FormatError):
        from_json("{not json")
    with pytest.raises(FormatError):
        from_json(json.dumps({**doc, "version": 2}))
    with pytest.raises(FormatError):
        from_json(json.dumps({**doc, "N": 3}))
    with pytest.raises(FormatError):
        from_json(json.dumps({k: v for k, v in doc.items() if k != "W2"}))
