import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import expit

from netsynth.activations import ActivationSpec
from netsynth.constructor import (
    ActivationError,
    ConstructionRequest,
    SingularDirectionsError,
    barycentric_diagnostic,
    construct,
    construct_polynomial,
    height_scaling_slope,
    projection_height,
    sample_frozen_directions,
    simplex_height_diagnostic,
    simplex_volume,
    volume_ratio_height,
)
from netsynth.grids import Box
from netsynth.monomials import MultiPoly
from netsynth.network import forward

SQUARE = Box((-1.0, -1.0), (1.0, 1.0))
UNIT = Box((0.0,), (1.0,))


def quadratic():
    return MultiPoly.from_terms(2, {(2, 0): 1.0, (1, 1): -1.0, (0, 1): 2.0})


def brute_force_error(weights, act, target, res=201):
    # independent forward pass and grid, not shared with the verifier
    t = np.linspace(-1.0, 1.0, res)
    X1, X2 = np.meshgrid(t, t, indexing="ij")
    x = np.column_stack([X1.ravel(), X2.ravel()])
    h = act(weights.W1[0] + x @ weights.W1[1:])
    out = weights.W2[0] + h @ weights.W2[1:]
    return float(np.max(np.abs(out[:, 0] - target(x[:, 0], x[:, 1]))))


# ------------------------------------------------------------------ polynomial path

@pytest.fixture(scope="module")
def logistic_report():
    return construct_polynomial(ConstructionRequest([quadratic()], SQUARE, ActivationSpec("logistic"), 1e-2,
                                                    verify_resolution=201))


def test_quadratic_logistic_uses_six_units(logistic_report):
    assert logistic_report.success
    assert logistic_report.weights.N == math.comb(2 + 2, 2) == 6
    assert np.max(logistic_report.certified_error) < 1e-2


def test_quadratic_logistic_brute_force(logistic_report):
    err = brute_force_error(logistic_report.weights, expit, lambda a, b: a * a - a * b + 2 * b)
    assert err < 1e-2
    assert err == pytest.approx(float(logistic_report.grid_error[0]), rel=1e-9, abs=1e-13)


def test_zero_sum_and_bound_invariants(logistic_report):
    rep = logistic_report
    assert rep.zero_sum_ok
    assert np.all(np.abs(rep.coefficient_sum) < 1e-8)
    assert rep.bound_ok
    assert np.all(rep.coefficient_norm >= 0)


def test_constant_target_has_zero_output_weights():
    c = MultiPoly.from_terms(2, {(0, 0): 3.0})
    rep = construct(ConstructionRequest([c], SQUARE, ActivationSpec("tanh"), 1e-2))
    assert rep.success
    assert np.all(rep.weights.W2[1:] == 0)
    assert rep.weights.W2[0, 0] == pytest.approx(3.0)
    assert float(rep.certified_error[0]) == pytest.approx(0.0, abs=1e-12)


def test_two_outputs_share_hidden_layer():
    p = quadratic()
    q = MultiPoly.from_terms(2, {(0, 2): 0.5, (1, 0): -1.0})
    rep = construct(ConstructionRequest([p, q], SQUARE, ActivationSpec("tanh"), 1e-2))
    assert rep.success
    assert rep.weights.m == 2 and rep.weights.N == 6
    assert np.all(rep.certified_error < 1e-2)


@pytest.mark.parametrize("kw", [{"small_output_weights": 1e-2}, {"large_input_norms": 20.0}])
def test_weight_constraints_met(kw):
    rep = construct(ConstructionRequest([quadratic()], SQUARE, ActivationSpec("quadratic_tanh"), 1e-2, **kw))
    assert rep.success and rep.schedule == "expanding"
    assert np.max(rep.certified_error) < 1e-2
    if "small_output_weights" in kw:
        assert rep.weights.max_output_weight < 1e-2
        assert rep.constraint_audit["small_output_weights_ok"]
    else:
        assert rep.weights.min_input_norm > 20.0
        assert rep.constraint_audit["large_input_norms_ok"]


def test_unreachable_output_weight_bound_fails_honestly():
    # |sum_j a_j tanh| <= 6 * 1e-2 cannot reach a target whose range is about 7
    rep = construct(ConstructionRequest([quadratic()], SQUARE, ActivationSpec("tanh"), 1e-2,
                                        small_output_weights=1e-2, max_k=6))
    assert rep.status == "failure"
    assert "cap" in rep.message


def test_polynomial_activation_rejected():
    linear = ActivationSpec.from_table([-1.0, 1.0], [-1.0, 1.0])
    with pytest.raises(ActivationError, match="non-polynomial"):
        construct(ConstructionRequest([quadratic()], SQUARE, linear, 1e-2))


def test_degenerate_point_domain():
    box = Box((0.2, -0.3), (0.2, -0.3))
    rep = construct(ConstructionRequest([quadratic()], box, ActivationSpec("tanh"), 1e-3))
    assert rep.success
    x = np.array([[0.2, -0.3]])
    out = forward(rep.weights, ActivationSpec("tanh"), x)
    assert out[0, 0] == pytest.approx(0.04 + 0.06 - 0.6, abs=1e-12)


def test_degree_below_target_degree_rejected():
    with pytest.raises(ValueError, match="below the target degree"):
        construct(ConstructionRequest([MultiPoly.from_terms(1, {(3,): 1.0})], UNIT, ActivationSpec("tanh"),
                                      1e-2, degree=2))


@pytest.mark.parametrize("kw", [
    {"eps": 0.0},
    {"eps": -1.0},
    {"small_output_weights": 0.0},
    {"large_input_norms": -2.0},
    {"degree": 1},
    {"frozen_random_first_layer": (0.0, 0)},
    {"frozen_random_first_layer": (1.0, 0), "small_output_weights": 1.0},
])
def test_request_validation(kw):
    base = dict(target=[quadratic()], domain=SQUARE, sigma=ActivationSpec("tanh"), eps=1e-2)
    base.update(kw)
    with pytest.raises(ValueError):
        ConstructionRequest(**base)


def test_target_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        ConstructionRequest([MultiPoly.from_terms(1, {(2,): 1.0})], SQUARE, ActivationSpec("tanh"), 1e-2)


# ------------------------------------------------------------------ continuous path

def test_lipschitz_unit_count():
    # f(x) = x on [0, 1]: omega(t) = t, so d_eps = smallest d with 1/(2d) < eps/6
    rep = construct(ConstructionRequest(lambda x: x[:, :1], UNIT, ActivationSpec("tanh"), 0.4))
    assert rep.success
    assert rep.d_eps.d == math.ceil(3 / 0.4) == 8
    assert rep.weights.N == math.comb(1 + 8, 1)


def test_continuous_sine_certified():
    rep = construct(ConstructionRequest(lambda x: np.sin(np.pi * x[:, :1]), Box((-1.0,), (1.0,)),
                                        ActivationSpec("tanh"), 0.1))
    assert rep.success
    t = np.linspace(-1, 1, 20001)[:, None]
    err = np.max(np.abs(forward(rep.weights, ActivationSpec("tanh"), t)[:, 0] - np.sin(np.pi * t[:, 0])))
    assert err < 0.1


# ------------------------------------------------------------------ random features

def test_random_features_use_frozen_directions():
    f = lambda x: np.cos(x[:, :1]) + x[:, 1:2] ** 2
    rep = construct(ConstructionRequest(f, SQUARE, ActivationSpec("tanh"), 0.05,
                                        frozen_random_first_layer=(1.0, 7)))
    assert rep.success
    N = rep.weights.N
    expected = sample_frozen_directions(2, rep.weights.N, 1.0, 7)
    assert np.array_equal(rep.weights.directions, expected[:N])
    norms = np.linalg.norm(rep.weights.directions, axis=1)
    assert np.all((norms > 1.0 - 1e-12) & (norms <= 2.0 + 1e-12))


def test_sample_frozen_directions_prefix_stable():
    a = sample_frozen_directions(3, 10, 0.5, 11)
    b = sample_frozen_directions(3, 25, 0.5, 11)
    assert np.array_equal(a, b[:10])


def test_random_features_deterministic():
    f = lambda x: np.exp(x[:, :1])
    req = ConstructionRequest(f, UNIT, ActivationSpec("tanh"), 0.05, frozen_random_first_layer=(1.0, 3))
    a, b = construct(req), construct(req)
    assert np.array_equal(a.weights.W1, b.weights.W1)
    assert np.array_equal(a.weights.W2, b.weights.W2)


def test_random_features_constant_target():
    rep = construct(ConstructionRequest(lambda x: np.full((len(x), 1), 2.0), SQUARE, ActivationSpec("tanh"),
                                        0.05, frozen_random_first_layer=(1.0, 0)))
    assert rep.success
    assert float(rep.certified_error[0]) < 1e-9


def test_random_features_singular_directions():
    with pytest.raises(SingularDirectionsError, match="singular"):
        construct(ConstructionRequest(lambda x: np.cos(x[:, :1]), SQUARE, ActivationSpec("tanh"), 0.05,
                                      frozen_random_first_layer=(1.0, 0), directions=np.ones((6, 2))))


# ------------------------------------------------------------------ simplex geometry

def test_right_triangle_heights():
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert simplex_height_diagnostic(P, 0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert simplex_height_diagnostic(P, 1) == pytest.approx(1.0, abs=1e-12)
    assert simplex_height_diagnostic(P, 2) == pytest.approx(1.0, abs=1e-12)


def test_regular_simplex_heights():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    for j in range(3):
        assert simplex_height_diagnostic(tri, j) == pytest.approx(math.sqrt(3) / 2, abs=1e-10)
    tet = np.eye(4) / math.sqrt(2)  # regular, edge 1, in R^4
    for j in range(4):
        assert simplex_height_diagnostic(tet, j) == pytest.approx(math.sqrt(2 / 3), abs=1e-10)


def test_simplex_volume_unit_cube_corner():
    assert simplex_volume(np.vstack([np.zeros(3), np.eye(3)])) == pytest.approx(1 / 6)


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_height_methods_agree(seed, K):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((K + 1, K + 1))
    if np.linalg.svd(P[1:] - P[0], compute_uv=False)[-1] < 1e-3:
        return
    for j in range(K + 1):
        h = simplex_height_diagnostic(P, j)
        assert h == pytest.approx(volume_ratio_height(P, j), rel=1e-7)
        assert h == pytest.approx(projection_height(P, j), rel=1e-7)


def test_degenerate_simplex_rejected():
    P = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(ValueError, match="degenerate"):
        simplex_height_diagnostic(P, 0)
    with pytest.raises(ValueError, match="degenerate"):
        projection_height(P, 0)


def test_height_input_checks():
    with pytest.raises(ValueError):
        simplex_height_diagnostic(np.zeros((1, 2)), 0)
    with pytest.raises(IndexError):
        simplex_height_diagnostic(np.eye(3), 5)


def test_height_scaling_slope_mixed_exponents():
    base = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) + 0.5
    slope, hs = height_scaling_slope(base, [2, 1, 1, 1], [1, 2, 4, 8, 16])
    assert slope > 1.0 + 0.1
    assert all(b > a for a, b in zip(hs, hs[1:]))


def test_height_scaling_uniform_exponent_is_linear():
    base = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]) + 0.3
    slope, _ = height_scaling_slope(base, [1, 1, 1], [1, 2, 4, 8])
    assert slope == pytest.approx(1.0, abs=1e-9)


# ------------------------------------------------------------------ barycentric diagnostic

def test_barycentric_constant_target_points_coincide():
    c = MultiPoly.from_terms(2, {(0, 0): 3.0})
    rep = construct(ConstructionRequest([c], SQUARE, ActivationSpec("quadratic_tanh"), 1e-2, schedule="expanding"))
    rows = barycentric_diagnostic(rep, range(1, 4))
    for r in rows:
        assert r.gap == pytest.approx(0.0, abs=1e-9)
        assert r.bound_ok


def test_barycentric_quadratic_gap_bounded_and_shrinks():
    p = MultiPoly.from_terms(1, {(2,): 1.0, (1,): 0.5})
    rep = construct(ConstructionRequest([p], Box((-1.0,), (1.0,)), ActivationSpec("quadratic_tanh"), 1e-2,
                                        schedule="expanding"))
    rows = [r for r in barycentric_diagnostic(rep, range(2, 9)) if math.isfinite(r.gap)]
    assert len(rows) >= 4
    assert all(r.bound_ok for r in rows)
    gaps = [r.gap for r in rows]
    assert gaps[-1] < gaps[0]


def test_barycentric_requires_polynomial_report():
    rep = construct(ConstructionRequest(lambda x: np.exp(x[:, :1]), UNIT, ActivationSpec("tanh"), 0.05,
                                        frozen_random_first_layer=(1.0, 0)))
    with pytest.raises(ValueError, match="polynomial-path"):
        barycentric_diagnostic(rep, [1])
