import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netsynth.monomials import (MultiPoly, colex_less, enumerate_basis, eval_poly, factorial_product,
                                multinomial, recenter)


def test_univariate_basis():
    b = enumerate_basis(1, 2)
    assert b.indices == ((0,), (1,), (2,))


def test_bivariate_colex_order():
    # 1, x1, x1^2, x2, x1 x2, x2^2
    assert enumerate_basis(2, 2).indices == ((0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2))


def test_trivariate_length():
    assert len(enumerate_basis(3, 2)) == 10


def test_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        enumerate_basis(0, 2)
    with pytest.raises(ValueError):
        enumerate_basis(2, -1)


@pytest.mark.parametrize("n", range(1, 5))
@pytest.mark.parametrize("d", range(0, 7))
def test_basis_counts(n, d):
    b = enumerate_basis(n, d)
    assert len(b) == math.comb(n + d, d)
    assert b.indices[0] == (0,) * n
    assert all(colex_less(a, c) for a, c in zip(b.indices, b.indices[1:]))
    # degree of the k-th element (0-based) never exceeds k
    assert all(sum(a) <= k for k, a in enumerate(b.indices))


def test_colex_compares_last_coordinate_first():
    assert colex_less((5, 0), (0, 1))
    assert not colex_less((0, 1), (5, 0))
    assert colex_less((1, 1), (0, 2))


def test_multinomial_and_factorials():
    assert multinomial((2, 1)) == 3
    assert multinomial((1, 1, 1)) == 6
    assert factorial_product((2, 3)) == 12


def test_constant_and_identity_evaluation():
    p = MultiPoly.constant(2, 5.0, d=2)
    assert eval_poly(p, [0.3, -7.0]) == 5.0
    q = MultiPoly(enumerate_basis(1, 2), np.zeros(1), np.array([0.0, 1.0, 0.0]))
    assert eval_poly(q, [3.0]) == 3.0


def test_shifted_centre_evaluation():
    p = MultiPoly.from_terms(2, {(2, 0): 1.0, (1, 1): -1.0})
    shifted = recenter(p, [1.0, 1.0])
    assert shifted.center.tolist() == [1.0, 1.0]
    assert eval_poly(shifted, [2.0, 3.0]) == pytest.approx(-2.0, abs=1e-14)


def test_recenter_identity_polynomial():
    p = MultiPoly.from_terms(1, {(1,): 1.0})
    q = recenter(p, [1.0])
    assert q.coeffs.tolist() == [1.0, 1.0]


def test_recenter_constant_keeps_coeffs():
    p = MultiPoly.constant(3, 2.5, d=2)
    assert np.array_equal(recenter(p, [1.0, -2.0, 0.5]).coeffs, p.coeffs)


def test_dimension_mismatch():
    p = MultiPoly.from_terms(2, {(1, 0): 1.0})
    with pytest.raises(ValueError):
        eval_poly(p, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        recenter(p, [1.0])


def test_degree_and_nu_hat():
    p = MultiPoly.from_terms(2, {(0, 0): 4.0, (1, 1): 2.0}, d=3)
    assert p.degree == 2
    assert len(p.nu_hat) == len(p.basis) - 1
    assert p.with_degree(2).terms() == {(0, 0): 4.0, (1, 1): 2.0}
    with pytest.raises(ValueError):
        p.with_degree(1)


def test_derivative():
    p = MultiPoly.from_terms(2, {(2, 1): 3.0, (0, 2): 1.0})
    assert p.derivative((1, 1)).terms() == {(1, 0): 6.0}
    assert p.derivative((0, 2)).terms() == {(0, 0): 2.0}
    assert p.derivative((2, 0)).terms() == {(0, 1): 6.0}


def test_random_recenter_on_grid():
    rng = np.random.default_rng(3)
    basis = enumerate_basis(2, 3)
    p = MultiPoly(basis, np.zeros(2), rng.normal(size=len(basis)))
    q = recenter(p, [0.7, -1.3])
    g = np.stack(np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5)), -1).reshape(-1, 2)
    a, b = eval_poly(p, g), eval_poly(q, g)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


coeff = st.floats(-3, 3, allow_nan=False)
centre = st.floats(-2, 2, allow_nan=False)


@given(st.integers(1, 3), st.integers(0, 3), st.data())
def test_recenter_round_trip(n, d, data):
    basis = enumerate_basis(n, d)
    c = np.array(data.draw(st.lists(coeff, min_size=len(basis), max_size=len(basis))))
    x0 = np.array(data.draw(st.lists(centre, min_size=n, max_size=n)))
    x1 = np.array(data.draw(st.lists(centre, min_size=n, max_size=n)))
    p = MultiPoly(basis, x0, c)
    back = recenter(recenter(p, x1), x0)
    scale = max(1.0, float(np.max(np.abs(c))))
    assert np.max(np.abs(back.coeffs - c)) <= 1e-10 * scale * 10 ** d
    pts = np.array(data.draw(st.lists(st.lists(centre, min_size=n, max_size=n), min_size=1, max_size=4)))
    assert np.allclose(eval_poly(recenter(p, x1), pts), eval_poly(p, pts), rtol=1e-9, atol=1e-9 * 10 ** d)
