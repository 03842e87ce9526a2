from math import comb, factorial, sqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import hermite_e

from hypermoment.hermite import (HermiteRootTable, InadmissibleState, char_poly, hermite_all,
                                 hermite_eval, hermite_roots, multiplicity_exponent)


def test_eval_examples():
    assert hermite_eval(0, 7.3) == 1.0
    assert hermite_eval(3, 2.0) == 2.0
    assert hermite_eval(4, 0.0) == 3.0


@given(st.integers(0, 12), st.floats(-5, 5))
def test_eval_matches_numpy_basis(k, x):
    ref = hermite_e.hermeval(x, [0] * k + [1])
    assert hermite_eval(k, x) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_eval_matches_rodrigues():
    # He_k(x) = (-1)^k e^{x^2/2} d^k/dx^k e^{-x^2/2}, derivative of the Gaussian via numpy
    for k in range(7):
        for x in (-1.3, 0.4, 2.1):
            g = np.polynomial.Polynomial([1.0])
            # d/dx (P e^{-x^2/2}) = (P' - x P) e^{-x^2/2}
            for _ in range(k):
                g = g.deriv() - np.polynomial.Polynomial([0, 1]) * g
            assert hermite_eval(k, x) == pytest.approx((-1) ** k * g(x), rel=1e-8)


def test_all_stack():
    x = np.linspace(-2, 2, 5)
    H = hermite_all(5, x)
    for k in range(6):
        np.testing.assert_allclose(H[k], hermite_eval(k, x))


def test_root_examples():
    np.testing.assert_array_equal(hermite_roots(1), [0.0])
    np.testing.assert_allclose(hermite_roots(2), [-1, 1], atol=1e-15)
    a, b = sqrt(3 - sqrt(6)), sqrt(3 + sqrt(6))
    np.testing.assert_allclose(hermite_roots(4), [-b, -a, a, b], rtol=1e-14)
    np.testing.assert_allclose(hermite_roots(4)[2:], [0.741964, 2.334414], atol=1e-6)


@pytest.mark.parametrize("k", range(1, 22))
def test_root_properties(k):
    r = hermite_roots(k)
    assert len(r) == k
    assert np.all(np.diff(r) > 0)
    np.testing.assert_array_equal(r, -r[::-1])
    assert (0.0 in r) == (k % 2 == 1)
    assert np.max(np.abs(hermite_eval(k, r))) <= 1e-12 * factorial(k)


@pytest.mark.parametrize("k", range(2, 12))
def test_roots_match_polynomial_solver(k):
    # independent oracle: companion-matrix roots of the Hermite_e series
    ref = np.sort(hermite_e.hermeroots([0] * k + [1]).real)
    np.testing.assert_allclose(hermite_roots(k), ref, atol=1e-9)


def test_root_table():
    t = HermiteRootTable(5)
    assert t.root(4, 4) == pytest.approx(sqrt(3 + sqrt(6)))
    assert t.max_root(3) == pytest.approx(sqrt(3))
    with pytest.raises(KeyError):
        t[6]


def test_char_poly_examples():
    assert char_poly(2, 3, 0.0, 1.0, 0.0)[0] == 0.0
    assert char_poly(2, 3, 0.0, 1.0, 2.0)[0] == pytest.approx(-60.0)
    assert [multiplicity_exponent(3, 3, k) for k in (1, 2, 3, 4)] == [4, 3, 2, 1]


@pytest.mark.parametrize("D,M", [(1, 3), (2, 3), (2, 6), (3, 3), (3, 6)])
def test_char_poly_degree(D, M):
    assert sum(k * multiplicity_exponent(D, M, k) for k in range(1, M + 2)) == comb(M + D, D)


def test_char_poly_log_form():
    v, s, lg = char_poly(3, 6, 0.3, 2.0, 5.0)
    assert s * np.exp(lg) == pytest.approx(v, rel=1e-12)
    with pytest.raises(InadmissibleState):
        char_poly(2, 3, 0.0, -1.0, 0.0)
