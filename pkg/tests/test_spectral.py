from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import null_space

from hypermoment import indexing as ix
from hypermoment.assembly import assemble_grad_1d, assemble_regularized_1d, scaled_matrix
from hypermoment.hermite import char_poly, hermite_roots
from hypermoment.spectral import (analytic_eigenvalues, analytic_eigenvector, analytic_spectrum,
                                  breakdown_charpoly, breakdown_roots, breakdown_state,
                                  charpoly_logdet, class_count, class_of, class_parameter_vector,
                                  classes, closure_residual, decompose, eigen_residuals,
                                  eigenbasis, hyperbolicity_report, match_multisets, omega_matrix,
                                  parameter_matrix, printed_b22, printed_b22_inverse,
                                  printed_parameter_head, scaled_eigenvector, second_block_slots,
                                  spectrum_mismatch)
from hypermoment.state import make_state, maxwellian, random_state
from strategies import states


def test_eigenvalue_examples():
    s = maxwellian(2, 3)
    ref = [0.0, -1, 1, -sqrt(3), 0, sqrt(3), -sqrt(3 + sqrt(6)), -sqrt(3 - sqrt(6)),
           sqrt(3 - sqrt(6)), sqrt(3 + sqrt(6))]
    ev = analytic_eigenvalues(s)
    assert len(ev) == 10 and all(m == 1 for _, m in ev)
    assert match_multisets([l for l, _ in ev], ref) < 1e-14
    t = maxwellian(2, 3, u=(5.0, 0.0), theta=4.0)
    np.testing.assert_allclose(analytic_spectrum(t), np.sort(5 + 2 * np.array(ref)), atol=1e-14)
    assert len(analytic_spectrum(maxwellian(3, 3))) == 20


def test_multiplicities_d3():
    ev = analytic_eigenvalues(maxwellian(3, 3))
    by_k, pos = {}, 0
    for k in range(1, 5):
        by_k[k] = {m for _, m in ev[pos:pos + k]}
        pos += k
    assert by_k == {1: {4}, 2: {3}, 3: {2}, 4: {1}}


def test_classes():
    assert class_count(2, 3) == 4 and class_count(3, 3) == 10
    c = class_of(3, 4, 1)
    assert c.hat_alpha == (0, 0) and c.k == 5
    assert [c.k for c in classes(2, 3)] == [4, 3, 2, 1]
    with pytest.raises(ValueError):
        class_of(2, 3, 5)


def test_omega_algebra():
    for D in (2, 3, 4):
        Om = omega_matrix(D)
        np.testing.assert_allclose(Om @ Om, (D - 1) * Om)
        np.testing.assert_allclose(printed_b22(D) @ printed_b22_inverse(D), np.eye(len(Om)), atol=1e-15)


@pytest.mark.parametrize("D,M", [(2, 3), (2, 5), (3, 3), (3, 4)])
def test_b_structure(D, M):
    s = random_state(D, M, 2)
    C = hermite_roots(M + 1)[-1]
    B = parameter_matrix(s, C)
    n2 = D * (D + 1) // 2
    np.testing.assert_allclose(np.diag(B), 1.0, atol=1e-13)
    assert np.abs(np.triu(B, 1)).max() < 1e-13
    for k in second_block_slots(D):
        assert B[k, 0] == pytest.approx(-0.5, abs=1e-13)
    np.testing.assert_allclose(B[D:n2, D:n2], np.eye(n2 - D), atol=1e-13)


def test_parameter_vector_examples():
    s = maxwellian(2, 3)
    C = hermite_roots(4)[-1]
    v = class_parameter_vector(s, 1, C)
    assert v[0] == 1.0 and v[2] == 0.5
    np.testing.assert_array_equal(class_parameter_vector(s, 3, C)[:3], [0, 0, 1])
    np.testing.assert_array_equal(class_parameter_vector(s, 2, C)[:3], [0, 1, 0])


@pytest.mark.xfail(strict=True, reason="printed v_(2e2) = C^2/(2D) - 1/2 does not seed an eigenvector")
def test_printed_parameter_vector_slot():
    s = maxwellian(2, 3)
    C = hermite_roots(4)[-1]
    v = class_parameter_vector(s, 1, C)
    assert v[2] == pytest.approx(C * C / 4 - 0.5)


@pytest.mark.parametrize("D,M,seed", [(2, 3, 0), (2, 4, 1), (3, 3, 2), (3, 4, 3)])
def test_parameter_vector_null_space_oracle(D, M, seed):
    """The class-1 seed equals the alpha_1 = 0 part of the numeric null vector of A~ - C."""
    s = random_state(D, M, seed)
    _, At = scaled_matrix(s)
    C = hermite_roots(M + 1)[-1]
    ns = null_space(At.data - C * np.eye(s.N), rcond=1e-10)
    assert ns.shape[1] == 1
    r = ns[:, 0] / ns[0, 0]
    pos = ix.position_map(D, M)
    v = class_parameter_vector(s, 1, C)
    for j, h in enumerate(ix.indices_upto(D - 1, M)):
        assert r[pos[(0,) + h]] == pytest.approx(v[j], abs=1e-8)
    # the printed head does not reproduce it
    head = printed_parameter_head(D, 1, C)
    assert abs(head[second_block_slots(D)[0]] - v[second_block_slots(D)[0]]) > 0.1


@pytest.mark.parametrize("D,M", [(2, 3), (2, 6), (3, 3), (3, 5)])
def test_eigen_residuals(D, M):
    for seed in range(3):
        s = random_state(D, M, seed)
        assert eigen_residuals(s).max() <= 1e-9


@settings(max_examples=25)
@given(states(D=st.sampled_from([2, 3]), M=st.integers(3, 5)))
def test_spectrum_matches_numeric(s):
    dist, scale = spectrum_mismatch(s)
    assert dist <= 1e-8 * scale


def test_eigenvector_examples():
    s = maxwellian(2, 3)
    lam, r = analytic_eigenvector(s, class_of(2, 3, 1), 1)
    A = assemble_regularized_1d(s).data
    assert np.linalg.norm(A @ r - lam * r) <= 1e-9 * np.linalg.norm(r)
    s = random_state(2, 3, 4)
    lam, r = analytic_eigenvector(s, class_of(2, 3, 4), 1)     # hat (3), k = 1
    support = {ix.indices_upto(2, 3)[i] for i in np.flatnonzero(np.abs(r) > 1e-14)}
    assert support == {(0, 3)}
    for cls in classes(2, 3):
        C, rs = scaled_eigenvector(s, cls, 1)
        assert rs[0] == pytest.approx(class_parameter_vector(s, cls.j, C)[0])
    with pytest.raises(ValueError):
        analytic_eigenvector(s, class_of(2, 3, 4), 2)


@pytest.mark.parametrize("D,M", [(2, 4), (3, 3)])
def test_closure_conditions(D, M):
    s = random_state(D, M, 5)
    for p in decompose(s).pairs:
        C, r = scaled_eigenvector(s, p.cls, p.i)
        assert np.abs(closure_residual(s, r, C)).max() <= 1e-10


@pytest.mark.parametrize("D,M", [(2, 3), (2, 5), (3, 3), (3, 4)])
def test_eigenbasis_rank(D, M):
    s = random_state(D, M, 6, scale=0.05)
    sv = np.linalg.svd(eigenbasis(s), compute_uv=False)
    assert sv[-1] / sv[0] > 1e-8
    assert np.linalg.matrix_rank(eigenbasis(maxwellian(D, M))) == ix.count(D, M)


def test_eigenbasis_rank_larger_perturbation():
    s = random_state(2, 4, 7, scale=0.1)
    sv = np.linalg.svd(eigenbasis(s), compute_uv=False)
    assert sv[-1] / sv[0] > 1e-6


@pytest.mark.parametrize("D,M", [(2, 3), (3, 5)])
def test_charpoly_identity(D, M):
    s = random_state(D, M, 8)
    A = assemble_regularized_1d(s).data
    for lam in s.u[0] + sqrt(s.theta) * np.random.default_rng(0).uniform(-4, 4, 20):
        sg, ld = charpoly_logdet(A, lam)
        _, sg2, lp = char_poly(D, M, s.u[0], s.theta, lam)
        assert sg == sg2 and abs(np.expm1(ld - lp)) <= 1e-8


def test_hyperbolicity_report():
    assert hyperbolicity_report(np.zeros((3, 3))).hyperbolic
    rep = hyperbolicity_report(assemble_grad_1d(breakdown_state(2, 3, 1.0)))
    assert not rep.hyperbolic and rep.max_imag > 1e-4 and rep.witness
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = random_state(2, 3, rng)
        assert hyperbolicity_report(assemble_regularized_1d(s)).hyperbolic
    jordan = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert not hyperbolicity_report(jordan).hyperbolic
    with pytest.raises(ValueError):
        hyperbolicity_report(np.zeros((2, 3)))


@pytest.mark.parametrize("M", [3, 4, 5, 6])
def test_breakdown_factorization(M):
    s = breakdown_state(2, M, 0.3, rho=2.0, u=(0.4, 0.1), theta=1.3)
    A = assemble_grad_1d(s).data
    for lam in np.linspace(-3, 3, 20):
        d = np.linalg.det(lam * np.eye(len(A)) - A)
        assert breakdown_charpoly(M, 0.4, 1.3, 0.3, lam, rho=2.0) == pytest.approx(d, rel=1e-8)


@pytest.mark.parametrize("M", [4, 6])
def test_printed_breakdown_factorization_even_m(M):
    s = breakdown_state(2, M, 0.3)
    A = assemble_grad_1d(s).data
    for lam in np.linspace(-3, 3, 7):
        d = np.linalg.det(lam * np.eye(len(A)) - A)
        assert breakdown_charpoly(M, 0.0, 1.0, 0.3, lam, printed=True) == pytest.approx(d, rel=1e-8)


@pytest.mark.xfail(strict=True, reason="printed sign (-1)^(M-1) is wrong for odd M")
def test_printed_breakdown_factorization_odd_m():
    s = breakdown_state(2, 3, 0.3)
    A = assemble_grad_1d(s).data
    d = np.linalg.det(0.7 * np.eye(len(A)) - A)
    assert breakdown_charpoly(3, 0.0, 1.0, 0.3, 0.7, printed=True) == pytest.approx(d, rel=1e-8)


def test_breakdown_roots_oracle():
    # f = 1, M = 3: He_4(x) - 24 x has a complex pair; compare with the numeric spectrum of A_3
    r = breakdown_roots(3, 1.0)
    assert np.abs(r.imag).max() > 1e-4
    num = np.linalg.eigvals(assemble_grad_1d(breakdown_state(2, 3, 1.0)).data)
    for z in r[np.abs(r.imag) > 1e-4]:
        assert np.min(np.abs(num - z)) < 1e-8
    # quartic discriminant of x^4 - 6x^2 - 24x + 3 is negative: exactly two real roots
    a, b, c, d, e = 1.0, 0.0, -6.0, -24.0, 3.0
    disc = (256 * a**3 * e**3 - 192 * a**2 * b * d * e**2 - 128 * a**2 * c**2 * e**2
            + 144 * a**2 * c * d**2 * e - 27 * a**2 * d**4 + 144 * a * b**2 * c * e**2
            - 6 * a * b**2 * d**2 * e - 80 * a * b * c**2 * d * e + 18 * a * b * c * d**3
            + 16 * a * c**4 * e - 4 * a * c**3 * d**2 - 27 * b**4 * e**2 + 18 * b**3 * c * d * e
            - 4 * b**3 * d**3 - 4 * b**2 * c**3 * e + b**2 * c**2 * d**2)
    assert disc < 0


def test_small_f_keeps_grad_real():
    rep = hyperbolicity_report(assemble_grad_1d(breakdown_state(2, 3, 1e-3)))
    assert rep.hyperbolic
