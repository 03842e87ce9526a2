import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypermoment import indexing as ix
from hypermoment.state import (ConstraintViolation, InadmissibleState, dump_state, from_fluid_moments,
                               from_w_vector, load_state, make_state, maxwellian, project_trace,
                               random_state, state_from_json, to_fluid_moments, to_w_vector)
from strategies import states


def test_make_state_examples():
    s = maxwellian(2, 3)
    assert all(v == 0 for v in s.f.values())
    make_state(2, 3, 1.0, (0, 0), 1.0, {"2,0": 0.1, "0,2": -0.1})
    with pytest.raises(InadmissibleState):
        make_state(2, 3, 1.0, (0, 0), -1.0)
    with pytest.raises(ConstraintViolation):
        make_state(2, 3, 1.0, (0, 0), 1.0, {"2,0": 0.1})
    with pytest.raises(ix.UnsupportedOrder):
        make_state(2, 2, 1.0, (0, 0), 1.0)


def test_derived_quantities():
    s = make_state(2, 3, 2.0, (0.5, 0), 1.5, {"2,0": 0.2, "0,2": -0.2, "1,1": 0.3})
    P = s.pressure_tensor()
    assert P[0, 0] == pytest.approx(s.p + 0.4)
    assert P[0, 1] == pytest.approx(0.3)
    assert np.trace(P) / 2 == pytest.approx(s.p)


def test_w_vector_maxwellian():
    np.testing.assert_array_equal(to_w_vector(maxwellian(2, 3)), [1, 0, 0, .5, 0, .5, 0, 0, 0, 0])


@given(states())
def test_w_round_trip(s):
    back = from_w_vector(s.D, s.M, to_w_vector(s))
    np.testing.assert_allclose(to_w_vector(back), to_w_vector(s), rtol=1e-14, atol=1e-15)
    assert back.theta == pytest.approx(s.theta, rel=1e-14)


def test_w_errors():
    with pytest.raises(ValueError):
        from_w_vector(2, 3, np.ones(9))
    w = to_w_vector(maxwellian(2, 3))
    w[0] = 0.0
    with pytest.raises(InadmissibleState):
        from_w_vector(2, 3, w)


def test_fluid_examples():
    F = to_fluid_moments(maxwellian(2, 3))
    assert F[(0, 0)] == 1 and F[(1, 0)] == 0 and F[(2, 0)] == 0.5 and F[(0, 2)] == 0.5
    F = to_fluid_moments(maxwellian(2, 3, rho=2.0, u=(1.0, 0.0)))
    assert F[(1, 0)] == pytest.approx(2.0)


@settings(max_examples=60)
@given(states(D=st.sampled_from([1, 2, 3]), M=st.integers(3, 5)))
def test_fluid_round_trip(s):
    back = from_fluid_moments(s.D, s.M, to_fluid_moments(s))
    a, b = to_w_vector(back), to_w_vector(s)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def _gauss_hermite_F(s, n=12):
    """Raw moments of the Hermite-expanded distribution by tensor Gauss-Hermite quadrature."""
    from math import factorial, sqrt
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / w.sum()
    D = s.D
    grids = np.meshgrid(*([x] * D), indexing="ij")
    W = np.ones_like(grids[0])
    for d in range(D):
        W = W * np.meshgrid(*([w] * D), indexing="ij")[d]
    st_ = sqrt(s.theta)
    # f = sum_a f_a He_a(z) / (rho theta^{|a|/2}) times the Maxwellian; z = (xi - u)/sqrt(theta)
    dens = np.zeros_like(W)
    for a in ix.indices_upto(D, s.M):
        c = s.fval(a) / st_ ** sum(a)
        if c == 0:
            continue
        term = np.full_like(W, c)
        for d in range(D):
            term = term * np.polynomial.hermite_e.hermeval(grids[d], [0] * a[d] + [1])
        dens += term
    xi = [s.u[d] + st_ * grids[d] for d in range(D)]
    out = {}
    for a in ix.indices_upto(D, s.M):
        mono = np.ones_like(W)
        for d in range(D):
            mono = mono * xi[d] ** a[d] / factorial(a[d])
        out[a] = float(np.sum(W * dens * mono))
    return out


@pytest.mark.parametrize("D,M,seed", [(1, 4, 0), (2, 3, 1), (2, 4, 2), (3, 3, 3)])
def test_fluid_moments_quadrature_oracle(D, M, seed):
    s = random_state(D, M, seed, scale=0.2)
    F, ref = to_fluid_moments(s), _gauss_hermite_F(s)
    for a in ref:
        assert F[a] == pytest.approx(ref[a], rel=1e-11, abs=1e-12)


def test_equilibrium_gaussian_moments():
    # closed-form moments of rho N(u, theta I), |alpha| <= 4
    rho, u, th = 1.7, (0.3, -0.8), 1.4
    F = to_fluid_moments(maxwellian(2, 4, rho, u, th))
    m = lambda j, v: [1, v, (v * v + th) / 2, (v ** 3 + 3 * v * th) / 6,
                      (v ** 4 + 6 * v * v * th + 3 * th * th) / 24][j]
    for a in ix.indices_upto(2, 4):
        assert F[a] == pytest.approx(rho * m(a[0], u[0]) * m(a[1], u[1]), rel=1e-13)


def test_random_state_scale():
    s = random_state(2, 4, 7, scale=0.1)
    for a, v in s.f.items():
        if sum(a) >= 3:
            assert abs(v) <= 0.1 * s.rho * s.theta ** (sum(a) / 2)


def test_json_round_trip(tmp_path):
    s = random_state(3, 3, 11)
    dump_state(s, tmp_path / "s.json")
    t = load_state(tmp_path / "s.json")
    np.testing.assert_array_equal(to_w_vector(s), to_w_vector(t))
    text = '{"D":2,"M":3,"rho":1.0,"u":[0,0],"theta":1.0,"f":{"3,0":0.01}}'
    assert state_from_json(text).fval((3, 0)) == 0.01
    assert json.loads(json.dumps(s.to_json()))["D"] == 3


def test_project_trace():
    f = project_trace(2, {"2,0": 0.3, "0,2": 0.1})
    make_state(2, 3, 1.0, (0, 0), 1.0, f)
    assert f["2,0"] == pytest.approx(0.1)
