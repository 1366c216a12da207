import numpy as np
import oracles
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from flipchain.chain import ChainModel, Potential, build_phi_matrix
from flipchain.propagator import (
    a_hat,
    a_hat_22,
    a_hat_dk,
    a_real,
    decay_rate,
    q_closed,
    q_numeric,
    slowest_rate,
    stationary_matrices,
    time_grid,
    u0_closed,
    u1_closed,
    u_matrices_numeric,
)

Q_TOL = 1e-8
DELTA0 = 3 - 2 * np.sqrt(2)

MODELS = {
    "overdamped": ChainModel.nearest_neighbour(1.0, 6.0),
    "underdamped": ChainModel.nearest_neighbour(1.0, 1.0),
    "critical": ChainModel.onsite(3.0, 6.0),
    "nnn": ChainModel(Potential.next_nearest(0.5), 2.0),
}


@pytest.mark.parametrize("name", list(MODELS))
def test_a_hat_matches_matrix_exponential(name):
    m = MODELS[name]
    k = np.linspace(-0.5, 0.5, 9)
    for t in (0.0, 1e-7, 0.3, 2.0, 11.0):
        got = a_hat(m, t, k)
        ref = np.array([oracles.a_hat_expm(m.omega_squared(kk), m.gamma, t) for kk in k])
        assert np.allclose(got, ref, atol=1e-13, rtol=1e-11)


def test_a_hat_near_critical_damping():
    # gamma/2 - omega crosses through zero inside the k range
    m = ChainModel.nearest_neighbour(1.0, 2 * np.sqrt(3.0))
    k = 0.25 + np.array([-1e-3, -1e-7, 0.0, 1e-7, 1e-3])
    for t in (0.5, 5.0):
        ref = np.array([oracles.a_hat_expm(m.omega_squared(kk), m.gamma, t) for kk in k])
        assert np.allclose(a_hat(m, t, k), ref, atol=1e-12)


def test_a_hat_22_and_broadcast(nn):
    t = np.array([0.1, 1.0, 4.0])[:, None]
    k = np.linspace(-0.5, 0.5, 7)[None, :]
    A = a_hat(nn, t, k)
    assert A.shape == (3, 7, 2, 2)
    assert np.allclose(a_hat_22(nn, t, k), A[..., 1, 1], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.0, 3.0), u=st.floats(0.0, 3.0), k=st.floats(-0.5, 0.5))
def test_a_hat_semigroup(s, u, k):
    m = MODELS["underdamped"]
    lhs = a_hat(m, s + u, k)
    rhs = a_hat(m, s, k) @ a_hat(m, u, k)
    assert np.allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("name", ["overdamped", "underdamped", "critical", "nnn"])
def test_a_hat_dk_against_finite_difference(name):
    m = MODELS[name]
    k = np.linspace(-0.45, 0.45, 7)
    h = 1e-6
    for t in (0.2, 3.0):
        fd = (a_hat(m, t, k + h) - a_hat(m, t, k - h)) / (2 * h)
        assert np.allclose(a_hat_dk(m, t, k), fd, atol=1e-7)


def test_a_real_matches_dense_exponential(nn):
    L = 12
    phi = build_phi_matrix(nn, L)
    for t in (0.4, 3.0):
        assert np.allclose(a_real(nn, t, L)[:, 1, 1], oracles.a22_real_dense(phi, nn.gamma, t), atol=1e-13)


def test_decay_rates(nn):
    assert decay_rate(nn) == pytest.approx(DELTA0, rel=1e-14)
    assert slowest_rate(nn) == pytest.approx(DELTA0, rel=1e-12)
    assert slowest_rate(MODELS["underdamped"]) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        decay_rate(MODELS["underdamped"])


def test_time_grid_integrates_exponentials():
    t, w = time_grid(6.0, DELTA0, tol=1e-12)
    assert w @ np.exp(-2 * DELTA0 * t) == pytest.approx(1 / (2 * DELTA0), rel=1e-11)
    assert w @ (t**3 * np.exp(-6 * t)) == pytest.approx(6 / 6**4, rel=1e-11)
    with pytest.raises(ValueError):
        time_grid(1.0, 0.0)


def test_q_closed_form_spot_value(nn):
    assert q_closed(nn, 0.25) == pytest.approx(np.pi / 9, rel=1e-14)


def test_q_quadrature_matches_closed_form(nn):
    k = np.arange(64) / 64 - 0.5
    assert np.abs(q_numeric(nn, k) - q_closed(nn, k)).max() <= Q_TOL


def _q_oracle(m, k, h=1e-5):
    def f(t):
        d = (oracles.a_hat_expm(m.omega_squared(k + h), m.gamma, t) - oracles.a_hat_expm(m.omega_squared(k - h), m.gamma, t)) / (2 * h)
        return oracles.a_hat_expm(m.omega_squared(k), m.gamma, t)[1, 1] * d[1, 0]

    val, _ = integrate.quad(f, 0, np.inf, epsabs=1e-13, limit=200)
    return 2 * m.gamma * val


@pytest.mark.parametrize("k", [0.1, 0.25, 0.4])
def test_q_against_independent_quadrature(nn, k):
    assert q_numeric(nn, k)[0] == pytest.approx(_q_oracle(nn, k), abs=1e-8)


def test_u_matrices_closed_forms(nn):
    k = np.arange(64) / 64 - 0.5
    n0, n1 = u_matrices_numeric(nn, k)
    assert np.abs(n0 - u0_closed(nn, k)).max() <= Q_TOL
    assert np.abs(n1 - u1_closed(nn, k)).max() <= Q_TOL
    assert np.allclose(u1_closed(nn, 0.25), [[-1 / 9, 1 / 18], [-1 / 18, 0]], atol=1e-15)
    assert np.allclose(u0_closed(nn, 0.25), [[1 / 3, 0], [0, 1]], atol=1e-15)


def test_stationary_matrices_report(nn):
    sm = stationary_matrices(nn)
    assert max(sm.max_deviation_u0, sm.max_deviation_u1) <= Q_TOL
    assert np.allclose(sm.U1(0.25), u1_closed(nn, 0.25))


def test_stationary_matrices_raise_on_mismatch(nn):
    with pytest.raises(FloatingPointError):
        stationary_matrices(nn, check=1e-30)
