import numpy as np
import oracles
import pytest
from conftest import RNG, SEED
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from flipchain.chain import ChainModel, Potential
from flipchain.kinetic import (
    HomogeneousState,
    KineticState,
    collision_full,
    collision_simple,
    current,
    energy_density,
    evolve_homogeneous,
    evolve_transport,
    fit_decay_rate,
    homogeneous_generator,
    homogeneous_rhs,
    kappa,
    kappa_reference,
    stationary_contraction,
    stationary_solve,
)
from flipchain.lattice import wrap

KAPPA_NN_STAR = 0.19098300562505  # L = 200, omega0 = gamma = 1


def _k(L):
    return wrap(np.arange(L), L) / L


def random_homogeneous(L, rng, t=0.0):
    """Random ``W`` pair projected onto the symmetry classes."""
    Wmp = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    Wmm = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    m = ChainModel.nearest_neighbour(1.0, 6.0)
    return HomogeneousState.from_wigner(m, Wmp, Wmm, t)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), L=st.integers(2, 40))
def test_simple_collision_conserves_and_relaxes(seed, L):
    m = ChainModel.nearest_neighbour(1.0, 2.0)
    f = np.random.default_rng(seed).standard_normal((3, L))
    c = collision_simple(m, f)
    assert np.abs(c.mean(axis=-1)).max() <= 1e-13
    assert np.abs(collision_simple(m, np.full(L, 2.3))).max() <= 1e-14
    # the collision is gamma times the projection onto mean-zero functions
    assert np.allclose(collision_simple(m, c), -m.gamma * c, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 30.0))
def test_full_collision_conserves_energy(seed, t):
    m = ChainModel.nearest_neighbour(1.0, 6.0)
    rng = np.random.default_rng(seed)
    Wmp = rng.standard_normal((4, 12)) + 1j * rng.standard_normal((4, 12))
    Wmm = rng.standard_normal((4, 12)) + 1j * rng.standard_normal((4, 12))
    c_mp, _ = collision_full(m, Wmp, Wmm, t)
    assert np.abs(c_mp.mean(axis=-1).real).max() <= 1e-12


def test_full_collision_matches_oracle(nn):
    L = 10
    Wmp = RNG.standard_normal((3, L)) + 1j * RNG.standard_normal((3, L))
    Wmm = RNG.standard_normal((3, L)) + 1j * RNG.standard_normal((3, L))
    w = nn.omega(_k(L))
    ref = oracles.transport_rhs(nn.gamma, w, np.zeros(L), 3.0, 0.4, Wmp, Wmm)
    got = collision_full(nn, Wmp, Wmm, 0.4)
    assert np.allclose(got[0], ref[0], atol=1e-13) and np.allclose(got[1], ref[1], atol=1e-13)


def test_polarization_equations_follow_from_collision(nn):
    L, t = 14, 0.9
    st0 = random_homogeneous(L, RNG, t)
    Wmp, Wmm = st0.to_wigner(nn)
    d_mp, d_mm = collision_full(nn, Wmp, Wmm, t)
    w = nn.omega(_k(L))
    negk = (-np.arange(L)) % L
    dV = 2j * w * np.exp(2j * t * w) * Wmm + np.exp(2j * t * w) * d_mm
    r = lambda F: np.conj(F[negk])
    chain = np.stack([0.5 * (d_mp + r(d_mp)), 0.5 * (d_mp - r(d_mp)), 0.5 * (dV + r(dV)), 0.5 * (dV - r(dV))])
    assert np.allclose(homogeneous_rhs(nn, st0), chain, atol=1e-12)


def test_wigner_roundtrip_and_symmetry(nn):
    st0 = random_homogeneous(9, RNG, 1.3)
    assert st0.symmetry_defect() <= 1e-14
    back = HomogeneousState.from_wigner(nn, *st0.to_wigner(nn), 1.3)
    assert np.allclose(back.stack(), st0.stack(), atol=1e-14)


@pytest.mark.parametrize("model", [ChainModel.nearest_neighbour(1.0, 6.0), ChainModel.nearest_neighbour(1.0, 1.0)])
def test_generator_matches_dense_oracle(model):
    L = 8
    w = model.omega(_k(L))
    assert np.allclose(homogeneous_generator(model, L), oracles.homogeneous_dense(model.gamma, w), atol=1e-14)


def test_homogeneous_rk4_matches_exponential(nn):
    L = 12
    st0 = random_homogeneous(L, RNG)
    out = evolve_homogeneous(nn, st0, 2.0, 0.01)
    ref = expm(2.0 * homogeneous_generator(nn, L)) @ st0.stack().ravel()
    assert np.abs(out.stack().ravel() - ref).max() <= 1e-9
    assert out.t == pytest.approx(2.0)
    with pytest.raises(ValueError):
        evolve_homogeneous(nn, st0, 1.0, 1.0)


def test_homogeneous_invariants(nn):
    L = 32
    st0 = random_homogeneous(L, RNG)
    rec = []
    evolve_homogeneous(nn, st0, 3.0, 0.01, observer=lambda s: rec.append((s.t, s.I.copy(), s.H.mean())))
    t = np.array([r[0] for r in rec])
    I = np.array([r[1] for r in rec])
    assert np.allclose(I, st0.I[None] * np.exp(-nn.gamma * t)[:, None], rtol=1e-5, atol=1e-14)
    assert fit_decay_rate(t, np.abs(I).max(axis=1)) == pytest.approx(nn.gamma, rel=1e-6)
    assert max(abs(r[2] - st0.H.mean()) for r in rec) <= 1e-12


def test_pq_envelope_is_generator_spectral_gap(nn):
    L = 64
    G = homogeneous_generator(nn, L)
    ev = np.linalg.eigvals(G)
    gap = -np.sort(ev.real[ev.real < -1e-9])[::-1][0]
    st0 = random_homogeneous(L, np.random.default_rng(SEED))
    rec = []
    evolve_homogeneous(nn, st0, 40.0, 0.01, observer=lambda s: rec.append((s.t, max(np.abs(s.P).max(), np.abs(s.Q).max()))))
    t = np.array([r[0] for r in rec])
    a = np.array([r[1] for r in rec])
    sel = (t >= 10.0) & (t <= 40.0)
    # the slow eigenvalues form a cluster starting at the gap; the envelope rate falls inside it
    rate = fit_decay_rate(t[sel], a[sel])
    assert 0.99 * gap <= rate <= 1.1 * gap
    # the k-uniform part of P is fed back by the mean term, so the slowest rate sits well below gamma
    assert gap < 0.1 * nn.gamma


def test_stationary_family_is_neutral(nn):
    L = 24
    s = stationary_solve(nn, L, E=1.7)
    assert np.abs(homogeneous_rhs(nn, s)).max() <= 1e-14
    out = evolve_homogeneous(nn, s, 5.0, 0.01)
    assert np.abs(out.stack() - s.stack()).max() <= 1e-12
    assert np.all(stationary_contraction(nn, L) < 1)
    with pytest.raises(ValueError):
        stationary_solve(nn, L, E=1 + 1j)


def test_energy_density_and_current(nn):
    L = 16
    x = wrap(np.arange(L), L)
    E = 1 + 0.2 * np.cos(2 * np.pi * x / L)
    st0 = KineticState(np.repeat(E[:, None], L, axis=1), np.zeros((L, L)))
    assert np.allclose(energy_density(st0), E)
    assert np.abs(current(st0, nn)).max() <= 1e-15
    st1 = KineticState(np.repeat(E[:, None], L, axis=1) * (1 + 0.1 * nn.group_velocity(_k(L)))[None], np.zeros((L, L)))
    assert np.allclose(current(st1, nn), 0.1 * E * np.mean(nn.group_velocity(_k(L)) ** 2))
    bad = KineticState(st0.W_mp + 1j, st0.W_mm)
    with pytest.raises(FloatingPointError):
        energy_density(bad, tol=1e-10)
    with pytest.raises(ValueError):
        KineticState(np.zeros(4), np.zeros(4))


def test_kappa_values():
    m = ChainModel.nearest_neighbour(1.0, 1.0)
    assert kappa(m, 200) == pytest.approx(KAPPA_NN_STAR, rel=1e-12)
    assert kappa_reference(m) == pytest.approx(oracles.kappa_nn_reference(1.0, 1.0), rel=1e-12)
    assert kappa(ChainModel.onsite(1.0, 6.0), 4096) == 0.0
    nnn = ChainModel(Potential.next_nearest(1.0), 10.0)
    assert kappa(nnn, 4096) == pytest.approx(kappa_reference(nnn), rel=1e-10)


def test_transport_matches_direct_integration():
    m = ChainModel.nearest_neighbour(1.0, 1.0)
    n_xi, L, t_end = 8, 10, 3.0
    xi = wrap(np.arange(n_xi), n_xi)
    prof = (1 + 0.3 * np.cos(2 * np.pi * xi / n_xi) + 0.1 * np.sin(4 * np.pi * xi / n_xi))[:, None]
    Wmp = prof * (1 + 0.2 * np.cos(2 * np.pi * _k(L)))[None] + 0.05j * np.sin(2 * np.pi * _k(L))[None]
    Wmm = 0.1 * prof * np.ones((1, L))
    w, v = m.omega(_k(L)), m.group_velocity(_k(L))

    def f(t, y):
        a, b = y.reshape(2, n_xi, L)
        return np.concatenate([r.ravel() for r in oracles.transport_rhs(m.gamma, w, v, n_xi, t, a, b)])

    sol = solve_ivp(f, (0, t_end), np.concatenate([Wmp.ravel(), Wmm.ravel()]).astype(complex), method="DOP853", rtol=1e-12, atol=1e-13)
    ref = sol.y[:, -1].reshape(2, n_xi, L)
    out = evolve_transport(m, KineticState(Wmp, Wmm), t_end, 0.01)
    assert np.abs(out.W_mp - ref[0]).max() <= 1e-8
    assert np.abs(out.W_mm - ref[1]).max() <= 1e-8


def test_transport_conserves_mean_energy_and_validates_step():
    m = ChainModel.nearest_neighbour(1.0, 1.0)
    n = 32
    xi = wrap(np.arange(n), n)
    E0 = 1 + 0.1 * np.cos(2 * np.pi * xi / n)
    st0 = KineticState(np.repeat(E0[:, None], 16, axis=1), np.zeros((n, 16)))
    out = evolve_transport(m, st0, 50.0, 0.1)
    assert energy_density(out).mean() == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(ValueError):
        evolve_transport(m, st0, 1.0, 5.0)


def test_fit_decay_rate():
    t = np.linspace(0, 5, 50)
    assert fit_decay_rate(t, 3 * np.exp(-0.7 * t)) == pytest.approx(0.7, rel=1e-12)
