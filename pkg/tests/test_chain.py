import numpy as np
import oracles
import pytest
from conftest import RNG
from hypothesis import given, settings
from hypothesis import strategies as st

from flipchain.chain import (
    ChainModel,
    Potential,
    build_phi_matrix,
    circulant_from_symbol,
    nondegeneracy_integral,
    validate_assumptions,
)
from flipchain.lattice import wrap

# independent quad-over-expm evaluation of the nondegeneracy integral at k0 = 0.05
C_EPS_NN_005 = 8.6124396731799e-05
C_EPS_NN_HALF = 3.003248989672e-03


def test_potential_presets():
    assert Potential.nearest_neighbour(1.0).coefficients == (3.0, -1.0)
    assert Potential.onsite(2.0).coefficients == (4.0,)
    nnn = Potential.next_nearest(1.0)
    assert nnn.reach == 2
    assert nnn.value(-2) == nnn.value(2)


def test_potential_from_pairs_and_validation():
    pot = Potential.from_pairs([(0, 3.0), (1, -1.0)])
    assert pot == Potential.nearest_neighbour(1.0)
    with pytest.raises(ValueError):
        Potential.from_pairs([(-1, 1.0)])
    with pytest.raises(ValueError):
        Potential.from_pairs([(0, 1.0), (0, 2.0)])
    with pytest.raises(ValueError):
        Potential(())
    assert Potential((2.0, 0.0, 0.0)).coefficients == (2.0,)


def test_nearest_neighbour_dispersion():
    m = ChainModel.nearest_neighbour(1.0, 6.0)
    k = np.linspace(-0.5, 0.5, 101)
    assert np.allclose(m.omega(k), np.sqrt(1 + 4 * np.sin(np.pi * k) ** 2), atol=1e-15)
    assert m.omega(0.25) == pytest.approx(np.sqrt(3))
    assert m.omega_max == pytest.approx(np.sqrt(5))
    assert m.in_theorem_regime()
    assert not m.with_gamma(4.0).in_theorem_regime()


def test_omega_prime_against_finite_difference():
    m = ChainModel(Potential.next_nearest(0.7), 3.0)
    k = np.linspace(-0.45, 0.45, 19)
    h = 1e-6
    fd = (m.omega(k + h) - m.omega(k - h)) / (2 * h)
    assert np.allclose(m.omega_prime(k), fd, atol=1e-8)
    assert np.allclose(m.group_velocity(k), m.omega_prime(k) / (2 * np.pi))


def test_m_hat_shape_and_entries():
    m = ChainModel.nearest_neighbour(1.0, 6.0)
    M = m.m_hat(np.array([0.0, 0.25]))
    assert M.shape == (2, 2, 2)
    assert np.allclose(M[1], [[0, 3], [-1, 6]])


@pytest.mark.parametrize("L", [5, 8, 13])
def test_phi_matrix_matches_loops(L):
    pot = Potential.next_nearest(1.3)
    m = ChainModel(pot, 10.0)
    assert np.allclose(build_phi_matrix(m, L), oracles.phi_matrix_loops(pot.coefficients, L), atol=1e-15)


def test_phi_matrix_range_check():
    with pytest.raises(ValueError):
        build_phi_matrix(ChainModel(Potential.next_nearest(1.0), 10.0), 3)


def test_phi_matrix_eigenvalues_are_symbol():
    m = ChainModel.nearest_neighbour(0.5, 6.0)
    L = 12
    lam = np.sort(np.linalg.eigvalsh(build_phi_matrix(m, L)))
    assert np.allclose(lam, np.sort(m.omega_squared(wrap(np.arange(L), L) / L)), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(L=st.integers(2, 40), seed=st.integers(0, 2**32 - 1))
def test_circulant_from_symbol_diagonalizes(L, seed):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.5, 2.0, L)
    s = 0.5 * (s + s[(-np.arange(L)) % L])
    C = circulant_from_symbol(s)
    assert np.allclose(C, C.T, atol=1e-13)
    f = rng.standard_normal(L)
    assert np.allclose(np.fft.fft(C @ f), s * np.fft.fft(f), atol=1e-11)


def test_model_rejects_negative_gamma():
    with pytest.raises(ValueError):
        ChainModel(Potential.nearest_neighbour(), -1.0)


def test_validate_assumptions_nearest_neighbour(nn):
    rep = validate_assumptions(nn, eps_list=(0.05,), lattice_sizes=(16, 32))
    assert rep.passed
    assert rep.c_eps_table[0.05] == pytest.approx(C_EPS_NN_005, rel=1e-9)
    assert rep.details["omega_max"] == pytest.approx(np.sqrt(5))
    assert any("C_eps" in line for line in rep.lines())


def test_validate_assumptions_reports_failures():
    weak = validate_assumptions(ChainModel.nearest_neighbour(1.0, 2.0))
    assert not weak.items[4] and weak.items[3]
    with pytest.raises(ValueError, match="pinned"):
        ChainModel(Potential((2.0, -1.0)), 6.0)
    flat = validate_assumptions(ChainModel.onsite(1.0, 6.0))
    # a k-independent dispersion gives F_t(k + k0/2) = F_t(k - k0/2)
    assert flat.c_eps_table[0.05] < 1e-20 and not flat.items[5]


def test_nondegeneracy_integral_spot_values(nn):
    vals = nondegeneracy_integral(nn, np.array([0.05, 0.5]))
    assert vals[0] == pytest.approx(C_EPS_NN_005, rel=1e-9)
    assert vals[1] == pytest.approx(C_EPS_NN_HALF, rel=1e-9)


def test_validate_rejects_bad_eps(nn):
    with pytest.raises(ValueError):
        validate_assumptions(nn, eps_list=(0.7,))


def test_random_potential_symbol_is_real_and_even():
    c = (4.0,) + tuple(RNG.uniform(-0.5, 0.5, 3))
    pot = Potential(c)
    k = np.linspace(-0.5, 0.5, 33)
    assert np.allclose(pot.symbol(k), pot.symbol(-k))
    direct = sum(pot.value(x) * np.cos(2 * np.pi * k * x) for x in range(-3, 4))
    assert np.allclose(pot.symbol(k), direct, atol=1e-14)
