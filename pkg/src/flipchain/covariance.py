"""Deterministic evolution of means and second moments.

The second-moment matrix ``C`` of ``X = (q, p)`` obeys

    dC/dt = -M^T C - C M + 2 gamma G,    G = blockdiag(0, diag(C22)),

with ``M = [[0, Phi_L], [-I, gamma I]]``.  Two integrators are provided:

* :func:`step_rk4` / :func:`evolve_rk4`: classical RK4 on the real-space blocks,
  used as the reference.
* :func:`evolve_duhamel`: the Fourier-block form.  In Fourier variables
  ``C_hat(k1, k2)`` the equation decouples into anti-diagonal slices
  ``k1 + k2 = kappa``, each coupled only through the scalar
  ``T_hat(kappa) = int dk1 C_hat22(k1, kappa - k1)``.  The default scheme
  propagates every slice with the exponential of its (real) generator, so the
  source integral is exact; ``scheme="predictor-corrector"`` is the
  trapezoidal closure of the source with 4-node Gauss-Legendre quadrature.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .chain import build_phi_matrix, circulant_from_symbol
from .lattice import wrap
from .propagator import a_hat

__all__ = [
    "CovarianceState",
    "DuhamelPropagator",
    "EnergyForm",
    "MeanState",
    "cosine_profile",
    "energy_form",
    "evolve_duhamel",
    "evolve_means",
    "evolve_rk4",
    "gibbs_state",
    "m_gamma_matrix",
    "min_eigenvalue",
    "modulated_state",
    "rhs",
    "step_rk4",
    "temperature",
    "total_energy",
]


@dataclass
class CovarianceState:
    """Second moments ``C^{ij}(x, y) = E[X^i_x X^j_y]`` at time ``t``.

    Only ``c11``, ``c12`` and ``c22`` are stored; ``c21 = c12.T``.
    """

    c11: np.ndarray
    c12: np.ndarray
    c22: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.c11 = np.asarray(self.c11, dtype=float)
        self.c12 = np.asarray(self.c12, dtype=float)
        self.c22 = np.asarray(self.c22, dtype=float)
        L = self.c11.shape[0]
        for blk in (self.c11, self.c12, self.c22):
            if blk.shape != (L, L):
                raise ValueError("blocks must be square and of equal size")

    @property
    def L(self):
        return self.c11.shape[0]

    @property
    def c21(self):
        return self.c12.T

    def full(self):
        return np.block([[self.c11, self.c12], [self.c12.T, self.c22]])

    @classmethod
    def from_full(cls, C, t=0.0):
        C = np.asarray(C, dtype=float)
        L = C.shape[0] // 2
        c12 = 0.5 * (C[:L, L:] + C[L:, :L].T)
        return cls(_sym(C[:L, :L]), c12, _sym(C[L:, L:]), t)

    def copy(self):
        return CovarianceState(self.c11.copy(), self.c12.copy(), self.c22.copy(), self.t)

    def symmetrized(self):
        return CovarianceState(_sym(self.c11), self.c12, _sym(self.c22), self.t)


@dataclass
class MeanState:
    qbar: np.ndarray
    pbar: np.ndarray

    def __post_init__(self):
        self.qbar = np.asarray(self.qbar, dtype=float)
        self.pbar = np.asarray(self.pbar, dtype=float)
        if not (np.all(np.isfinite(self.qbar)) and np.all(np.isfinite(self.pbar))):
            raise ValueError("means must be finite")

    def norm(self):
        return float(np.sqrt(np.sum(self.qbar**2) + np.sum(self.pbar**2)))


@dataclass(frozen=True)
class EnergyForm:
    """Quadratic form ``G_L = blockdiag(Phi_L, I)`` of the Hamiltonian."""

    phi: np.ndarray = field(repr=False)

    def matrix(self):
        L = self.phi.shape[0]
        return np.block([[self.phi, np.zeros((L, L))], [np.zeros((L, L)), np.eye(L)]])

    def energy(self, state):
        return 0.5 * (float(np.sum(self.phi * state.c11)) + float(np.trace(state.c22)))


def _sym(a):
    return 0.5 * (a + a.T)


def energy_form(model, L):
    return EnergyForm(build_phi_matrix(model, L))


def m_gamma_matrix(model, L):
    """The ``2L x 2L`` generator ``M_gamma = [[0, Phi_L], [-I, gamma I]]``."""
    phi = build_phi_matrix(model, L)
    eye = np.eye(L)
    return np.block([[np.zeros((L, L)), phi], [-eye, model.gamma * eye]])


def _k(L):
    return wrap(np.arange(L), L) / L


def gibbs_state(model, L, T):
    """Equilibrium second moments ``C11 = T Phi_L^-1``, ``C22 = T I``."""
    if T < 0:
        raise ValueError("temperature must be non-negative")
    build_phi_matrix(model, L)  # range check
    c11 = T * circulant_from_symbol(1.0 / model.omega_squared(_k(L)))
    z = np.zeros((L, L))
    return CovarianceState(_sym(c11), z, T * np.eye(L), 0.0)


def cosine_profile(L, mean=1.0, amplitude=0.5):
    """``T0(x) = mean + amplitude cos(2 pi x / L)`` in storage order."""
    x = wrap(np.arange(L), L)
    return mean + amplitude * np.cos(2 * np.pi * x / L)


def modulated_state(model, L, profile):
    """``C22 = diag(T0)``, ``C11 = diag(T0) / Phi_hat(0)``, no cross-correlations."""
    T0 = np.asarray(profile, dtype=float)
    if T0.shape != (L,):
        raise ValueError("profile must have length L")
    if np.any(T0 < 0):
        raise ValueError("temperature profile must be non-negative")
    build_phi_matrix(model, L)
    return CovarianceState(np.diag(T0) / model.omega_squared(0.0), np.zeros((L, L)), np.diag(T0), 0.0)


def temperature(state):
    """Kinetic temperature profile ``T(x) = C22(x, x)``."""
    return np.diag(state.c22).copy()


def total_energy(state, model_or_form):
    """``(Tr(Phi_L C11) + Tr C22) / 2``."""
    form = model_or_form if isinstance(model_or_form, EnergyForm) else energy_form(model_or_form, state.L)
    return form.energy(state)


def min_eigenvalue(state):
    return float(np.linalg.eigvalsh(state.full()).min())


# --------------------------------------------------------------------------
# real-space reference integrator


def _rhs_blocks(phi, gamma, c11, c12, c22):
    c21 = c12.T
    d11 = c21 + c12
    d12 = c22 - c11 @ phi - gamma * c12
    pc = phi @ c12
    d22 = -pc - pc.T - 2 * gamma * c22 + 2 * gamma * np.diag(np.diag(c22))
    return d11, d12, d22


def rhs(model, state, phi=None):
    """Right-hand side ``(dC11, dC12, dC22)`` of the moment equation."""
    phi = build_phi_matrix(model, state.L) if phi is None else phi
    return _rhs_blocks(phi, model.gamma, state.c11, state.c12, state.c22)


def _max_rk4_step(model):
    return 0.1 / max(model.gamma, 2 * model.omega_max)


def step_rk4(model, state, h, phi=None):
    """One classical RK4 step of size ``h``; the result is re-symmetrized."""
    if h <= 0 or h > _max_rk4_step(model) * (1 + 1e-12):
        raise ValueError(f"RK4 step must lie in (0, {_max_rk4_step(model):.6g}]")
    phi = build_phi_matrix(model, state.L) if phi is None else phi
    g = model.gamma
    y = (state.c11, state.c12, state.c22)
    k1 = _rhs_blocks(phi, g, *y)
    k2 = _rhs_blocks(phi, g, *(a + 0.5 * h * b for a, b in zip(y, k1)))
    k3 = _rhs_blocks(phi, g, *(a + 0.5 * h * b for a, b in zip(y, k2)))
    k4 = _rhs_blocks(phi, g, *(a + h * b for a, b in zip(y, k3)))
    new = [a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
    return CovarianceState(_sym(new[0]), new[1], _sym(new[2]), state.t + h)


def evolve_rk4(model, state, t_end, h):
    """Integrate to ``state.t + t_end`` with RK4 (last step shortened if needed)."""
    phi = build_phi_matrix(model, state.L)
    n = int(np.ceil(t_end / h - 1e-9))
    if n <= 0:
        return state.copy()
    hh = t_end / n
    cur = state
    for _ in range(n):
        cur = step_rk4(model, cur, hh, phi)
    return cur


# --------------------------------------------------------------------------
# Fourier-block (Duhamel) integrator


def _to_hat(state):
    return [np.fft.fft2(state.c11), np.fft.fft2(state.c12), np.fft.fft2(state.c12.T), np.fft.fft2(state.c22)]


def _from_hat(hats, t):
    c11, c12, c21, c22 = (np.fft.ifft2(h).real for h in hats)
    return CovarianceState(_sym(c11), 0.5 * (c12 + c21.T), _sym(c22), t)


class DuhamelPropagator:
    """Exact one-step propagator of the moment equation on anti-diagonal slices.

    Slice ``m`` collects the entries ``C_hat(k_a, k_b)`` with
    ``a + b = m (mod L)``; each 2x2 entry is flattened row-major into four
    components, giving a real ``4L x 4L`` generator per slice.  Slices
    ``m`` and ``-m`` are complex conjugates of each other, so only
    ``0 <= m <= L/2`` are propagated.
    """

    def __init__(self, model, L, h):
        self.model = model
        self.L = L = int(L)
        self.h = float(h)
        build_phi_matrix(model, L)
        self.n_slices = L // 2 + 1
        m = np.arange(self.n_slices)[:, None]
        a = np.arange(L)[None, :]
        self._a = np.broadcast_to(a, (self.n_slices, L))
        self._b = (m - a) % L
        self.generator = self._generator()
        self.P = expm(self.h * self.generator)

    def _generator(self):
        L, g = self.L, self.model.gamma
        MT = np.swapaxes(self.model.m_hat(_k(L)), -1, -2)
        eye = np.eye(2)
        left = np.einsum("aik,jl->aijkl", MT, eye).reshape(L, 4, 4)
        right = np.einsum("ik,bjl->bijkl", eye, MT).reshape(L, 4, 4)
        blocks = -(left[self._a] + right[self._b])
        G = np.zeros((self.n_slices, 4 * L, 4 * L))
        rows = 4 * np.arange(L)[:, None, None] + np.arange(4)[None, :, None]
        cols = 4 * np.arange(L)[:, None, None] + np.arange(4)[None, None, :]
        G[:, rows, cols] = blocks
        G[:, 3::4, 3::4] += 2 * g / L
        return G

    def to_slices(self, state):
        hats = _to_hat(state)
        S = np.empty((self.n_slices, self.L, 4), complex)
        for c in range(4):
            S[..., c] = hats[c][self._a, self._b]
        return S.reshape(self.n_slices, 4 * self.L)

    def from_slices(self, S, t):
        L = self.L
        S = S.reshape(self.n_slices, L, 4)
        hats = [np.empty((L, L), complex) for _ in range(4)]
        neg = (-np.arange(L)) % L
        for c in range(4):
            hats[c][self._a, self._b] = S[..., c]
            # slice -m is the conjugate of slice m with k -> -k
            hats[c][neg[self._a], neg[self._b]] = np.conj(S[..., c])
        return _from_hat(hats, t)

    @staticmethod
    def _apply(P, S):
        re = np.einsum("mij,mj->mi", P, S.real)
        im = np.einsum("mij,mj->mi", P, S.imag)
        return re + 1j * im

    def advance(self, state, n_steps=1):
        """Advance ``n_steps`` steps of size ``h`` (binary powering of the step map)."""
        S = self.to_slices(state)
        P = self.P
        n = int(n_steps)
        if n < 0:
            raise ValueError("n_steps must be non-negative")
        while n:
            if n & 1:
                S = self._apply(P, S)
            n >>= 1
            if n:
                P = P @ P
        return self.from_slices(S, state.t + n_steps * self.h)

    def advance_by(self, state, tau):
        """Advance by an arbitrary duration ``tau`` with a dedicated exponential."""
        P = expm(float(tau) * self.generator)
        return self.from_slices(self._apply(P, self.to_slices(state)), state.t + tau)


def _default_step(model):
    return 0.25 / model.gamma


def _check_duhamel_step(model, h):
    if h <= 0 or h > 0.5 / model.gamma * (1 + 1e-12):
        raise ValueError(f"Duhamel step must lie in (0, {0.5 / model.gamma:.6g}]")


def _split(t_end, h):
    n = int(np.floor(t_end / h + 1e-9))
    rem = t_end - n * h
    if abs(rem) <= 1e-12 * max(1.0, t_end):
        rem = 0.0
    return n, rem


def evolve_duhamel(model, state, t_end, h=None, scheme="exact", propagator=None):
    """Evolve the moments by ``t_end`` with the Fourier-block Duhamel scheme.

    Parameters
    ----------
    h : float, optional
        Step size, at most ``0.5/gamma``; defaults to ``0.25/gamma``.
    scheme : {"exact", "predictor-corrector"}
        ``"exact"`` exponentiates each slice generator, which integrates the
        source term without error.  ``"predictor-corrector"`` freezes
        ``T_hat`` for a predictor and uses the trapezoid through the
        predicted endpoint as corrector.
    propagator : DuhamelPropagator, optional
        Reuse a prebuilt exact propagator with matching ``L`` and ``h``.
    """
    h = _default_step(model) if h is None else float(h)
    _check_duhamel_step(model, h)
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    if scheme == "exact":
        prop = propagator
        if prop is None or prop.L != state.L or prop.h != h or prop.model != model:
            prop = DuhamelPropagator(model, state.L, h)
        n, rem = _split(t_end, h)
        out = prop.advance(state, n)
        if rem:
            out = prop.advance_by(out, rem)
        return out
    if scheme == "predictor-corrector":
        return _evolve_pc(model, state, t_end, h)
    raise ValueError(f"unknown scheme {scheme!r}")


def _t_hat(C22, m_idx, a_idx, b_idx, L):
    return C22[a_idx, b_idx].sum(axis=1) / L


def _evolve_pc(model, state, t_end, h):
    L, g = state.L, model.gamma
    k = _k(L)
    n, rem = _split(t_end, h)
    steps = [h] * n + ([rem] if rem else [])
    hats = _to_hat(state)
    C = np.stack([np.stack([hats[0], hats[1]], -1), np.stack([hats[2], hats[3]], -1)], -2)
    m = np.arange(L)[:, None]
    a_idx = np.broadcast_to(np.arange(L)[None, :], (L, L))
    b_idx = (m - a_idx) % L
    kap = (np.arange(L)[:, None] + np.arange(L)[None, :]) % L
    x, w = leggauss(4)
    cache = {}
    t = state.t
    for hh in steps:
        if hh not in cache:
            Ah = a_hat(model, hh, k)
            s = 0.5 * hh * (x + 1)
            ws = 0.5 * hh * w
            rows = a_hat(model, (hh - s)[:, None], k[None, :])[..., 1, :]
            kern = 2 * g * ws[:, None, None, None, None] * np.einsum("jai,jbl->jabil", rows, rows)
            cache[hh] = (Ah, s / hh, kern)
        Ah, frac, kern = cache[hh]
        hom = np.einsum("aki,abkl,blj->abij", Ah, C, Ah)
        T0 = _t_hat(C[..., 1, 1], None, a_idx, b_idx, L)

        def source(Tj, kern=kern):
            return np.einsum("jab,jabil->abil", Tj[:, kap], kern)

        pred = hom + source(np.broadcast_to(T0, (4, L)))
        T1 = _t_hat(pred[..., 1, 1], None, a_idx, b_idx, L)
        Tj = T0[None, :] + frac[:, None] * (T1 - T0)[None, :]
        C = hom + source(Tj)
        t += hh
    hats = [C[..., 0, 0], C[..., 0, 1], C[..., 1, 0], C[..., 1, 1]]
    return _from_hat(hats, t)


# --------------------------------------------------------------------------
# means


def evolve_means(model, means, t):
    """``(qbar, pbar)_t = exp(-t M_gamma^T) (qbar, pbar)_0``, applied per wavenumber."""
    if t < 0:
        raise ValueError("t must be non-negative")
    L = means.qbar.shape[0]
    A = a_hat(model, t, _k(L))
    qh = np.fft.fft(means.qbar)
    ph = np.fft.fft(means.pbar)
    q = A[:, 0, 0] * qh + A[:, 1, 0] * ph
    p = A[:, 0, 1] * qh + A[:, 1, 1] * ph
    return MeanState(np.fft.ifft(q).real, np.fft.ifft(p).real)
