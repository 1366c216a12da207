"""Wigner transforms of the covariance and of the normal-mode correlations.

All fields are arrays over ``(x or xi, k)`` in storage order on both axes;
the ``xi`` grid has one point per lattice site.  Matrix-valued fields carry
two trailing ``2 x 2`` axes.
"""

from dataclasses import dataclass, field

import numpy as np

from .chain import circulant_from_symbol
from .lattice import wrap
from .propagator import u0_closed, u1_closed

__all__ = [
    "ModifiedWigner",
    "NormalModeCovariance",
    "PolarizationFields",
    "SlopeFit",
    "WignerField",
    "averaged_covariance_wigner",
    "covariance_to_wigner",
    "fit_slope",
    "hipq_decompose",
    "kinetic_prediction_u",
    "local_equilibrium_prediction",
    "modified_wigner",
    "normal_mode_covariance",
    "spectral_derivative",
    "theorem_residual",
]

SIGNS = ((-1, -1), (-1, 1), (1, -1), (1, 1))


def _k(L):
    return wrap(np.arange(L), L) / L


def _negk(L):
    return (-np.arange(L)) % L


@dataclass
class WignerField:
    """``U(x, k)``: shape ``(L, L, 2, 2)``, complex."""

    values: np.ndarray
    t: float = 0.0

    @property
    def L(self):
        return self.values.shape[0]

    def conjugation_defect(self):
        """``max |U(x, -k) - U(x, k)*|``."""
        return float(np.abs(self.values[:, _negk(self.L)] - np.conj(self.values)).max())


@dataclass
class NormalModeCovariance:
    """``E[psi_hat(k1, s1) psi_hat(k2, s2)]`` for the four sign pairs, each ``(L, L)``."""

    values: dict
    t: float = 0.0

    def __getitem__(self, signs):
        return self.values[signs]

    @property
    def L(self):
        return next(iter(self.values.values())).shape[0]

    def pairing_defect(self):
        """``max |N^{s1 s2}(k1, k2) - conj N^{-s1,-s2}(-k1, -k2)|``."""
        n = _negk(self.L)
        return max(
            float(np.abs(self.values[(a, b)] - np.conj(self.values[(-a, -b)][np.ix_(n, n)])).max())
            for a, b in SIGNS
        )

    def energy(self):
        """``(1/2) sum_s int dk E|psi_hat(k, s)|**2``."""
        L, n = self.L, _negk(self.L)
        tot = 0.0
        for s in (-1, 1):
            # |psi_hat(k, s)|^2 = psi_hat(k, s) psi_hat(-k, -s)
            tot += np.sum(self.values[(s, -s)][np.arange(L), n]).real
        return 0.5 * tot / L


@dataclass
class ModifiedWigner:
    """``W^{s1 s2}(xi, k)`` for the four sign pairs, each ``(n_xi, L)``."""

    values: dict
    xi: np.ndarray
    t: float
    R: float
    omega: np.ndarray = field(repr=False)

    def __getitem__(self, signs):
        return self.values[signs]

    @property
    def L(self):
        return self.omega.shape[0]

    def conjugation_defect(self):
        n = _negk(self.L)
        return max(float(np.abs(self.values[(a, b)] - np.conj(self.values[(-a, -b)][:, n])).max()) for a, b in SIGNS)

    def swap_defect(self):
        """``max |W^{s1 s2}(xi, k) - W^{s2 s1}(xi, -k)|`` over the mixed pairs."""
        n = _negk(self.L)
        return max(float(np.abs(self.values[(a, -a)] - self.values[(-a, a)][:, n]).max()) for a in (-1, 1))


@dataclass
class PolarizationFields:
    H: np.ndarray
    I: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    t: float = 0.0

    def symmetry_defect(self):
        """Deviation from ``H, P`` even and ``I, Q`` odd under ``F(k) -> F(-k)*``."""
        n = _negk(self.H.shape[-1])

        def refl(F):
            return np.conj(F[..., n])

        return max(
            float(np.abs(self.H - refl(self.H)).max()),
            float(np.abs(self.P - refl(self.P)).max()),
            float(np.abs(self.I + refl(self.I)).max()),
            float(np.abs(self.Q + refl(self.Q)).max()),
        )


@dataclass(frozen=True)
class SlopeFit:
    points: tuple
    slope: float
    intercept: float
    r2: float


def fit_slope(L_values, residuals):
    """Least-squares line through ``(log L, log residual)``."""
    x = np.log(np.asarray(L_values, dtype=float))
    y = np.log(np.asarray(residuals, dtype=float))
    if x.size < 3:
        raise ValueError("a slope fit needs at least three points")
    A = np.vstack([x, np.ones_like(x)]).T
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ np.array([a, b])
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - fit) ** 2) / ss if ss > 0 else 1.0
    return SlopeFit(tuple(zip(x.tolist(), y.tolist())), float(a), float(b), float(r2))


# --------------------------------------------------------------------------


def _displacement_dft(M):
    """``sum_y exp(-2 pi i k y) M[x, x + y]`` for every row ``x``."""
    L = M.shape[0]
    idx = (np.arange(L)[:, None] + np.arange(L)[None, :]) % L
    return np.fft.fft(M[np.arange(L)[:, None], idx], axis=1)


def covariance_to_wigner(state):
    """``U(x, k) = sum_y exp(-2 pi i k y) C(x, x + y)``."""
    L = state.L
    out = np.empty((L, L, 2, 2), complex)
    for (i, j), blk in {(0, 0): state.c11, (0, 1): state.c12, (1, 0): state.c21, (1, 1): state.c22}.items():
        out[..., i, j] = _displacement_dft(blk)
    return WignerField(out, state.t)


def local_equilibrium_prediction(model, T, t=0.0):
    """``T(x) U0(k) + i grad T(x) U1(k)`` with the forward difference ``T(x+1) - T(x)``."""
    if not model.in_theorem_regime():
        raise ValueError("prediction requires gamma > 2 omega_max")
    T = np.asarray(T, dtype=float)
    L = T.shape[0]
    k = _k(L)
    grad = np.roll(T, -1) - T
    out = T[:, None, None, None] * u0_closed(model, k)[None] + 1j * grad[:, None, None, None] * u1_closed(model, k)[None]
    return WignerField(out, t)


def theorem_residual(state, model):
    """``sup_{x, k, i, j} |U^{ij}(x, k) - prediction^{ij}(x, k)|`` with ``T`` read from ``state``."""
    U = covariance_to_wigner(state).values
    pred = local_equilibrium_prediction(model, np.diag(state.c22)).values
    return float(np.abs(U - pred).max())


def normal_mode_covariance(state, model):
    """``E[psi_hat(k1, s1) psi_hat(k2, s2)] = Tr[O(k1, k2; s1, s2) C_hat(k1, k2)]``."""
    L = state.L
    w = model.omega(_k(L))
    c11, c12, c21, c22 = (np.fft.fft2(b) for b in (state.c11, state.c12, state.c21, state.c22))
    w1, w2 = w[:, None], w[None, :]
    vals = {}
    for s1, s2 in SIGNS:
        vals[(s1, s2)] = 0.5 * (w1 * w2 * c11 + 1j * s2 * w1 * c12 + 1j * s1 * w2 * c21 - s1 * s2 * c22)
    return NormalModeCovariance(vals, state.t)


def _omega_matrix(model, L):
    return circulant_from_symbol(model.omega(_k(L)))


def _y_fields(state, model):
    """``Y^{s1 s2}(x, k)`` from real-space normal-mode correlations."""
    Om = _omega_matrix(model, state.L)
    a = Om @ state.c11 @ Om
    b = Om @ state.c12
    c = state.c21 @ Om
    d = state.c22
    out = {}
    for s1, s2 in SIGNS:
        N = 0.5 * (a + 1j * s2 * b + 1j * s1 * c - s1 * s2 * d)
        out[(s1, s2)] = _displacement_dft(N)
    return out


def default_xi(L):
    """One grid point per site, storage order."""
    return wrap(np.arange(L), L).astype(float)


def modified_wigner(state, kernel, model, xi=None):
    """``W^{s1 s2}(xi, k) = exp(i t omega(k)(s1 + s2)) sum_x phi(xi - x) Y^{s1 s2}(x, k)``."""
    L = state.L
    xi = default_xi(L) if xi is None else np.asarray(xi, dtype=float)
    w = model.omega(_k(L))
    weights = kernel.lattice_weights(xi, L)
    vals = {}
    for signs, Y in _y_fields(state, model).items():
        vals[signs] = np.exp(1j * state.t * w * (signs[0] + signs[1]))[None, :] * (weights @ Y)
    return ModifiedWigner(vals, xi, state.t, kernel.R, w)


def hipq_decompose(mw, model=None):
    """``H, I`` from ``W^{-+}`` and ``P, Q`` from ``exp(2 i t omega) W^{--}``."""
    n = _negk(mw.L)
    W = mw[(-1, 1)]
    V = np.exp(2j * mw.t * mw.omega)[None, :] * mw[(-1, -1)]
    Wr = np.conj(W[:, n])
    Vr = np.conj(V[:, n])
    return PolarizationFields(0.5 * (W + Wr), 0.5 * (W - Wr), 0.5 * (V + Vr), 0.5 * (V - Vr), mw.t)


def averaged_covariance_wigner(state, kernel, xi=None):
    """``U_avg(xi, k) = sum_x phi(xi - x) U(x, k)``, shape ``(n_xi, L, 2, 2)``."""
    L = state.L
    xi = default_xi(L) if xi is None else np.asarray(xi, dtype=float)
    U = covariance_to_wigner(state).values
    weights = kernel.lattice_weights(xi, L)
    return np.einsum("ax,xkij->akij", weights, U)


def spectral_derivative(f, period):
    """Derivative of samples ``f`` (storage order, uniform) of a ``period``-periodic function."""
    f = np.asarray(f)
    n = f.shape[0]
    m = wrap(np.arange(n), n).astype(float)
    if n % 2 == 0:
        m[n // 2] = 0.0
    mult = 2j * np.pi * m / period
    fh = np.fft.fft(f, axis=0)
    d = np.fft.ifft(mult.reshape((n,) + (1,) * (f.ndim - 1)) * fh, axis=0)
    return d.real if np.isrealobj(f) else d


def kinetic_prediction_u(model, E, period=None):
    """``E U0(k) - i (v/omega) dE/dxi [[omega**-2, -1/gamma], [1/gamma, 0]]`` on the xi grid."""
    E = np.asarray(E, dtype=float)
    L = E.shape[0]
    period = L if period is None else period
    k = _k(L)
    dE = spectral_derivative(E, period)
    # U1 = -(v/omega) [[omega^-2, -1/gamma], [1/gamma, 0]]
    return E[:, None, None, None] * u0_closed(model, k)[None] + 1j * dE[:, None, None, None] * u1_closed(model, k)[None]
