"""Periodic one-dimensional lattice, Fourier transforms and averaging kernels.

Arrays over the lattice are stored in FFT order: entry ``i`` holds the value
at the site ``wrap(i, L)``, and entry ``m`` of a dual array holds the value
at the wavenumber ``wrap(m, L) / L``.  With this layout the transform

    f_hat(k) = sum_x f(x) exp(-2 pi i k x)

is exactly ``numpy.fft.fft`` and the inverse, normalized by
``int dk = (1/L) sum_k``, is ``numpy.fft.ifft``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate

__all__ = [
    "AveragingKernel",
    "PeriodicLattice",
    "build_kernel",
    "bump_hat",
    "dft",
    "idft",
    "phi0",
    "phi0_hat",
    "wrap",
]

# Largest L for which the direct matrix transform is offered.
DIRECT_DFT_MAX = 512


def wrap(x, L):
    """Map integers (or reals) into the fundamental domain of the lattice.

    For odd ``L`` the domain is ``{-(L-1)/2, ..., (L-1)/2}``; for even ``L``
    it is ``{-L/2+1, ..., L/2}``.
    """
    L = int(L)
    if L <= 0:
        raise ValueError("L must be positive")
    lo = -((L - 1) // 2)
    out = (np.asarray(x) - lo) % L + lo
    if np.ndim(out) == 0:
        return out.item()
    return out


@dataclass(frozen=True)
class PeriodicLattice:
    """The periodic lattice with ``L`` sites and its dual."""

    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L <= 0:
            raise ValueError("L must be a positive integer")

    @property
    def sites(self):
        """Site labels in storage (FFT) order."""
        return wrap(np.arange(self.L), self.L)

    @property
    def canonical_sites(self):
        """Site labels in increasing order."""
        return np.sort(self.sites)

    @property
    def wavenumbers(self):
        """Dual lattice points ``k = n/L`` in storage order."""
        return self.sites / self.L

    def wrap(self, x):
        return wrap(x, self.L)

    def index(self, x):
        """Storage index of the site ``x`` (any integer representative)."""
        return np.asarray(x) % self.L

    def dft(self, f, axis=-1, method="auto"):
        return dft(f, axis=axis, method=method, L=self.L)

    def idft(self, f, axis=-1, method="auto"):
        return idft(f, axis=axis, method=method, L=self.L)


@lru_cache(maxsize=32)
def _dft_matrix(L):
    n = np.arange(L)
    # integer phases keep the reference path exact up to one rounding
    phase = np.outer(n, n) % L
    mat = np.exp(-2j * np.pi * phase / L)
    mat.setflags(write=False)
    return mat


def _select(L, method):
    if method == "auto":
        if L & (L - 1) == 0:
            return "fft"
        return "direct" if L <= DIRECT_DFT_MAX else "fft"
    if method not in ("fft", "direct"):
        raise ValueError(f"unknown method {method!r}")
    if method == "direct" and L > DIRECT_DFT_MAX:
        raise ValueError(f"direct transform limited to L <= {DIRECT_DFT_MAX}")
    return method


def _check_length(f, axis, L):
    f = np.asarray(f)
    if f.ndim == 0:
        raise ValueError("expected an array")
    n = f.shape[axis]
    if L is not None and n != L:
        raise ValueError(f"array length {n} does not match L={L}")
    return f, n


def dft(f, axis=-1, method="auto", L=None):
    """Discrete Fourier transform ``sum_x f(x) exp(-2 pi i k x)``.

    Parameters
    ----------
    f : array_like
        Values over the lattice in storage order along ``axis``.
    method : {"auto", "fft", "direct"}
        ``"direct"`` applies the dense transform matrix (reference path),
        ``"fft"`` uses :func:`numpy.fft.fft`.
    L : int, optional
        Expected length; a mismatch raises ``ValueError``.
    """
    f, n = _check_length(f, axis, L)
    if _select(n, method) == "fft":
        return np.fft.fft(f, axis=axis)
    f = np.moveaxis(f, axis, -1)
    out = f @ _dft_matrix(n).T
    return np.moveaxis(out, -1, axis)


def idft(fh, axis=-1, method="auto", L=None):
    """Inverse transform ``int dk f_hat(k) exp(2 pi i k x)`` with ``int dk = (1/L) sum_k``."""
    fh, n = _check_length(fh, axis, L)
    if _select(n, method) == "fft":
        return np.fft.ifft(fh, axis=axis)
    fh = np.moveaxis(fh, axis, -1)
    out = fh @ _dft_matrix(n).conj().T / n
    return np.moveaxis(out, -1, axis)


# --------------------------------------------------------------------------
# averaging kernel


def _bump(p):
    p = np.asarray(p, dtype=float)
    s = 1.0 - (2.0 * p) ** 2
    out = np.zeros_like(p)
    inside = s > 0
    out[inside] = np.exp(-1.0 / s[inside])
    return out


@lru_cache(maxsize=1)
def _bump_constant():
    val, _ = integrate.quad(lambda p: _bump(p) ** 2, -0.5, 0.5, epsabs=1e-15, epsrel=1e-13)
    return 1.0 / np.sqrt(val)


def bump_hat(p):
    """The bump ``g_hat(p) = c exp(-1/(1-(2p)^2))`` on ``|p| < 1/2``, normalized in L2."""
    return _bump_constant() * _bump(p)


def _phi0_hat_scalar(s):
    s = abs(float(s))
    if s >= 1.0:
        return 0.0
    val, _ = integrate.quad(
        lambda p: bump_hat(p) * bump_hat(s - p),
        s - 0.5,
        0.5,
        epsabs=1e-16,
        epsrel=1e-13,
        limit=200,
    )
    return val


def phi0_hat(s):
    """Fourier transform of ``phi0 = g**2``, i.e. the autoconvolution of ``g_hat``.

    Supported in ``[-1, 1]`` with ``phi0_hat(0) = 1``.
    """
    s = np.asarray(s, dtype=float)
    out = np.vectorize(_phi0_hat_scalar, otypes=[float])(s)
    return out.item() if out.ndim == 0 else out


def phi0(y, n_nodes=2048):
    """The profile ``phi0(y) = g(y)**2`` on the real line.

    ``g`` is evaluated by the trapezoidal rule on the support of ``g_hat``,
    which converges faster than any power because the bump is smooth and
    periodic on its support.
    """
    y = np.asarray(y, dtype=float)
    p = (np.arange(n_nodes) + 0.5) / n_nodes - 0.5
    w = bump_hat(p) / n_nodes
    g = np.cos(2.0 * np.pi * np.multiply.outer(y, p)) @ w
    return g**2


@dataclass(frozen=True)
class AveragingKernel:
    """Periodized lattice averaging kernel ``phi(xi) = R^-1 sum_n phi0((xi - L n)/R)``.

    Attributes
    ----------
    R : float
        Averaging scale.
    L : float
        Period.
    rho_phi : float
        Support radius of ``phi0_hat``.
    grid, samples : ndarray
        Tabulation of ``phi`` over ``[0, L)``.
    """

    R: float
    L: float
    rho_phi: float
    grid: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    _fourier: np.ndarray = field(repr=False)
    _spline: interpolate.CubicSpline = field(repr=False)

    @property
    def spacing(self):
        return self.grid[1] - self.grid[0]

    def __call__(self, xi):
        """Kernel values by periodic cubic interpolation of the table."""
        return self._spline(np.mod(xi, self.L))

    def derivative(self, xi, order=1):
        return self._spline(np.mod(xi, self.L), order)

    def exact(self, xi):
        """Kernel values from the finite Fourier series, bypassing the table."""
        m = np.arange(1, len(self._fourier))
        xi = np.asarray(xi, dtype=float)
        arg = 2.0 * np.pi * np.multiply.outer(xi, m) / self.L
        return (self._fourier[0] + 2.0 * np.cos(arg) @ self._fourier[1:]) / self.L

    def fourier(self, k):
        """``phi0_hat(R k)``, the lattice transform of the kernel at ``xi = 0``."""
        return phi0_hat(self.R * np.asarray(k, dtype=float))

    def lattice_weights(self, xi, L=None):
        """Matrix ``w[i, j] = phi(xi_i - x_j)`` for the sites ``x_j`` in storage order."""
        L = int(np.rint(self.L)) if L is None else int(L)
        x = wrap(np.arange(L), L)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return self(np.subtract.outer(xi, x))


def build_kernel(R, L, oversample=64):
    """Build the averaging kernel of scale ``R`` on a period ``L``.

    The tabulated samples come from the Poisson-dual representation

        phi(xi) = (1/L) sum_m phi0_hat(R m / L) exp(2 pi i m xi / L),

    a finite sum because ``phi0_hat`` vanishes outside ``[-1, 1]``.
    """
    rho = 1.0
    R = float(R)
    L = float(L)
    if R < 2.0 * rho:
        raise ValueError(f"averaging scale R={R} must be at least {2.0 * rho}")
    if L <= R:
        raise ValueError("period L must exceed R")
    m_max = int(np.ceil(rho * L / R))
    coef = np.asarray(phi0_hat(R * np.arange(m_max + 1) / L), dtype=float)
    coef = np.atleast_1d(coef)
    h = min(R, 1.0) / oversample
    n = int(np.ceil(L / h - 1e-9))
    grid = np.arange(n) * (L / n)
    m = np.arange(1, m_max + 1)
    samples = (coef[0] + 2.0 * np.cos(2.0 * np.pi * np.outer(grid, m) / L) @ coef[1:]) / L
    knots = np.append(grid, L)
    spline = interpolate.CubicSpline(knots, np.append(samples, samples[0]), bc_type="periodic")
    grid.setflags(write=False)
    samples.setflags(write=False)
    return AveragingKernel(R, L, rho, grid, samples, coef, spline)
