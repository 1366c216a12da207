"""Diffusion operator of the renewal equation for the temperature profile.

``K_{t,x} = 2 gamma (A_t^{22}(x))**2`` and ``K~_x = (gamma/2) int_0^inf K_{s,x} ds``;
the symbol of the lattice diffusion operator is

    D_hat(k) = sum_y (1 - cos(2 pi k y)) 2 K~_y.
"""

from dataclasses import dataclass, field

import numpy as np

from .lattice import wrap
from .propagator import a_hat_22, decay_rate, time_grid

__all__ = [
    "DiffusionKernel",
    "SmallKBounds",
    "build_diffusion",
    "diffusion_vs_kinetic",
    "diffusive_defect",
    "heat_semigroup",
    "k_kernel",
    "small_k_bounds",
]


@dataclass(frozen=True)
class DiffusionKernel:
    """``K~_x`` over the lattice and ``D_hat(k)`` over its dual (storage order)."""

    L: int
    model: object = field(repr=False)
    ktilde: np.ndarray = field(repr=False)
    dhat: np.ndarray = field(repr=False)

    @property
    def wavenumbers(self):
        return wrap(np.arange(self.L), self.L) / self.L

    @property
    def sites(self):
        return wrap(np.arange(self.L), self.L)


@dataclass(frozen=True)
class SmallKBounds:
    """Constants with ``C1 min(|k|, eps0)**2 <= D_hat(k) <= C2 k**2`` on the dual lattice."""

    c1: float
    c2: float
    eps0: float


def _a22_real(model, t, L):
    k = wrap(np.arange(L), L) / L
    return np.fft.ifft(a_hat_22(model, np.asarray(t)[..., None], k), axis=-1).real


def k_kernel(model, L, t, x=None):
    """``K_{t,x} = 2 gamma (A_t^{22}(x))**2``; all sites (storage order) if ``x`` is None."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    K = 2 * model.gamma * _a22_real(model, t, L) ** 2
    if x is None:
        return K
    return K[..., np.asarray(x) % L]


def build_diffusion(model, L, tol=1e-13, check=1e-9):
    """Tabulate ``K~`` by composite Gauss-Legendre in time and form ``D_hat``."""
    rate = decay_rate(model)
    t, w = time_grid(model.gamma, rate, tol)
    K = k_kernel(model, L, t)
    kt = 0.5 * model.gamma * (w @ K)
    # sum_x K~_x = (gamma/2) int 2 gamma int dk (A^22)^2 = gamma/2
    if not np.all(np.isfinite(kt)) or abs(kt.sum() - 0.5 * model.gamma) > check * model.gamma:
        raise FloatingPointError("diffusion kernel quadrature failed")
    kt = 0.5 * (kt + kt[(-np.arange(L)) % L])
    y = wrap(np.arange(L), L)
    k = y / L
    dhat = (1 - np.cos(2 * np.pi * np.outer(k, y))) @ (2 * kt)
    dhat[0] = 0.0
    return DiffusionKernel(int(L), model, kt, dhat)


def heat_semigroup(kernel, profile, t):
    """``exp(-t D) profile`` applied spectrally."""
    if t < 0:
        raise ValueError("t must be non-negative")
    f = np.asarray(profile, dtype=float)
    if f.shape != (kernel.L,):
        raise ValueError("profile length does not match the kernel")
    return np.fft.ifft(np.exp(-t * kernel.dhat) * np.fft.fft(f)).real


def small_k_bounds(kernel):
    """Fit ``C1, C2, eps0``; ``eps0`` maximizes the lower plateau ``C1 eps0**2``."""
    k = np.abs(kernel.wavenumbers)
    nz = k > 0
    d, kk = kernel.dhat[nz], k[nz]
    c2 = float(np.max(d / kk**2))
    best = (0.0, 0.0, 0.0)
    for eps in np.unique(kk):
        c1 = float(np.min(d / np.minimum(kk, eps) ** 2))
        if c1 * eps**2 > best[0]:
            best = (c1 * eps**2, c1, float(eps))
    return SmallKBounds(best[1], c2, best[2])


def diffusion_vs_kinetic(kernel, model=None):
    """Compare ``D_hat(k_min) / (2 pi k_min)**2`` with the kinetic conductivity ``kappa(L)``."""
    from .kinetic import kappa

    model = kernel.model if model is None else model
    kmin = 1.0 / kernel.L
    ratio = float(kernel.dhat[1] / (2 * np.pi * kmin) ** 2)
    kap = float(kappa(model, kernel.L))
    dev = abs(ratio - kap) / kap if kap > 0 else float("nan")
    return {"L": kernel.L, "dhat_ratio": ratio, "kappa": kap, "relative_deviation": dev}


def diffusive_defect(model, L, c0=0.5, profile=None):
    """``max |T_t - exp(-(t - t0) D) T_t0|`` with ``t = c0 L**2`` and ``t0 = t/2``."""
    from .covariance import cosine_profile, evolve_duhamel, modulated_state, temperature

    t = c0 * L**2
    s0 = modulated_state(model, L, cosine_profile(L) if profile is None else profile)
    mid = evolve_duhamel(model, s0, t / 2)
    end = evolve_duhamel(model, mid, t / 2)
    pred = heat_semigroup(build_diffusion(model, L), temperature(mid), t / 2)
    return float(np.max(np.abs(temperature(end) - pred)))
