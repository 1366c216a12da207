"""Closed-form propagator symbol, its real-space kernel and stationary matrices.

The symbol ``A_hat_t(k) = exp(-t M_hat(k))`` with ``M_hat = [[0, w], [-1, gamma]]``
and ``w = omega(k)**2`` is written as

    A_hat_t = c_t I + s_t N,    N = [[gamma/2, -w], [1, -gamma/2]],

where ``c_t = exp(-gamma t/2) cosh(Omega t)`` and
``s_t = exp(-gamma t/2) sinh(Omega t) / Omega`` with
``Omega = sqrt(gamma**2/4 - w)`` taken complex.  Both are entire in
``Omega**2`` so the point ``Omega = 0`` is harmless.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial.legendre import leggauss

from .lattice import wrap

__all__ = [
    "PropagatorSymbol",
    "StationaryMatrices",
    "a_hat",
    "a_hat_dk",
    "a_real",
    "decay_rate",
    "q_closed",
    "q_numeric",
    "slowest_rate",
    "stationary_matrices",
    "symbol",
    "time_grid",
    "u0_closed",
    "u1_closed",
    "u_matrices_numeric",
]

SERIES_THRESHOLD = 1e-4
SERIES_TERMS = 5
# (t c - s) / Omega**2 loses digits like |Omega t|**-2; its series is used below this
DERIV_SERIES_THRESHOLD = 0.1
DERIV_SERIES_TERMS = 10
GL_NODES = 16


@dataclass(frozen=True)
class PropagatorSymbol:
    """Characteristic data of ``M_hat(k)``: ``mu_pm = gamma/2 +- Omega``."""

    k: np.ndarray
    Omega: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray


def _omega_cap(gamma, w):
    return np.sqrt(gamma**2 / 4.0 - np.asarray(w, dtype=complex))


def symbol(model, k):
    k = np.asarray(k, dtype=float)
    Om = _omega_cap(model.gamma, model.omega_squared(k))
    return PropagatorSymbol(k, Om, model.gamma / 2 + Om, model.gamma / 2 - Om)


def _cs(gamma, w, t):
    """Return ``c_t``, ``s_t`` (complex arrays, imaginary part round-off)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    Om = _omega_cap(gamma, w)
    Om, t = np.broadcast_arrays(Om, t)
    z = Om * t
    az = np.abs(z)
    damp = np.exp(-gamma * t / 2)
    c = np.empty(z.shape, complex)
    s = np.empty(z.shape, complex)

    small = az < SERIES_THRESHOLD
    if np.any(small):
        zz = z[small] ** 2
        cs = np.zeros(zz.shape, complex)
        ss = np.zeros(zz.shape, complex)
        for n in range(SERIES_TERMS):
            cs += zz**n / factorial(2 * n)
            ss += zz**n / factorial(2 * n + 1)
        c[small] = damp[small] * cs
        s[small] = damp[small] * t[small] * ss

    mid = (~small) & (az <= 1.0)
    if np.any(mid):
        c[mid] = damp[mid] * np.cosh(z[mid])
        s[mid] = damp[mid] * np.sinh(z[mid]) / Om[mid]

    big = az > 1.0
    if np.any(big):
        # exp(-mu_minus t) and exp(-mu_plus t): no overflow at long times
        em = np.exp(-(gamma / 2 - Om[big]) * t[big])
        ep = np.exp(-(gamma / 2 + Om[big]) * t[big])
        c[big] = 0.5 * (em + ep)
        s[big] = (em - ep) / (2 * Om[big])
    return c, s, Om


def _ds(gamma, w, t, c, s, Om):
    """``d s_t / d w``; note ``d c_t / d w = -t s_t / 2``."""
    t = np.broadcast_to(np.asarray(t, dtype=float), c.shape)
    z = Om * t
    out = np.empty(c.shape, complex)
    small = np.abs(z) < DERIV_SERIES_THRESHOLD
    if np.any(small):
        zz = z[small] ** 2
        acc = np.zeros(zz.shape, complex)
        for n in range(1, DERIV_SERIES_TERMS):
            acc += n * zz ** (n - 1) / factorial(2 * n + 1)
        out[small] = -np.exp(-gamma * t[small] / 2) * t[small] ** 3 * acc
    big = ~small
    if np.any(big):
        out[big] = -(t[big] * c[big] - s[big]) / (2 * Om[big] ** 2)
    return out


def _assemble(gamma, w, c, s):
    shape = c.shape + (2, 2)
    out = np.empty(shape)
    g2 = gamma / 2
    w = np.broadcast_to(w, c.shape)
    out[..., 0, 0] = (c + g2 * s).real
    out[..., 0, 1] = (-w * s).real
    out[..., 1, 0] = s.real
    out[..., 1, 1] = (c - g2 * s).real
    return out


def a_hat(model, t, k):
    """Propagator symbol ``A_hat_t(k) = exp(-t M_hat(k))`` (broadcast over ``t``, ``k``).

    The matrix is real; the trailing two axes hold the 2x2 entries.
    """
    w = model.omega_squared(np.asarray(k, dtype=float))
    c, s, _ = _cs(model.gamma, w, t)
    return _assemble(model.gamma, w, c, s)


def a_hat_22(model, t, k):
    w = model.omega_squared(np.asarray(k, dtype=float))
    c, s, _ = _cs(model.gamma, w, t)
    return (c - model.gamma / 2 * s).real


def a_hat_dk(model, t, k):
    """Analytic ``d A_hat_t(k) / dk`` through ``w = omega(k)**2``."""
    k = np.asarray(k, dtype=float)
    w = model.omega_squared(k)
    c, s, Om = _cs(model.gamma, w, t)
    ds = _ds(model.gamma, w, t, c, s, Om)
    tt = np.broadcast_to(np.asarray(t, dtype=float), c.shape)
    dc = -0.5 * tt * s
    g2 = model.gamma / 2
    wb = np.broadcast_to(w, c.shape)
    dA = np.empty(c.shape + (2, 2))
    dA[..., 0, 0] = (dc + g2 * ds).real
    dA[..., 0, 1] = (-wb * ds - s).real
    dA[..., 1, 0] = ds.real
    dA[..., 1, 1] = (dc - g2 * ds).real
    dw = np.broadcast_to(model.potential.symbol_derivative(k), c.shape)
    return dA * dw[..., None, None]


def a_real(model, t, L):
    """Real-space kernel ``A_t(x)`` over the lattice (storage order), shape ``(L, 2, 2)``."""
    L = int(L)
    k = wrap(np.arange(L), L) / L
    Ah = a_hat(model, t, k)
    out = np.fft.ifft(Ah, axis=0)
    return out.real


def slowest_rate(model):
    """``gamma/2 - max_k Re Omega(k)``: the slowest decay rate of ``A_hat_t``."""
    w = model.omega_squared(model.validation_points())
    return float(model.gamma / 2 - _omega_cap(model.gamma, w).real.max())


def decay_rate(model):
    """``delta0 = gamma/2 - Omega(omega0)`` in the regime ``gamma > 2 omega_max``."""
    if not model.in_theorem_regime():
        raise ValueError("decay_rate requires gamma > 2 omega_max")
    Om = np.sqrt(model.gamma**2 / 4 - model.omega0**2)
    return float(model.gamma / 2 - Om)


def time_grid(gamma, rate, tol=1e-12, nodes=GL_NODES):
    """Composite Gauss-Legendre rule on ``[0, T]`` with ``exp(-2 rate T) < tol``.

    Windows start at width ``1/(4 gamma)`` and double until they reach
    ``2/rate``; later windows keep that width.  The horizon carries a margin
    for the polynomial prefactors of derivative integrands.
    """
    if rate <= 0:
        raise ValueError("integrand does not decay")
    T = (np.log(1.0 / tol) + 6.0) / (2.0 * rate)
    x, w = leggauss(nodes)
    width = 0.25 / max(gamma, rate)
    cap = 2.0 / rate
    a = 0.0
    ts, ws = [], []
    while a < T:
        b = a + width
        ts.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
        a = b
        width = min(2 * width, cap)
    return np.concatenate(ts), np.concatenate(ws)


def _theorem_grid(model, tol):
    return time_grid(model.gamma, decay_rate(model), tol)


def q_closed(model, k):
    """``q(k) = omega'(k) / (gamma omega(k))``."""
    return model.omega_prime(k) / (model.gamma * model.omega(k))


def q_numeric(model, k, tol=1e-12):
    """``q(k) = 2 gamma int_0^inf dt A_hat_t^{22} d_k A_hat_t^{21}`` by quadrature."""
    t, wt = _theorem_grid(model, tol)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    A = a_hat(model, t[:, None], k[None, :])
    dA = a_hat_dk(model, t[:, None], k[None, :])
    val = 2 * model.gamma * (wt @ (A[..., 1, 1] * dA[..., 1, 0]))
    if not np.all(np.isfinite(val)):
        raise FloatingPointError("q(k) quadrature did not converge")
    return val


def u0_closed(model, k):
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape + (2, 2))
    out[..., 0, 0] = 1.0 / model.omega_squared(k)
    out[..., 1, 1] = 1.0
    return out


def u1_closed(model, k):
    """``U1(k) = -(v/omega) [[omega**-2, -1/gamma], [1/gamma, 0]]``."""
    k = np.asarray(k, dtype=float)
    f = -model.group_velocity(k) / model.omega(k)
    out = np.zeros(k.shape + (2, 2))
    out[..., 0, 0] = f / model.omega_squared(k)
    out[..., 0, 1] = -f / model.gamma
    out[..., 1, 0] = f / model.gamma
    return out


def u_matrices_numeric(model, k, tol=1e-12):
    """``2 gamma int A^T P2 A dt`` and ``2 gamma int (1/2 pi) (d_k A)^T P2 A dt``."""
    t, wt = _theorem_grid(model, tol)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    A = a_hat(model, t[:, None], k[None, :])
    dA = a_hat_dk(model, t[:, None], k[None, :])
    row = A[..., 1, :]
    drow = dA[..., 1, :]
    u0 = 2 * model.gamma * np.einsum("t,tki,tkj->kij", wt, row, row)
    u1 = 2 * model.gamma / (2 * np.pi) * np.einsum("t,tki,tkj->kij", wt, drow, row)
    return u0, u1


@dataclass(frozen=True)
class StationaryMatrices:
    """Closed forms of ``U0``, ``U1`` with the quadrature cross-check."""

    model: object
    max_deviation_u0: float
    max_deviation_u1: float

    def U0(self, k):
        return u0_closed(self.model, k)

    def U1(self, k):
        return u1_closed(self.model, k)


def stationary_matrices(model, k=None, tol=1e-12, check=1e-8):
    """Return ``U0``, ``U1`` and verify them against time quadrature on ``k``."""
    if k is None:
        k = np.arange(64) / 64 - 0.5
    n0, n1 = u_matrices_numeric(model, k, tol)
    d0 = float(np.abs(n0 - u0_closed(model, k)).max())
    d1 = float(np.abs(n1 - u1_closed(model, k)).max())
    if max(d0, d1) > check:
        raise FloatingPointError(f"stationary matrices quadrature mismatch ({d0:.2e}, {d1:.2e})")
    return StationaryMatrices(model, d0, d1)
