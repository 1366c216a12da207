"""Phonon Boltzmann description: collision operators, homogeneous relaxation,
transport, current and conductivity.

The kinetic state is the pair ``W_mp = W^{-,+}`` and ``W_mm = W^{-,-}`` over
``(xi, k)``, storage order on both axes.  The homogeneous polarization fields
are

    H, I = (W_mp(k) +- W_mp(-k)*) / 2,
    P, Q = (V(k) +- V(-k)*) / 2,   V = exp(2 i t omega) W_mm.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .lattice import wrap

__all__ = [
    "HomogeneousState",
    "KineticState",
    "QuasiStationaryReport",
    "collision_full",
    "collision_simple",
    "current",
    "energy_density",
    "evolve_homogeneous",
    "evolve_transport",
    "fit_decay_rate",
    "homogeneous_generator",
    "homogeneous_rhs",
    "kappa",
    "kappa_reference",
    "quasi_stationary_check",
    "stationary_contraction",
    "stationary_solve",
]


def _k(L):
    return wrap(np.arange(L), L) / L


def _negk(L):
    return (-np.arange(L)) % L


def collision_simple(model, f):
    """``C_bar[f](k) = gamma int dq (f(q) - f(k))`` along the last axis."""
    f = np.asarray(f)
    return model.gamma * (f.mean(axis=-1, keepdims=True) - f)


def _full(gamma, w, t, Wmp, Wmm, refl, re_mean):
    """Both components of the full collision operator.

    ``refl(F)`` returns ``F(-k)*`` and ``re_mean(F)`` returns
    ``int dq Re F(q)`` (broadcastable against ``F``), in the representation
    of the inputs.
    """
    e = np.exp(2j * t * w)
    V = e * Wmm
    avg = re_mean(V - Wmp)
    c_mm = -gamma * Wmm + 0.5 * gamma * np.conj(e) * (refl(Wmp) + Wmp) + gamma * np.conj(e) * avg
    c_mp = -gamma * Wmp + 0.5 * gamma * (refl(V) + V) - gamma * avg
    return c_mp, c_mm


def _real_ops(L):
    n = _negk(L)

    def refl(F):
        return np.conj(F[..., n])

    def re_mean(F):
        return F.real.mean(axis=-1, keepdims=True)

    return refl, re_mean


def collision_full(model, Wmp, Wmm, t):
    """``(C^{-,+}, C^{-,-})`` with the phases ``exp(+-2 i t omega)`` evaluated at ``t``.

    ``Wmp``, ``Wmm`` have shape ``(..., L)``; any leading axes (e.g. ``xi``)
    are treated pointwise.
    """
    Wmp = np.asarray(Wmp, complex)
    Wmm = np.asarray(Wmm, complex)
    L = Wmp.shape[-1]
    refl, re_mean = _real_ops(L)
    return _full(model.gamma, model.omega(_k(L)), t, Wmp, Wmm, refl, re_mean)


# --------------------------------------------------------------------------
# homogeneous dynamics


@dataclass
class HomogeneousState:
    H: np.ndarray
    I: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.H, self.I, self.P, self.Q = (np.asarray(a, complex) for a in (self.H, self.I, self.P, self.Q))

    @property
    def L(self):
        return self.H.shape[-1]

    def stack(self):
        return np.stack([self.H, self.I, self.P, self.Q])

    @classmethod
    def from_stack(cls, y, t):
        return cls(y[0], y[1], y[2], y[3], t)

    def to_wigner(self, model):
        """``(W_mp, W_mm)`` at the state's time."""
        w = model.omega(_k(self.L))
        return self.H + self.I, np.exp(-2j * self.t * w) * (self.P + self.Q)

    @classmethod
    def from_wigner(cls, model, Wmp, Wmm, t):
        L = Wmp.shape[-1]
        n = _negk(L)
        V = np.exp(2j * t * model.omega(_k(L))) * Wmm
        Wr, Vr = np.conj(Wmp[..., n]), np.conj(V[..., n])
        return cls(0.5 * (Wmp + Wr), 0.5 * (Wmp - Wr), 0.5 * (V + Vr), 0.5 * (V - Vr), t)

    def symmetry_defect(self):
        n = _negk(self.L)
        r = lambda F: np.conj(F[..., n])
        return max(
            float(np.abs(self.H - r(self.H)).max()),
            float(np.abs(self.P - r(self.P)).max()),
            float(np.abs(self.I + r(self.I)).max()),
            float(np.abs(self.Q + r(self.Q)).max()),
        )


def _hom_rhs(gamma, w, y):
    H, I, P, Q = y
    cH = gamma * (H.mean(axis=-1, keepdims=True) - H)
    dH = gamma * ((H - P).mean(axis=-1, keepdims=True) - (H - P))
    dI = -gamma * I
    dP = -gamma * P + 2j * w * Q + gamma * P.mean(axis=-1, keepdims=True) - cH
    dQ = 2j * w * P - gamma * Q
    return np.stack([dH, dI, dP, dQ])


def homogeneous_rhs(model, state):
    """Time derivative of ``(H, I, P, Q)`` as a stacked array."""
    return _hom_rhs(model.gamma, model.omega(_k(state.L)), state.stack())


def homogeneous_generator(model, L):
    """The ``4L x 4L`` matrix of the homogeneous system (blocks ordered H, I, P, Q)."""
    G = np.zeros((4 * L, 4 * L), complex)
    w = model.omega(_k(L))
    for j in range(4 * L):
        e = np.zeros(4 * L, complex)
        e[j] = 1.0
        G[:, j] = _hom_rhs(model.gamma, w, e.reshape(4, L)).ravel()
    return G


def _max_hom_step(model):
    return 0.1 / max(model.gamma, 2 * model.omega_max)


def evolve_homogeneous(model, state, t_end, h, observer=None):
    """RK4 on the homogeneous system; ``observer(state)`` is called after every step."""
    if h <= 0 or h > _max_hom_step(model) * (1 + 1e-12):
        raise ValueError(f"step must lie in (0, {_max_hom_step(model):.6g}]")
    n = int(np.ceil(t_end / h - 1e-9))
    if n <= 0:
        return HomogeneousState.from_stack(state.stack(), state.t)
    hh = t_end / n
    g, w = model.gamma, model.omega(_k(state.L))
    y = state.stack()
    t = state.t
    for i in range(n):
        k1 = _hom_rhs(g, w, y)
        k2 = _hom_rhs(g, w, y + 0.5 * hh * k1)
        k3 = _hom_rhs(g, w, y + 0.5 * hh * k2)
        k4 = _hom_rhs(g, w, y + hh * k3)
        y = y + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = state.t + (i + 1) * hh
        if observer is not None:
            observer(HomogeneousState.from_stack(y, t))
    return HomogeneousState.from_stack(y, t)


def stationary_contraction(model, L):
    """``gamma**2 / (gamma**2 + 4 omega(k)**2)`` on the dual lattice."""
    return model.gamma**2 / (model.gamma**2 + 4 * model.omega_squared(_k(L)))


def stationary_solve(model, L, E=1.0):
    """The stationary homogeneous state ``H = E``, ``I = P = Q = 0``.

    A stationary ``P`` must satisfy ``P(k) = c(k) int dq P(q)`` with
    ``c = gamma**2/(gamma**2 + 4 omega**2)``; integrating gives
    ``(1 - int c) int P = 0``, and ``c < 1`` everywhere forces ``P = 0``.
    """
    if np.iscomplexobj(E) and np.imag(E) != 0:
        raise ValueError("the stationary value E must be real")
    E = float(np.real(E))
    c = stationary_contraction(model, L)
    if not np.all(c < 1.0):
        raise ValueError("stationary contraction factor is not below one")
    z = np.zeros(L, complex)
    return HomogeneousState(np.full(L, E, complex), z, z.copy(), z.copy(), 0.0)


# --------------------------------------------------------------------------
# transport


@dataclass
class KineticState:
    """``W_mp``, ``W_mm`` over ``(xi, k)``; ``xi`` on ``L_xi`` uniform points of period ``L_xi``."""

    W_mp: np.ndarray
    W_mm: np.ndarray
    t: float = 0.0
    period: float = field(default=None)

    def __post_init__(self):
        self.W_mp = np.asarray(self.W_mp, complex)
        self.W_mm = np.asarray(self.W_mm, complex)
        if self.W_mp.ndim != 2 or self.W_mp.shape != self.W_mm.shape:
            raise ValueError("W_mp and W_mm must be equal-shape (n_xi, L) arrays")
        if self.period is None:
            self.period = float(self.W_mp.shape[0])

    def copy(self):
        return KineticState(self.W_mp.copy(), self.W_mm.copy(), self.t, self.period)


def energy_density(state, tol=None):
    """``E(xi) = Re int dk W_mp(xi, k)``; ``tol`` bounds the imaginary part if given."""
    E = state.W_mp.mean(axis=-1)
    if tol is not None and np.abs(E.imag).max() > tol:
        raise FloatingPointError("energy density has a significant imaginary part")
    return E.real


def current(state, model):
    """``j(xi) = Re int dk v(k) W_mp(xi, k)``."""
    v = model.group_velocity(_k(state.W_mp.shape[-1]))
    return (state.W_mp * v).mean(axis=-1).real


def kappa(model, L):
    """``kappa(L) = gamma**-1 int dk v(k)**2`` over the dual lattice."""
    v = model.group_velocity(_k(int(L)))
    return float(np.mean(v**2) / model.gamma)


def kappa_reference(model):
    """``gamma**-1 int_{-1/2}^{1/2} v(k)**2 dk`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda k: float(model.group_velocity(k)) ** 2, -0.5, 0.5, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val / model.gamma


def _modes(state, tol=1e-12):
    """Active xi-frequencies: content above ``tol`` times the peak, closed under n -> -n."""
    n_xi = state.W_mp.shape[0]
    amp = np.abs(np.fft.fft(state.W_mp, axis=0)).max(axis=1) + np.abs(np.fft.fft(state.W_mm, axis=0)).max(axis=1)
    act = amp > tol * max(amp.max(), 1e-300)
    act[0] = True
    act |= act[(-np.arange(n_xi)) % n_xi]
    return np.flatnonzero(act)


def _max_transport_step(model, q_max):
    v_max = float(np.abs(model.group_velocity(np.arange(4096) / 4096 - 0.5)).max())
    lim = 1.0 / model.gamma if model.gamma > 0 else np.inf
    if q_max * v_max > 0:
        lim = min(lim, 1.0 / (q_max * v_max))
    return 0.1 * lim


def evolve_transport(model, state, t_end, h, observer=None, every=1, modes=None, growth_limit=10.0):
    """Evolve the transport pair by ``t_end``.

    Each active ``xi``-Fourier mode ``n`` is advanced by the integrating-factor
    RK4 scheme with the exact transport multiplier ``-i (2 pi n / period) v(k)``;
    the collisions (with phases at the stage times) are the explicit part.
    Mode ``n = 0`` therefore sees plain RK4, which conserves the real part of
    the total energy exactly.  Only the active modes are evolved; the
    equations couple ``n`` with ``-n`` only, so this is exact.

    Parameters
    ----------
    observer : callable, optional
        ``observer(t, E_hat, Wmp_hat, Wmm_hat, modes)`` every ``every`` steps,
        with the mode-space fields (``xi``-FFT convention).
    """
    n_xi, L = state.W_mp.shape
    modes = _modes(state) if modes is None else np.asarray(modes)
    nfreq = wrap(modes, n_xi).astype(float)
    q = 2 * np.pi * nfreq / state.period
    q_max = float(np.abs(q).max())
    if h <= 0 or h > _max_transport_step(model, q_max) * (1 + 1e-12):
        raise ValueError(f"step must lie in (0, {_max_transport_step(model, q_max):.6g}]")
    pos = {int(m): i for i, m in enumerate(modes)}
    negn = np.array([pos[int((-m) % n_xi)] for m in modes])
    negk = _negk(L)
    k = _k(L)
    w = model.omega(k)
    v = model.group_velocity(k)
    g = model.gamma

    def refl(F):
        return np.conj(F[negn][:, negk])

    def re_mean(F):
        m = F.mean(axis=-1)
        return (0.5 * (m + np.conj(m[negn])))[:, None]

    A = np.fft.fft(state.W_mp, axis=0)[modes]
    B = np.fft.fft(state.W_mm, axis=0)[modes]
    n_steps = int(np.ceil(t_end / h - 1e-9))
    hh = t_end / n_steps if n_steps else 0.0
    half = np.exp(-0.5j * hh * np.outer(q, v))
    full = half * half
    norm0 = max(np.sqrt(np.sum(np.abs(A) ** 2) + np.sum(np.abs(B) ** 2)), 1e-300)

    def F(t, a, b):
        return _full(g, w, t, a, b, refl, re_mean)

    t = state.t
    for step in range(n_steps):
        a1, b1 = F(t, A, B)
        a2, b2 = F(t + 0.5 * hh, half * (A + 0.5 * hh * a1), half * (B + 0.5 * hh * b1))
        a3, b3 = F(t + 0.5 * hh, half * A + 0.5 * hh * a2, half * B + 0.5 * hh * b2)
        a4, b4 = F(t + hh, full * A + hh * half * a3, full * B + hh * half * b3)
        A = full * A + hh / 6 * (full * a1 + 2 * half * (a2 + a3) + a4)
        B = full * B + hh / 6 * (full * b1 + 2 * half * (b2 + b3) + b4)
        t = state.t + (step + 1) * hh
        if (step + 1) % 64 == 0 or step + 1 == n_steps:
            nrm = np.sqrt(np.sum(np.abs(A) ** 2) + np.sum(np.abs(B) ** 2))
            if not np.isfinite(nrm) or nrm > growth_limit * norm0:
                raise FloatingPointError(f"transport solver unstable at t={t:.6g}")
        if observer is not None and (step + 1) % every == 0:
            observer(t, A.mean(axis=-1), A, B, modes)
    Wmp = np.zeros((n_xi, L), complex)
    Wmm = np.zeros((n_xi, L), complex)
    Wmp[modes] = A
    Wmm[modes] = B
    return KineticState(np.fft.ifft(Wmp, axis=0), np.fft.ifft(Wmm, axis=0), t, state.period)


def fit_decay_rate(times, amplitudes):
    """Least-squares rate ``r`` in ``|a(t)| ~ C exp(-r t)``."""
    t = np.asarray(times, dtype=float)
    y = np.log(np.abs(np.asarray(amplitudes)))
    A = np.vstack([t, np.ones_like(t)]).T
    (a, _), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(-a)


# --------------------------------------------------------------------------
# quasi-stationary inhomogeneous fields


@dataclass
class QuasiStationaryReport:
    R: tuple
    support_leak: tuple
    max_P: tuple
    max_Q: tuple
    max_I: tuple

    def ratios(self):
        """Contraction factors between consecutive scales for ``P``, ``Q``, ``I``."""
        out = []
        for i in range(len(self.R) - 1):
            out.append(
                {
                    "R": (self.R[i], self.R[i + 1]),
                    "P": self.max_P[i] / self.max_P[i + 1],
                    "Q": self.max_Q[i] / self.max_Q[i + 1],
                    "I": self.max_I[i] / self.max_I[i + 1],
                }
            )
        return out

    def lines(self):
        out = []
        for R, leak, p, qq, i in zip(self.R, self.support_leak, self.max_P, self.max_Q, self.max_I):
            out.append(f"R={R:g}: support leak {leak:.3e}, max|P| {p:.6e}, max|Q| {qq:.6e}, max|I| {i:.6e}")
        for r in self.ratios():
            out.append(f"R {r['R'][0]:g} -> {r['R'][1]:g}: P x{r['P']:.3f}, Q x{r['Q']:.3f}, I x{r['I']:.3f}")
        return out


def quasi_stationary_check(snapshots, model):
    """Measure ``H, I, P, Q`` of near-stationary microscopic states at several scales.

    Parameters
    ----------
    snapshots : sequence of (CovarianceState, R)
        States and the averaging scale to use for each, in increasing ``R``.

    The support leak is the largest ``|H_hat(n, k)|`` with ``|n| / n_xi >= 1/R``,
    relative to the peak of ``|H_hat|``.
    """
    from .lattice import build_kernel
    from .wigner import hipq_decompose, modified_wigner

    Rs, leak, mp, mq, mi = [], [], [], [], []
    for state, R in snapshots:
        kern = build_kernel(R, state.L)
        f = hipq_decompose(modified_wigner(state, kern, model), model)
        Hh = np.abs(np.fft.fft(f.H, axis=0))
        n = np.abs(wrap(np.arange(Hh.shape[0]), Hh.shape[0])) / Hh.shape[0]
        outside = n >= kern.rho_phi / R
        leak.append(float(Hh[outside].max() / Hh.max()) if np.any(outside) else 0.0)
        Rs.append(float(R))
        mp.append(float(np.abs(f.P).max()))
        mq.append(float(np.abs(f.Q).max()))
        mi.append(float(np.abs(f.I).max()))
    return QuasiStationaryReport(tuple(Rs), tuple(leak), tuple(mp), tuple(mq), tuple(mi))
