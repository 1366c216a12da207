"""Event-driven simulation of the velocity-flip chain and Monte Carlo moments.

Between flips the chain follows the harmonic flow exactly; each site carries
an independent exponential clock of rate ``gamma / 2`` at whose rings the
momentum of that site changes sign.  Every realization draws from its own
counter-based stream keyed by ``(seed, index)``, so results do not depend on
how realizations are distributed over workers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import build_phi_matrix
from .lattice import wrap

__all__ = [
    "GaussianSampler",
    "MomentEstimate",
    "Trajectory",
    "estimate_covariance",
    "flip_event",
    "flip_rate",
    "hamiltonian",
    "harmonic_step",
    "realization_rng",
    "simulate",
]

# random numbers are drawn in chunks of this size; simulate and the batched
# estimator share the layout so they consume identical streams
EVENT_CHUNK = 256
DEFAULT_BLOCK = 1000


@dataclass
class Trajectory:
    t: float
    q: np.ndarray
    p: np.ndarray
    rng: np.random.Generator = field(default=None, repr=False)
    n_flips: int = 0

    def copy(self):
        return Trajectory(self.t, self.q.copy(), self.p.copy(), self.rng, self.n_flips)


@dataclass
class MomentEstimate:
    """Empirical second moments ``C_hat`` with per-entry standard errors."""

    C_hat: np.ndarray
    stderr: np.ndarray
    N: int
    flips: np.ndarray = field(default=None, repr=False)
    energy_drift: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two realizations")

    @property
    def L(self):
        return self.C_hat.shape[0] // 2

    def temperature(self):
        L = self.L
        return np.diag(self.C_hat[L:, L:]).copy()

    def temperature_stderr(self):
        L = self.L
        return np.diag(self.stderr[L:, L:]).copy()

    def state(self, t=0.0):
        from .covariance import CovarianceState

        return CovarianceState.from_full(self.C_hat, t)


def realization_rng(seed, index):
    """Independent stream for realization ``index`` of a run seeded by ``seed``."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def flip_rate(model, L):
    """Total flip rate ``gamma L / 2`` of the chain."""
    return 0.5 * model.gamma * L


class GaussianSampler:
    """Centered Gaussian law with second moments of a :class:`CovarianceState`.

    The square root is taken spectrally; eigenvalues below ``-tol * max`` are
    an error, smaller negative ones are clipped to zero.
    """

    def __init__(self, state, mean=None, tol=1e-10):
        C = state.full()
        lam, V = np.linalg.eigh(C)
        if lam.min() < -tol * max(lam.max(), 1.0):
            raise ValueError("covariance is not positive semidefinite")
        self.L = state.L
        self.root = V * np.sqrt(np.clip(lam, 0.0, None))
        self.mean = np.zeros(2 * self.L) if mean is None else np.asarray(mean, float).reshape(2 * self.L)

    def sample(self, rng, size=None):
        if size is None:
            x = self.root @ rng.standard_normal(2 * self.L) + self.mean
            return x[: self.L], x[self.L :]
        z = rng.standard_normal((size, 2 * self.L))
        x = z @ self.root.T + self.mean
        return x[:, : self.L], x[:, self.L :]


def _omega(model, L):
    return model.omega(wrap(np.arange(L), L) / L)


def harmonic_step(model, traj, tau, omega=None):
    """Advance the harmonic flow by ``tau`` (rotation of each Fourier mode)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    L = traj.q.shape[0]
    w = _omega(model, L) if omega is None else omega
    qh = np.fft.fft(traj.q)
    ph = np.fft.fft(traj.p)
    c, s = np.cos(w * tau), np.sin(w * tau)
    q = np.fft.ifft(c * qh + s / w * ph).real
    p = np.fft.ifft(-w * s * qh + c * ph).real
    return Trajectory(traj.t + tau, q, p, traj.rng, traj.n_flips)


def flip_event(traj, site):
    """Negate the momentum at lattice site ``site``."""
    L = traj.p.shape[0]
    if int(site) != site or wrap(site, L) != site:
        raise ValueError(f"site {site} is not in the lattice")
    p = traj.p.copy()
    p[int(site) % L] *= -1.0
    return Trajectory(traj.t, traj.q.copy(), p, traj.rng, traj.n_flips + 1)


def hamiltonian(phi, q, p):
    """``(q . Phi q + p . p) / 2`` (broadcast over leading axes)."""
    return 0.5 * (np.einsum("...i,ij,...j->...", q, phi, q) + np.sum(p * p, axis=-1))


def _event_chunk(rng, rate, L):
    return rng.exponential(1.0 / rate, EVENT_CHUNK), rng.integers(0, L, EVENT_CHUNK)


def simulate(model, sampler, t_end, seed, index=0, initial=None):
    """One exact trajectory up to ``t_end``.

    Parameters
    ----------
    sampler : GaussianSampler
        Law of the initial state; ignored when ``initial = (q, p)`` is given
        (the stream layout is the same either way).
    """
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    rng = realization_rng(seed, index)
    q, p = sampler.sample(rng)
    if initial is not None:
        q, p = (np.asarray(v, float).copy() for v in initial)
    L = q.shape[0]
    w = _omega(model, L)
    traj = Trajectory(0.0, q, p, rng, 0)
    rate = flip_rate(model, L)
    if rate == 0:
        return harmonic_step(model, traj, t_end, w)
    while True:
        dts, sites = _event_chunk(rng, rate, L)
        for dt, s in zip(dts, sites):
            if traj.t + dt > t_end:
                return harmonic_step(model, traj, t_end - traj.t, w)
            traj = harmonic_step(model, traj, dt, w)
            traj.p[s] = -traj.p[s]
            traj.n_flips += 1


# --------------------------------------------------------------------------
# batched estimator in normal-mode coordinates


def _block(args):
    model, root, mean, t_end, seed, lo, hi = args
    L = root.shape[0] // 2
    phi = build_phi_matrix(model, L)
    w2, V = np.linalg.eigh(phi)
    w = np.sqrt(w2)
    n = hi - lo
    rate = flip_rate(model, L)
    X0 = np.empty((n, 2 * L))
    times, sites = [], []
    for j, idx in enumerate(range(lo, hi)):
        rng = realization_rng(seed, idx)
        X0[j] = root @ rng.standard_normal(2 * L) + mean
        tt, ss = [], []
        total = 0.0
        while rate > 0 and total <= t_end:
            dts, si = _event_chunk(rng, rate, L)
            tt.append(dts)
            ss.append(si)
            total += dts.sum()
        if tt:
            tt = np.cumsum(np.concatenate(tt))
            keep = np.searchsorted(tt, t_end, side="right")
            times.append(tt[:keep])
            sites.append(np.concatenate(ss)[:keep])
        else:
            times.append(np.zeros(0))
            sites.append(np.zeros(0, int))
    counts = np.array([len(t) for t in times])
    m = counts.max(initial=0)
    T = np.full((n, m + 1), t_end)
    S = np.zeros((n, m + 1), int)
    active = np.zeros((n, m + 1), bool)
    for j in range(n):
        T[j, : counts[j]] = times[j]
        S[j, : counts[j]] = sites[j]
        active[j, : counts[j]] = True
    z = w * (X0[:, :L] @ V) + 1j * (X0[:, L:] @ V)
    e0 = 0.5 * np.sum(np.abs(z) ** 2, axis=1)
    now = np.zeros(n)
    rows = np.arange(n)
    for e in range(m + 1):
        z *= np.exp(-1j * np.outer(T[:, e] - now, w))
        now = T[:, e]
        act = active[:, e]
        if np.any(act):
            vs = V[S[act, e]]
            ps = np.sum(vs * z[act].imag, axis=1)
            z[rows[act]] -= 2j * ps[:, None] * vs
    q = (z.real / w) @ V.T
    p = z.imag @ V.T
    X = np.concatenate([q, p], axis=1)
    drift = 0.5 * np.sum(np.abs(z) ** 2, axis=1) / np.where(e0 > 0, e0, 1.0) - np.where(e0 > 0, 1.0, 0.0)
    return X, counts, drift


def estimate_covariance(model, sampler, t_end, N, seed, block=DEFAULT_BLOCK, workers=1, return_samples=False):
    """Empirical second moments of ``X_t = (q_t, p_t)`` over ``N`` realizations.

    Realization ``i`` uses the stream ``realization_rng(seed, i)`` with the same
    draw layout as :func:`simulate`.  Blocks are reduced in index order so
    the result is independent of ``workers``.
    """
    if N < 100:
        raise ValueError("N must be at least 100")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    jobs = [(model, sampler.root, sampler.mean, float(t_end), seed, lo, min(lo + block, N)) for lo in range(0, N, block)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_block, jobs))
    else:
        results = [_block(j) for j in jobs]
    S1 = np.zeros((results[0][0].shape[1],) * 2)
    for X, _, _ in results:
        S1 += X.T @ X
    mean = S1 / N
    sq = np.zeros_like(S1)
    for X, _, _ in results:
        for lo in range(0, X.shape[0], 256):
            Y = X[lo : lo + 256]
            dev = Y[:, :, None] * Y[:, None, :] - mean
            sq += np.einsum("nij,nij->ij", dev, dev)
    var = sq / (N - 1)
    est = MomentEstimate(
        mean,
        np.sqrt(var / N),
        N,
        np.concatenate([r[1] for r in results]),
        np.concatenate([r[2] for r in results]),
    )
    if return_samples:
        return est, np.concatenate([r[0] for r in results])
    return est
