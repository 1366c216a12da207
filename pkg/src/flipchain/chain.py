"""Interaction potentials, dispersion relation and the model assumptions."""

from dataclasses import dataclass, field

import numpy as np

from .lattice import wrap

__all__ = [
    "AssumptionReport",
    "ChainModel",
    "Potential",
    "build_phi_matrix",
    "circulant_from_symbol",
    "validate_assumptions",
]

VALIDATION_GRID = 4096
NONDEGENERACY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class Potential:
    """Finite-range symmetric harmonic interaction ``Phi(x) = Phi(-x)``.

    Parameters
    ----------
    coefficients : sequence of float
        ``Phi(0), Phi(1), ..., Phi(r)``; negative offsets follow by symmetry.
    """

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        if not c:
            raise ValueError("potential needs at least Phi(0)")
        if not all(np.isfinite(c)):
            raise ValueError("potential coefficients must be finite")
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_pairs(cls, pairs):
        """Build from ``(offset, value)`` pairs with non-negative offsets."""
        pairs = list(pairs)
        offs = [int(o) for o, _ in pairs]
        if any(o < 0 for o in offs):
            raise ValueError("offsets must be non-negative; symmetry is completed automatically")
        if len(set(offs)) != len(offs):
            raise ValueError("duplicate offset")
        c = np.zeros(max(offs) + 1)
        for o, v in pairs:
            c[int(o)] = float(v)
        return cls(tuple(c))

    @classmethod
    def nearest_neighbour(cls, omega0=1.0):
        """``Phi(0) = 2 + omega0**2``, ``Phi(+-1) = -1``: ``omega**2 = omega0**2 + 4 sin(pi k)**2``."""
        return cls((2.0 + omega0**2, -1.0))

    @classmethod
    def onsite(cls, omega0=1.0):
        """Flat band ``omega(k) = omega0``."""
        return cls((omega0**2,))

    @classmethod
    def next_nearest(cls, omega0=1.0):
        """Coupling at distance two only: the chain splits into two sublattices."""
        return cls((2.0 + omega0**2, 0.0, -1.0))

    @property
    def reach(self):
        return len(self.coefficients) - 1

    @property
    def r_phi(self):
        """Range: ``Phi(x) = 0`` for ``|x| >= r_phi / 2``."""
        return 2 * self.reach + 1

    def pairs(self):
        return [(x, v) for x, v in enumerate(self.coefficients) if v != 0.0 or x == 0]

    def value(self, x):
        x = np.abs(np.asarray(x))
        c = np.asarray(self.coefficients)
        out = np.where(x <= self.reach, c[np.minimum(x, self.reach)], 0.0)
        return out.item() if out.ndim == 0 else out

    def symbol(self, k):
        """``Phi_hat(k) = Phi(0) + 2 sum_{x>0} Phi(x) cos(2 pi k x)``."""
        k = np.asarray(k, dtype=float)
        c = self.coefficients
        out = np.full(k.shape, c[0])
        for x in range(1, len(c)):
            out = out + 2.0 * c[x] * np.cos(2.0 * np.pi * k * x)
        return out

    def symbol_derivative(self, k):
        k = np.asarray(k, dtype=float)
        c = self.coefficients
        out = np.zeros(k.shape)
        for x in range(1, len(c)):
            out = out - 4.0 * np.pi * x * c[x] * np.sin(2.0 * np.pi * k * x)
        return out


@dataclass(frozen=True)
class ChainModel:
    """Velocity-flip harmonic chain: potential and flip rate ``gamma``.

    ``omega0`` and ``omega_max`` are the extremes of the dispersion relation
    on a uniform grid of ``grid`` points plus the dual lattices of
    ``lattice_sizes``.
    """

    potential: Potential
    gamma: float
    grid: int = VALIDATION_GRID
    lattice_sizes: tuple = ()
    omega0: float = field(init=False)
    omega_max: float = field(init=False)

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        object.__setattr__(self, "gamma", float(self.gamma))
        w2 = self.potential.symbol(self.validation_points())
        if w2.min() <= 0:
            raise ValueError("potential is not pinned: Phi_hat(k) <= 0 somewhere")
        object.__setattr__(self, "omega0", float(np.sqrt(w2.min())))
        object.__setattr__(self, "omega_max", float(np.sqrt(w2.max())))

    @classmethod
    def nearest_neighbour(cls, omega0=1.0, gamma=6.0, **kw):
        return cls(Potential.nearest_neighbour(omega0), gamma, **kw)

    @classmethod
    def onsite(cls, omega0=1.0, gamma=6.0, **kw):
        return cls(Potential.onsite(omega0), gamma, **kw)

    def with_gamma(self, gamma):
        return ChainModel(self.potential, gamma, self.grid, self.lattice_sizes)

    def validation_points(self):
        pts = [np.arange(self.grid) / self.grid - 0.5]
        pts += [wrap(np.arange(L), L) / L for L in self.lattice_sizes]
        return np.concatenate(pts)

    def omega_squared(self, k):
        return self.potential.symbol(k)

    def omega(self, k):
        """Dispersion relation ``omega(k) = sqrt(Phi_hat(k))``."""
        return np.sqrt(self.potential.symbol(k))

    def omega_prime(self, k):
        """``d omega / dk = Phi_hat'(k) / (2 omega)``."""
        return self.potential.symbol_derivative(k) / (2.0 * self.omega(k))

    def group_velocity(self, k):
        """``v(k) = omega'(k) / (2 pi)``."""
        return self.omega_prime(k) / (2.0 * np.pi)

    def m_hat(self, k):
        """Fourier symbol ``[[0, omega**2], [-1, gamma]]`` of the mean-flow generator."""
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape + (2, 2))
        out[..., 0, 1] = self.omega_squared(k)
        out[..., 1, 0] = -1.0
        out[..., 1, 1] = self.gamma
        return out

    def in_theorem_regime(self):
        return self.gamma > 2.0 * self.omega_max

    def phi_matrix(self, L):
        return build_phi_matrix(self, L)


def circulant_from_symbol(symbol):
    """Real symmetric circulant matrix whose dft symbol is ``symbol`` (storage order)."""
    symbol = np.asarray(symbol)
    L = symbol.shape[0]
    col = np.fft.ifft(symbol).real
    idx = (np.arange(L)[:, None] - np.arange(L)[None, :]) % L
    return col[idx]


def build_phi_matrix(model, L):
    """Periodic interaction matrix ``(Phi_L)_{x', x} = Phi([x' - x]_L)``."""
    pot = model.potential if isinstance(model, ChainModel) else model
    L = int(L)
    if L < pot.r_phi:
        raise ValueError(f"L={L} is smaller than the potential range {pot.r_phi}")
    x = wrap(np.arange(L), L)
    d = wrap(np.subtract.outer(x, x), L)
    return pot.value(d).astype(float)


@dataclass
class AssumptionReport:
    """Outcome of the five model assumptions.

    ``items`` maps the item number (1-5) to a pass flag. ``c_eps_table`` maps
    each tested ``eps`` to the minimum of the nondegeneracy integral over
    ``eps <= |k0| <= 1/2``.
    """

    items: dict
    c_eps_table: dict
    threshold: float
    details: dict

    @property
    def passed(self):
        return all(self.items.values())

    def lines(self):
        names = {
            1: "exponential decay",
            2: "symmetry",
            3: "pinning",
            4: "noise dominates",
            5: "nondegenerate harmonic forces",
        }
        out = []
        for i in range(1, 6):
            out.append(f"item {i} ({names[i]}): {'pass' if self.items[i] else 'FAIL'}")
        for eps, val in sorted(self.c_eps_table.items()):
            out.append(f"C_eps[eps={eps:g}] = {val:.6e} (threshold {self.threshold:g})")
        for key, val in self.details.items():
            out.append(f"{key} = {val}")
        return out


def _nondegeneracy(model, k0, n_k=512, tol=1e-10):
    """``int_0^inf dt int dk (F_t(k + k0/2) - F_t(k - k0/2))**2`` for each ``k0``.

    ``F_t = A_hat_t^{22}``.  Uniform nodes in ``k`` (periodic integrand) and
    composite Gauss-Legendre in ``t``.
    """
    from .propagator import a_hat_22, slowest_rate, time_grid

    rate = slowest_rate(model)
    t, wt = time_grid(model.gamma, rate, tol)
    k = np.arange(n_k) / n_k
    k0 = np.atleast_1d(k0)
    out = np.empty(k0.shape)
    for i, kk in enumerate(k0):
        fp = a_hat_22(model, t[:, None], k[None, :] + kk / 2)
        fm = a_hat_22(model, t[:, None], k[None, :] - kk / 2)
        out[i] = wt @ ((fp - fm) ** 2).mean(axis=1)
    return out


def nondegeneracy_integral(model, k0, n_k=512, tol=1e-10):
    return _nondegeneracy(model, k0, n_k, tol)


def validate_assumptions(model, grid=VALIDATION_GRID, eps_list=(0.05,), n_k0=64, lattice_sizes=()):
    """Check all five model assumptions and tabulate the nondegeneracy constant.

    Failures are report entries, not exceptions.
    """
    pot = model.potential
    pts = [np.arange(grid) / grid - 0.5] + [wrap(np.arange(L), L) / L for L in lattice_sizes]
    k = np.concatenate(pts)
    w2 = pot.symbol(k)
    items = {1: True}
    x = np.arange(-pot.reach, pot.reach + 1)
    items[2] = bool(np.array_equal(pot.value(x), pot.value(-x)))
    items[3] = bool(w2.min() > 0)
    omega_max = float(np.sqrt(w2.max())) if w2.max() > 0 else 0.0
    items[4] = bool(model.gamma > 2.0 * omega_max)
    table = {}
    for eps in eps_list:
        if not 0 < eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
        k0 = np.linspace(eps, 0.5, n_k0)
        table[float(eps)] = float(_nondegeneracy(model, k0).min()) if items[3] else 0.0
    items[5] = bool(items[3] and all(v > NONDEGENERACY_THRESHOLD for v in table.values()))
    details = {
        "omega0": float(np.sqrt(max(w2.min(), 0.0))),
        "omega_max": omega_max,
        "2*omega_max": 2.0 * omega_max,
        "gamma": model.gamma,
        "grid points": k.size,
    }
    return AssumptionReport(items, table, NONDEGENERACY_THRESHOLD, details)
