"""Phonon Boltzmann transport: conductivity, the diffusion symbol and the decay
of a long-wavelength energy profile.

Run: python demos/kinetic_transport.py   (about a minute)
"""

import numpy as np

from flipchain import ChainModel
from flipchain.hydro import build_diffusion, diffusion_vs_kinetic
from flipchain.kinetic import (
    KineticState,
    evolve_transport,
    fit_decay_rate,
    kappa,
    kappa_reference,
)
from flipchain.lattice import wrap

stiff = ChainModel.nearest_neighbour(omega0=1.0, gamma=6.0)
rep = diffusion_vs_kinetic(build_diffusion(stiff, 256))
print(f"gamma=6: kappa(256) = {rep['kappa']:.6f}, D_hat(k_min)/(2 pi k_min)^2 = {rep['dhat_ratio']:.6f}")

model = ChainModel.nearest_neighbour(omega0=1.0, gamma=1.0)
L = 200
print(f"gamma=1: kappa(L) = {kappa(model, L):.6f}, infinite-volume kappa = {kappa_reference(model):.6f}")

xi = wrap(np.arange(L), L)
E0 = 1 + 0.1 * np.cos(2 * np.pi * xi / L)
state = KineticState(np.repeat(E0[:, None], L, axis=1), np.zeros((L, L)))
rate = kappa(model, L) * (2 * np.pi / L) ** 2
times, amps = [], []


def observe(t, E_hat, A, B, modes):
    times.append(t)
    amps.append(E_hat[list(modes).index(1)])


evolve_transport(model, state, 8000.0, 0.1, observer=observe, every=100)
t, a = np.array(times), np.array(amps)
sel = t >= 500
print(f"slowest mode decays at {fit_decay_rate(t[sel], a[sel]):.4e}; kappa (2 pi / L)^2 = {rate:.4e}")
