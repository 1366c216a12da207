"""Relax a cosine temperature profile and compare the local Wigner matrix with
the local-equilibrium form T(x) U0(k) + i grad T(x) U1(k).

Run: python demos/local_equilibrium.py
"""

import numpy as np

from flipchain import (
    ChainModel,
    cosine_profile,
    evolve_duhamel,
    modulated_state,
    temperature,
)
from flipchain.hydro import build_diffusion, heat_semigroup
from flipchain.wigner import fit_slope, theorem_residual

model = ChainModel.nearest_neighbour(omega0=1.0, gamma=6.0)

residuals = []
for L in (16, 32, 64):
    t = 0.5 * L**2
    s0 = modulated_state(model, L, cosine_profile(L))
    mid = evolve_duhamel(model, s0, t / 2)
    end = evolve_duhamel(model, mid, t / 2)
    heat = heat_semigroup(build_diffusion(model, L), temperature(mid), t / 2)
    residuals.append(theorem_residual(end, model))
    T = temperature(end)
    print(f"L={L:3d} t={t:6.0f}  T range [{T.min():.5f}, {T.max():.5f}]  "
          f"heat-equation defect {np.abs(T - heat).max():.2e}  Wigner residual {residuals[-1]:.3e}")

fit = fit_slope([16, 32, 64], residuals)
print(f"residual ~ L^{fit.slope:.2f} (r2 = {fit.r2:.4f})")
