"""Driven atom in a lossy cavity: ensemble against the master equation.

The cavity kernel is exactly the memory left behind when a single damped
mode is eliminated, so the atom-plus-cavity Lindblad equation is an exact
reference. Run with ``python demos/cavity_validation.py``.
"""

import time

import numpy as np

from nmfluor import CavityKernel
from nmfluor.core import EXCITED
from nmfluor.experiments import cavity_comparison

spec = CavityKernel(gamma=1.0, detuning=4.0, kappa2=8.0)
omega = 4.0

for dt, M in [(1 / 7, 6), (1 / 14, 11)]:
    start = time.perf_counter()
    cmp = cavity_comparison(spec, omega, dt, M, t_max=8.0, rho0=EXCITED)
    print(f"dt = {dt:.4f}, M = {M:2d}: max |P_alg - P_ref| = {cmp.max_dev:.3e} "
          f"({time.perf_counter() - start:.1f} s)")

# a short excerpt of the finer run
print("\n   t     P_alg     P_ref")
for k in np.linspace(0, len(cmp.times) - 1, 9).astype(int):
    print(f"{cmp.times[k]:5.2f}  {cmp.P_alg[k]:.5f}  {cmp.P_ref[k]:.5f}")
