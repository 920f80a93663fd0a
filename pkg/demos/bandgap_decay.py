"""Spontaneous decay near a photonic band edge.

For a narrow gap (lam = 300) the decay rate depends on where the transition
sits relative to the edge; for a very wide one (lam = 1e5) the memory is
short and all detunings decay at the Markov rate gamma = 1.
"""

import numpy as np

from nmfluor import BandgapKernel, build_evolution_operator, propagate, sample_kernel
from nmfluor.core import EXCITED
from nmfluor.experiments import fit_decay_rate

dt, M, t_max = 1 / 50, 11, 5.0
n = int(round(t_max / dt))

for lam in (300.0, 1e5):
    print(f"lam = {lam:g}")
    for delta in (10.0, 0.0, -10.0):
        samples = sample_kernel(BandgapKernel.from_rate(1.0, lam, delta), dt, M)
        tr = propagate(EXCITED, build_evolution_operator(samples, 0.0), n)
        rate, r2 = fit_decay_rate(tr.times, tr.populations, 0.5)
        drift = np.max(np.abs(tr.traces - 1))
        print(f"  delta = {delta:+5.1f}: rate {rate:.4f} (R^2 {r2:.6f}), "
              f"P(5) = {tr.populations[-1]:.4e}, trace drift {drift:.1e}")
