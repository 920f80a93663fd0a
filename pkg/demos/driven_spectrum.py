"""Fluorescence spectrum of a strongly driven atom below a band edge.

The steady state is found by propagating the ensemble until it stops
changing, the correlation by propagating the lowered ensemble, and the
spectrum by a direct transform. The gap suppresses emission on one side,
so the two side peaks of the triplet are unequal; in the wide-gap limit
they become equal again.

The default window (M = 11) takes about a minute per spectrum; pass
``--quick`` for M = 6 at twice the step.
"""

import sys

from nmfluor import BandgapKernel
from nmfluor.core import GROUND
from nmfluor.experiments import steady_spectrum
from nmfluor.observables import peak_near

omega = 10.0
dt, M = (1 / 25, 6) if "--quick" in sys.argv else (1 / 50, 11)

for lam in (300.0, 1e5):
    spec = BandgapKernel.from_rate(1.0, lam, 10.0)
    run = steady_spectrum(spec, omega, dt, M, tau_max=25.0, omega_max=20.0,
                          resolution=omega / 40, rho0=GROUND)
    lo = peak_near(run.spectrum, -omega, omega / 4)
    hi = peak_near(run.spectrum, omega, omega / 4)
    print(f"lam = {lam:g}: P_ss = {run.P_ss:.4f}, "
          f"peaks at {lo[0]:+.2f} ({lo[1]:.4f}) and {hi[0]:+.2f} ({hi[1]:.4f}), "
          f"ratio {lo[1] / hi[1]:.3f}")
