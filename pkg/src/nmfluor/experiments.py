"""Reusable numerical experiments built from the ensemble and the reference solvers."""

from dataclasses import dataclass

import numpy as np

from .core import EXCITED
from .ensemble import build_evolution_operator, propagate
from .kernels import sample_kernel
from .observables import correlation_function, run_to_steady_state, spectrum
from .oracles.lindblad import LindbladSystem, lindblad_baseline


def fit_decay_rate(times, P, t_min, t_max=None, floor=1e-12):
    """Least-squares slope of ``log P`` on ``[t_min, t_max]``.

    Returns
    -------
    rate : float
        Minus the fitted slope.
    r2 : float
        Coefficient of determination of the straight-line fit.
    """
    t = np.asarray(times)
    P = np.asarray(P)
    sel = (t >= t_min) & (P > floor)
    if t_max is not None:
        sel &= t <= t_max
    if np.count_nonzero(sel) < 3:
        raise ValueError("fewer than three points in the fit range")
    y = np.log(P[sel])
    slope, icpt = np.polyfit(t[sel], y, 1)
    resid = y - (slope * t[sel] + icpt)
    r2 = 1.0 - np.sum(resid**2) / np.sum((y - y.mean()) ** 2)
    return -slope, r2


def ensemble_run(spec, omega, dt, M, n_steps, rho0=EXCITED, record_every=1, **kwargs):
    D = build_evolution_operator(sample_kernel(spec, dt, M), omega, **kwargs)
    return propagate(rho0, D, n_steps, record_every)


@dataclass
class Comparison:
    times: np.ndarray
    P_alg: np.ndarray
    P_ref: np.ndarray

    @property
    def max_dev(self):
        return float(np.max(np.abs(self.P_alg - self.P_ref)))


def cavity_comparison(spec, omega, dt, M, t_max, rho0=EXCITED, n_fock=8, **kwargs):
    """Ensemble against the atom-plus-cavity master equation on the same grid."""
    n = int(round(t_max / dt))
    tr = ensemble_run(spec, omega, dt, M, n, rho0, **kwargs)
    ref = lindblad_baseline(LindbladSystem.from_cavity_kernel(spec, omega, n_fock), rho0, dt, n)
    return Comparison(tr.times, tr.populations, ref.populations)


def window_ladder(dt, M, levels):
    """``(dt / 2**k, M_k)`` pairs sharing the window ``(M - 1) dt``."""
    return [(dt / 2**k, (M - 1) * 2**k + 1) for k in range(levels)]


def observed_orders(dts, errors):
    """``log(e_k / e_{k+1}) / log(dt_k / dt_{k+1})`` for consecutive ladder rungs."""
    dts, errors = np.asarray(dts), np.asarray(errors)
    return np.log(errors[:-1] / errors[1:]) / np.log(dts[:-1] / dts[1:])


def cavity_convergence(spec, omega, dt, M, t_max, levels=2, rho0=EXCITED, n_fock=8):
    """Maximum deviation from the master equation along a halving ladder at fixed window."""
    rows = []
    for h, m in window_ladder(dt, M, levels):
        rows.append((h, m, cavity_comparison(spec, omega, h, m, t_max, rho0, n_fock).max_dev))
    return rows


def self_convergence(spec, omega, dt, M, t_max, levels=2, rho0=EXCITED):
    """Deviation of each rung from the finest rung (sampled on the coarsest grid)."""
    ladder = window_ladder(dt, M, levels)
    runs = []
    for h, m in ladder:
        n = int(round(t_max / h))
        runs.append(ensemble_run(spec, omega, h, m, n, rho0).populations)
    finest = runs[-1][::2 ** (levels - 1)]
    rows = []
    for k, ((h, m), P) in enumerate(zip(ladder, runs)):
        coarse = P[::2**k]
        rows.append((h, m, float(np.max(np.abs(coarse - finest)))))
    return rows


@dataclass
class SpectrumRun:
    steady: object
    correlation: object
    spectrum: object

    @property
    def P_ss(self):
        return float(self.steady.rho_ss[0, 0].real)


def steady_spectrum(spec, omega, dt, M, tau_max, omega_max, resolution, rho0=EXCITED,
                    steady_tol=1e-4, steady_window=1.0, steady_max_time=200.0, **kwargs):
    """Steady state, correlation by re-propagation and the internal spectrum."""
    D = build_evolution_operator(sample_kernel(spec, dt, M), omega, **kwargs)
    ss = run_to_steady_state(D, rho0, steady_max_time, steady_tol, steady_window)
    C = correlation_function(D, ss, int(round(tau_max / dt)))
    S = spectrum(C, omega_max=omega_max, resolution=resolution)
    return SpectrumRun(ss, C, S)
