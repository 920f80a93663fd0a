"""Physical outputs: populations, steady states, correlations and spectra.

The steady-state correlation ``C(tau) = <sigma^dag(tau) sigma>_ss -
<sigma^dag>_ss <sigma>_ss`` is obtained by propagating the whole virtual
ensemble to the steady state, multiplying every member by ``sigma`` and
propagating again.  Quantum regression is not used, since the reduced
evolution does not factorise at the time the lowering operator acts.

Spectra use the convention ``S(omega) = 2 Re int_0^inf C(tau) e^{-i omega tau}
dtau``, so a correlation rotating as ``e^{i W tau}`` peaks at ``omega = +W``
(frequencies measured from the atomic resonance).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .core import SIGMA, SIGMA_DAG
from .ensemble import apply_lowering, project, propagate


class NotConverged(RuntimeError):
    """Raised when no steady state is reached; carries the final residual."""

    def __init__(self, residual, message=None):
        self.residual = float(residual)
        super().__init__(message or f"no steady state (residual {self.residual:.3e})")


class NonPhysicalWarning(UserWarning):
    pass


def excited_population(rho, eps=1e-9):
    """``Re rho[0, 0]``; warns (without clipping) if outside ``[-eps, 1 + eps]``."""
    p = float(np.real(np.asarray(rho)[0, 0]))
    if p < -eps or p > 1 + eps:
        warnings.warn(f"excited population {p:.3e} outside [0, 1]", NonPhysicalWarning,
                      stacklevel=2)
    return p


def expectation(a, rho):
    """``Tr(a rho)``."""
    return complex(np.trace(np.asarray(a) @ np.asarray(rho)))


def detect_steady_state(trajectory, rel_tol=1e-4, window=1.0):
    """First sample after which the state no longer moves.

    Parameters
    ----------
    trajectory : Trajectory
    rel_tol : float
        Tolerance on the largest elementwise deviation from the final state,
        relative to the largest element of the final state.
    window : float
        Length of trailing time that must already be settled.

    Returns
    -------
    index : int
    rho_ss : ndarray

    Raises
    ------
    NotConverged
        If the trajectory is shorter than ``window`` or its trailing window
        still varies by more than the tolerance.
    """
    times = np.asarray(trajectory.times)
    states = np.asarray(trajectory.states)
    if len(times) == 0:
        raise ValueError("empty trajectory")
    final = states[-1]
    scale = max(np.max(np.abs(final)), 1e-300)
    dev = np.max(np.abs(states - final), axis=(1, 2)) / scale
    if times[-1] - times[0] < window:
        raise NotConverged(np.max(dev), "trajectory shorter than the steady-state window")
    tail = times >= times[-1] - window
    residual = np.max(dev[tail])
    if residual > rel_tol:
        raise NotConverged(residual)
    moving = np.nonzero(dev > rel_tol)[0]
    index = 0 if len(moving) == 0 else int(moving[-1]) + 1
    return index, final


@dataclass
class SteadyRun:
    trajectory: object
    index: int
    rho_ss: np.ndarray

    @property
    def ensemble(self):
        return self.trajectory.final

    @property
    def n_steps(self):
        return self.trajectory.final.step_index


def run_to_steady_state(D, rho0, max_time, rel_tol=1e-4, window=1.0, chunk_time=None):
    """Propagate in chunks until :func:`detect_steady_state` succeeds."""
    from .ensemble import Trajectory

    dt = D.dt
    chunk = max(1, int(round((chunk_time or 2 * window) / dt)))
    n_max = int(round(max_time / dt))
    tr = propagate(rho0, D, 0)
    times, states = list(tr.times), list(tr.states)
    state = tr.final
    last_error = None
    while state.step_index < n_max:
        n = min(chunk, n_max - state.step_index)
        part = propagate(state, D, n)
        times.extend(part.times[1:])
        states.extend(part.states[1:])
        state = part.final
        full = Trajectory(np.array(times), np.array(states), state)
        try:
            index, rho_ss = detect_steady_state(full, rel_tol, window)
        except NotConverged as exc:
            last_error = exc
            continue
        return SteadyRun(full, index, rho_ss)
    raise last_error or NotConverged(np.inf)


@dataclass
class CorrelationTrace:
    tau: np.ndarray
    values: np.ndarray
    subtracted_coherent: bool = True

    @property
    def dtau(self):
        return float(self.tau[1] - self.tau[0])


def correlation_function(D, steady, n_tau, subtract_coherent=True):
    """Steady-state correlation by re-propagating the lowered ensemble.

    Parameters
    ----------
    D : EvolutionOperator
    steady : SteadyRun or VirtualEnsemble
        Ensemble at (or beyond) the steady state.  A :class:`SteadyRun` from
        :func:`run_to_steady_state` is the usual input.
    n_tau : int
        Number of lag steps; the lag grid is the propagation grid.
    """
    state = steady.ensemble if isinstance(steady, SteadyRun) else steady
    rho_ss = project(state)
    mean = expectation(SIGMA, rho_ss)
    lowered = apply_lowering(state)
    tr = propagate(lowered, D, n_tau,
                   observer=lambda s: expectation(SIGMA_DAG, project(s)))
    values = np.asarray(tr.states, dtype=complex)
    if subtract_coherent:
        values = values - np.conj(mean) * mean
    return CorrelationTrace(tr.times - tr.times[0], values, subtract_coherent)


@dataclass
class Spectrum:
    omega: np.ndarray
    S: np.ndarray

    @property
    def resolution(self):
        return float(self.omega[1] - self.omega[0])


def spectrum(trace, omega=None, omega_max=20.0, resolution=0.05, window=None):
    """Internal spectrum ``S(omega) = 2 Re sum_k w_k C(tau_k) e^{-i omega tau_k} dtau``.

    Parameters
    ----------
    trace : CorrelationTrace
        Uniformly sampled correlation starting at ``tau = 0``.
    omega : array_like, optional
        Frequencies (relative to the atomic resonance).  By default a grid
        symmetric about zero with spacing ``resolution`` up to ``omega_max``.
    window : callable, optional
        Taper ``window(x)`` evaluated at ``x = tau / tau_max``; none by default.
    """
    tau = np.asarray(trace.tau, dtype=float)
    dtau = np.diff(tau)
    if len(tau) < 2 or not np.allclose(dtau, dtau[0], rtol=1e-9, atol=0):
        raise ValueError("spectrum needs a uniform lag grid with at least two points")
    if omega is None:
        n = int(np.floor(omega_max / resolution + 1e-9))
        omega = resolution * np.arange(-n, n + 1)
    omega = np.asarray(omega, dtype=float)
    w = np.full(len(tau), dtau[0])
    w[0] = w[-1] = 0.5 * dtau[0]
    c = np.asarray(trace.values, dtype=complex) * w
    if window is not None:
        c = c * window(tau / tau[-1])
    S = 2.0 * np.real(np.exp(-1j * np.outer(omega, tau)) @ c)
    return Spectrum(omega, S)


def peak_near(spec, center, halfwidth):
    """Location and height of the largest value of ``spec`` within ``center +- halfwidth``."""
    sel = np.nonzero(np.abs(spec.omega - center) <= halfwidth)[0]
    if len(sel) == 0:
        raise ValueError("no spectral points in the requested range")
    k = sel[np.argmax(spec.S[sel])]
    return float(spec.omega[k]), float(spec.S[k])


def side_peak_ratio(spec, omega_side, halfwidth=None):
    """Height ratio ``S(-omega_side) / S(+omega_side)`` of the Mollow side peaks."""
    hw = halfwidth if halfwidth is not None else 0.25 * omega_side
    _, lo = peak_near(spec, -omega_side, hw)
    _, hi = peak_near(spec, omega_side, hw)
    return lo / hi
