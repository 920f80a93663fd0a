"""Spontaneous decay in the single-excitation sector.

With no drive the atom-field state stays in ``a|e,0> + sum_k c_k |g,1_k>`` and
the excited amplitude obeys ``da/dt = -int_0^t f(t-s) a(s) ds``.  The
integral is evaluated with the same window coefficients as the virtual
ensemble and propagated with Euler steps::

    a[n+1] = (1 - dt**2 F[0]) a[n] - dt**2 sum_{s=1}^{M-1} F[s] a[n-s]

Lag ``s`` pairs with ``a[n-s]``: a photon emitted during step ``n-s+1`` from
the state ``a[n-s]`` is absorbed ``s`` steps later.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class DecayAmplitude:
    times: np.ndarray
    a: np.ndarray

    @property
    def populations(self):
        return np.abs(self.a) ** 2


def _direct(F, dt, n_steps):
    M = len(F)
    h2 = dt * dt
    a = np.zeros(n_steps + 1, dtype=complex)
    a[0] = 1.0
    # lag 0 first, then lags 1..M-1 against the history reversed
    for n in range(n_steps):
        hist = a[max(n - M + 1, 0):n][::-1]
        a[n + 1] = (1.0 - h2 * F[0]) * a[n] - h2 * np.dot(F[1:1 + len(hist)], hist)
    return a


def _markovian(F, dt, n_steps):
    """Same recursion with auxiliary variables ``b[k]`` holding pending absorptions."""
    M = len(F)
    h2 = dt * dt
    a = np.zeros(n_steps + 1, dtype=complex)
    a[0] = 1.0
    b = np.zeros(max(M - 1, 0), dtype=complex)  # b[k-1] is b^k
    for n in range(n_steps):
        a[n + 1] = (1.0 - h2 * F[0]) * a[n] + (b[0] if M > 1 else 0.0)
        if M > 1:
            b[:-1] = b[1:] - h2 * F[1:M - 1] * a[n]
            b[-1] = -h2 * F[M - 1] * a[n]
    return a


def decay_amplitude(samples, n_steps, form="direct", cross_check=True):
    """Excited-state amplitude of the undriven atom from ``a(0) = 1``.

    Parameters
    ----------
    samples : KernelSamples
    n_steps : int
    form : {"direct", "markovian"}
        Window-sum form or the equivalent auxiliary-variable form.
    cross_check : bool
        Also run the other form and raise if the two disagree beyond rounding.
    """
    F = np.asarray(samples.F, dtype=complex)
    dt = samples.dt
    runners = {"direct": _direct, "markovian": _markovian}
    if form not in runners:
        raise ValueError(f"unknown form {form!r}")
    a = runners[form](F, dt, n_steps)
    if cross_check:
        other = runners["markovian" if form == "direct" else "direct"](F, dt, n_steps)
        gap = np.max(np.abs(a - other))
        if gap > 1e-12 * max(1.0, np.max(np.abs(a))):
            raise RuntimeError(f"direct and auxiliary-variable forms disagree by {gap:.3e}")
    return DecayAmplitude(dt * np.arange(n_steps + 1), a)


def single_excitation_sector(samples, n_steps):
    """Undriven virtual-ensemble recursion reduced by hand to one excitation.

    Starting from the excited state only three kinds of member survive: the
    physical one (population ``P``), members with one ket-side photon pending
    in slot ``s`` (coherence ``alpha[s]`` on ``|g><e|``) and members with one
    photon pending on each side (``beta[s, r]`` on ``|g><g|``).  Each step
    keeps terms of first order in the emitted/closed photons, exactly as the
    ensemble does, so the populations agree with the full ensemble to
    rounding while differing from ``|a|**2`` of :func:`decay_amplitude` at
    first order in ``dt``.

    Returns
    -------
    times, P : ndarray
    """
    F = np.asarray(samples.F, dtype=complex)
    dt = samples.dt
    M = len(F)
    h2 = dt * dt
    # slots 1..M-1 live at indices 1..M-1; index 0 and M are padding zeros
    alpha = np.zeros(M + 1, dtype=complex)
    beta = np.zeros((M + 1, M + 1), dtype=complex)
    Fs = np.zeros(M + 1, dtype=complex)
    Fs[1:M] = F[1:]
    P = np.empty(n_steps + 1)
    P[0] = 1.0
    for n in range(1, n_steps + 1):
        p = P[n - 1]
        P[n] = p * (1.0 - 2.0 * h2 * F[0].real) - 2.0 * dt * alpha[1].real
        new_alpha = np.zeros_like(alpha)
        new_alpha[1:M] = ((1.0 - h2 * np.conj(F[0])) * alpha[2:M + 1]
                          + dt * Fs[1:M] * p - dt * beta[2:M + 1, 1])
        new_beta = np.zeros_like(beta)
        new_beta[1:M, 1:M] = (beta[2:M + 1, 2:M + 1]
                              + dt * np.outer(Fs[1:M], np.conj(alpha[2:M + 1]))
                              + dt * np.outer(alpha[2:M + 1], np.conj(Fs[1:M])))
        alpha, beta = new_alpha, new_beta
    return dt * np.arange(n_steps + 1), P
