"""Brute-force reference: the atom coupled to a finite comb of field modes.

The memory function is replaced by ``sum_k g_k**2 exp(-i d_k tau)`` with
mode detunings ``d_k = omega_k - omega_0`` on a uniform comb and
non-negative weights ``g_k**2`` fitted to the kernel on ``[0, T]``.  The
Schroedinger equation of

    H = omega/2 sigma_x + sum_k d_k b_k^dag b_k + i sum_k g_k (b_k^dag sigma - b_k sigma^dag)

is then solved exactly on the space with at most ``photon_cutoff`` photons.
The comb recurs after ``2 pi / d_omega``, which must exceed ``T``.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
import scipy.sparse as sps
from scipy.optimize import nnls
from scipy.sparse.linalg import expm_multiply

from ..kernels import BandgapKernel, CavityKernel


class KernelFitError(RuntimeError):
    pass


@dataclass
class ModeComb:
    detunings: np.ndarray
    couplings: np.ndarray
    residual: float

    @property
    def recurrence_time(self):
        return 2 * np.pi / (self.detunings[1] - self.detunings[0])

    def kernel(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.exp(-1j * np.multiply.outer(tau, self.detunings)) @ self.couplings**2


def default_band(spec, n_modes, T):
    """Comb interval with spacing ``pi / T`` (recurrence at ``2 T``) placed on the kernel's weight."""
    width = (n_modes - 1) * np.pi / T
    if isinstance(spec, CavityKernel):
        centre = -spec.detuning
        return centre - 0.5 * width, centre + 0.5 * width
    if isinstance(spec, BandgapKernel):
        edge = -spec.delta
        return edge, edge + width
    raise TypeError(f"no mode comb for kernel {spec!r}")


def fit_mode_comb(spec, n_modes, T, band=None, n_fit=400):
    """Non-negative least-squares weights ``g_k**2`` on a uniform comb.

    The residual is ``max |fit - f| / |f(0)|`` over ``n_fit`` lags in ``[0, T]``.
    """
    lo, hi = band if band is not None else default_band(spec, n_modes, T)
    detunings = np.linspace(lo, hi, n_modes)
    if 2 * np.pi / (detunings[1] - detunings[0]) <= T:
        raise KernelFitError("comb recurrence time does not exceed T; use more modes")
    tau = np.linspace(0.0, T, n_fit)
    target = spec(tau)
    basis = np.exp(-1j * np.outer(tau, detunings))
    A = np.vstack([basis.real, basis.imag])
    b = np.concatenate([target.real, target.imag])
    w, _ = nnls(A, b, maxiter=50 * n_modes)
    residual = float(np.max(np.abs(basis @ w - target)) / abs(spec(0.0)))
    return ModeComb(detunings, np.sqrt(w), residual)


def _photon_configs(n_modes, cutoff):
    configs = []
    for n in range(cutoff + 1):
        configs.extend(combinations_with_replacement(range(n_modes), n))
    return configs


def comb_hamiltonian(comb, omega, photon_cutoff=2):
    """Sparse Hamiltonian on ``atom x {configs with <= photon_cutoff photons}``.

    Basis index ``2 * c + a`` with ``a = 0`` excited and ``a = 1`` ground.
    """
    configs = _photon_configs(len(comb.detunings), photon_cutoff)
    index = {c: i for i, c in enumerate(configs)}
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for ci, c in enumerate(configs):
        energy = sum(comb.detunings[k] for k in c)
        for a in (0, 1):
            add(2 * ci + a, 2 * ci + a, energy)
        add(2 * ci, 2 * ci + 1, 0.5 * omega)
        add(2 * ci + 1, 2 * ci, 0.5 * omega)
        if len(c) == photon_cutoff:
            continue
        for k in range(len(comb.detunings)):
            up = tuple(sorted(c + (k,)))
            amp = comb.couplings[k] * np.sqrt(up.count(k))
            # i g b^dag sigma: |e, c> -> |g, c + k>; Hermitian partner below
            add(2 * index[up] + 1, 2 * ci, 1j * amp)
            add(2 * ci, 2 * index[up] + 1, -1j * amp)
    dim = 2 * len(configs)
    return sps.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)


@dataclass
class DiscreteModeResult:
    times: np.ndarray
    states: np.ndarray
    fit_residual: float
    comb: ModeComb

    @property
    def populations(self):
        return self.states[:, 0, 0].real


def discrete_mode_oracle(spec, omega, n_modes, T, n_steps, rho0=None, photon_cutoff=2,
                         band=None, fit_tol=0.1):
    """Reduced atomic dynamics of the atom coupled to a fitted mode comb.

    Parameters
    ----------
    spec : CavityKernel or BandgapKernel
    omega : float
        Rabi frequency.
    n_modes : int
    T : float
        Final time; the kernel is fitted on ``[0, T]``.
    n_steps : int
        Number of output intervals on ``[0, T]``.
    rho0 : array_like, optional
        Initial atomic state (excited by default); the field starts in vacuum.
    photon_cutoff : int
        At most 2.
    fit_tol : float
        Largest acceptable kernel-fit residual relative to ``|f(0)|``.

    Raises
    ------
    KernelFitError
        If the fitted comb misses the kernel by more than ``fit_tol``.
    """
    if not 0 <= photon_cutoff <= 2:
        raise ValueError("photon_cutoff must be 0, 1 or 2")
    comb = fit_mode_comb(spec, n_modes, T, band)
    if comb.residual > fit_tol:
        raise KernelFitError(f"kernel fit residual {comb.residual:.2e} above {fit_tol:.0e}")
    H = comb_hamiltonian(comb, omega, photon_cutoff)
    dim = H.shape[0]
    rho0 = np.diag([1.0, 0.0]) if rho0 is None else np.asarray(rho0, dtype=complex)
    probs, kets = np.linalg.eigh(rho0)
    states = np.zeros((n_steps + 1, 2, 2), dtype=complex)
    for p, ket in zip(probs, kets.T):
        if p < 1e-14:
            continue
        psi0 = np.zeros(dim, dtype=complex)
        psi0[:2] = ket
        psi = expm_multiply(-1j * H, psi0, start=0.0, stop=T, num=n_steps + 1, endpoint=True)
        amps = psi.reshape(n_steps + 1, -1, 2)
        states += p * np.einsum("tca,tcb->tab", amps, amps.conj())
    times = np.linspace(0.0, T, n_steps + 1)
    return DiscreteModeResult(times, states, comb.residual, comb)
