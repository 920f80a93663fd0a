"""Born-Markov master equations used as reference solutions.

``lindblad_baseline`` treats the atom plus one damped cavity mode as the
system.  Eliminating the cavity mode reproduces the atomic memory function
``g**2 exp(i*detuning*tau - kappa*tau/2)``, so with ``g**2 = gamma`` and
``kappa = kappa2`` the baseline describes the same physics as the cavity
kernel.  Two-time correlations follow from the quantum regression theorem,
which is exact here because the enlarged system is Markovian.

Liouvillians act on column-stacked density matrices.
"""

from dataclasses import dataclass

import numpy as np

from ..core import SIGMA, SIGMA_X
from ..observables import CorrelationTrace


class FockCutoffError(RuntimeError):
    pass


def liouvillian(H, c_ops=()):
    """Matrix of ``rho -> -i[H, rho] + sum_c D[c] rho`` on column-stacked vectors."""
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    eye = np.eye(n)
    L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for c in c_ops:
        c = np.asarray(c, dtype=complex)
        cdc = c.conj().T @ c
        L += np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye)
    return L


def rk4_propagate(L, x0, h, n_steps, substeps):
    """Fixed-step RK4 for ``dx/dt = L x``; returns ``x`` after every ``h``."""
    hs = h / substeps
    out = np.empty((n_steps + 1, len(x0)), dtype=complex)
    x = np.array(x0, dtype=complex)
    out[0] = x
    for n in range(1, n_steps + 1):
        for _ in range(substeps):
            k1 = L @ x
            k2 = L @ (x + 0.5 * hs * k1)
            k3 = L @ (x + 0.5 * hs * k2)
            k4 = L @ (x + hs * k3)
            x = x + (hs / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[n] = x
    return out


def steady_state(L, dim):
    """Normalised null vector of ``L`` (column-stacked ``dim x dim`` matrix)."""
    A = L.copy()
    b = np.zeros(dim * dim, dtype=complex)
    # replace one equation by the trace condition
    A[0, :] = np.eye(dim).reshape(-1, order="F")
    b[0] = 1.0
    rho = np.linalg.solve(A, b).reshape(dim, dim, order="F")
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True)
class LindbladSystem:
    """Atom coupled to one damped cavity mode, in the frame of the atom.

    ``H = omega/2 sigma_x - detuning a^dag a + i g (a^dag sigma - sigma^dag a)``
    with cavity loss ``kappa`` and photon states ``0 .. n_fock``.
    """

    n_fock: int
    g: float
    detuning: float
    kappa: float
    omega: float

    def __post_init__(self):
        if self.n_fock < 4:
            raise ValueError("n_fock must be at least 4")

    @classmethod
    def from_cavity_kernel(cls, spec, omega, n_fock=8):
        return cls(n_fock, float(np.sqrt(spec.gamma)), spec.detuning, spec.kappa2, omega)

    def kernel(self, tau):
        return self.g**2 * np.exp((1j * self.detuning - 0.5 * self.kappa) * np.asarray(tau))

    @property
    def dim(self):
        return 2 * (self.n_fock + 1)

    def operators(self):
        nf = self.n_fock + 1
        a = np.diag(np.sqrt(np.arange(1, nf)), 1).astype(complex)
        eye_c, eye_a = np.eye(nf), np.eye(2)
        sm = np.kron(SIGMA, eye_c)
        A = np.kron(eye_a, a)
        H = (0.5 * self.omega * np.kron(SIGMA_X, eye_c)
             - self.detuning * A.conj().T @ A
             + 1j * self.g * (A.conj().T @ sm - sm.conj().T @ A))
        return H, A, sm

    def liouvillian(self):
        H, A, _ = self.operators()
        return liouvillian(H, [np.sqrt(self.kappa) * A])

    def embed(self, rho_atom, cavity=None):
        nf = self.n_fock + 1
        if cavity is None:
            cavity = np.zeros((nf, nf))
            cavity[0, 0] = 1.0
        return np.kron(np.asarray(rho_atom, dtype=complex), cavity)

    def atom_state(self, rho):
        nf = self.n_fock + 1
        return np.trace(rho.reshape(2, nf, 2, nf), axis1=1, axis2=3)

    def top_fock_population(self, rho):
        nf = self.n_fock + 1
        return float(np.real(np.trace(rho.reshape(2, nf, 2, nf)[:, nf - 1, :, nf - 1])))


@dataclass
class BaselineResult:
    times: np.ndarray
    states: np.ndarray
    top_fock: float
    correlation: CorrelationTrace | None = None
    rho_ss: np.ndarray | None = None

    @property
    def populations(self):
        return self.states[:, 0, 0].real


def _check_cutoff(pop, tol):
    if pop > tol:
        raise FockCutoffError(f"top Fock population {pop:.2e} exceeds {tol:.0e}; raise n_fock")


def lindblad_baseline(sys, rho0, dt, n_steps, n_tau=None, substeps=10, cutoff_tol=1e-6):
    """Atomic dynamics of the atom-plus-cavity master equation.

    Parameters
    ----------
    sys : LindbladSystem
    rho0 : array_like
        Initial 2x2 atomic state; the cavity starts in vacuum.
    dt : float
        Output spacing (the RK4 step is ``dt / substeps``).
    n_steps : int
    n_tau : int, optional
        If given, also compute the steady-state correlation
        ``<sigma^dag(tau) sigma>_ss - |<sigma>_ss|**2`` on ``n_tau + 1`` lags
        spaced by ``dt`` via quantum regression.
    """
    L = sys.liouvillian()
    d = sys.dim
    x0 = sys.embed(rho0).reshape(-1, order="F")
    xs = rk4_propagate(L, x0, dt, n_steps, substeps)
    rhos = np.array([x.reshape(d, d, order="F") for x in xs])
    top = max(sys.top_fock_population(r) for r in rhos)
    _check_cutoff(top, cutoff_tol)
    states = np.array([sys.atom_state(r) for r in rhos])
    result = BaselineResult(dt * np.arange(n_steps + 1), states, top)
    if n_tau is not None:
        result.rho_ss = steady_state(L, d)
        _check_cutoff(sys.top_fock_population(result.rho_ss), cutoff_tol)
        result.correlation = regression_correlation(L, result.rho_ss, sys.operators()[2],
                                                    dt, n_tau, substeps)
    return result


def regression_correlation(L, rho_ss, sm, dt, n_tau, substeps=10):
    """``<sm^dag(tau) sm>_ss - <sm^dag>_ss <sm>_ss`` by quantum regression."""
    d = rho_ss.shape[0]
    mean = np.trace(sm @ rho_ss)
    x0 = (sm @ rho_ss).reshape(-1, order="F")
    xs = rk4_propagate(L, x0, dt, n_tau, substeps)
    smd = sm.conj().T
    vals = np.array([np.trace(smd @ x.reshape(d, d, order="F")) for x in xs])
    vals = vals - np.conj(mean) * mean
    return CorrelationTrace(dt * np.arange(n_tau + 1), vals, True)


def markov_two_level(gamma, omega, rho0, dt, n_steps, n_tau=None, substeps=10):
    """Resonance fluorescence of a two-level atom under the Born-Markov master equation."""
    H = 0.5 * omega * SIGMA_X
    L = liouvillian(H, [np.sqrt(gamma) * SIGMA])
    x0 = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    xs = rk4_propagate(L, x0, dt, n_steps, substeps)
    states = np.array([x.reshape(2, 2, order="F") for x in xs])
    result = BaselineResult(dt * np.arange(n_steps + 1), states, 0.0)
    if n_tau is not None:
        result.rho_ss = steady_state(L, 2)
        result.correlation = regression_correlation(L, result.rho_ss, SIGMA, dt, n_tau, substeps)
    return result
