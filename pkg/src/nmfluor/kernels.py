"""Reservoir memory functions and their quadrature on a finite window.

All kernels are written in the frame rotating at the atomic frequency and are
functions of the lag ``tau = t - s >= 0``.

The discrete window coefficients follow one contract for every kernel: for a
smooth history ``x_k`` on the step grid,

    integral_0^{(M-1) dt} f(tau) x(t - tau) dtau  ~=  dt * sum_n F[n] x_{j-n}

so ``F[n]`` has units of a rate (it is ``W_n f(n dt)`` for the trapezoidal
rule, and the moment weights divided by ``dt`` for the band-gap scheme).
"""

from dataclasses import dataclass

import numpy as np

PHASE_BANDGAP = np.pi / 4


def _check_lag(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("memory functions are defined for tau >= 0 only")
    return tau


def cavity_kernel(gamma, detuning, kappa2, tau):
    """Memory function of an atom coupled to a leaky cavity mode.

    ``gamma * exp(i*detuning*tau - kappa2*tau/2)`` with ``detuning`` the
    atom-cavity detuning ``omega_0 - nu`` and ``kappa2`` the cavity energy
    decay rate.
    """
    tau = _check_lag(tau)
    return gamma * np.exp((1j * detuning - 0.5 * kappa2) * tau)


def bandgap_kernel(beta, lam, delta, tau):
    """Memory function near the edge of an anisotropic photonic band gap.

    ``beta * lam**1.5 * exp(i(delta*tau + pi/4)) / (1 + lam*tau)**1.5`` where
    ``lam`` is the high-frequency cutoff and ``delta = omega_0 - omega_g`` the
    detuning from the band edge.
    """
    tau = _check_lag(tau)
    return (beta * lam**1.5 * np.exp(1j * (delta * tau + PHASE_BANDGAP))
            / (1.0 + lam * tau) ** 1.5)


def born_markov_rate(beta, lam):
    """Damping rate ``2 Re int_0^inf f(tau) dtau`` of the band-gap kernel at zero detuning."""
    if beta <= 0 or lam <= 0:
        raise ValueError("beta and lam must be positive")
    return 2.0**1.5 * beta * np.sqrt(lam)


def beta_for_rate(gamma, lam):
    """Coupling ``beta`` whose Born-Markov rate equals ``gamma``."""
    return gamma / (2.0**1.5 * np.sqrt(lam))


def trapezoid_weights(M):
    """Trapezoidal weights over ``M`` window samples (endpoints 1/2)."""
    if M < 2:
        raise ValueError("the trapezoidal rule needs M >= 2")
    w = np.ones(M)
    w[0] = w[-1] = 0.5
    return w


def _interval_moments(lam, dt, n):
    # Integrals of (1 + lam*tau)^(-3/2) and (tau/dt - n)(1 + lam*tau)^(-3/2)
    # over [n dt, (n+1) dt], written without cancelling differences.
    a = n * dt
    c = 1.0 + lam * a
    sa = np.sqrt(c)
    sb = np.sqrt(1.0 + lam * (a + dt))
    i0 = 2.0 * dt / (sa * sb * (sa + sb))
    # substitute tau = a + x: (c + lam x)^(-3/2) = c^(-3/2) (1 + (lam/c) x)^(-3/2)
    sp = sb / sa
    ramp = 2.0 * dt * c**-1.5 / (sp * (1.0 + sp) ** 2)
    return i0, ramp


def moments(lam, dt, M):
    """First two moments ``w_j^n`` of ``(1 + lam*tau)^(-3/2)`` on each mesh interval.

    Returns
    -------
    w0, w1 : ndarray, shape (M-1,)
        ``w_j^n = dt**-j * int_{n dt}^{(n+1) dt} tau**j (1+lam*tau)**-1.5 dtau``
        for ``n = 0 .. M-2``.
    """
    n = np.arange(M - 1)
    i0, ramp = _interval_moments(lam, dt, n)
    return i0, n * i0 + ramp


def moment_weights(lam, dt, M):
    """Product-integration weights for ``int_0^{(M-1)dt} g(tau) (1+lam*tau)^(-3/2) dtau``.

    The rule is exact whenever ``g`` is piecewise linear on the mesh, so the
    steep rise of the weight function near ``tau = 0`` is integrated exactly.
    The weights carry units of time.
    """
    if lam <= 0 or dt <= 0:
        raise ValueError("lam and dt must be positive")
    if M < 2:
        raise ValueError("the two-point moment rule needs M >= 2")
    w0, w1 = moments(lam, dt, M)
    W = np.empty(M)
    W[0] = w0[0] - w1[0]
    W[M - 1] = -(M - 2) * w0[M - 2] + w1[M - 2]
    for n in range(1, M - 1):
        W[n] = (n + 1) * w0[n] - w1[n] - (n - 1) * w0[n - 1] + w1[n - 1]
    return W


@dataclass(frozen=True)
class CavityKernel:
    gamma: float
    detuning: float
    kappa2: float

    def __post_init__(self):
        if self.gamma <= 0 or self.kappa2 <= 0:
            raise ValueError("cavity kernel needs gamma > 0 and kappa2 > 0")

    def __call__(self, tau):
        return cavity_kernel(self.gamma, self.detuning, self.kappa2, tau)


@dataclass(frozen=True)
class BandgapKernel:
    beta: float
    lam: float
    delta: float

    def __post_init__(self):
        if self.beta <= 0 or self.lam <= 0:
            raise ValueError("band-gap kernel needs beta > 0 and lam > 0")

    @classmethod
    def from_rate(cls, gamma, lam, delta):
        """Kernel normalised so that its Born-Markov rate is ``gamma``."""
        return cls(beta_for_rate(gamma, lam), lam, delta)

    @property
    def rate(self):
        return born_markov_rate(self.beta, self.lam)

    def __call__(self, tau):
        return bandgap_kernel(self.beta, self.lam, self.delta, tau)


@dataclass(frozen=True)
class FlatKernel:
    """White reservoir, ``f(tau) = gamma * delta(tau)``."""

    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("flat kernel needs gamma > 0")

    def __call__(self, tau):
        tau = _check_lag(tau)
        return np.where(tau == 0, np.inf, 0.0)


KernelSpec = CavityKernel | BandgapKernel | FlatKernel


@dataclass(frozen=True)
class KernelSamples:
    """Weighted window coefficients ``F[0..M-1]`` for time step ``dt``."""

    F: np.ndarray
    dt: float

    @property
    def M(self):
        return len(self.F)

    @property
    def window(self):
        return (self.M - 1) * self.dt


def sample_kernel(spec, dt, M):
    """Discretise a memory function on ``M`` window samples.

    Parameters
    ----------
    spec : CavityKernel, BandgapKernel or FlatKernel
    dt : float
        Time step.
    M : int
        Number of samples; the window spans lags ``0 .. (M-1) dt``.

    Returns
    -------
    KernelSamples
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if M < 1:
        raise ValueError("M must be positive")
    lags = dt * np.arange(M)
    if isinstance(spec, FlatKernel):
        # half of the delta function falls inside [0, dt] under the trapezoid
        F = np.zeros(M, dtype=complex)
        F[0] = 0.5 * spec.gamma / dt
    elif isinstance(spec, CavityKernel):
        F = trapezoid_weights(M) * spec(lags)
    elif isinstance(spec, BandgapKernel):
        smooth = spec.beta * spec.lam**1.5 * np.exp(1j * (spec.delta * lags + PHASE_BANDGAP))
        F = moment_weights(spec.lam, dt, M) * smooth / dt
    else:
        raise TypeError(f"unknown kernel spec {spec!r}")
    return KernelSamples(np.asarray(F, dtype=complex), float(dt))


def zero_samples(dt, M):
    """Decoupled atom: all window coefficients vanish."""
    return KernelSamples(np.zeros(M, dtype=complex), float(dt))


def truncation_level(spec, dt, M):
    """``|f(T)| / |f(0)|`` at the window edge ``T = (M-1) dt``; 0 for the flat kernel."""
    if isinstance(spec, FlatKernel):
        return 0.0
    return float(abs(spec((M - 1) * dt)) / abs(spec(0.0)))


def window_steps(spec, dt, threshold=0.02, max_M=64):
    """Smallest ``M >= 2`` whose window edge is below ``threshold`` of ``|f(0)|``."""
    for M in range(2, max_M + 1):
        if truncation_level(spec, dt, M) <= threshold:
            return M
    raise ValueError(f"kernel not truncated to {threshold} within {max_M} steps")
