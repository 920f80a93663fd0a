"""Two-level operator algebra and Liouville-space conventions.

Basis order is (excited, ground), so the lowering operator is
``SIGMA = |g><e|`` and the excited population is ``rho[0, 0]``.

Density matrices are flattened by column stacking: entry ``rho[i, j]`` sits
at ``vec[2*j + i]``.  With that convention

    vec(A @ rho) = left_super(A) @ vec(rho)      = kron(I, A) @ vec(rho)
    vec(rho @ B) = right_super(B) @ vec(rho)     = kron(B.T, I) @ vec(rho)

Operators acting from the left correspond to the time-ordered (unprimed)
side of the density matrix; right multiplication realises the primed,
anti-time-ordered side.
"""

import numpy as np

DTYPE = np.complex128

IDENTITY = np.eye(2, dtype=DTYPE)
SIGMA = np.array([[0, 0], [1, 0]], dtype=DTYPE)
SIGMA_DAG = SIGMA.conj().T
SIGMA_X = SIGMA + SIGMA_DAG
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=DTYPE)

EXCITED = np.array([[1, 0], [0, 0]], dtype=DTYPE)
GROUND = np.array([[0, 0], [0, 1]], dtype=DTYPE)


def flatten(rho):
    """Column-stack a 2x2 matrix into a length-4 vector."""
    rho = np.asarray(rho, dtype=DTYPE)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    return rho.reshape(4, order="F").copy()


def unflatten(vec):
    """Inverse of :func:`flatten`."""
    vec = np.asarray(vec, dtype=DTYPE)
    if vec.shape != (4,):
        raise ValueError(f"expected a length-4 vector, got shape {vec.shape}")
    return vec.reshape(2, 2, order="F").copy()


def left_super(a):
    """4x4 matrix of ``rho -> a @ rho`` in the flattened representation."""
    return np.kron(IDENTITY, np.asarray(a, dtype=DTYPE))


def right_super(b):
    """4x4 matrix of ``rho -> rho @ b`` in the flattened representation."""
    return np.kron(np.asarray(b, dtype=DTYPE).T, IDENTITY)


def sandwich_super(u):
    """4x4 matrix of ``rho -> u @ rho @ u^dagger``."""
    u = np.asarray(u, dtype=DTYPE)
    return np.kron(u.conj(), u)


def u0_propagator(omega, dt):
    """Free propagator of the resonantly driven atom in the rotating frame.

    Parameters
    ----------
    omega : float
        Rabi frequency; the Hamiltonian is ``omega/2 * sigma_x``.
    dt : float
        Time step, must be positive.

    Returns
    -------
    ndarray
        ``exp(-i omega dt sigma_x / 2)``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    half = 0.5 * omega * dt
    return np.cos(half) * IDENTITY - 1j * np.sin(half) * SIGMA_X


def is_hermitian(rho, atol=1e-12):
    rho = np.asarray(rho)
    return bool(np.max(np.abs(rho - rho.conj().T)) <= atol)
