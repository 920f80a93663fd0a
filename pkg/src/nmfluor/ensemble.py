"""Virtual-density-matrix propagation of a non-Markovian two-level atom.

The reduced density matrix is carried together with ``3**M - 1`` virtual
density matrices.  Each member is indexed by a trinary label with one trit
per window slot ``s = 1 .. M``:

* ``X`` (0): nothing pending in that slot,
* ``Y`` (1): a photon emitted from the ket side (``sigma`` on the left) that
  will be closed ``s`` steps from now,
* ``Z`` (2): the bra-side partner (``sigma^dagger`` on the right).

Every step each label counts down by one slot.  A pending photon in slot 1
must be closed during the step, either reabsorbed or traced out into the
field, with the factor ``dt * (R(sigma^dag) - L(sigma^dag))`` (ket side) or
``dt * (L(sigma) - R(sigma))`` (bra side).  New photons are emitted into slot
``s`` with amplitude ``dt * F[s]``.  The all-X member approximates the
physical state.

The evolution superoperator is time independent in the Schroedinger picture,
so it is built once and reused: one step is ``state <- D @ (U0 x U0^*) state``.
Slot ``M`` would need ``F[M]``, which lies outside the window, so members
with a non-X trit in slot ``M`` stay identically zero.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sps

from .core import (DTYPE, SIGMA, SIGMA_DAG, flatten, left_super, right_super,
                   sandwich_super, u0_propagator, unflatten)

X, Y, Z = 0, 1, 2
TRIT_NAMES = "XYZ"


def label_encode(trits):
    """Map a sequence of trits (slot 1 first) to the member index."""
    index = 0
    for s, t in enumerate(trits):
        if t not in (X, Y, Z):
            raise ValueError(f"invalid trit {t!r} at slot {s + 1}")
        index += int(t) * 3**s
    return index


def label_decode(index, M):
    """Inverse of :func:`label_encode` for a window of ``M`` slots."""
    if not 0 <= index < 3**M:
        raise ValueError(f"index {index} outside [0, 3**{M})")
    trits = []
    for _ in range(M):
        index, t = divmod(index, 3)
        trits.append(t)
    return tuple(trits)


def label_string(trits):
    return "".join(TRIT_NAMES[t] for t in trits)


class EvolutionOperator:
    """One time step of the virtual ensemble, ``D @ (U0 x U0^*)``.

    Parameters
    ----------
    samples : KernelSamples
        Weighted kernel coefficients ``F[0 .. M-1]``.
    omega : float
        Rabi frequency of the resonant drive.
    diagonal_on_closures : bool
        Also apply the ``dt**2 F[0]`` diagonal factor to the closure terms.
        The default follows the first-order update literally and applies it
        to the count-down term only.

    Notes
    -----
    :meth:`apply` acts on the state without materialising the matrix; the
    explicit sparse matrix is available as :attr:`matrix` and gives the same
    result.
    """

    def __init__(self, samples, omega, diagonal_on_closures=False):
        self.F = np.array(samples.F, dtype=DTYPE)
        self.F.setflags(write=False)
        self.dt = float(samples.dt)
        self.M = len(self.F)
        self.omega = float(omega)
        self.diagonal_on_closures = bool(diagonal_on_closures)
        if self.M < 1:
            raise ValueError("need at least one window slot")

        dt, F0 = self.dt, self.F[0]
        Ls, Ld = left_super(SIGMA), left_super(SIGMA_DAG)
        Rs, Rd = right_super(SIGMA), right_super(SIGMA_DAG)
        eye = np.eye(4, dtype=DTYPE)
        u4 = sandwich_super(u0_propagator(self.omega, dt))
        # (s'^dag - s^dag) F0 s  +  (s - s') F0^* s'^dag, primed factors on the right
        diag = (eye + dt**2 * F0 * (Rd @ Ls - Ld @ Ls)
                + dt**2 * np.conj(F0) * (Ls @ Rd - Rs @ Rd))
        close_ket = dt * (Rd - Ld)
        close_bra = dt * (Ls - Rs)
        if self.diagonal_on_closures:
            close_ket = diag @ close_ket
            close_bra = diag @ close_bra
        self.u4 = u4
        self.countdown = diag @ u4
        self.close = {Y: close_ket @ u4, Z: close_bra @ u4}
        # emission into slot s (1-based) with amplitude dt*F[s]; F[M] is outside the window
        self.emit = {Y: [dt * self.F[s] * Ls @ u4 for s in range(1, self.M)],
                     Z: [dt * np.conj(self.F[s]) * Rd @ u4 for s in range(1, self.M)]}
        for block in [self.countdown, *self.close.values(), *self.emit[Y], *self.emit[Z]]:
            block.setflags(write=False)

    @property
    def n_members(self):
        return 3**self.M

    @property
    def shape(self):
        n = 4 * self.n_members
        return (n, n)

    def apply(self, vec):
        """Return ``D @ vec`` for a flat state vector of length ``4 * 3**M``."""
        M = self.M
        v = np.asarray(vec, dtype=DTYPE).reshape((3,) * M + (4,))
        # C-order reshape: axis 0 is slot M, axis M-1 is slot 1
        out = np.zeros_like(v)
        head = out[0]  # target slot M is always X; axes are slots M-1 .. 1
        for t, block in ((X, self.countdown), (Y, self.close[Y]), (Z, self.close[Z])):
            # source slot 1 holds t, source slot p+1 moves to target slot p
            head += v[..., t, :] @ block.T
        src = v[..., X, :]
        for s in range(1, M):
            axis = M - 1 - s  # axis of slot s inside head / src
            lead = (slice(None),) * axis
            fresh = src[lead + (X,)]
            for t in (Y, Z):
                head[lead + (t,)] += fresh @ self.emit[t][s - 1].T
        return out.reshape(-1)

    def __matmul__(self, vec):
        return self.apply(vec)

    def block_entries(self):
        """Target member, source member and 4x4 block of every nonzero block.

        Returns
        -------
        targets, sources : ndarray of int
        blocks : ndarray, shape (nblocks, 4, 4)
        """
        M = self.M
        targets = np.arange(3 ** (M - 1))  # members with slot M equal to X
        rows, cols, blocks = [], [], []
        for t, block in ((X, self.countdown), (Y, self.close[Y]), (Z, self.close[Z])):
            rows.append(targets)
            cols.append(3 * targets + t)
            blocks.append(np.broadcast_to(block, (len(targets), 4, 4)))
        for s in range(1, M):
            digit = (targets // 3 ** (s - 1)) % 3
            for t in (Y, Z):
                sel = targets[digit == t]
                rows.append(sel)
                cols.append(3 * (sel - t * 3 ** (s - 1)))
                blocks.append(np.broadcast_to(self.emit[t][s - 1], (len(sel), 4, 4)))
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(blocks)

    @cached_property
    def matrix(self):
        """Explicit sparse matrix of the step (CSR, ``4*3**M`` square)."""
        rows, cols, blocks = self.block_entries()
        i, j = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
        r = (4 * rows[:, None, None] + i).ravel()
        c = (4 * cols[:, None, None] + j).ravel()
        data = blocks.ravel()
        keep = data != 0
        mat = sps.coo_matrix((data[keep], (r[keep], c[keep])), shape=self.shape)
        return mat.tocsr()


def build_evolution_operator(samples, omega, dt=None, M=None, **kwargs):
    """Construct the one-step operator for kernel samples and drive ``omega``.

    ``dt`` and ``M`` are optional consistency checks against ``samples``.
    """
    if dt is not None and not np.isclose(dt, samples.dt, rtol=1e-12, atol=0):
        raise ValueError(f"dt={dt} does not match the kernel samples (dt={samples.dt})")
    if M is not None and M != samples.M:
        raise ValueError(f"M={M} does not match the kernel samples (M={samples.M})")
    return EvolutionOperator(samples, omega, **kwargs)


@dataclass(frozen=True)
class VirtualEnsemble:
    """Flat vector of all members plus the step counter."""

    vec: np.ndarray = field(repr=False)
    step_index: int
    dt: float
    M: int

    @property
    def time(self):
        return self.step_index * self.dt

    def block(self, index):
        return unflatten(self.vec[4 * index:4 * index + 4])

    def blocks(self):
        return self.vec.reshape(-1, 4)


def initial_ensemble(rho0, M, dt):
    """Ensemble with the physical member set to ``rho0`` and all virtual members zero."""
    vec = np.zeros(4 * 3**M, dtype=DTYPE)
    vec[:4] = flatten(rho0)
    return VirtualEnsemble(vec, 0, float(dt), int(M))


def _check_compatible(state, D):
    if state.M != D.M or state.vec.shape != (4 * 3**D.M,):
        raise ValueError("ensemble and operator sizes disagree")


def step(state, D):
    """Advance the ensemble by one time step."""
    _check_compatible(state, D)
    return replace(state, vec=D.apply(state.vec), step_index=state.step_index + 1)


def project(state):
    """Physical density matrix (the all-X member)."""
    return state.block(0)


def apply_lowering(state):
    """Multiply every member by ``sigma`` from the left."""
    blocks = state.blocks() @ left_super(SIGMA).T
    return replace(state, vec=blocks.reshape(-1))


@dataclass
class Trajectory:
    """Projected states sampled during propagation, with the final ensemble."""

    times: np.ndarray
    states: np.ndarray
    final: VirtualEnsemble = field(repr=False)

    @property
    def populations(self):
        return self.states[:, 0, 0].real

    @property
    def coherences(self):
        """``<sigma> = Tr(sigma rho) = rho[0, 1]``."""
        return self.states[:, 0, 1]

    @property
    def traces(self):
        return np.trace(self.states, axis1=1, axis2=2).real


def propagate(start, D, n_steps, record_every=1, observer=None):
    """Step the ensemble ``n_steps`` times, recording the physical state.

    Parameters
    ----------
    start : array_like or VirtualEnsemble
        A 2x2 initial density matrix, or an ensemble to continue from.
    D : EvolutionOperator
    n_steps : int
    record_every : int
        Sampling interval in steps; the first and last states are always kept.
    observer : callable, optional
        Called as ``observer(state)`` on every recorded ensemble instead of
        :func:`project`; its return value is stored.

    Returns
    -------
    Trajectory
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if isinstance(start, VirtualEnsemble):
        state = start
    else:
        state = initial_ensemble(start, D.M, D.dt)
    _check_compatible(state, D)
    take = observer or project
    times, states = [state.time], [take(state)]
    for k in range(1, n_steps + 1):
        state = step(state, D)
        if k % record_every == 0 or k == n_steps:
            times.append(state.time)
            states.append(take(state))
    return Trajectory(np.array(times), np.array(states), state)
