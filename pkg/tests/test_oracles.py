import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.linalg import expm_multiply

from nmfluor.core import EXCITED, GROUND
from nmfluor.experiments import fit_decay_rate
from nmfluor.kernels import (BandgapKernel, CavityKernel, FlatKernel, KernelSamples,
                             sample_kernel, zero_samples)
from nmfluor.oracles.decay import decay_amplitude
from nmfluor.oracles.discrete_modes import (KernelFitError, ModeComb, comb_hamiltonian,
                                            discrete_mode_oracle, fit_mode_comb)
from nmfluor.oracles.lindblad import (FockCutoffError, LindbladSystem, lindblad_baseline,
                                      liouvillian, rk4_propagate)

CAVITY = CavityKernel(1.0, 2.0, 6.0)


# single-excitation decay

def test_decay_trivial_cases():
    amp = decay_amplitude(zero_samples(0.1, 4), 50)
    assert np.all(amp.a == 1)
    dt = 0.01
    amp = decay_amplitude(sample_kernel(FlatKernel(1.0), dt, 1), 200)
    assert np.allclose(amp.a, (1 - dt / 2) ** np.arange(201), rtol=1e-13)
    assert abs(amp.populations[-1] - np.exp(-2.0)) < 2 * dt
    with pytest.raises(ValueError):
        decay_amplitude(zero_samples(0.1, 2), 5, form="implicit")


@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.floats(0.001, 0.2))
def test_decay_forms_agree(M, seed, dt):
    rng = np.random.default_rng(seed)
    s = KernelSamples(rng.normal(size=M) + 1j * rng.normal(size=M), dt)
    direct = decay_amplitude(s, 300, "direct", cross_check=False).a
    markov = decay_amplitude(s, 300, "markovian", cross_check=False).a
    scale = max(1.0, np.max(np.abs(direct)))
    assert np.max(np.abs(direct - markov)) <= 1e-13 * scale


def test_bandgap_decay_rates_depend_on_detuning():
    rates = []
    for delta in (10.0, 0.0, -10.0):
        s = sample_kernel(BandgapKernel.from_rate(1.0, 300.0, delta), 1 / 50, 11)
        amp = decay_amplitude(s, 250)
        assert abs(amp.a[0]) == 1
        rate, r2 = fit_decay_rate(amp.times, amp.populations, 0.5)
        assert r2 > 0.999
        rates.append(rate)
    assert rates[0] < rates[1] < rates[2]


# master equation

def test_kernel_match():
    sys = LindbladSystem.from_cavity_kernel(CAVITY, 0.0)
    tau = np.linspace(0, 3, 31)
    assert np.allclose(sys.kernel(tau), CAVITY(tau), rtol=1e-14)
    with pytest.raises(ValueError):
        LindbladSystem(3, 1.0, 0.0, 1.0, 0.0)


def test_empty_cavity_decay():
    sys = LindbladSystem(6, 0.0, 1.5, 2.0, 0.0)
    _, A, _ = sys.operators()
    cav = np.zeros((7, 7))
    cav[1, 1] = 1.0
    rho0 = sys.embed(GROUND, cav)
    xs = rk4_propagate(sys.liouvillian(), rho0.reshape(-1, order="F"), 0.05, 60, 10)
    n = [np.trace(A.conj().T @ A @ x.reshape(14, 14, order="F")).real for x in xs]
    assert np.allclose(n, np.exp(-2.0 * 0.05 * np.arange(61)), atol=1e-9)


def test_master_equation_trace_and_positivity():
    sys = LindbladSystem.from_cavity_kernel(CavityKernel(1.0, 4.0, 8.0), 4.0)
    res = lindblad_baseline(sys, EXCITED, 0.05, 160)
    tr = np.trace(res.states, axis1=1, axis2=2)
    assert np.max(np.abs(tr - 1)) < 1e-10 * res.times[-1]
    assert np.all(res.populations > -1e-12) and np.all(res.populations < 1 + 1e-12)
    L = liouvillian(*sys.operators()[:1])
    assert np.allclose(np.eye(sys.dim).reshape(-1, order="F") @ L, 0, atol=1e-12)


def test_fock_cutoff_checked():
    sys = LindbladSystem(4, 3.0, 0.0, 0.05, 12.0)
    with pytest.raises(FockCutoffError):
        lindblad_baseline(sys, GROUND, 0.05, 200)


# discrete modes

def test_decoupled_comb_rabi():
    comb = ModeComb(np.linspace(-3, 3, 5), np.zeros(5), 0.0)
    H = comb_hamiltonian(comb, 1.7, 2)
    psi0 = np.zeros(H.shape[0], dtype=complex)
    psi0[0] = 1
    psi = expm_multiply(-1j * H, psi0, start=0, stop=4, num=41, endpoint=True)
    t = np.linspace(0, 4, 41)
    assert np.allclose(np.abs(psi[:, 0]) ** 2, np.cos(1.7 * t / 2) ** 2, atol=1e-12)


def test_comb_hamiltonian_hermitian():
    comb = fit_mode_comb(CAVITY, 12, 2.0)
    H = comb_hamiltonian(comb, 0.8, 2)
    assert abs(H - H.conj().T).max() < 1e-14
    assert H.shape[0] == 2 * (1 + 12 + 12 * 13 // 2)


def test_comb_fit_guards():
    with pytest.raises(KernelFitError):
        discrete_mode_oracle(CAVITY, 0.0, 20, 2.0, 10, fit_tol=1e-6)
    with pytest.raises(KernelFitError):
        fit_mode_comb(CAVITY, 5, 3.0, band=(-40, 40))
    with pytest.raises(ValueError):
        discrete_mode_oracle(CAVITY, 0.0, 20, 2.0, 10, photon_cutoff=3)


def test_cross_oracle_triangle():
    T, n = 3.0, 60
    comb = discrete_mode_oracle(CAVITY, 0.0, 60, T, n, photon_cutoff=1)
    master = lindblad_baseline(LindbladSystem.from_cavity_kernel(CAVITY, 0.0), EXCITED, T / n, n)
    assert np.max(np.abs(comb.populations - master.populations)) < 2e-3
    errs = []
    for dt in (0.01, 0.005):
        stride = int(round(T / n / dt))
        M = int(round(2.5 / dt)) + 1  # window where the kernel is below 1e-3 of f(0)
        amp = decay_amplitude(sample_kernel(CAVITY, dt, M), n * stride)
        errs.append(np.max(np.abs(amp.populations[::stride] - master.populations)))
    assert errs[1] < errs[0] < 0.02
    assert 1.5 < errs[0] / errs[1] < 2.5
