import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nmfluor.core import (EXCITED, GROUND, IDENTITY, SIGMA, SIGMA_DAG, SIGMA_X, flatten,
                          left_super, right_super, sandwich_super, u0_propagator, unflatten)

finite = st.floats(-10, 10, allow_nan=False)
mat2 = arrays(complex, (2, 2), elements=st.complex_numbers(max_magnitude=10, allow_nan=False))


def test_flatten_examples():
    assert np.array_equal(flatten(IDENTITY / 2), [0.5, 0, 0, 0.5])
    assert np.array_equal(flatten(EXCITED), [1, 0, 0, 0])
    rho = np.array([[1, 2], [3, 4]])
    # column-major: index 2j + i holds rho[i, j]
    assert np.array_equal(flatten(rho), [1, 3, 2, 4])


def test_sigma_lowers():
    assert np.array_equal(SIGMA @ EXCITED @ SIGMA_DAG, GROUND)


@given(mat2)
def test_flatten_roundtrip(rho):
    assert np.array_equal(unflatten(flatten(rho)), rho)


def test_unflatten_rejects_bad_shape():
    with pytest.raises(ValueError):
        unflatten(np.zeros(5))


@given(mat2, mat2)
def test_left_right_super_contracts(a, rho):
    assert np.allclose(unflatten(left_super(a) @ flatten(rho)), a @ rho, atol=1e-10)
    assert np.allclose(unflatten(right_super(a) @ flatten(rho)), rho @ a, atol=1e-10)


@given(mat2, mat2)
def test_super_composition_and_commutation(a, b):
    assert np.allclose(left_super(a) @ left_super(b), left_super(a @ b), atol=1e-9)
    assert np.allclose(right_super(a) @ right_super(b), right_super(b @ a), atol=1e-9)
    assert np.allclose(left_super(a) @ right_super(b), right_super(b) @ left_super(a), atol=1e-9)


def test_super_identity_and_single_entries():
    assert np.array_equal(left_super(IDENTITY), np.eye(4))
    assert np.array_equal(right_super(IDENTITY), np.eye(4))
    assert np.array_equal(left_super(SIGMA) @ flatten(EXCITED), flatten(SIGMA @ EXCITED))
    assert np.array_equal(right_super(SIGMA_DAG) @ flatten(EXCITED), flatten(EXCITED @ SIGMA_DAG))


@given(mat2, mat2)
def test_sandwich(u, rho):
    assert np.allclose(unflatten(sandwich_super(u) @ flatten(rho)), u @ rho @ u.conj().T,
                       atol=1e-8)


def test_u0_examples():
    assert np.allclose(u0_propagator(0.0, 0.3), IDENTITY)
    assert np.allclose(u0_propagator(np.pi, 1.0), -1j * SIGMA_X, atol=1e-15)
    assert np.allclose(u0_propagator(2 * np.pi, 1.0), -IDENTITY, atol=1e-15)
    with pytest.raises(ValueError):
        u0_propagator(1.0, 0.0)


@given(finite, st.floats(0.01, 5), st.floats(0.01, 5))
def test_u0_unitary_and_group(omega, a, b):
    u = u0_propagator(omega, a)
    assert np.allclose(u @ u.conj().T, IDENTITY, atol=1e-14)
    assert np.allclose(u0_propagator(omega, a + b), u @ u0_propagator(omega, b), atol=1e-13)
