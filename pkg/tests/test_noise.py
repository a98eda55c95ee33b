import numpy as np
import pytest
from hypothesis import given, strategies as st

from gdrb import rng as rngmod
from gdrb.chanalg import depolarizing, identity, infidelity, ptm_from_unitary
from gdrb.decomp import average_noise, solve_LR
from gdrb.errors import ValidationError
from gdrb.noise import (
    depol_z_gateset, fixed_infidelity_angle, fixed_infidelity_unitary, gate_independent_gateset,
    haar_su2, ideal_gateset, random_unitary_gateset, z_rotation,
)


def test_haar_samples_are_special_unitary():
    U = haar_su2(rngmod.stream(0, rngmod.Purpose.TEST, 20), size=200)
    assert np.allclose(U @ U.conj().transpose(0, 2, 1), np.eye(2), atol=1e-13)
    assert np.allclose(np.linalg.det(U), 1.0, atol=1e-13)


def test_haar_second_moment():
    # E|tr U|^2 = 1 over the Haar measure on SU(2); sample variance gives sigma
    U = haar_su2(rngmod.stream(0, rngmod.Purpose.TEST, 21), size=100_000)
    x = np.abs(np.trace(U, axis1=1, axis2=2)) ** 2
    sigma = x.std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() - 1.0) <= 3 * sigma


def test_haar_determinism():
    a = haar_su2(rngmod.stream(5, rngmod.Purpose.TEST, 1), size=10)
    b = haar_su2(rngmod.stream(5, rngmod.Purpose.TEST, 1), size=10)
    assert np.array_equal(a, b)


def test_fixed_infidelity_angle_value():
    assert fixed_infidelity_angle(0.015) == pytest.approx(0.150568, abs=1e-6)


@given(st.floats(0.0, 2 / 3), st.integers(0, 1000))
def test_fixed_infidelity(r, seed):
    U = fixed_infidelity_unitary(r, rngmod.stream(seed, rngmod.Purpose.TEST, 22))
    assert infidelity(ptm_from_unitary(U)) == pytest.approx(r, abs=1e-12)
    assert (4 - abs(np.trace(U)) ** 2) / 6 == pytest.approx(r, abs=1e-12)


def test_zero_infidelity_is_identity():
    U = fixed_infidelity_unitary(0.0, rngmod.stream(0, rngmod.Purpose.TEST, 23))
    assert np.allclose(U, np.eye(2), atol=1e-15)


@pytest.mark.parametrize("r", [-0.1, 0.7])
def test_infidelity_out_of_range(r):
    with pytest.raises(ValidationError):
        fixed_infidelity_angle(r)


def test_random_unitary_zero_noise(t_pauli):
    gs = random_unitary_gateset(t_pauli, 0.0, 4)
    assert np.allclose(gs.noisy_stack, t_pauli.ideal_stack, atol=1e-12)


def test_random_unitary_properties(t_pauli):
    r = 1e-3
    gs = random_unitary_gateset(t_pauli, r, 4)
    N = gs.noisy_stack
    assert np.allclose(N @ N.transpose(0, 2, 1), np.eye(4), atol=1e-12)
    assert gs.trace_preservation_error() <= 1e-12
    rel = [infidelity(g.T @ n) for g, n in zip(t_pauli.ideal, gs.noisy)]
    assert 0 < np.mean(rel) <= 4 * r


def test_random_unitary_determinism(t_pauli):
    a = random_unitary_gateset(t_pauli, 1e-2, 9).noisy_stack
    b = random_unitary_gateset(t_pauli, 1e-2, 9).noisy_stack
    c = random_unitary_gateset(t_pauli, 1e-2, 10).noisy_stack
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_random_unitary_wrong_group(clifford):
    with pytest.raises(ValidationError):
        random_unitary_gateset(clifford, 1e-3, 0)


def test_depol_z_structure(clifford):
    gs = depol_z_gateset(clifford, 0.99, 0.09)
    D, DZ = depolarizing(0.99).mat, (depolarizing(0.99) @ z_rotation(0.09)).mat
    rel = clifford.ideal_stack.transpose(0, 2, 1) @ gs.noisy_stack
    with_z = [i for i in range(24) if np.allclose(rel[i], DZ, atol=1e-14)]
    assert with_z == list(range(1, 24, 2))
    assert all(np.allclose(rel[i], D, atol=1e-14) for i in range(0, 24, 2))


def test_depol_z_average_noise(clifford):
    nu, th = 0.99, 0.09
    E = average_noise(depol_z_gateset(clifford, nu, th))
    expected = depolarizing(nu) @ (identity() + z_rotation(th)) * 0.5
    assert E.allclose(expected, atol=1e-12)


def test_depol_z_small_angle_is_gate_independent(clifford):
    gs = depol_z_gateset(clifford, 0.95, 1e-12)
    ref = gate_independent_gateset(clifford, depolarizing(0.95))
    assert np.allclose(gs.noisy_stack, ref.noisy_stack, atol=1e-11)


@pytest.mark.parametrize("kw", [dict(nu=0.0, theta=0.1), dict(nu=0.9, theta=2.0), dict(nu=0.9, theta=0.1, partition=[30])])
def test_depol_z_validation(clifford, kw):
    with pytest.raises(ValidationError):
        depol_z_gateset(clifford, **kw)


def test_custom_partition(clifford):
    gs = depol_z_gateset(clifford, 0.9, 0.2, partition=[0, 5])
    assert gs.descriptor["partition"] == [0, 5]


def test_gate_independent_identity(t_pauli):
    assert np.array_equal(gate_independent_gateset(t_pauli, identity()).noisy_stack, ideal_gateset(t_pauli).noisy_stack)


def test_gate_independent_both_sides(t_pauli):
    Lm, Rm = depolarizing(0.95), z_rotation(0.1)
    dec = solve_LR(gate_independent_gateset(t_pauli, (Lm, Rm), side="both"))
    from gdrb.chanalg import decay_params

    assert dec.p == pytest.approx(decay_params(Rm @ Lm).p, abs=1e-12)


def test_gate_independent_bad_side(t_pauli):
    with pytest.raises(ValidationError):
        gate_independent_gateset(t_pauli, identity(), side="middle")
