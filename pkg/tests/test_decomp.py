import numpy as np
import pytest
from hypothesis import given, strategies as st

from gdrb import rng as rngmod
from gdrb.chanalg import (
    decay_params, depolarizing, identity, induced_1to1_norm, infidelity, unvec,
)
from gdrb.decomp import (
    average_maps, average_noise, bauer_fike_check, deltas, dominant_real_eigen, gauge_spam,
    gauge_to_L_identity, gauge_transform, interpret, solve_LR, thm2_bound,
)
from gdrb.errors import BoundVacuousError, DegenerateSpectrumError, GaugeError, ValidationError
from gdrb.groups import get_group
from gdrb.noise import depol_z_gateset, gate_independent_gateset, ideal_gateset, random_unitary_gateset


@pytest.fixture(scope="module")
def ru3():
    return random_unitary_gateset(get_group("t_pauli"), 1e-3, 11)


def test_dominant_eigen_diagonal():
    res = dominant_real_eigen(np.diag([0.9, 0.3]))
    assert res.value == pytest.approx(0.9)
    assert np.allclose(res.right, [1, 0]) and np.allclose(res.left, [1, 0])
    assert res.gap == pytest.approx(0.6)


def test_dominant_eigen_nonsymmetric():
    M = np.array([[0.5, 2.0, 0.0], [0.0, 0.8, 1.0], [0.0, 0.0, 0.2]])
    res = dominant_real_eigen(M)
    assert res.value == pytest.approx(0.8)
    assert np.allclose(M @ res.right, 0.8 * res.right, atol=1e-12)
    assert np.allclose(M.T @ res.left, 0.8 * res.left, atol=1e-12)


def test_rotation_block_is_degenerate():
    c, s = np.cos(0.3), np.sin(0.3)
    with pytest.raises(DegenerateSpectrumError):
        dominant_real_eigen(np.array([[c, -s, 0], [s, c, 0], [0, 0, 0.5]]))


def test_tie_prefers_positive_and_rejects_ambiguity():
    assert dominant_real_eigen(np.diag([-0.7, 0.7, 0.1])).value == pytest.approx(0.7)
    with pytest.raises(DegenerateSpectrumError):
        dominant_real_eigen(np.diag([0.7, 0.7, 0.1]))


def test_average_maps_noiseless(t_pauli):
    M_t, M_p = average_maps(ideal_gateset(t_pauli))
    assert dominant_real_eigen(M_p).value == pytest.approx(1.0, abs=1e-12)
    assert dominant_real_eigen(M_t).value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p0,t0", [(0.9, 1.0), (0.97, 0.95)])
def test_average_maps_depolarized(t_pauli, p0, t0):
    gs = gate_independent_gateset(t_pauli, depolarizing(p0, t0))
    M_t, M_p = average_maps(gs)
    assert dominant_real_eigen(M_p).value == pytest.approx(p0, abs=1e-12)
    assert dominant_real_eigen(M_t).value == pytest.approx(t0, abs=1e-12)


def test_trace_preserving_sets_have_unit_t(ru3):
    M_t, _ = average_maps(ru3)
    e1 = np.eye(4)[0]
    assert np.allclose(e1 @ M_t, e1, atol=1e-12)
    assert solve_LR(ru3).t == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p0", [0.9, 0.99, 0.999])
def test_gate_independent_recovery(t_pauli, p0):
    gs = gate_independent_gateset(t_pauli, depolarizing(p0, 1.0))
    dec = solve_LR(gs)
    assert dec.p == pytest.approx(p0, abs=1e-12)
    assert dec.t == pytest.approx(1.0, abs=1e-12)
    assert max(dec.residuals.values()) <= 1e-12
    LGR = dec.L.mat @ t_pauli.ideal_stack @ dec.R.mat
    assert np.allclose(LGR, gs.noisy_stack, atol=1e-12)


def test_random_unitary_decomposition(ru3):
    dec = solve_LR(ru3)
    assert max(dec.residuals.values()) <= 1e-10
    assert dec.eigengap_p > 1e3 * max(dec.residuals.values())
    assert not dec.dominant_complex or dec.eigengap_p > 0


def test_block_structure_and_normalization(ru3):
    dec = solve_LR(ru3)
    d2 = 4
    assert np.max(np.abs(dec.L_prime[:, 0])) <= 1e-12
    assert np.max(np.abs(dec.R_prime[0, :])) <= 1e-12
    assert dec.R_vec @ dec.L_vec == pytest.approx(dec.t, abs=1e-12)
    assert np.trace(dec.R_prime @ dec.L_prime) == pytest.approx(dec.p * (d2 - 1), abs=1e-12)
    RL = dec.R @ dec.L
    dp = decay_params(RL)
    assert dp.p == pytest.approx(dec.p, abs=1e-12) and dp.t == pytest.approx(dec.t, abs=1e-12)
    assert np.linalg.norm(dec.L_prime, 2) == pytest.approx(1.0, abs=1e-12)
    assert np.trace(dec.L_prime) >= 0


def test_raw_eigenvector_is_orthogonal_to_identity(ru3):
    _, M_p = average_maps(ru3)
    Lp = unvec(dominant_real_eigen(M_p).right)
    assert np.max(np.abs(Lp[:, 0])) <= 1e-12


def test_depol_z_rb_decay_differs_from_average_noise(clifford):
    gs = depol_z_gateset(clifford, 0.99, 0.09)
    dec = solve_LR(gs)
    rE = infidelity(average_noise(gs))
    assert abs(dec.p - (1 - 2 * rE)) > 1e-6


def test_gauge_identity_is_noop(ru3):
    assert np.array_equal(gauge_transform(ru3, identity()).noisy_stack, ru3.noisy_stack)


@given(st.integers(0, 10_000))
def test_gauge_invariance(seed):
    gs = random_unitary_gateset(get_group("t_pauli"), 1e-3, 11)
    dec = solve_LR(gs)
    S = np.eye(4) + 0.3 * rngmod.stream(seed, rngmod.Purpose.TEST, 30).standard_normal((4, 4))
    if np.linalg.cond(S) > 100:
        return
    d2 = solve_LR(gauge_transform(gs, S))
    assert d2.p == pytest.approx(dec.p, abs=1e-10)
    assert d2.t == pytest.approx(dec.t, abs=1e-10)


def test_gauge_to_L_identity(ru3, t_pauli):
    dec = solve_LR(ru3)
    gs_I, dec_I = gauge_to_L_identity(ru3, dec)
    assert np.allclose(dec_I.L.mat, np.eye(4), atol=1e-8)
    assert dec_I.p == pytest.approx(dec.p, abs=1e-10)
    G = t_pauli.ideal_stack
    twirled = np.mean(G @ dec_I.R.mat @ G.transpose(0, 2, 1), axis=0)
    assert np.allclose(twirled, depolarizing(dec.p, dec.t).mat, atol=1e-10)


def test_gauge_spam_preserves_survival(ru3, ket0):
    dec = solve_LR(ru3)
    gs_I, _ = gauge_to_L_identity(ru3, dec)
    rho_I, Q_I = gauge_spam(dec.L, ket0, ket0)
    seq = [3, 7, 1]
    v, w = ket0, rho_I
    for g in seq:
        v, w = ru3.noisy_stack[g] @ v, gs_I.noisy_stack[g] @ w
    assert ket0 @ v == pytest.approx(Q_I @ w, abs=1e-12)


def test_singular_gauge(ru3):
    with pytest.raises(GaugeError) as err:
        gauge_transform(ru3, np.diag([1, 1, 1, 0.0]))
    assert err.value.condition_number is None or err.value.condition_number > 1e8


def test_deltas_vanish_for_gate_independent(t_pauli, ket0):
    gs = gate_independent_gateset(t_pauli, depolarizing(0.95))
    rep = deltas(gs, solve_LR(gs), ket0, ket0)
    assert rep.delta1 <= 1e-10 and rep.delta2 <= 1e-10


def test_delta_definitions(ru3, ket0):
    dec = solve_LR(ru3)
    gs_I, dec_I = gauge_to_L_identity(ru3, dec)
    rho, Q = gauge_spam(dec.L, ket0, ket0)
    rep = deltas(gs_I, dec_I, rho, Q)
    assert rep.delta2 == pytest.approx(np.mean([np.linalg.norm(D.mat, 2) for D in rep.deltas]))
    worst = max(induced_1to1_norm(D) for D in rep.deltas)
    assert rep.delta1 == pytest.approx(worst * rep.rho_trace_norm * rep.Q_trace_norm)
    assert rep.delta2 < 1


def test_thm2_exact_gate_independent(t_pauli):
    gs = gate_independent_gateset(t_pauli, depolarizing(0.97))
    b = thm2_bound(gs, solve_LR(gs))
    assert b.bound <= 1e-12


@pytest.mark.parametrize("r", [1e-4, 1e-3])
def test_thm2_holds(t_pauli, r):
    gs = random_unitary_gateset(t_pauli, r, 12)
    b = thm2_bound(*gauge_to_L_identity(gs, solve_LR(gs)))
    assert b.holds and b.lhs.max() < b.bound


def test_thm2_vacuous_for_strong_noise(t_pauli):
    gs = random_unitary_gateset(t_pauli, 0.3, 12)
    with pytest.raises(BoundVacuousError):
        thm2_bound(*gauge_to_L_identity(gs, solve_LR(gs)))


def test_thm2_requires_identity_gauge(ru3):
    with pytest.raises(ValidationError):
        thm2_bound(gauge_transform(ru3, np.diag([1, 2, 1, 1.0])), solve_LR(ru3))


def test_interpret():
    from types import SimpleNamespace

    assert interpret(SimpleNamespace(p=1.0, t=1.0, dim=2))["r_internoise"] == pytest.approx(0.0)
    assert interpret(SimpleNamespace(p=0.98, t=1.0, dim=2))["r_internoise"] == pytest.approx(0.01)


def test_interpret_depolarizing(t_pauli):
    dec = solve_LR(gate_independent_gateset(t_pauli, depolarizing(0.94)))
    assert interpret(dec)["r_internoise"] == pytest.approx(0.03, abs=1e-12)


@pytest.mark.parametrize("r", [1e-4, 1e-3, 1e-2])
def test_bauer_fike(t_pauli, r):
    gs = random_unitary_gateset(t_pauli, r, 13)
    bf = bauer_fike_check(gs, solve_LR(gs))
    assert bf["dp"] <= bf["bound"]
