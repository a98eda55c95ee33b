"""Quick self-checks of the library's core invariants.

Each check returns ``(name, passed, detail)``; :func:`run_all` runs them in
order and :func:`format_table` renders the result for the CLI.
"""
from __future__ import annotations

import time

import numpy as np

from . import rng as rngmod
from .analysis import counterexample_analytics, first_order_gamma, fit_fixed_spam, fit_free
from .chanalg import average_fidelity, bowdrey_fidelity, depolarizing, ket0_state
from .decomp import deltas, gauge_spam, gauge_to_L_identity, gauge_transform, solve_LR, thm2_bound
from .groups import check_projective_representation, get_group, random_mixed_unitary_channel, verify_two_design
from .kernels import BACKENDS
from .noise import depol_z_gateset, gate_independent_gateset, random_unitary_gateset
from .rbsim import DecayDataset, brute_force_average, epsilon_bruteforce, theory_curve


def _two_design():
    t = verify_two_design(get_group("t_pauli"))[0]
    c = verify_two_design(get_group("clifford"))[0]
    ctrl = verify_two_design(get_group("pauli"), trials=10)[0]
    return max(t, c) <= 1e-12 and ctrl > 1e-3, f"t_pauli {t:.1e}, clifford {c:.1e}, pauli control {ctrl:.2f}"


def _representation():
    err = max(check_projective_representation(get_group(n)) for n in ("t_pauli", "clifford", "pauli"))
    return err <= 1e-12, f"max table error {err:.1e}"


def _gate_independent():
    grp = get_group("t_pauli")
    worst = 0.0
    for p0 in (0.9, 0.99, 0.999):
        dec = solve_LR(gate_independent_gateset(grp, depolarizing(p0, 1.0)))
        worst = max(worst, abs(dec.p - p0), abs(dec.t - 1.0))
    return worst <= 1e-12, f"max |p - p0|, |t - 1| = {worst:.1e}"


def _exact_decay():
    gs = random_unitary_gateset(get_group("t_pauli"), 1e-2, 1)
    gs_I, dec_I = gauge_to_L_identity(gs, solve_LR(gs))
    rho, Q = gauge_spam(solve_LR(gs).L.mat, ket0_state(), ket0_state())
    rep = deltas(gs_I, dec_I, rho, Q)
    curve = theory_curve(dec_I, rep, rho, Q, (1, 2, 3))
    ident, within = 0.0, True
    for k, m in enumerate((1, 2, 3)):
        resid = brute_force_average(gs_I, m, rho, Q) - curve.values[k]
        ident = max(ident, abs(resid - epsilon_bruteforce(gs_I, rep, m, rho, Q)))
        within &= abs(resid) <= curve.bound[k]
    return ident <= 1e-10 and within, f"identity error {ident:.1e}, bound respected: {within}"


def _thm2():
    worst = -np.inf
    for r in (1e-4, 1e-3):
        gs = random_unitary_gateset(get_group("t_pauli"), r, 1)
        b = thm2_bound(*gauge_to_L_identity(gs, solve_LR(gs)))
        worst = max(worst, float(np.max(b.lhs - b.per_gate_bound)))
    return worst < 0, f"max (lhs - bound) = {worst:.2e}"


def _gauge():
    gs = random_unitary_gateset(get_group("t_pauli"), 1e-3, 2)
    dec = solve_LR(gs)
    gen = rngmod.stream(0, rngmod.Purpose.TEST, 8)
    worst = 0.0
    for _ in range(5):
        S = np.eye(4) + 0.2 * gen.standard_normal((4, 4))
        d2 = solve_LR(gauge_transform(gs, S))
        worst = max(worst, abs(d2.p - dec.p), abs(d2.t - dec.t))
    return worst <= 1e-10, f"max change in (p, t) = {worst:.1e}"


def _fitters():
    m = np.array([4, 8, 16, 32, 64, 128, 256, 512])
    y = 0.3 * 0.95**m + 0.6
    ds = DecayDataset(m, y, np.full(m.size, 1e-4), np.full(m.size, 100))
    f = fit_free(ds)
    err_free = max(abs(f.A_est - 0.3), abs(f.B_est - 0.6), abs(f.p_est - 0.95))
    ds2 = DecayDataset(m, 0.5 * 0.97**m + 0.5, np.full(m.size, 1e-4), np.full(m.size, 100))
    err_fixed = abs(fit_fixed_spam(ds2).p_est - 0.97)
    return err_free <= 1e-8 and err_fixed <= 1e-9, f"free {err_free:.1e}, fixed {err_fixed:.1e}"


def _gamma():
    worst = 0.0
    grp = get_group("clifford")
    for nu, theta in ((0.99, 0.09), (0.9, 0.5), (1.0, 1.2)):
        g = first_order_gamma(depol_z_gateset(grp, nu, theta)).gamma
        worst = max(worst, abs(g - counterexample_analytics(nu, theta)["gamma_analytic"]))
    ratio = counterexample_analytics(0.99, 0.09)["ratio"]
    return worst <= 1e-6 and 7 <= ratio <= 10, f"gamma error {worst:.1e}, ratio {ratio:.3f}"


def _fidelity():
    gen = rngmod.stream(0, rngmod.Purpose.TEST, 9)
    worst = max(abs(average_fidelity(C) - bowdrey_fidelity(C))
                for C in (random_mixed_unitary_channel(gen) for _ in range(20)))
    return worst <= 1e-12, f"max |f - f_bowdrey| = {worst:.1e}"


def _backends():
    gs = random_unitary_gateset(get_group("t_pauli"), 1e-2, 3)
    rho = Q = ket0_state()
    vals = {name: brute_force_average(gs, 3, rho, Q, backend=name) for name in BACKENDS}
    spread = max(vals.values()) - min(vals.values())
    return spread <= 1e-12, f"{', '.join(sorted(vals))}: spread {spread:.1e}"


CHECKS = (
    ("two-design twirl", _two_design),
    ("group tables", _representation),
    ("gate-independent recovery", _gate_independent),
    ("exact decay identity", _exact_decay),
    ("small-perturbation bound", _thm2),
    ("gauge invariance", _gauge),
    ("fitter oracle", _fitters),
    ("first-order gamma", _gamma),
    ("fidelity formulas", _fidelity),
    ("kernel backends agree", _backends),
)


def run_all():
    out = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail, time.perf_counter() - t0))
    return out


def format_table(results) -> str:
    width = max(len(r[0]) for r in results)
    lines = [f"{'check':<{width}}  result  time    detail"]
    for name, ok, detail, dt in results:
        lines.append(f"{name:<{width}}  {'PASS' if ok else 'FAIL':<6}  {dt:5.2f}s  {detail}")
    lines.append(f"{sum(r[1] for r in results)}/{len(results)} checks passed")
    return "\n".join(lines)
