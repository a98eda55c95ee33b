"""Left/right noise decomposition for gate-dependent noise.

For a noisy gate set ``{G~}`` over a unitary 2-design we look for maps
``L, R`` and scalars ``p, t`` with

    E_G[G~ L G^dag] = L D_{p,t}
    E_G[G^dag R G~] = D_{p,t} R
    E_G[G R L G^dag] = D_{p,t}

Writing ``L = |L>><<I| + L'`` and ``R = |I>><<R| + R'`` splits these into
eigenproblems: ``(t, |L>>, <<R|)`` from the average noisy map and
``(p, L', R')`` from the averages of ``G_u (x) G~`` and ``(G~ (x) G_u)^T``
acting on column-stacked matrices.  Only the product ``R L`` is physical;
we keep ``|L>>`` at unit 2-norm and ``L'`` at unit operator norm and put all
of the scaling into ``R``.

The per-gate remainders ``Delta_G = G~ - L G R`` control how far the exact
RB decay can deviate from ``A p^m + B t^m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .chanalg import (
    SuperOp,
    decay_params,
    depolarizing,
    from_basis_vector,
    induced_1to1_norm,
    trace_norm,
    unvec,
)
from .errors import (
    DegenerateSpectrumError,
    GaugeError,
    NormalizationError,
    NumericalError,
    ValidationError,
    BoundVacuousError,
)
from .noise import GateSet

__all__ = [
    "EigenResult",
    "Decomposition",
    "DeltaReport",
    "Thm2Bound",
    "average_maps",
    "dominant_real_eigen",
    "solve_LR",
    "condition_residuals",
    "gauge_transform",
    "gauge_spam",
    "gauge_to_L_identity",
    "deltas",
    "thm2_bound",
    "interpret",
    "average_noise",
    "bauer_fike_check",
]

_NORM_FLOOR = 1e-14


@dataclass(frozen=True)
class EigenResult:
    value: float
    right: np.ndarray
    left: np.ndarray
    gap: float
    spectrum: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class Decomposition:
    p: float
    t: float
    L: SuperOp
    R: SuperOp
    residuals: dict
    eigengap_p: float
    eigengap_t: float
    dominant_complex: bool = False

    @property
    def dim(self):
        return self.L.dim

    @property
    def L_vec(self) -> np.ndarray:
        return self.L.mat[:, 0].copy()

    @property
    def R_vec(self) -> np.ndarray:
        return self.R.mat[0, :].copy()

    @property
    def L_prime(self) -> np.ndarray:
        out = np.array(self.L.mat)
        out[:, 0] = 0.0
        return out

    @property
    def R_prime(self) -> np.ndarray:
        out = np.array(self.R.mat)
        out[0, :] = 0.0
        return out

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "t": self.t,
            "residuals": dict(self.residuals),
            "eigengaps": {"p": self.eigengap_p, "t": self.eigengap_t},
            "dominant_complex": self.dominant_complex,
            "L": self.L.to_json(),
            "R": self.R.to_json(),
        }


@dataclass(frozen=True, eq=False)
class DeltaReport:
    deltas: tuple
    op_norms: np.ndarray
    induced_norms: np.ndarray
    rho_trace_norm: float
    Q_trace_norm: float
    delta1: float
    delta2: float
    thm2_bound: float | None = None

    def bound(self, m):
        """``delta1 * delta2**m``."""
        return self.delta1 * np.power(self.delta2, np.asarray(m, dtype=float))


@dataclass(frozen=True)
class Thm2Bound:
    bound: float
    per_gate_bound: np.ndarray
    lhs: np.ndarray
    first_terms: np.ndarray
    numerator: float
    denominator: float
    inverse_depol_norm: float

    @property
    def holds(self) -> bool:
        return bool(np.all(self.lhs <= self.per_gate_bound))


# ---------------------------------------------------------------------------
# eigenproblems
# ---------------------------------------------------------------------------

def average_maps(gs: GateSet):
    """``(E[G~], E[G_u (x) G~])`` as dense arrays."""
    N = gs.noisy_stack
    Gu = np.array(gs.group.ideal_stack)
    Gu[:, :, 0] = 0.0
    M_t = N.mean(axis=0)
    M_p = np.mean([np.kron(gu, g) for gu, g in zip(Gu, N)], axis=0)
    return M_t, M_p


def _transpose_problem_map(gs: GateSet) -> np.ndarray:
    """``E[G~ (x) G_u]^T``, whose eigenvectors are ``vec(R')``."""
    N = gs.noisy_stack
    Gu = np.array(gs.group.ideal_stack)
    Gu[:, :, 0] = 0.0
    return np.mean([np.kron(g, gu) for gu, g in zip(Gu, N)], axis=0).T


def _quasi_triangular_eigs(T: np.ndarray) -> np.ndarray:
    n = T.shape[0]
    out = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            a, b, c, d = T[i, i], T[i, i + 1], T[i + 1, i], T[i + 1, i + 1]
            half_tr = 0.5 * (a + d)
            disc = complex(0.25 * (a - d) ** 2 + b * c)
            root = np.sqrt(disc)
            out += [half_tr + root, half_tr - root]
            i += 2
        else:
            out.append(complex(T[i, i]))
            i += 1
    return np.array(out, dtype=complex)


_START = np.random.default_rng(20171218).standard_normal(4096)


def _inverse_iteration(M: np.ndarray, lam: float, iters: int = 3) -> np.ndarray:
    n = M.shape[0]
    shift = lam + 1e-10 * max(1.0, abs(lam))
    lu = sla.lu_factor(M - shift * np.eye(n), check_finite=False)
    v = _START[:n].copy()
    v /= np.linalg.norm(v)
    for _ in range(iters):
        v = sla.lu_solve(lu, v, check_finite=False)
        v /= np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v if v[k] >= 0 else -v


def dominant_real_eigen(M, imag_tol: float = 1e-9, tie_tol: float = 1e-12) -> EigenResult:
    """Largest-modulus eigenvalue of a real matrix with its eigenvectors.

    Eigenvalues come from the real Schur form; eigenvectors from inverse
    iteration at the selected eigenvalue (``left`` solves ``M^T v = lam v``).
    A complex dominant eigenvalue, or a modulus tie that cannot be resolved
    by preferring the unique positive candidate, raises
    :class:`DegenerateSpectrumError`.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {M.shape}")
    T, _ = sla.schur(M, output="real")
    eigs = _quasi_triangular_eigs(T)
    eigs = eigs[np.argsort(-np.abs(eigs), kind="stable")]
    top = eigs[0]
    scale = max(abs(top), np.finfo(float).tiny)
    if abs(top.imag) > imag_tol * scale:
        raise DegenerateSpectrumError(
            f"dominant eigenvalue {top:.6g} is part of a complex-conjugate pair"
        )
    tied = [k for k in range(1, len(eigs)) if abs(abs(eigs[k]) - abs(top)) <= tie_tol * max(1.0, abs(top))]
    chosen = 0
    if tied:
        if any(abs(eigs[k].imag) > imag_tol * scale for k in tied):
            raise DegenerateSpectrumError("dominant modulus shared with a complex eigenvalue")
        positive = [k for k in [0, *tied] if eigs[k].real > 0]
        if len(positive) != 1:
            raise DegenerateSpectrumError(
                f"ambiguous dominant eigenvalue: {[eigs[k].real for k in [0, *tied]]}"
            )
        chosen = positive[0]
    lam = float(eigs[chosen].real)
    others = np.delete(eigs, chosen)
    gap = float(np.min(np.abs(others - lam))) if others.size else np.inf

    right = _inverse_iteration(M, lam)
    left = _inverse_iteration(M.T, lam)
    tol = 1e-8 * max(1.0, np.linalg.norm(M, 2))
    if np.linalg.norm(M @ right - lam * right) > tol or np.linalg.norm(M.T @ left - lam * left) > tol:
        raise NumericalError(f"inverse iteration did not converge at eigenvalue {lam:.6g}")
    return EigenResult(lam, right, left, gap, eigs)


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------

def condition_residuals(gs: GateSet, L: SuperOp, R: SuperOp, p: float, t: float) -> dict:
    G = gs.group.ideal_stack
    GT = G.transpose(0, 2, 1)
    N = gs.noisy_stack
    D = depolarizing(p, t, gs.dim).mat
    rL = np.linalg.norm(np.mean(N @ L.mat @ GT, axis=0) - L.mat @ D, 2)
    rR = np.linalg.norm(np.mean(GT @ R.mat @ N, axis=0) - D @ R.mat, 2)
    rS = np.linalg.norm(np.mean(G @ (R.mat @ L.mat) @ GT, axis=0) - D, 2)
    return {"rL": float(rL), "rR": float(rR), "rScale": float(rS)}


def solve_LR(gs: GateSet) -> Decomposition:
    d = gs.dim
    n = d * d
    M_t, M_p = average_maps(gs)

    et = dominant_real_eigen(M_t)
    t = et.value
    Lvec = et.right / np.linalg.norm(et.right)
    if abs(Lvec[0]) > _NORM_FLOOR and Lvec[0] < 0:
        Lvec = -Lvec
    Rrow = et.left
    overlap = float(Rrow @ Lvec)
    if abs(overlap) < _NORM_FLOOR:
        raise NormalizationError(f"<<R|L>> = {overlap:.3g} is too small to normalize")
    Rrow = Rrow * (t / overlap)

    ep = dominant_real_eigen(M_p)
    p = ep.value
    Lp = unvec(ep.right)
    Lp /= np.linalg.norm(Lp, 2)
    if np.trace(Lp) < 0:
        Lp = -Lp

    epR = dominant_real_eigen(_transpose_problem_map(gs))
    if abs(epR.value - p) > 1e-9 * max(1.0, abs(p)):
        raise NumericalError(f"left/right unital eigenvalues disagree: {p} vs {epR.value}")
    Rp = unvec(epR.right)
    overlap_p = float(np.trace(Rp @ Lp))
    if abs(overlap_p) < _NORM_FLOOR:
        raise NormalizationError(f"tr(R'L') = {overlap_p:.3g} is too small to normalize")
    Rp = Rp * (p * (n - 1) / overlap_p)

    # Both blocks are orthogonal to the identity by construction; check, then
    # remove the rounding noise so the block structure is exact.
    if np.max(np.abs(Lp[:, 0])) > 1e-10 or np.max(np.abs(Rp[0, :])) > 1e-10 * max(1.0, abs(p)):
        raise NumericalError("unital eigenvectors are not orthogonal to the identity")
    Lp[:, 0] = 0.0
    Rp[0, :] = 0.0

    e1 = np.zeros(n)
    e1[0] = 1.0
    L = SuperOp(d, np.outer(Lvec, e1) + Lp)
    R = SuperOp(d, np.outer(e1, Rrow) + Rp)
    complex_present = bool(np.any(np.abs(et.spectrum.imag) > 0) or np.any(np.abs(ep.spectrum.imag) > 0))
    return Decomposition(
        p=p,
        t=t,
        L=L,
        R=R,
        residuals=condition_residuals(gs, L, R, p, t),
        eigengap_p=ep.gap,
        eigengap_t=et.gap,
        dominant_complex=complex_present,
    )


# ---------------------------------------------------------------------------
# gauge freedom
# ---------------------------------------------------------------------------

def _checked_inverse(S: np.ndarray, max_cond: float, what: str) -> np.ndarray:
    cond = float(np.linalg.cond(S))
    if not np.isfinite(cond) or cond > max_cond:
        raise GaugeError(f"{what} is singular or ill-conditioned (cond = {cond:.3g})", cond)
    return np.linalg.inv(S)


def gauge_transform(gs: GateSet, S, max_cond: float = 1e8) -> GateSet:
    """Conjugate every noisy gate: ``G~ -> S^-1 G~ S``."""
    S = S.mat if isinstance(S, SuperOp) else np.asarray(S, dtype=float)
    Sinv = _checked_inverse(S, max_cond, "gauge map")
    noisy = [SuperOp(gs.dim, Sinv @ g.mat @ S) for g in gs.noisy]
    desc = dict(gs.descriptor)
    desc["gauge"] = "transformed"
    return GateSet(gs.group, noisy, desc)


def gauge_spam(S, rho, Q, max_cond: float = 1e8):
    """SPAM vectors after ``G~ -> S^-1 G~ S``: ``rho -> S^-1 rho``, ``<<Q| -> <<Q| S``."""
    S = S.mat if isinstance(S, SuperOp) else np.asarray(S, dtype=float)
    Sinv = _checked_inverse(S, max_cond, "gauge map")
    return Sinv @ np.asarray(rho, dtype=float), S.T @ np.asarray(Q, dtype=float)


def gauge_to_L_identity(gs: GateSet, dec: Decomposition, max_cond: float = 1e8):
    """Move to the gauge where ``L`` is the identity.

    Under ``G~ -> S^-1 G~ S`` the solutions move as ``L -> S^-1 L`` and
    ``R -> R S``, so the target gauge is reached with ``S = L``.  Returns
    ``(gateset, decomposition)`` in the new gauge; SPAM vectors follow with
    ``gauge_spam(dec.L, rho, Q)``.
    """
    _checked_inverse(dec.L.mat, max_cond, "L")
    gs_I = gauge_transform(gs, dec.L.mat, max_cond=max_cond)
    dec_I = solve_LR(gs_I)
    err = float(np.max(np.abs(dec_I.L.mat - np.eye(gs.dim**2))))
    if err > 1e-8:
        raise NumericalError(f"re-solved L deviates from identity by {err:.3g}")
    return gs_I, dec_I


# ---------------------------------------------------------------------------
# perturbation quantities
# ---------------------------------------------------------------------------

def deltas(gs: GateSet, dec: Decomposition, rho, Q, residual_tol: float = 1e-8) -> DeltaReport:
    """``Delta_G = G~ - L G R`` with the quantities bounding the RB perturbation.

    ``delta2`` is the mean operator norm of the remainders; ``delta1`` is the
    worst induced trace norm times the trace norms of the state and
    observable, all evaluated in the gauge the inputs are given in.
    """
    worst = max(dec.residuals.values())
    if worst > residual_tol:
        raise NumericalError(f"decomposition residual {worst:.3g} exceeds {residual_tol:g}")
    G = gs.group.ideal_stack
    rem = gs.noisy_stack - dec.L.mat @ G @ dec.R.mat
    op_norms = np.array([np.linalg.norm(D, 2) for D in rem])
    induced = np.array([induced_1to1_norm(D) for D in rem])
    rho_n = trace_norm(from_basis_vector(rho))
    Q_n = trace_norm(from_basis_vector(Q))
    return DeltaReport(
        deltas=tuple(SuperOp(gs.dim, D) for D in rem),
        op_norms=op_norms,
        induced_norms=induced,
        rho_trace_norm=rho_n,
        Q_trace_norm=Q_n,
        delta1=float(induced.max() * rho_n * Q_n),
        delta2=float(op_norms.mean()),
    )


def thm2_bound(gs_I: GateSet, dec_I: Decomposition) -> Thm2Bound:
    """Bound on ``||G~ - G R||`` in the gauge where ``L`` is the identity.

    Per gate: ``||G~ - G D|| + ||E[G^dag G~] - D|| / (1 - E||G~ - G D|| ||D^-1||)``
    with ``D = D_{p,t}``.  Raises :class:`BoundVacuousError` when the
    denominator is not positive.
    """
    n = gs_I.dim**2
    if np.max(np.abs(dec_I.L.mat - np.eye(n))) > 1e-8:
        raise ValidationError("thm2_bound needs a gate set in the L = identity gauge")
    p, t = dec_I.p, dec_I.t
    G = gs_I.group.ideal_stack
    N = gs_I.noisy_stack
    D = depolarizing(p, t, gs_I.dim).mat
    first = np.array([np.linalg.norm(N[k] - G[k] @ D, 2) for k in range(len(G))])
    numerator = float(np.linalg.norm(np.mean(G.transpose(0, 2, 1) @ N, axis=0) - D, 2))
    inv_norm = max(1.0 / abs(p), 1.0 / abs(t))
    denominator = float(1.0 - first.mean() * inv_norm)
    if denominator <= 0:
        raise BoundVacuousError(
            f"denominator 1 - E||G~ - G D|| * ||D^-1|| = {denominator:.3g} is not positive"
        )
    per_gate = first + numerator / denominator
    lhs = np.array([np.linalg.norm(N[k] - G[k] @ dec_I.R.mat, 2) for k in range(len(G))])
    return Thm2Bound(
        bound=float(per_gate.max()),
        per_gate_bound=per_gate,
        lhs=lhs,
        first_terms=first,
        numerator=numerator,
        denominator=denominator,
        inverse_depol_norm=inv_norm,
    )


def interpret(dec: Decomposition) -> dict:
    """Average fidelity and infidelity of the noise between ideal gates."""
    d = dec.dim
    f = (dec.p * (d - 1) + dec.t) / d
    return {"p": dec.p, "t": dec.t, "f_avg_internoise": f, "r_internoise": 1.0 - f}


def average_noise(gs: GateSet) -> SuperOp:
    """``E_G[G^dag G~]``: the fixed gate-independent noise of the naive expansion."""
    G = gs.group.ideal_stack
    return SuperOp(gs.dim, np.mean(G.transpose(0, 2, 1) @ gs.noisy_stack, axis=0))


def bauer_fike_check(gs: GateSet, dec: Decomposition) -> dict:
    """Distance of ``(p, t)`` from the best gate-independent fit and its bound."""
    dp = decay_params(average_noise(gs))
    D = depolarizing(dp.p, dp.t, gs.dim).mat
    G = gs.group.ideal_stack
    bound = float(np.mean([np.linalg.norm(N - g @ D, 2) for N, g in zip(gs.noisy_stack, G)]))
    return {"dp": abs(dec.p - dp.p), "dt": abs(dec.t - dp.t), "bound": bound, "p_prime": dp.p, "t_prime": dp.t}
