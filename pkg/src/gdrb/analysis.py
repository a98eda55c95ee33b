"""Decay fitting, repeated-experiment confidence intervals and first-order analytics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import brentq

from . import rng as rngmod
from .chanalg import induced_1to1_norm, infidelity, ket0_state
from .decomp import average_noise, solve_LR
from .errors import FitError, NumericalError, UnsupportedDimensionError, ValidationError
from .noise import GateSet
from .rbsim import DEFAULT_M_LIST, DEFAULT_N_SEQ, DecayDataset, capped_m_grid, run_experiment

__all__ = [
    "FitResult",
    "GammaReport",
    "CIResult",
    "FlatLikelihoodWarning",
    "fit_fixed_spam",
    "fit_free",
    "confidence_interval",
    "average_noise",
    "first_order_gamma",
    "counterexample_analytics",
    "infidelity_gap",
]

DEFAULT_MIN_M = 3


class FlatLikelihoodWarning(RuntimeWarning):
    """The weighted misfit barely depends on ``p``; the estimate is uninformative."""


@dataclass(frozen=True)
class FitResult:
    model: str
    p_est: float
    A_est: float
    B_est: float
    weighted_sse: float
    iterations: int
    converged: bool = True
    n_points: int = 0
    local_minima: int = 1

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "p_est": self.p_est,
            "A_est": self.A_est,
            "B_est": self.B_est,
            "weighted_sse": self.weighted_sse,
            "iterations": self.iterations,
            "converged": self.converged,
            "n_points": self.n_points,
            "local_minima": self.local_minima,
        }


def _prepare(ds: DecayDataset, min_m: int, need: int):
    if len(ds) == 0:
        raise ValidationError("dataset is empty")
    sub = ds.select(min_m)
    if len(sub) < need:
        raise ValidationError(f"fit needs at least {need} rows with m >= {min_m}, got {len(sub)}")
    return sub.m.astype(float), np.asarray(sub.mean, dtype=float), 1.0 / sub.clamped_variance()


# ---------------------------------------------------------------------------
# fixed-SPAM model  0.5 p^m + 0.5
# ---------------------------------------------------------------------------

_P_GRID = np.unique(np.concatenate([np.linspace(0.0, 1.0, 2001), 1.0 - np.logspace(-12, -0.5, 600)]))


def _sse_fixed(p, m, y, w, A, B):
    r = y - A * np.power(p, m) - B
    return float(np.sum(w * r * r))


def _dsse_fixed(p, m, y, w, A, B):
    pm1 = np.power(p, m - 1)
    r = y - A * pm1 * p - B
    return float(-2.0 * A * np.sum(w * r * m * pm1))


def fit_fixed_spam(ds: DecayDataset, min_m: int = DEFAULT_MIN_M, A: float = 0.5, B: float = 0.5) -> FitResult:
    """Weighted least squares for ``A p^m + B`` with ``A, B`` held fixed.

    The misfit is scanned on a grid dense near ``p = 1``; every grid-local
    minimum is polished by root-finding on the derivative within its bracket
    and the smallest is returned.  ``local_minima`` reports how many there were.
    """
    m, y, w = _prepare(ds, min_m, 2)
    grid = _P_GRID
    sse = np.array([_sse_fixed(p, m, y, w, A, B) for p in grid])
    span = sse.max() - sse.min()
    if span <= 1e-14 * max(1.0, sse.min()):
        warnings.warn("weighted misfit is flat in p; estimate carries no information", FlatLikelihoodWarning,
                      stacklevel=2)
    idx = [k for k in range(len(grid))
           if (k == 0 or sse[k] <= sse[k - 1]) and (k == len(grid) - 1 or sse[k] <= sse[k + 1])]
    candidates = []
    for k in idx:
        if k == 0 or k == len(grid) - 1:
            candidates.append(grid[k])
            continue
        lo, hi = grid[k - 1], grid[k + 1]
        dlo, dhi = _dsse_fixed(lo, m, y, w, A, B), _dsse_fixed(hi, m, y, w, A, B)
        if dlo < 0 < dhi:
            candidates.append(brentq(_dsse_fixed, lo, hi, args=(m, y, w, A, B), xtol=1e-15, rtol=1e-15))
        else:
            candidates.append(grid[k])
    vals = [_sse_fixed(p, m, y, w, A, B) for p in candidates]
    best = int(np.argmin(vals))
    return FitResult("fixed-spam", float(candidates[best]), A, B, float(vals[best]), len(grid), True,
                     len(m), len(idx))


# ---------------------------------------------------------------------------
# free model  A p^m + B
# ---------------------------------------------------------------------------

def _initial_free(m, y):
    # decaying towards the tail: asymptote near the tail extreme
    if y[np.argmin(m)] >= y[np.argmax(m)]:
        B0 = y.min()
        A0 = y.max() - B0
    else:
        B0 = y.max()
        A0 = y.min() - B0
    z = (y - B0) * np.sign(A0 or 1.0)
    ok = z > 1e-12 * max(1.0, abs(A0))
    if ok.sum() >= 2 and np.ptp(m[ok]) > 0:
        slope = np.polyfit(m[ok], np.log(z[ok]), 1)[0]
        p0 = float(np.clip(np.exp(slope), 1e-6, 1.0))
    else:
        p0 = 0.5
    return np.array([A0, B0, p0])


def fit_free(ds: DecayDataset, min_m: int = DEFAULT_MIN_M, max_iter: int = 200, step_tol: float = 1e-12) -> FitResult:
    """Weighted ``A p^m + B`` by Levenberg-damped Gauss-Newton.

    Raises :class:`FitError` (with the iteration trace) if parameters become
    non-finite.  Hitting ``max_iter`` is reported through ``converged``.
    """
    m, y, w = _prepare(ds, min_m, 4)
    sw = np.sqrt(w)
    x = _initial_free(m, y)

    def resid(x):
        return sw * (y - x[0] * np.power(x[2], m) - x[1])

    def jac(x):
        pm1 = np.power(x[2], m - 1)
        return -sw[:, None] * np.column_stack([pm1 * x[2], np.ones_like(m), x[0] * m * pm1])

    r = resid(x)
    sse = float(r @ r)
    lam = 1e-3
    trace = [(0, *x.tolist(), sse)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = jac(x)
        JtJ = J.T @ J
        g = J.T @ r
        while True:
            H = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-300))
            try:
                step = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, g, rcond=None)[0]
            cand = x + step
            if not np.all(np.isfinite(cand)):
                raise FitError("free fit diverged to non-finite parameters", trace)
            r_new = resid(cand)
            sse_new = float(r_new @ r_new)
            if np.isfinite(sse_new) and sse_new <= sse:
                x, r, sse = cand, r_new, sse_new
                lam = max(lam / 3.0, 1e-12)
                break
            lam *= 4.0
            if lam > 1e16 or np.linalg.norm(step) < step_tol:
                break
        trace.append((it, *x.tolist(), sse))
        if np.linalg.norm(step) < step_tol:
            converged = True
            break
    if not np.all(np.isfinite(x)):
        raise FitError("free fit produced non-finite parameters", trace)
    return FitResult("free", float(x[2]), float(x[0]), float(x[1]), sse, it, converged, len(m), 1)


# ---------------------------------------------------------------------------
# repeated experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CIResult:
    lo: float
    hi: float
    p_estimates: np.ndarray
    p_predicted: np.ndarray
    quantile: float

    @property
    def p_predicted_mean(self) -> float:
        return float(np.mean(self.p_predicted))

    def contains(self, p: float) -> bool:
        return bool(self.lo <= p <= self.hi)


def build_gateset(cfg: dict, seed: int) -> GateSet:
    """Gate set for a config's group and noise descriptor; ``seed`` keys the noise draw."""
    from .groups import get_group
    from .noise import depol_z_gateset, ideal_gateset, random_unitary_gateset, gate_independent_gateset
    from .chanalg import depolarizing

    group = get_group(cfg.get("group", "t_pauli"))
    noise = dict(cfg.get("noise", {"model": "ideal"}))
    model = noise.get("model", "ideal")
    if model == "random_unitary":
        return random_unitary_gateset(group, noise["r"], noise.get("seed", seed))
    if model == "depol_z":
        return depol_z_gateset(group, noise["nu"], noise["theta"], noise.get("partition"))
    if model == "gate_independent":
        return gate_independent_gateset(group, depolarizing(noise.get("p", 1.0), 1.0, group.dim))
    if model == "ideal":
        return ideal_gateset(group)
    raise ValidationError(f"unknown noise model {model!r}")


def _one_experiment(cfg: dict, k: int, seed: int):
    noise_seed = rngmod.derive_seed(seed, rngmod.Purpose.EXPERIMENT, k, 0)
    seq_seed = rngmod.derive_seed(seed, rngmod.Purpose.EXPERIMENT, k, 1)
    noise = dict(cfg.get("noise", {}))
    noise.pop("seed", None)
    gs = build_gateset({**cfg, "noise": noise}, noise_seed)
    p_pred = solve_LR(gs).p
    m_list = cfg.get("m_list", DEFAULT_M_LIST)
    if cfg.get("cap_m", True):
        m_list = capped_m_grid(p_pred, m_list)
    ds = run_experiment(gs, m_list, cfg.get("n_seq", DEFAULT_N_SEQ), ket0_state(gs.dim), ket0_state(gs.dim),
                        seq_seed, backend=cfg.get("backend"))
    fitter = fit_free if cfg.get("fit_model") == "free" else fit_fixed_spam
    fit = fitter(ds, min_m=cfg.get("min_m", DEFAULT_MIN_M))
    return fit.p_est, p_pred


def confidence_interval(model_cfg: dict, K: int = 20, quantile: float = 0.9, seed: int | None = None) -> CIResult:
    """Empirical central interval of ``p_est`` over ``K`` independent experiments.

    Each experiment draws fresh noise and fresh sequences, fits the model named
    by ``fit_model`` (fixed-SPAM by default) and records the predicted decay of
    its own gate set.
    """
    if K < 10:
        raise ValidationError(f"K must be >= 10, got {K}")
    if not 0 < quantile < 1:
        raise ValidationError("quantile must lie in (0, 1)")
    seed = int(model_cfg.get("seed", 0) if seed is None else seed)
    est, pred = [], []
    for k in range(K):
        try:
            pe, pp = _one_experiment(model_cfg, k, seed)
        except NumericalError as exc:
            raise type(exc)(f"experiment {k}: {exc}") from exc
        est.append(pe)
        pred.append(pp)
    est = np.array(est)
    tail = 100.0 * (1.0 - quantile) / 2.0
    lo, hi = np.percentile(est, [tail, 100.0 - tail])
    return CIResult(float(lo), float(hi), est, np.array(pred), quantile)


# ---------------------------------------------------------------------------
# first-order analytics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaReport:
    gamma: float
    r_of_E: float
    systematic_dr: float
    f_m_minus_B: float
    per_gate: np.ndarray = field(repr=False)

    def kth_order_bound(self, m: int, k: int) -> float:
        """``C(m+1, k) gamma^k``: size of the order-``k`` terms of the naive expansion."""
        return comb(int(m) + 1, int(k)) * self.gamma**k

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "r_of_E": self.r_of_E,
            "systematic_dr": self.systematic_dr,
            "f_m_minus_B": self.f_m_minus_B,
            "ratio": self.systematic_dr / self.r_of_E if self.r_of_E else None,
        }


def first_order_gamma(gs: GateSet, f_m_minus_B: float = 0.5) -> GammaReport:
    """Mean induced trace norm of ``G^dag G~ - E`` with ``E`` the average noise."""
    if gs.dim != 2:
        raise UnsupportedDimensionError("first_order_gamma supports qubits only")
    E = average_noise(gs)
    G = gs.group.ideal_stack
    rel = G.transpose(0, 2, 1) @ gs.noisy_stack - E.mat
    per_gate = np.array([induced_1to1_norm(D) for D in rel])
    gamma = float(per_gate.mean())
    return GammaReport(gamma, infidelity(E), gamma / (2.0 * f_m_minus_B), f_m_minus_B, per_gate)


def counterexample_analytics(nu: float, theta: float, f_m_minus_B: float = 0.5) -> dict:
    """Closed-form ``gamma``, ``r(E)`` and their ratio for the depolarizing plus Z-rotation set."""
    if not 0.0 < nu <= 1.0:
        raise ValidationError(f"nu must lie in (0, 1], got {nu}")
    if not 0.0 < theta < np.pi / 2:
        raise ValidationError(f"theta must lie in (0, pi/2), got {theta}")
    gamma = nu * abs(np.sin(theta / 2.0))
    r_E = (3.0 - 2.0 * nu - nu * np.cos(theta)) / 6.0
    dr = gamma / (2.0 * f_m_minus_B)
    return {"gamma_analytic": float(gamma), "r_of_E_analytic": float(r_E), "systematic_dr": float(dr),
            "ratio": float(dr / r_E)}


def infidelity_gap(gs: GateSet) -> dict:
    """Infidelity implied by the RB decay versus the infidelity of the average noise."""
    d = gs.dim
    p = solve_LR(gs).p
    r_rb = (1.0 - p) * (d - 1) / d
    r_E = infidelity(average_noise(gs))
    return {"p": p, "r_rb": r_rb, "r_of_E": r_E, "relative_gap": abs(r_rb - r_E) / r_E}

