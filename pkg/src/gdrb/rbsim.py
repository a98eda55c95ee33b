"""RB sequence sampling, simulation and exact decay curves.

A sequence of length ``m`` is ``m`` uniformly random group elements followed
by the element inverting their product; all ``m + 1`` operations use their
noisy implementations.  Sequence ``i`` at length ``m`` draws from the stream
keyed ``(seed, SEQUENCE, m, i)``, so results do not depend on evaluation
order or on how the work is split across threads.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .decomp import Decomposition, DeltaReport
from .errors import CapExceededError, ValidationError
from .groups import GroupTable
from .kernels import get_backend
from .noise import GateSet

__all__ = [
    "DEFAULT_M_LIST",
    "DEFAULT_N_SEQ",
    "SequenceSpec",
    "DecayDataset",
    "TheoryCurve",
    "sample_sequence",
    "survival_probability",
    "run_experiment",
    "brute_force_average",
    "epsilon_bruteforce",
    "average_sequence_map",
    "theory_curve",
    "capped_m_grid",
]

DEFAULT_M_LIST = tuple(2**k for k in range(2, 12))
DEFAULT_N_SEQ = 100
BRUTE_FORCE_CAP = 10**7

CSV_HEADER = ("m", "mean", "variance", "num_sequences")


def _fmt(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True)
class SequenceSpec:
    m: int
    gates: tuple
    inverse: int

    def check(self, group: GroupTable, atol: float = 1e-12) -> float:
        """Deviation of the ideal sequence product from the identity; raises if above ``atol``."""
        prod = np.eye(group.dim**2)
        for g in (*self.gates, self.inverse):
            prod = group.ideal_stack[g] @ prod
        err = float(np.max(np.abs(prod - np.eye(group.dim**2))))
        if err > atol:
            raise ValidationError(f"sequence does not invert to the identity (error {err:.3g})")
        return err


@dataclass(frozen=True)
class DecayDataset:
    m: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    num_sequences: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.int64)
        cols = [np.asarray(c, dtype=float) for c in (self.mean, self.variance)]
        n = np.asarray(self.num_sequences, dtype=np.int64)
        if not (m.ndim == 1 and all(c.shape == m.shape for c in cols) and n.shape == m.shape):
            raise ValidationError("dataset columns must be 1-D and of equal length")
        if np.any(cols[1] < 0) or not np.all(np.isfinite(cols[1])):
            raise ValidationError("variances must be finite and non-negative")
        if not np.all(np.isfinite(cols[0])):
            raise ValidationError("means must be finite")
        for name, val in zip(("m", "mean", "variance", "num_sequences"), (m, *cols, n)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    def __len__(self):
        return len(self.m)

    def clamped_variance(self) -> np.ndarray:
        """Zero variances replaced by the smallest positive one (or 1 if none is positive)."""
        var = np.array(self.variance)
        pos = var[var > 0]
        var[var <= 0] = pos.min() if pos.size else 1.0
        return var

    def select(self, min_m: int = 0) -> "DecayDataset":
        keep = self.m >= min_m
        return DecayDataset(self.m[keep], self.mean[keep], self.variance[keep], self.num_sequences[keep])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for m, mu, var, n in zip(self.m, self.mean, self.variance, self.num_sequences):
            w.writerow((int(m), _fmt(mu), _fmt(var), int(n)))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DecayDataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
            raise ValidationError(f"expected CSV header {','.join(CSV_HEADER)}")
        body = [r for r in rows[1:] if r]
        try:
            m = [int(r[0]) for r in body]
            mean = [float(r[1]) for r in body]
            var = [float(r[2]) for r in body]
            n = [int(r[3]) for r in body]
        except (ValueError, IndexError) as exc:
            raise ValidationError(f"malformed dataset row: {exc}") from None
        return cls(np.array(m, dtype=np.int64), np.array(mean), np.array(var), np.array(n, dtype=np.int64))


@dataclass(frozen=True)
class TheoryCurve:
    A: float
    B: float
    p: float
    t: float
    m: np.ndarray
    values: np.ndarray
    bound: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("m", "theory", "bound"))
        for m, v, b in zip(self.m, self.values, self.bound):
            w.writerow((int(m), _fmt(v), _fmt(b)))
        return buf.getvalue()


def _check_spam(gs: GateSet, rho, Q):
    n = gs.dim**2
    rho = np.ascontiguousarray(rho, dtype=float)
    Q = np.ascontiguousarray(Q, dtype=float)
    if rho.shape != (n,) or Q.shape != (n,):
        raise ValidationError(f"state and observable must be length-{n} vectors")
    return rho, Q


def _tables(gs: GateSet):
    grp = gs.group
    return (
        np.ascontiguousarray(gs.noisy_stack, dtype=float),
        np.ascontiguousarray(grp.mult, dtype=np.int64),
        np.ascontiguousarray(grp.inv, dtype=np.int64),
        int(grp.identity_index),
    )


def sample_sequence(group: GroupTable, m: int, gen: np.random.Generator) -> SequenceSpec:
    if m < 1:
        raise ValidationError(f"sequence length must be >= 1, got {m}")
    gates = tuple(int(g) for g in gen.integers(0, group.order, size=m))
    return SequenceSpec(m, gates, group.sequence_inverse(gates))


def survival_probability(gs: GateSet, seq: SequenceSpec, rho, Q) -> float:
    rho, Q = _check_spam(gs, rho, Q)
    v = rho
    for g in (*seq.gates, seq.inverse):
        v = gs.noisy_stack[g] @ v
    return float(Q @ v)


def _sequence_block(group: GroupTable, m: int, n_seq: int, seed: int) -> np.ndarray:
    out = np.empty((n_seq, m), dtype=np.int64)
    for i in range(n_seq):
        out[i] = rngmod.stream(seed, rngmod.Purpose.SEQUENCE, m, i).integers(0, group.order, size=m)
    return out


def run_experiment(gs: GateSet, m_list=DEFAULT_M_LIST, n_seq: int = DEFAULT_N_SEQ, rho=None, Q=None,
                   seed: int = 0, workers: int | None = None, backend: str | None = None) -> DecayDataset:
    """Monte Carlo survival statistics for each sequence length.

    ``rho`` and ``Q`` default to ``|0><0|``.  ``workers > 1`` evaluates the
    sequence lengths on a thread pool; the output is identical either way.
    """
    from .chanalg import ket0_state

    if n_seq < 2:
        raise ValidationError("n_seq must be >= 2 for a sample variance")
    m_list = [int(m) for m in m_list]
    if not m_list or min(m_list) < 1:
        raise ValidationError("m_list must be non-empty with every m >= 1")
    rho = ket0_state(gs.dim) if rho is None else rho
    Q = ket0_state(gs.dim) if Q is None else Q
    rho, Q = _check_spam(gs, rho, Q)
    maps, mult, inv, ident = _tables(gs)
    kern = get_backend(backend)

    def one(m):
        seqs = _sequence_block(gs.group, m, n_seq, seed)
        vals = kern.survival_batch(maps, mult, inv, ident, seqs, rho, Q)
        return float(np.mean(vals)), float(np.var(vals, ddof=1))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(one, m_list))
    else:
        stats = [one(m) for m in m_list]
    return DecayDataset(
        np.array(m_list, dtype=np.int64),
        np.array([s[0] for s in stats]),
        np.array([s[1] for s in stats]),
        np.full(len(m_list), n_seq, dtype=np.int64),
    )


def _check_cap(order: int, m: int, cap: int):
    if m < 1:
        raise ValidationError(f"sequence length must be >= 1, got {m}")
    if order**m > cap:
        raise CapExceededError(f"{order}^{m} sequences exceeds the cap of {cap}")


def brute_force_average(gs: GateSet, m: int, rho, Q, backend: str | None = None,
                        cap: int = BRUTE_FORCE_CAP) -> float:
    """Exact mean survival over all ``|G|**m`` sequences."""
    _check_cap(gs.group.order, m, cap)
    rho, Q = _check_spam(gs, rho, Q)
    maps, mult, inv, ident = _tables(gs)
    return float(get_backend(backend).enumerate_average(maps, mult, inv, ident, int(m), rho, Q))


def epsilon_bruteforce(gs: GateSet, report: DeltaReport, m: int, rho, Q, backend: str | None = None,
                       cap: int = BRUTE_FORCE_CAP) -> float:
    """``<<Q| E[Delta_{m+1} ... Delta_1] |rho>>`` enumerated over the same sequences."""
    _check_cap(gs.group.order, m, cap)
    rho, Q = _check_spam(gs, rho, Q)
    _, mult, inv, ident = _tables(gs)
    maps = np.ascontiguousarray([D.mat for D in report.deltas], dtype=float)
    return float(get_backend(backend).enumerate_average(maps, mult, inv, ident, int(m), rho, Q))


def average_sequence_map(maps, group: GroupTable, m: int) -> np.ndarray:
    """Exact ``E[M_inv M_{g_m} ... M_{g_1}]`` by dynamic programming over the running product.

    Costs ``O(m |G|^2 n^3)`` instead of ``|G|^m``; used to cross-check the
    enumeration kernels at lengths where enumeration is impractical.
    """
    maps = np.asarray(maps, dtype=float)
    n_g, n = maps.shape[0], maps.shape[1]
    if n_g != group.order:
        raise ValidationError("need one map per group element")
    acc = np.zeros((n_g, n, n))
    acc[group.identity_index] = np.eye(n)
    for _ in range(m):
        nxt = np.zeros_like(acc)
        for g in range(n_g):
            np.add.at(nxt, group.mult[g], maps[g] @ acc)
        acc = nxt / n_g
    return np.einsum("cij,cjk->ik", maps[group.inv], acc)


def theory_curve(dec: Decomposition, report: DeltaReport, rho, Q, m_list) -> TheoryCurve:
    """``A p^m + B t^m`` with the ``delta1 * delta2**m`` envelope.

    ``A = <<Q| L (1 - P) R |rho>>`` and ``B = <<Q| L P R |rho>>`` where ``P``
    projects onto the identity component.
    """
    n = dec.dim**2
    rho = np.asarray(rho, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if rho.shape != (n,) or Q.shape != (n,):
        raise ValidationError(f"state and observable must be length-{n} vectors")
    P = np.zeros((n, n))
    P[0, 0] = 1.0
    L, R = dec.L.mat, dec.R.mat
    A = float(Q @ L @ (np.eye(n) - P) @ R @ rho)
    B = float(Q @ L @ P @ R @ rho)
    m = np.asarray(list(m_list), dtype=np.int64)
    values = A * np.power(dec.p, m.astype(float)) + B * np.power(dec.t, m.astype(float))
    return TheoryCurve(A, B, dec.p, dec.t, m, values, report.bound(m))


def capped_m_grid(p: float, m_list=DEFAULT_M_LIST, A: float = 0.5, floor: float = 1e-3) -> list:
    """Lengths whose decaying part ``A p^m`` still exceeds ``floor``; never fewer than two."""
    m_list = sorted(int(m) for m in m_list)
    keep = [m for m in m_list if abs(A) * abs(p) ** m >= floor]
    return keep if len(keep) >= 2 else m_list[:2]
