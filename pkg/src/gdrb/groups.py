"""Finite single-qubit gate groups as multiplication tables.

Groups are projective: elements are identified by their transfer matrices,
so global phases never matter.  ``mult[a, b]`` is the index of the element
whose transfer matrix is ``ideal[a] @ ideal[b]`` (apply ``b`` first).

Element orderings are frozen:

* T-Pauli group: index ``4*t + k`` for ``T**t P_k``, ``P = (I, X, Y, Z)``.
* Clifford group: breadth-first enumeration from the identity, multiplying
  on the left by ``H`` then ``S``; duplicates (equal transfer matrices) are
  dropped.  The default half-partition used by the depolarizing plus
  Z-rotation model is the odd indices of this ordering.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rng as rngmod
from .chanalg import (
    SuperOp,
    decay_params,
    depolarizing,
    operator_norm,
    ptm_from_kraus_mixture,
    ptm_from_unitary,
)
from .errors import GroupConstructionError, ValidationError

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LABELS = ("I", "X", "Y", "Z")
T_GATE = np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE_S = np.array([[1, 0], [0, 1j]], dtype=complex)


def _canonical_ptm(U) -> np.ndarray:
    """Transfer matrix of a Clifford-like unitary with entries snapped to {-1, 0, 1}."""
    mat = ptm_from_unitary(U).mat
    snapped = np.round(mat)
    if np.max(np.abs(mat - snapped)) > 1e-9:
        raise GroupConstructionError("element is not a signed permutation of the Paulis")
    return snapped + 0.0  # normalizes -0.0


def _key(mat) -> bytes:
    return np.round(mat, 9).astype(np.int8).tobytes()


@dataclass(frozen=True, eq=False)
class GroupTable:
    name: str
    mult: np.ndarray
    inv: np.ndarray
    ideal: tuple
    labels: tuple
    unitaries: tuple = field(repr=False, default=())

    @property
    def order(self) -> int:
        return len(self.ideal)

    @property
    def dim(self) -> int:
        return self.ideal[0].dim

    @cached_property
    def identity_index(self) -> int:
        return int(np.flatnonzero([np.allclose(g.mat, np.eye(g.mat.shape[0])) for g in self.ideal])[0])

    @cached_property
    def ideal_stack(self) -> np.ndarray:
        out = np.array([g.mat for g in self.ideal])
        out.setflags(write=False)
        return out

    def compose_indices(self, gates) -> int:
        """Index of ``G_m ... G_1`` for ``gates = (G_1, ..., G_m)``."""
        cur = self.identity_index
        for g in gates:
            cur = int(self.mult[g, cur])
        return cur

    def sequence_inverse(self, gates) -> int:
        return int(self.inv[self.compose_indices(gates)])


def _table_from_elements(name, unitaries, labels) -> GroupTable:
    mats = [_canonical_ptm(U) for U in unitaries]
    lookup = {}
    for i, m in enumerate(mats):
        k = _key(m)
        if k in lookup:
            raise GroupConstructionError(f"{name}: elements {lookup[k]} and {i} coincide")
        lookup[k] = i
    n = len(mats)
    mult = np.empty((n, n), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            k = _key(mats[a] @ mats[b])
            if k not in lookup:
                raise GroupConstructionError(f"{name}: not closed under multiplication ({a}*{b})")
            mult[a, b] = lookup[k]
    ident = lookup.get(_key(np.eye(mats[0].shape[0])))
    if ident is None:
        raise GroupConstructionError(f"{name}: identity missing")
    inv = np.empty(n, dtype=np.int64)
    for a in range(n):
        hits = np.flatnonzero(mult[a] == ident)
        if hits.size != 1:
            raise GroupConstructionError(f"{name}: element {a} has no unique inverse")
        inv[a] = hits[0]
    mult.setflags(write=False)
    inv.setflags(write=False)
    ideal = tuple(SuperOp(2, m) for m in mats)
    table = GroupTable(name, mult, inv, ideal, tuple(labels), tuple(unitaries))
    _spot_check(table)
    return table


def _spot_check(table: GroupTable, samples: int = 64):
    gen = rngmod.stream(0, rngmod.Purpose.GROUP_CHECK, table.order)
    n = table.order
    for a, b, c in gen.integers(0, n, size=(samples, 3)):
        if table.mult[table.mult[a, b], c] != table.mult[a, table.mult[b, c]]:
            raise GroupConstructionError(f"{table.name}: associativity fails at {(a, b, c)}")


def build_t_pauli_group() -> GroupTable:
    """The 12-element group ``{T^t P : t in Z_3, P in {I, X, Y, Z}}``."""
    unitaries, labels = [], []
    for t in range(3):
        Tt = np.linalg.matrix_power(T_GATE, t)
        for k, lbl in enumerate(PAULI_LABELS):
            unitaries.append(Tt @ PAULI_MATRICES[lbl])
            labels.append((t, lbl))
    table = _table_from_elements("t_pauli", unitaries, labels)
    if table.order != 12:
        raise GroupConstructionError(f"t_pauli: expected order 12, got {table.order}")
    return table


def build_clifford_group() -> GroupTable:
    """The 24 single-qubit Cliffords, enumerated breadth-first from H and S."""
    gens = (("H", HADAMARD), ("S", PHASE_S))
    seen = {_key(np.eye(4)): 0}
    unitaries = [np.eye(2, dtype=complex)]
    labels = [""]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for name, G in gens:
            U = G @ unitaries[i]
            k = _key(_canonical_ptm(U))
            if k not in seen:
                seen[k] = len(unitaries)
                unitaries.append(U)
                labels.append(name + labels[i])
                queue.append(seen[k])
    labels[0] = "I"
    table = _table_from_elements("clifford", unitaries, labels)
    if table.order != 24:
        raise GroupConstructionError(f"clifford: expected order 24, got {table.order}")
    return table


def build_pauli_group() -> GroupTable:
    """The 4-element Pauli group; a 1-design, used as a negative control."""
    return _table_from_elements("pauli", [PAULI_MATRICES[k] for k in PAULI_LABELS], PAULI_LABELS)


GROUP_BUILDERS = {
    "t_pauli": build_t_pauli_group,
    "clifford": build_clifford_group,
    "pauli": build_pauli_group,
}

_CACHE: dict = {}


def get_group(name: str) -> GroupTable:
    if name not in GROUP_BUILDERS:
        raise ValidationError(f"unknown group {name!r}; choose from {sorted(GROUP_BUILDERS)}")
    if name not in _CACHE:
        _CACHE[name] = GROUP_BUILDERS[name]()
    return _CACHE[name]


def twirl(C: SuperOp, group: GroupTable) -> SuperOp:
    """Uniform average of ``G^dag C G`` over the group."""
    if C.dim != group.dim:
        raise ValidationError(f"dimension mismatch: channel d={C.dim}, group d={group.dim}")
    G = group.ideal_stack
    return SuperOp(C.dim, np.mean(G.transpose(0, 2, 1) @ C.mat @ G, axis=0))


def random_mixed_unitary_channel(gen, n_terms: int = 3) -> SuperOp:
    from .noise import haar_su2

    Us = haar_su2(gen, size=n_terms)
    weights = gen.dirichlet(np.ones(n_terms))
    return ptm_from_kraus_mixture(list(Us), weights)


def verify_two_design(group: GroupTable, trials: int = 100, tol: float = 1e-12, seed: int = 0):
    """Worst twirl residual over random mixed-unitary channels.

    Returns ``(max_residual, passed)``; the residual is the operator norm of
    ``twirl(C) - D_{p(C), t(C)}``.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    worst = 0.0
    for i in range(trials):
        gen = rngmod.stream(seed, rngmod.Purpose.TWO_DESIGN, i)
        C = random_mixed_unitary_channel(gen)
        dp = decay_params(C)
        resid = operator_norm(twirl(C, group) - depolarizing(dp.p, dp.t, C.dim))
        worst = max(worst, resid)
    return worst, worst <= tol


def check_projective_representation(group: GroupTable, atol: float = 1e-12) -> float:
    """Largest deviation of ``ideal[mult[a, b]]`` from ``ideal[a] @ ideal[b]``."""
    G = group.ideal_stack
    prods = G[:, None] @ G[None, :]
    return float(np.max(np.abs(prods - G[group.mult])))

