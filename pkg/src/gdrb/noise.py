"""Gate-dependent Markovian noise models.

A :class:`GateSet` pairs a group table with one fixed noisy transfer matrix
per element.  Noise is drawn once at construction; each element draws from
its own keyed stream so the result does not depend on construction order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rng as rngmod
from .chanalg import SuperOp, depolarizing, ptm_from_unitary
from .errors import ValidationError
from .groups import PAULI_MATRICES, T_GATE, GroupTable

__all__ = [
    "GateSet",
    "haar_su2",
    "fixed_infidelity_angle",
    "fixed_infidelity_unitary",
    "z_rotation",
    "random_unitary_gateset",
    "depol_z_gateset",
    "gate_independent_gateset",
    "ideal_gateset",
]


@dataclass(frozen=True, eq=False)
class GateSet:
    group: GroupTable
    noisy: tuple
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        noisy = tuple(self.noisy)
        if len(noisy) != self.group.order:
            raise ValidationError(f"need {self.group.order} noisy maps, got {len(noisy)}")
        for g in noisy:
            if g.dim != self.group.dim:
                raise ValidationError("noisy map dimension does not match the group")
        object.__setattr__(self, "noisy", noisy)

    @cached_property
    def noisy_stack(self) -> np.ndarray:
        out = np.array([g.mat for g in self.noisy])
        out.setflags(write=False)
        return out

    @property
    def dim(self) -> int:
        return self.group.dim

    def trace_preservation_error(self) -> float:
        e1 = np.zeros(self.dim**2)
        e1[0] = 1.0
        return float(np.max(np.abs(self.noisy_stack[:, 0, :] - e1)))


def haar_su2(gen: np.random.Generator, size=None) -> np.ndarray:
    """Haar-random element(s) of SU(2).

    QR of a complex Ginibre matrix with the phases of ``diag(R)`` divided
    out, then rescaled to unit determinant.
    """
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    z = (gen.standard_normal(shape + (2, 2)) + 1j * gen.standard_normal(shape + (2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[..., None, :]
    det = np.linalg.det(q)
    return q / np.sqrt(det)[..., None, None]


def fixed_infidelity_angle(r: float) -> float:
    if not 0.0 <= r <= 2.0 / 3.0:
        raise ValidationError(f"infidelity must lie in [0, 2/3], got {r}")
    return float(np.arcsin(np.sqrt(1.5 * r)))


def fixed_infidelity_unitary(r: float, gen: np.random.Generator) -> np.ndarray:
    """``V exp(-i theta Z) V^dag`` with Haar ``V``; average infidelity is exactly ``r``."""
    theta = fixed_infidelity_angle(r)
    V = haar_su2(gen)
    W = np.diag([np.exp(-1j * theta), np.exp(1j * theta)])
    return V @ W @ V.conj().T


def z_rotation(theta: float) -> SuperOp:
    return ptm_from_unitary(np.diag([1.0, np.exp(1j * theta)]))


def ideal_gateset(group: GroupTable) -> GateSet:
    return GateSet(group, group.ideal, {"model": "ideal"})


def random_unitary_gateset(group: GroupTable, r: float, seed: int) -> GateSet:
    """Noisy ``T^t P`` implemented as ``U T^t V P`` with fixed-infidelity ``U, V``."""
    if group.name != "t_pauli":
        raise ValidationError(f"random_unitary noise is defined on the t_pauli group, not {group.name!r}")
    fixed_infidelity_angle(r)
    noisy = []
    for idx, (t, label) in enumerate(group.labels):
        gen = rngmod.stream(seed, rngmod.Purpose.NOISE, idx)
        U = fixed_infidelity_unitary(r, gen)
        V = fixed_infidelity_unitary(r, gen)
        Tt = np.linalg.matrix_power(T_GATE, t)
        noisy.append(ptm_from_unitary(U @ Tt @ V @ PAULI_MATRICES[label], atol=1e-10))
    return GateSet(group, noisy, {"model": "random_unitary", "r": float(r), "seed": int(seed)})


def default_partition(group: GroupTable) -> list:
    return list(range(1, group.order, 2))


def depol_z_gateset(group: GroupTable, nu: float, theta: float, partition=None) -> GateSet:
    """Half the gates get ``G D_nu``, the rest ``G D_nu Z_theta``."""
    if group.name != "clifford":
        raise ValidationError(f"depol_z noise is defined on the clifford group, not {group.name!r}")
    if not 0.0 < nu <= 1.0:
        raise ValidationError(f"nu must lie in (0, 1], got {nu}")
    if not 0.0 < theta < np.pi / 2:
        raise ValidationError(f"theta must lie in (0, pi/2), got {theta}")
    partition = default_partition(group) if partition is None else sorted({int(i) for i in partition})
    bad = [i for i in partition if not 0 <= i < group.order]
    if bad:
        raise ValidationError(f"partition indices out of range: {bad}")
    D = depolarizing(nu, 1.0, group.dim)
    DZ = D @ z_rotation(theta)
    chosen = set(partition)
    noisy = [g @ (DZ if i in chosen else D) for i, g in enumerate(group.ideal)]
    return GateSet(
        group,
        noisy,
        {"model": "depol_z", "nu": float(nu), "theta": float(theta), "partition": partition},
    )


def gate_independent_gateset(group: GroupTable, E, side: str = "right") -> GateSet:
    """``E G``, ``G E`` or ``L G R``; for ``side="both"`` pass ``E = (L, R)``."""
    if side == "right":
        left, right = None, E
    elif side == "left":
        left, right = E, None
    elif side == "both":
        left, right = E
    else:
        raise ValidationError(f"side must be 'left', 'right' or 'both', got {side!r}")
    noisy = []
    for g in group.ideal:
        m = g
        if left is not None:
            m = left @ m
        if right is not None:
            m = m @ right
        noisy.append(m)
    return GateSet(group, noisy, {"model": "gate_independent", "side": side})
