"""Quantum channels as real transfer matrices.

A channel on a ``d``-level system is stored as the real ``d**2 x d**2``
matrix of its action on a Hermitian, trace-orthonormal operator basis whose
first element is the normalized identity ``I/sqrt(d)``.  For ``d = 2`` the
basis is ``(I, X, Y, Z)/sqrt(2)`` and the matrix is the usual Pauli transfer
matrix.

Column-stacking ``vec`` is used throughout, so that
``vec(A @ B @ C) == kron(C.T, A) @ vec(B)``.

Note on the induced trace norm: :func:`induced_1to1_norm` maximizes over
pure input states.  For a Hermiticity-preserving map this is the same as
maximizing over all Hermitian inputs of unit trace norm, because any such
input is a difference of positive parts whose trace norms add up.  It is
*not* the supremum over arbitrary complex matrices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UnsupportedDimensionError, ValidationError

__all__ = [
    "SuperOp",
    "DepolParams",
    "pauli_basis",
    "operator_basis",
    "ptm_from_unitary",
    "ptm_from_kraus_mixture",
    "identity",
    "compose",
    "adjoint",
    "unital_part",
    "depolarizing",
    "decay_params",
    "average_fidelity",
    "infidelity",
    "bowdrey_fidelity",
    "operator_norm",
    "trace_norm",
    "induced_1to1_norm",
    "vec",
    "unvec",
    "kron",
    "to_basis_vector",
    "from_basis_vector",
    "pure_state_vector",
    "ket0_state",
]

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class SuperOp:
    """Immutable real transfer matrix of a Hermiticity-preserving map.

    ``mat[0, 0]`` pairs the normalized identity with itself.  ``@`` composes
    (``(A @ B)(rho) = A(B(rho))``); ``+``, ``-`` and scalar ``*`` act on the
    matrices.
    """

    dim: int
    mat: np.ndarray

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise ValidationError(f"dimension must be positive, got {self.dim}")
        mat = np.asarray(self.mat)
        if np.iscomplexobj(mat):
            if np.max(np.abs(mat.imag), initial=0.0) > 1e-10:
                raise ValidationError("transfer matrix must be real-valued")
            mat = mat.real
        mat = np.array(mat, dtype=float)
        if mat.shape != (d * d, d * d):
            raise ValidationError(f"expected shape {(d * d, d * d)} for d={d}, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "mat", mat)

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        _check_dims(self, other)
        return SuperOp(self.dim, self.mat + other.mat)

    def __sub__(self, other):
        _check_dims(self, other)
        return SuperOp(self.dim, self.mat - other.mat)

    def __mul__(self, scalar):
        return SuperOp(self.dim, self.mat * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SuperOp(self.dim, -self.mat)

    @property
    def T(self):
        return adjoint(self)

    def allclose(self, other, atol=1e-12):
        return self.dim == other.dim and np.allclose(self.mat, other.mat, rtol=0.0, atol=atol)

    def to_json(self) -> dict:
        return {"dim": self.dim, "mat": self.mat.tolist()}

    @classmethod
    def from_json(cls, obj) -> "SuperOp":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(int(obj["dim"]), np.array(obj["mat"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed SuperOp JSON: {exc}") from exc

    def __repr__(self):
        return f"SuperOp(dim={self.dim}, mat=\n{self.mat!r})"


@dataclass(frozen=True)
class DepolParams:
    p: float
    t: float


def _check_dims(a: SuperOp, b: SuperOp):
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")


# ---------------------------------------------------------------------------
# operator bases
# ---------------------------------------------------------------------------

def pauli_basis() -> np.ndarray:
    """Normalized single-qubit Pauli basis, shape (4, 2, 2)."""
    return np.array(_PAULIS) / np.sqrt(2.0)


@lru_cache(maxsize=None)
def _gell_mann_basis(d: int) -> np.ndarray:
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j / np.sqrt(2)
            asym[k, j] = 1j / np.sqrt(2)
            mats += [sym, asym]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    out = np.array(mats)
    out.setflags(write=False)
    return out


def operator_basis(d: int) -> np.ndarray:
    """Hermitian trace-orthonormal basis with first element I/sqrt(d).

    Pauli basis for d = 2, normalized generalized Gell-Mann matrices otherwise.
    """
    if d == 2:
        return pauli_basis()
    return _gell_mann_basis(d).copy()


def _resolve_basis(d, basis):
    if basis is None:
        return operator_basis(d)
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (d * d, d, d):
        raise ValidationError(f"basis must have shape {(d * d, d, d)}")
    return basis


def to_basis_vector(M, basis=None) -> np.ndarray:
    """Coordinates ``tr(B_j^dag M)`` of a Hermitian matrix (real part)."""
    M = np.asarray(M, dtype=complex)
    basis = _resolve_basis(M.shape[0], basis)
    return np.einsum("jab,ab->j", basis.conj(), M).real.copy()


def from_basis_vector(v, basis=None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValidationError(f"vector length {v.size} is not a square")
    basis = _resolve_basis(d, basis)
    return np.einsum("j,jab->ab", v, basis)


def pure_state_vector(psi, basis=None) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return to_basis_vector(np.outer(psi, psi.conj()), basis)


def ket0_state(d: int = 2) -> np.ndarray:
    """Vector of |0><0|; serves as both the default state and the default observable."""
    e0 = np.zeros(d)
    e0[0] = 1.0
    return pure_state_vector(e0)


# ---------------------------------------------------------------------------
# constructors and algebra
# ---------------------------------------------------------------------------

def ptm_from_unitary(U, basis=None, atol: float = 1e-12) -> SuperOp:
    """Transfer matrix of ``rho -> U rho U^dag``."""
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValidationError(f"unitary must be square, got shape {U.shape}")
    d = U.shape[0]
    if np.max(np.abs(U.conj().T @ U - np.eye(d))) > atol:
        raise ValidationError("input matrix is not unitary within tolerance")
    basis = _resolve_basis(d, basis)
    images = U[None] @ basis @ U.conj().T[None]
    # mat[j, k] = tr(B_j^dag U B_k U^dag)
    mat = np.einsum("jab,kab->jk", basis.conj(), images).real
    return SuperOp(d, mat)


def ptm_from_kraus_mixture(unitaries, weights, basis=None) -> SuperOp:
    """Transfer matrix of a convex mixture of unitary channels."""
    weights = np.asarray(weights, dtype=float)
    mats = [ptm_from_unitary(U, basis).mat for U in unitaries]
    d = np.asarray(unitaries[0]).shape[0]
    return SuperOp(d, np.tensordot(weights, np.array(mats), axes=1))


def identity(d: int = 2) -> SuperOp:
    return SuperOp(d, np.eye(d * d))


def compose(*ops: SuperOp) -> SuperOp:
    """``compose(A, B, C)`` applies C first, then B, then A."""
    if not ops:
        raise ValidationError("compose needs at least one operand")
    out = ops[0].mat
    for op in ops[1:]:
        _check_dims(ops[0], op)
        out = out @ op.mat
    return SuperOp(ops[0].dim, out)


def adjoint(A: SuperOp) -> SuperOp:
    # Real matrix in a Hermitian orthonormal basis: adjoint == transpose.
    return SuperOp(A.dim, A.mat.T)


def unital_part(A: SuperOp) -> SuperOp:
    """``A_u(X) = A(X - tr(X) I/d)``; zeroes the identity column."""
    mat = np.array(A.mat)
    mat[:, 0] = 0.0
    return SuperOp(A.dim, mat)


def depolarizing(p: float, t: float = 1.0, d: int = 2) -> SuperOp:
    """``D_{p,t}(rho) = t I/d + p (rho - I/d)``, i.e. diag(t, p, ..., p)."""
    diag = np.full(d * d, float(p))
    diag[0] = float(t)
    return SuperOp(d, np.diag(diag))


def decay_params(C: SuperOp) -> DepolParams:
    d = C.dim
    t = float(C.mat[0, 0])
    p = (float(np.trace(C.mat)) - t) / (d * d - 1)
    return DepolParams(p=p, t=t)


def average_fidelity(C: SuperOp) -> float:
    """Haar-averaged fidelity of ``C`` with the identity channel.

    Uses ``p = (d f - t)/(d - 1)``, which reduces to the usual relation for
    trace-preserving maps (t = 1).
    """
    d = C.dim
    dp = decay_params(C)
    return (dp.p * (d - 1) + dp.t) / d


def infidelity(C: SuperOp) -> float:
    return 1.0 - average_fidelity(C)


def bowdrey_fidelity(C: SuperOp) -> float:
    """Single-qubit average fidelity from Pauli expectation values.

    ``f = 1/2 + sum_{s in X,Y,Z} tr[s C(s)] / 12``, evaluated with the
    unnormalized Paulis so it is independent of the transfer-matrix algebra.
    """
    if C.dim != 2:
        raise UnsupportedDimensionError("Bowdrey formula is single-qubit only")
    basis = pauli_basis()
    total = 0.0
    for sigma in _PAULIS[1:]:
        image = from_basis_vector(C.mat @ to_basis_vector(sigma, basis), basis)
        total += np.trace(sigma @ image).real
    return 0.5 + total / 12.0


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def operator_norm(C) -> float:
    """Largest singular value of the transfer matrix (or of a plain array)."""
    mat = C.mat if isinstance(C, SuperOp) else np.asarray(C)
    return float(np.linalg.norm(mat, 2))


def trace_norm(M) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(M), compute_uv=False)))


def _bloch_vectors(polar, azim):
    polar, azim = np.broadcast_arrays(polar, azim)
    s = np.sin(polar)
    return np.stack(
        [np.full(polar.shape, 1.0), s * np.cos(azim), s * np.sin(azim), np.cos(polar)], axis=-1
    ) / np.sqrt(2.0)


def _qubit_output_norms(mat, polar, azim):
    out = _bloch_vectors(polar, azim) @ mat.T
    # (v0 I + v.sigma)/sqrt2 has eigenvalues (v0 +- |v|)/sqrt2
    return np.sqrt(2.0) * np.maximum(np.abs(out[..., 0]), np.linalg.norm(out[..., 1:], axis=-1))


def induced_1to1_norm(C, n_azimuth: int = 96, n_polar: int = 48, iterations: int = 30,
                      n_starts: int = 8, return_grid: bool = False):
    """Induced trace norm over pure input states, single qubit only.

    Grid search over the Bloch sphere followed by coordinate descent from the
    best ``n_starts`` grid points, halving the step every iteration.  With
    ``return_grid=True`` returns ``(refined, grid_max)``.
    """
    sop = C if isinstance(C, SuperOp) else None
    mat = sop.mat if sop is not None else np.asarray(C, dtype=float)
    if mat.shape != (4, 4):
        dim = sop.dim if sop is not None else int(round(np.sqrt(mat.shape[0])))
        raise UnsupportedDimensionError(f"induced 1->1 norm implemented for d=2 only, got d={dim}")

    polar = np.linspace(0.0, np.pi, n_polar)
    azim = np.linspace(0.0, 2 * np.pi, n_azimuth, endpoint=False)
    P, A = np.meshgrid(polar, azim, indexing="ij")
    vals = _qubit_output_norms(mat, P, A).ravel()
    grid_max = float(vals.max())

    best = grid_max
    step0 = max(polar[1] - polar[0], azim[1] - azim[0])
    for idx in np.argsort(vals)[::-1][:n_starts]:
        x = np.array([P.ravel()[idx], A.ravel()[idx]])
        fx = vals[idx]
        h = step0
        for _ in range(iterations):
            for axis in (0, 1):
                trial = np.repeat(x[None], 2, axis=0)
                trial[0, axis] += h
                trial[1, axis] -= h
                ft = _qubit_output_norms(mat, trial[:, 0], trial[:, 1])
                k = int(np.argmax(ft))
                if ft[k] > fx:
                    x, fx = trial[k], float(ft[k])
            h *= 0.5
        best = max(best, fx)
    if return_grid:
        return best, grid_max
    return best


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------

def vec(M) -> np.ndarray:
    """Column-stacking vectorization."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValidationError(f"vec expects a matrix, got ndim={M.ndim}")
    return M.reshape(-1, order="F").copy()


def unvec(v, shape=None) -> np.ndarray:
    v = np.asarray(v)
    if shape is None:
        n = int(round(np.sqrt(v.size)))
        if n * n != v.size:
            raise ValidationError(f"cannot unvec length {v.size} into a square matrix")
        shape = (n, n)
    if shape[0] * shape[1] != v.size:
        raise ValidationError(f"shape {shape} incompatible with length {v.size}")
    return v.reshape(shape, order="F").copy()


def kron(A, B) -> np.ndarray:
    if isinstance(A, SuperOp):
        A = A.mat
    if isinstance(B, SuperOp):
        B = B.mat
    return np.kron(A, B)
