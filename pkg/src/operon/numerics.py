"""Dense complex linear algebra shared by every other module.

Matrices are plain ``numpy`` complex arrays. Vectors are ``n x 1`` column
matrices; 1-D input is accepted everywhere and promoted with :func:`as_vector`.

Composite basis convention: ``|i>_A (x) |j>_B`` has index ``i * dB + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

# Relative rank/degeneracy tolerance (fraction of the largest singular value).
RANK_TOL = 1e-8
# Absolute tolerance for "equals" assertions.
ATOL = 1e-10


class DimensionError(ValueError):
    """Raised when operand shapes do not fit together."""


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a 2-D complex array (a 1-D input becomes a column)."""
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of shape {a.shape}")
    return a


def as_vector(x) -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if a.ndim != 1:
        raise DimensionError(f"expected a vector, got array of shape {a.shape}")
    return a


def frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis column vector ``|index>`` in ``C^dim``."""
    v = np.zeros((dim, 1), dtype=complex)
    v[index, 0] = 1.0
    return v


def projector(x) -> np.ndarray:
    """Rank-one orthogonal projection onto ``span{x}``."""
    v = as_vector(x)
    nrm = np.vdot(v, v).real
    if nrm == 0:
        raise ValueError("cannot project onto the zero vector")
    return np.outer(v, v.conj()) / nrm


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not factors:
        raise ValueError("tensor_product needs at least one factor")
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = np.kron(out, as_matrix(f))
    return out


def _check_bipartite(m: np.ndarray, dims: tuple[int, int]) -> tuple[int, int]:
    dA, dB = int(dims[0]), int(dims[1])
    n = dA * dB
    if m.shape != (n, n):
        raise DimensionError(f"matrix of shape {m.shape} does not act on {dA}x{dB}")
    return dA, dB


def partial_trace(m, dims: tuple[int, int], keep: Literal["A", "B"] = "A") -> np.ndarray:
    """Trace out one tensor factor of an operator on ``C^dA (x) C^dB``.

    ``keep="A"`` returns ``Tr_B(m)``, characterised by
    ``Tr(Tr_B(m) X) = Tr(m (X (x) I))`` for every ``X``.
    """
    m = as_matrix(m)
    dA, dB = _check_bipartite(m, dims)
    t = m.reshape(dA, dB, dA, dB)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_transpose(m, dims: tuple[int, int], side: Literal["A", "B"] = "B") -> np.ndarray:
    m = as_matrix(m)
    dA, dB = _check_bipartite(m, dims)
    t = m.reshape(dA, dB, dA, dB)
    if side == "B":
        t = t.transpose(0, 3, 2, 1)
    elif side == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return t.reshape(dA * dB, dA * dB)


@dataclass(frozen=True)
class HermitianEigenSystem:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # orthonormal columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def is_hermitian(m, rtol: float = ATOL) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(np.linalg.norm(m), 1.0)
    return bool(np.linalg.norm(m - dagger(m)) <= rtol * scale)


def hermitian_eig(m) -> HermitianEigenSystem:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending.

    Raises ``ValueError`` when ``||M - M*||_F`` exceeds ``1e-10 ||M||_F``.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"hermitian_eig needs a square matrix, got {m.shape}")
    nrm = np.linalg.norm(m)
    if np.linalg.norm(m - dagger(m)) > ATOL * max(nrm, np.finfo(float).tiny):
        raise ValueError("matrix is not Hermitian")
    h = 0.5 * (m + dagger(m))
    w, v = np.linalg.eigh(h)
    return HermitianEigenSystem(eigenvalues=frozen(w).real, eigenvectors=frozen(v))


class Norms(NamedTuple):
    operator_norm: float
    trace_norm: float
    frobenius: float


def norms(m) -> Norms:
    s = np.linalg.svd(as_matrix(m), compute_uv=False)
    if s.size == 0:
        return Norms(0.0, 0.0, 0.0)
    return Norms(float(s[0]), float(s.sum()), float(math.sqrt(float(np.sum(s**2)))))


def trace_norm(m) -> float:
    return norms(m).trace_norm


def operator_norm(m) -> float:
    return norms(m).operator_norm


def numerical_rank(m, rtol: float = RANK_TOL) -> int:
    """Count singular values above ``rtol`` times the largest one."""
    s = np.linalg.svd(as_matrix(m), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def null_space(m, rtol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the right nullspace of ``m``."""
    m = as_matrix(m)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] == 0:
        return dagger(vh)
    rank = int(np.sum(s > rtol * s[0]))
    return dagger(vh[rank:])


def range_projection(cols, rtol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projection onto the column span of ``cols``."""
    cols = as_matrix(cols)
    if cols.shape[1] == 0:
        return np.zeros((cols.shape[0], cols.shape[0]), dtype=complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s[0] == 0:
        return np.zeros((cols.shape[0], cols.shape[0]), dtype=complex)
    u = u[:, s > rtol * s[0]]
    return u @ dagger(u)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``x = sum_i c_i a_i (x) b_i`` with nonincreasing ``c_i``.

    ``left`` and ``right`` hold the vectors ``a_i`` and ``b_i`` as columns.
    """

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray
    rank: int
    dims: tuple[int, int]

    def reconstruct(self) -> np.ndarray:
        dA, dB = self.dims
        out = np.zeros(dA * dB, dtype=complex)
        for c, a, b in zip(self.coefficients, self.left.T, self.right.T):
            out += c * np.kron(a, b)
        return out.reshape(-1, 1)


def schmidt_decompose(x, dims: tuple[int, int], rtol: float = RANK_TOL) -> SchmidtDecomposition:
    v = as_vector(x)
    dA, dB = int(dims[0]), int(dims[1])
    if v.size != dA * dB:
        raise DimensionError(f"vector of length {v.size} does not live in {dA}x{dB}")
    if not np.any(v):
        raise ValueError("Schmidt decomposition of the zero vector is undefined")
    u, s, vh = np.linalg.svd(v.reshape(dA, dB), full_matrices=False)
    rank = int(np.sum(s > rtol * s[0]))
    return SchmidtDecomposition(
        coefficients=frozen(s).real,
        left=frozen(u),
        right=frozen(vh.T),
        rank=rank,
        dims=(dA, dB),
    )


def schmidt_rank(x, dims: tuple[int, int], rtol: float = RANK_TOL) -> int:
    return schmidt_decompose(x, dims, rtol).rank


# Frequently used constants.
I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
P_PLUS = np.array([[1, 0], [0, 0]], dtype=complex)
P_MINUS = np.array([[0, 0], [0, 1]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def singlet() -> np.ndarray:
    """``(|01> - |10>)/sqrt(2)`` as a column vector."""
    return (np.kron(ket(0, 2), ket(1, 2)) - np.kron(ket(1, 2), ket(0, 2))) / math.sqrt(2)


def triplet0() -> np.ndarray:
    """``(|01> + |10>)/sqrt(2)`` as a column vector."""
    return (np.kron(ket(0, 2), ket(1, 2)) + np.kron(ket(1, 2), ket(0, 2))) / math.sqrt(2)


def spin_observable(direction) -> np.ndarray:
    """``n . sigma`` for a unit 3-vector ``n``."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def haar_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unit vector: a normalised standard complex Gaussian."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return (z / np.linalg.norm(z)).reshape(-1, 1)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``G G* / Tr(G G*)`` with ``G`` Gaussian of shape ``dim x rank``."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    d = g @ dagger(g)
    return d / np.trace(d).real


def random_matrix(rng: np.random.Generator, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = random_matrix(rng, dim)
    return 0.5 * (g + dagger(g))
