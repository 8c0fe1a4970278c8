"""Finite-dimensional von Neumann algebras.

An algebra is stored as an orthonormal (trace inner product) basis of
Hermitian matrices. Every *-closed span admits such a basis, and keeping it
Hermitian makes *-closure a structural property instead of a checked one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, NamedTuple, Sequence

import numpy as np

from .numerics import (
    RANK_TOL,
    DimensionError,
    as_matrix,
    as_vector,
    dagger,
    frozen,
    hermitian_eig,
    null_space,
    numerical_rank,
    range_projection,
)

# Span-membership threshold (relative residual).
SPAN_TOL = 1e-9


def _vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1)


def _orthonormalize(mats: Iterable[np.ndarray], n: int, rtol: float = RANK_TOL) -> list[np.ndarray]:
    rows = [_vec(as_matrix(m)) for m in mats]
    if not rows:
        return []
    stacked = np.vstack(rows)
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    if s[0] == 0:
        return []
    keep = s > rtol * s[0]
    return [v.reshape(n, n) for v in vh[keep]]


def _hermitian_basis(mats: Sequence[np.ndarray], n: int) -> list[np.ndarray]:
    """Orthonormal Hermitian basis for the real span of the Hermitian parts of ``mats``.

    For a *-closed complex span this is also a complex basis of that span.
    """
    basis: list[np.ndarray] = []
    for m in mats:
        for h in (0.5 * (m + dagger(m)), -0.5j * (m - dagger(m))):
            nrm0 = np.linalg.norm(h)
            if nrm0 < 1e-14:
                continue
            r = h.copy()
            for _ in range(2):
                for b in basis:
                    r = r - np.vdot(b, r).real * b
            nrm = np.linalg.norm(r)
            if nrm > SPAN_TOL * nrm0 and nrm > 1e-12:
                r = r / nrm
                basis.append(0.5 * (r + dagger(r)))
    return basis


@dataclass(frozen=True)
class OperatorAlgebra:
    """A unital *-subalgebra of ``M_n(C)``.

    Build instances with :func:`generate_algebra`, :func:`algebra_from_span`
    or the named constructors rather than directly.
    """

    ambient_dim: int
    generators: tuple[np.ndarray, ...]
    basis: tuple[np.ndarray, ...] = field(repr=False)
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def contains_identity(self) -> bool:
        return self.contains(np.eye(self.ambient_dim), tol=1e-10)

    @cached_property
    def basis_matrix(self) -> np.ndarray:
        """Basis as rows of vectorised matrices, shape ``(dim, n*n)``."""
        if not self.basis:
            return np.zeros((0, self.ambient_dim**2), dtype=complex)
        return np.vstack([_vec(b) for b in self.basis])

    @cached_property
    def basis_stack(self) -> np.ndarray:
        return np.array(self.basis, dtype=complex).reshape(self.dim, self.ambient_dim, self.ambient_dim)

    def coefficients(self, x) -> np.ndarray:
        return self.basis_matrix.conj() @ _vec(as_matrix(x))

    def project(self, x) -> np.ndarray:
        """Trace-inner-product orthogonal projection of ``x`` onto the span."""
        c = self.coefficients(x)
        return (c @ self.basis_matrix).reshape(self.ambient_dim, self.ambient_dim)

    def distance_to_span(self, x) -> float:
        x = as_matrix(x)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = SPAN_TOL) -> bool:
        x = as_matrix(x)
        if x.shape != (self.ambient_dim, self.ambient_dim):
            raise DimensionError(f"{x.shape} operator vs ambient dim {self.ambient_dim}")
        return self.distance_to_span(x) <= tol * max(1.0, float(np.linalg.norm(x)))

    def contains_algebra(self, other: "OperatorAlgebra", tol: float = SPAN_TOL) -> bool:
        return all(self.contains(b, tol) for b in other.basis)

    def same_span(self, other: "OperatorAlgebra", tol: float = SPAN_TOL) -> bool:
        return self.dim == other.dim and self.contains_algebra(other, tol) and other.contains_algebra(self, tol)

    @property
    def commutation_set(self) -> tuple[np.ndarray, ...]:
        """Operators whose commutant equals this algebra's commutant."""
        if self.generators:
            gens = list(self.generators)
            return tuple(gens + [dagger(g) for g in gens])
        return self.basis

    @cached_property
    def is_abelian(self) -> bool:
        for a, b in itertools.combinations(self.basis, 2):
            if np.linalg.norm(a @ b - b @ a) > SPAN_TOL:
                return False
        return True

    def closure_residuals(self) -> dict[str, float]:
        """Worst residuals of the structural invariants (adjoint, product, identity)."""
        adj = max((self.distance_to_span(dagger(b)) for b in self.basis), default=0.0)
        prod = 0.0
        for a, b in itertools.product(self.basis, repeat=2):
            prod = max(prod, self.distance_to_span(a @ b))
        ident = self.distance_to_span(np.eye(self.ambient_dim))
        return {"adjoint": adj, "product": prod, "identity": ident}


def algebra_from_span(mats: Sequence, ambient_dim: int, label: str = "", generators=()) -> OperatorAlgebra:
    """Wrap a *-closed, product-closed span that already contains the identity."""
    mats = [as_matrix(m) for m in mats]
    for m in mats:
        if m.shape != (ambient_dim, ambient_dim):
            raise DimensionError(f"{m.shape} operator vs ambient dim {ambient_dim}")
    complex_basis = _orthonormalize(mats, ambient_dim)
    herm = _hermitian_basis(complex_basis, ambient_dim)
    if len(herm) != len(complex_basis):
        raise ValueError("span is not closed under adjoints")
    return OperatorAlgebra(
        ambient_dim=ambient_dim,
        generators=tuple(frozen(g) for g in generators),
        basis=tuple(frozen(b) for b in herm),
        label=label,
    )


def generate_algebra(generators: Sequence, ambient_dim: int, label: str = "") -> OperatorAlgebra:
    """Smallest unital *-algebra containing ``generators``.

    The span of all words in the generators and their adjoints is grown from
    the identity by left multiplication until no new direction appears. The
    basis can never exceed ``ambient_dim**2`` elements, which bounds the loop.
    """
    n = int(ambient_dim)
    gens = [as_matrix(g) for g in generators]
    for g in gens:
        if g.shape != (n, n):
            raise DimensionError(f"generator of shape {g.shape} in ambient dim {n}")
    letters = gens + [dagger(g) for g in gens]

    basis: list[np.ndarray] = []

    def add(m: np.ndarray) -> np.ndarray | None:
        nrm0 = np.linalg.norm(m)
        if nrm0 < 1e-14:
            return None
        r = m
        for _ in range(2):
            for b in basis:
                r = r - np.vdot(b, r) * b
        nrm = np.linalg.norm(r)
        if nrm <= SPAN_TOL * nrm0:
            return None
        r = r / nrm
        basis.append(r)
        return r

    frontier = [b for b in [add(np.eye(n, dtype=complex))] if b is not None]
    for g in letters:
        b = add(g)
        if b is not None:
            frontier.append(b)
    for _ in range(n * n + 1):
        if not frontier or len(basis) >= n * n:
            break
        new = []
        for g in letters:
            for f in frontier:
                b = add(g @ f)
                if b is not None:
                    new.append(b)
        frontier = new
    herm = _hermitian_basis(basis, n)
    return OperatorAlgebra(
        ambient_dim=n,
        generators=tuple(frozen(g) for g in gens),
        basis=tuple(frozen(b) for b in herm),
        label=label,
    )


def full_algebra(n: int) -> OperatorAlgebra:
    """``B(C^n)`` with the matrix-unit basis."""
    units = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            units.append(e)
    return algebra_from_span(units, n, label=f"B(C^{n})")


def trivial_algebra(n: int) -> OperatorAlgebra:
    return algebra_from_span([np.eye(n)], n, label="C*I")


def diagonal_algebra(n: int) -> OperatorAlgebra:
    units = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        units.append(e)
    return algebra_from_span(units, n, label=f"diag({n})")


def lift_algebra(local: OperatorAlgebra, dims: tuple[int, int], side: Literal["A", "B"] = "A") -> OperatorAlgebra:
    """``R (x) I`` (side A) or ``I (x) R`` (side B) for ``R`` acting on one factor."""
    dA, dB = dims
    expected = dA if side == "A" else dB
    if local.ambient_dim != expected:
        raise DimensionError(f"algebra on C^{local.ambient_dim} cannot sit on factor {side} of {dA}x{dB}")
    if side == "A":
        mats = [np.kron(b, np.eye(dB)) for b in local.basis]
        gens = [np.kron(g, np.eye(dB)) for g in local.generators]
    else:
        mats = [np.kron(np.eye(dA), b) for b in local.basis]
        gens = [np.kron(np.eye(dA), g) for g in local.generators]
    return algebra_from_span(mats, dA * dB, label=f"{local.label}@{side}", generators=gens)


def factor_algebra(dims: tuple[int, int], side: Literal["A", "B"] = "A") -> OperatorAlgebra:
    """``B(H_A) (x) I`` or ``I (x) B(H_B)``."""
    d = dims[0] if side == "A" else dims[1]
    alg = lift_algebra(full_algebra(d), dims, side)
    return OperatorAlgebra(alg.ambient_dim, alg.generators, alg.basis, label=f"B(H_{side})")


def tensor_factor_side(R: OperatorAlgebra, dims: tuple[int, int]) -> str | None:
    """Identify ``R`` as ``"full"``, ``"A"``, ``"B"`` or ``"trivial"`` relative to ``dims``."""
    dA, dB = dims
    n = R.ambient_dim
    if dA * dB != n:
        return None
    if R.dim == n * n:
        return "full"
    if R.dim == 1:
        return "trivial"
    for side, d in (("A", dA), ("B", dB)):
        if R.dim == d * d and R.contains_algebra(factor_algebra(dims, side)):
            return side
    return None


def _commutator_rows(mats: Sequence[np.ndarray], n: int) -> np.ndarray:
    eye = np.eye(n)
    blocks = [np.kron(g, eye) - np.kron(eye, g.T) for g in mats]
    if not blocks:
        return np.zeros((0, n * n), dtype=complex)
    return np.vstack(blocks)


def commutant(R: OperatorAlgebra) -> OperatorAlgebra:
    """``R' = {X : XG = GX for all G in R}`` as a nullspace over ``M_n(C)``.

    Only the generators (and their adjoints) enter the linear system.
    """
    n = R.ambient_dim
    rows = _commutator_rows(R.commutation_set, n)
    if rows.shape[0] == 0:
        return full_algebra(n)
    ns = null_space(rows)
    mats = [ns[:, k].reshape(n, n) for k in range(ns.shape[1])]
    herm = _hermitian_basis(mats, n)
    return OperatorAlgebra(
        ambient_dim=n,
        generators=(),
        basis=tuple(frozen(b) for b in herm),
        label=f"({R.label})'" if R.label else "",
    )


class CenterReport(NamedTuple):
    center: OperatorAlgebra
    is_factor: bool


def center_and_factor(R: OperatorAlgebra) -> CenterReport:
    """``R cap R'`` and whether it is one-dimensional."""
    n = R.ambient_dim
    gens = R.commutation_set
    if not gens:
        cols = np.zeros((0, R.dim), dtype=complex)
    else:
        cols = np.column_stack(
            [np.concatenate([_vec(g @ b - b @ g) for g in gens]) for b in R.basis]
        )
    if cols.shape[0] == 0 or not np.any(np.abs(cols) > 1e-12):
        coeffs = np.eye(R.dim, dtype=complex)
    else:
        coeffs = null_space(cols)
    mats = [sum(c * b for c, b in zip(coeffs[:, k], R.basis)) for k in range(coeffs.shape[1])]
    herm = _hermitian_basis(mats, n)
    center = OperatorAlgebra(n, (), tuple(frozen(b) for b in herm), label="center")
    return CenterReport(center, center.dim == 1)


def _orbit_matrix(x, R: OperatorAlgebra) -> np.ndarray:
    v = as_vector(x)
    if v.size != R.ambient_dim:
        raise DimensionError(f"vector of length {v.size} vs ambient dim {R.ambient_dim}")
    if not np.any(v):
        raise ValueError("zero vector")
    return R.basis_stack @ v if R.dim else np.zeros((0, v.size))


def is_cyclic_vector(x, R: OperatorAlgebra, rtol: float = RANK_TOL) -> bool:
    """``{Ax : A in R}`` spans the ambient space."""
    orbit = _orbit_matrix(x, R).T
    return numerical_rank(orbit, rtol) == R.ambient_dim


def is_separating_vector(x, R: OperatorAlgebra, rtol: float = RANK_TOL) -> bool:
    """``A -> Ax`` is injective on ``R``."""
    orbit = _orbit_matrix(x, R).T
    return numerical_rank(orbit, rtol) == R.dim


def _density_of(state) -> np.ndarray:
    return as_matrix(getattr(state, "density", state))


def support_projection(state, R: OperatorAlgebra) -> np.ndarray:
    """Smallest projection ``S`` in ``R`` with ``rho(S) = 1``.

    ``S`` projects onto ``span{B v : B in R', v in range(D_rho)}``.
    """
    d = _density_of(state)
    es = hermitian_eig(d)
    top = max(es.eigenvalues.max(), 0.0)
    vecs = es.eigenvectors[:, es.eigenvalues > RANK_TOL * top]
    comm = commutant(R)
    cols = np.hstack([b @ vecs for b in comm.basis])
    return range_projection(cols)


def left_ideal_basis(state, R: OperatorAlgebra, tol: float = 1e-10) -> list[np.ndarray]:
    """Basis of ``{A in R : rho(A* A) = 0}``, each element unit Frobenius norm."""
    d = _density_of(state)
    stack = R.basis_stack
    # gram[j, k] = Tr(B_j* B_k D) = <B_j, B_k D>
    gram = R.basis_matrix.conj() @ (stack @ d).reshape(R.dim, -1).T
    gram = 0.5 * (gram + dagger(gram))
    w, v = np.linalg.eigh(gram)
    out = []
    for k in np.flatnonzero(w <= tol):
        a = np.tensordot(v[:, k], stack, axes=(0, 0))
        out.append(a / np.linalg.norm(a))
    return out


def _check_projection(P: np.ndarray, tol: float = SPAN_TOL) -> None:
    if np.linalg.norm(P) < tol:
        raise ValueError("zero projection")
    if np.linalg.norm(P @ P - P) > tol or np.linalg.norm(P - dagger(P)) > tol:
        raise ValueError("not an orthogonal projection")


class AbelianCheck(NamedTuple):
    abelian: bool
    atom: bool | None  # reported for factors only


def is_abelian_projection(P, R: OperatorAlgebra) -> AbelianCheck:
    """Whether ``P R P`` is commutative; for factors also whether ``P`` is an atom."""
    P = as_matrix(P)
    _check_projection(P)
    if not R.contains(P):
        raise ValueError("projection does not lie in the algebra")
    corners = [P @ b @ P for b in R.basis]
    abelian = all(
        np.linalg.norm(a @ b - b @ a) <= SPAN_TOL for a, b in itertools.combinations(corners, 2)
    )
    atom = None
    if center_and_factor(R).is_factor:
        atom = len(_orthonormalize(corners, R.ambient_dim)) == 1
    return AbelianCheck(abelian, atom)


@dataclass(frozen=True)
class LatticeNet:
    """Toy net of local algebras over a finite chain of tensor factors."""

    site_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "site_dims", tuple(int(d) for d in self.site_dims))

    @property
    def ambient_dim(self) -> int:
        return math.prod(self.site_dims)

    def region_dims(self, region: Iterable[int]) -> int:
        return math.prod(self.site_dims[s] for s in region)


def net_algebra(net: LatticeNet, region: Iterable[int]) -> OperatorAlgebra:
    """Full matrix algebra on the region's sites, identity on the rest."""
    region = sorted(set(region))
    for s in region:
        if not 0 <= s < len(net.site_dims):
            raise KeyError(f"unknown site index {s}")
    n = net.ambient_dim
    per_site = []
    for s, d in enumerate(net.site_dims):
        if s in region:
            units = []
            for i in range(d):
                for j in range(d):
                    e = np.zeros((d, d), dtype=complex)
                    e[i, j] = 1.0
                    units.append(e)
            per_site.append(units)
        else:
            per_site.append([np.eye(d, dtype=complex)])
    mats = []
    for combo in itertools.product(*per_site):
        m = np.ones((1, 1), dtype=complex)
        for f in combo:
            m = np.kron(m, f)
        mats.append(m)
    return algebra_from_span(mats, n, label=f"A({{{','.join(map(str, region))}}})")


def isotony_residual(net: LatticeNet, inner: Iterable[int], outer: Iterable[int]) -> float:
    """Worst relative distance of ``A(inner)`` basis elements from ``span A(outer)``."""
    small, big = net_algebra(net, inner), net_algebra(net, outer)
    return max(big.distance_to_span(b) for b in small.basis)


def microcausality_residual(net: LatticeNet, r1: Iterable[int], r2: Iterable[int]) -> float:
    """Largest Frobenius norm of a basis commutator between two regions."""
    a, b = net_algebra(net, r1), net_algebra(net, r2)
    return max(
        (float(np.linalg.norm(x @ y - y @ x)) for x in a.basis for y in b.basis),
        default=0.0,
    )


def algebras_commute(R1: OperatorAlgebra, R2: OperatorAlgebra, tol: float = SPAN_TOL) -> bool:
    for x in R1.commutation_set or R1.basis:
        for y in R2.commutation_set or R2.basis:
            if np.linalg.norm(x @ y - y @ x) > tol * max(1.0, np.linalg.norm(x) * np.linalg.norm(y)):
                return False
    return True


def joint_spectral_projections(R: OperatorAlgebra, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Minimal projections of an abelian algebra (its joint eigenspaces).

    A generic real combination of the Hermitian basis separates every pair of
    minimal projections, so its eigenspaces are exactly those projections.
    """
    if not R.is_abelian:
        raise ValueError("algebra is not abelian")
    rng = np.random.default_rng(0) if rng is None else rng
    coeffs = rng.standard_normal(R.dim)
    h = np.tensordot(coeffs, R.basis_stack, axes=(0, 0))
    es = hermitian_eig(0.5 * (h + dagger(h)))
    w, v = es.eigenvalues, es.eigenvectors
    scale = max(1.0, float(np.abs(w).max()))
    groups: list[list[int]] = []
    for k in range(len(w)):
        if groups and abs(w[k] - w[groups[-1][-1]]) <= 1e-7 * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    projs = []
    for g in groups:
        u = v[:, g]
        projs.append(u @ dagger(u))
    return projs
