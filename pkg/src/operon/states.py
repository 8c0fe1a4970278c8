"""States as density operators, restriction to subalgebras, and product tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import OperatorAlgebra, algebras_commute, tensor_factor_side
from .numerics import (
    ATOL,
    DimensionError,
    as_matrix,
    as_vector,
    dagger,
    frozen,
    operator_norm,
    partial_trace,
    projector,
    tensor_product,
    trace_norm,
)


class InvalidStateError(ValueError):
    pass


def check_density(d: np.ndarray, tol: float = ATOL) -> None:
    """Raise :class:`InvalidStateError` unless ``d`` is Hermitian, PSD, unit trace."""
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InvalidStateError(f"density must be square, got {d.shape}")
    if not np.all(np.isfinite(d)):
        raise InvalidStateError("density has non-finite entries")
    if np.linalg.norm(d - dagger(d)) > tol:
        raise InvalidStateError("density is not Hermitian")
    tr = np.trace(d)
    if abs(tr - 1) > tol:
        raise InvalidStateError(f"density has trace {tr.real:.12g}, expected 1")
    mn = np.linalg.eigvalsh(0.5 * (d + dagger(d))).min()
    if mn < -tol:
        raise InvalidStateError(f"density has negative eigenvalue {mn:.3g}")


@dataclass(frozen=True)
class StateFunctional:
    """Normal state ``Z -> Tr(D Z)`` on ``B(C^n)``."""

    density: np.ndarray = field(repr=False)
    dims: tuple[int, int] | None = None
    label: str = ""

    def __post_init__(self):
        d = as_matrix(self.density)
        check_density(d)
        if self.dims is not None:
            dims = (int(self.dims[0]), int(self.dims[1]))
            if dims[0] * dims[1] != d.shape[0]:
                raise DimensionError(f"dims {dims} inconsistent with {d.shape[0]}x{d.shape[0]} density")
            object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "density", frozen(0.5 * (d + dagger(d))))

    @property
    def ambient_dim(self) -> int:
        return self.density.shape[0]

    def __call__(self, z) -> complex:
        return expectation(self, z)

    def reduced(self, keep: str = "A", dims: tuple[int, int] | None = None) -> np.ndarray:
        dims = dims or self.dims
        if dims is None:
            raise ValueError("bipartite dims required")
        return partial_trace(self.density, dims, keep)

    def with_dims(self, dims: tuple[int, int]) -> "StateFunctional":
        return StateFunctional(self.density, dims, self.label)


def expectation(state: StateFunctional, z) -> complex:
    z = as_matrix(z)
    if z.shape != state.density.shape:
        raise DimensionError(f"observable {z.shape} vs state on {state.density.shape}")
    return complex(np.trace(state.density @ z))


def vector_state(x, dims: tuple[int, int] | None = None, label: str = "") -> StateFunctional:
    """``rho_x`` with density ``x x* / |x|^2``."""
    v = as_vector(x)
    if not np.any(v):
        raise InvalidStateError("vector state of the zero vector")
    return StateFunctional(projector(v), dims, label)


def product_density(*densities) -> np.ndarray:
    return tensor_product(*densities)


class Distance(NamedTuple):
    value: float
    lower_bound: bool  # True when only a certified lower bound is available


def norm_distance(rho1: StateFunctional, rho2: StateFunctional, R: OperatorAlgebra,
                  dims: tuple[int, int] | None = None) -> Distance:
    """``sup{|rho1(Z) - rho2(Z)| : Z = Z* in R, |Z| <= 1}``.

    Exact for ``B(H)`` and for the two tensor factors (trace norm of the
    difference, or of its partial trace). Any other algebra gets a lower bound
    from its Hermitian basis rescaled to unit operator norm.
    """
    if rho1.density.shape != rho2.density.shape:
        raise DimensionError("states live on different spaces")
    if R.ambient_dim != rho1.ambient_dim:
        raise DimensionError(f"algebra on C^{R.ambient_dim} vs states on C^{rho1.ambient_dim}")
    diff = rho1.density - rho2.density
    n = R.ambient_dim
    if R.dim == n * n:
        return Distance(trace_norm(diff), False)
    dims = dims or rho1.dims or rho2.dims
    if dims is not None:
        side = tensor_factor_side(R, dims)
        if side == "A":
            return Distance(trace_norm(partial_trace(diff, dims, "A")), False)
        if side == "B":
            return Distance(trace_norm(partial_trace(diff, dims, "B")), False)
    if R.dim == 1:
        return Distance(0.0, False)
    best = 0.0
    for b in R.basis:
        z = b / operator_norm(b)
        best = max(best, abs(np.trace(diff @ z)))
    return Distance(float(best), True)


def is_product_state(state: StateFunctional, RA: OperatorAlgebra, RB: OperatorAlgebra,
                     tol: float = 1e-8) -> bool:
    """``rho(XY) = rho(X) rho(Y)`` on all basis pairs of two commuting algebras."""
    if not algebras_commute(RA, RB):
        raise ValueError("algebras do not commute")
    d = state.density
    ea = [np.trace(d @ a) for a in RA.basis]
    eb = [np.trace(d @ b) for b in RB.basis]
    for (j, a), (k, b) in itertools.product(enumerate(RA.basis), enumerate(RB.basis)):
        if abs(np.trace(d @ a @ b) - ea[j] * eb[k]) > tol:
            return False
    return True


@dataclass(frozen=True)
class ProductCertificate:
    """``sum_k w_k rho_A^k (x) rho_B^k`` with nonnegative weights summing to one."""

    weights: tuple[float, ...]
    pairs: tuple[tuple[np.ndarray, np.ndarray], ...] = field(repr=False)

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != len(self.pairs):
            raise ValueError("one weight per factor pair")
        if any(x < -ATOL for x in w):
            raise ValueError("negative certificate weight")
        if w and abs(sum(w) - 1) > 1e-8:
            raise ValueError(f"certificate weights sum to {sum(w)}")
        pairs = tuple((frozen(a), frozen(b)) for a, b in self.pairs)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> tuple[int, int]:
        a, b = self.pairs[0]
        return a.shape[0], b.shape[0]

    def density(self) -> np.ndarray:
        dA, dB = self.dims
        out = np.zeros((dA * dB, dA * dB), dtype=complex)
        for w, (a, b) in zip(self.weights, self.pairs):
            out += w * np.kron(a, b)
        return out

    def residual(self, density, algebra: OperatorAlgebra | None = None) -> float:
        """Frobenius distance to ``density``, measured on ``algebra`` when given."""
        diff = as_matrix(density) - self.density()
        if algebra is None:
            return float(np.linalg.norm(diff))
        return float(np.linalg.norm(algebra.coefficients(diff)))

    def factors_valid(self, tol: float = 1e-9) -> bool:
        for a, b in self.pairs:
            for m in (a, b):
                try:
                    check_density(m, tol)
                except InvalidStateError:
                    return False
        return True


def certificate_from_terms(terms: Sequence[tuple[float, np.ndarray, np.ndarray]],
                           drop_below: float = 0.0) -> ProductCertificate:
    kept = [(w, a, b) for w, a, b in terms if w > drop_below]
    total = sum(w for w, _, _ in kept)
    return ProductCertificate(
        weights=tuple(w / total for w, _, _ in kept),
        pairs=tuple((a, b) for _, a, b in kept),
    )
