"""Kraus operations acting on states and observables.

Heisenberg picture follows the convention ``T(Z) = sum_i K_i* Z K_i``; a
state with density ``D`` is carried to ``sum_i K_i D K_i*`` (the conjugate
operation) and renormalised by ``rho(T(I))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import OperatorAlgebra, algebras_commute, commutant, factor_algebra
from .numerics import ATOL, DimensionError, as_matrix, dagger, frozen, trace_norm
from .states import StateFunctional

NULL_THRESHOLD = 1e-12
COMPLETENESS_TOL = 1e-9
LOCALITY_TOL = 1e-9


class InvalidOperationError(ValueError):
    pass


@dataclass(frozen=True)
class KrausOperation:
    kraus_ops: tuple[np.ndarray, ...] = field(repr=False)
    label: str = ""

    def __post_init__(self):
        ops = [as_matrix(k) for k in self.kraus_ops]
        if not ops:
            raise InvalidOperationError("an operation needs at least one Kraus operator")
        n = ops[0].shape[0]
        for k in ops:
            if k.shape != (n, n):
                raise DimensionError(f"Kraus operator of shape {k.shape} in ambient dim {n}")
        object.__setattr__(self, "kraus_ops", tuple(frozen(k) for k in ops))
        lo, hi = self.effect_spectrum
        if lo < -ATOL or hi > 1 + ATOL:
            raise InvalidOperationError(
                f"sum K*K has spectrum [{lo:.6g}, {hi:.6g}], outside [0, 1]"
            )

    @property
    def ambient_dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @cached_property
    def effect(self) -> np.ndarray:
        """``T(I) = sum_i K_i* K_i``."""
        return sum(dagger(k) @ k for k in self.kraus_ops)

    @cached_property
    def effect_spectrum(self) -> tuple[float, float]:
        w = np.linalg.eigvalsh(0.5 * (self.effect + dagger(self.effect)))
        return float(w[0]), float(w[-1])

    @cached_property
    def nonselective(self) -> bool:
        return bool(np.linalg.norm(self.effect - np.eye(self.ambient_dim)) <= COMPLETENESS_TOL)

    @property
    def classification(self) -> str:
        return "nonselective" if self.nonselective else "selective"

    @property
    def pure(self) -> bool:
        return len(self.kraus_ops) == 1

    def __call__(self, z) -> np.ndarray:
        return apply_heisenberg(self, z)


def kraus_operation(kraus_ops: Sequence, label: str = "") -> KrausOperation:
    return KrausOperation(tuple(kraus_ops), label)


def identity_operation(n: int) -> KrausOperation:
    return KrausOperation((np.eye(n, dtype=complex),), "id")


def _check_dim(T: KrausOperation, m: np.ndarray) -> None:
    if m.shape != (T.ambient_dim, T.ambient_dim):
        raise DimensionError(f"operator of shape {m.shape} vs operation on C^{T.ambient_dim}")


def apply_heisenberg(T: KrausOperation, z) -> np.ndarray:
    z = as_matrix(z)
    _check_dim(T, z)
    return sum(dagger(k) @ z @ k for k in T.kraus_ops)


def apply_schrodinger(T: KrausOperation, state) -> tuple[np.ndarray, float]:
    """Unnormalised output density ``sum K D K*`` and its trace ``rho(T(I))``."""
    d = as_matrix(getattr(state, "density", state))
    _check_dim(T, d)
    out = sum(k @ d @ dagger(k) for k in T.kraus_ops)
    return out, float(np.trace(out).real)


class UpdateOutcome(NamedTuple):
    state: StateFunctional | None  # None marks the null outcome
    acceptance_probability: float

    @property
    def is_null(self) -> bool:
        return self.state is None


def update_state(T: KrausOperation, state: StateFunctional) -> UpdateOutcome:
    """``rho^T(Z) = rho(T(Z)) / rho(T(I))``, or the null outcome when ``rho(T(I)) = 0``."""
    out, weight = apply_schrodinger(T, state)
    if weight <= NULL_THRESHOLD:
        return UpdateOutcome(None, max(weight, 0.0))
    d = out / weight
    d = 0.5 * (d + dagger(d))
    return UpdateOutcome(StateFunctional(d, state.dims, state.label), min(weight, 1.0))


def compose(T_outer: KrausOperation, T_inner: KrausOperation) -> KrausOperation:
    """Run ``T_inner`` then ``T_outer`` on states.

    Kraus operators are ``K_outer,j K_inner,i``, so the Heisenberg action is
    ``Z -> T_inner(T_outer(Z))``. Selecting with ``T' = P (.) P`` after the
    measurement ``T`` is ``compose(T', T)``.
    """
    if T_outer.ambient_dim != T_inner.ambient_dim:
        raise DimensionError("operations act on different spaces")
    ops = [ko @ ki for ki in T_inner.kraus_ops for ko in T_outer.kraus_ops]
    return KrausOperation(tuple(ops), f"{T_outer.label}o{T_inner.label}")


def mixture_decomposition(T: KrausOperation, state: StateFunctional) -> list[tuple[float, StateFunctional]]:
    """``rho^T = sum_i lambda_i rho^{K_i}`` with ``lambda_i = rho(K_i* K_i) / rho(T(I))``.

    Kraus terms that annihilate the state carry zero weight and are omitted.
    """
    total = float(np.trace(state.density @ T.effect).real)
    if total <= NULL_THRESHOLD:
        raise ValueError("operation annihilates the state (null outcome)")
    out = []
    for k in T.kraus_ops:
        pure = KrausOperation((k,))
        outcome = update_state(pure, state)
        if outcome.is_null:
            continue
        out.append((outcome.acceptance_probability / total, outcome.state))
    return out


def mixture_residual(T: KrausOperation, state: StateFunctional) -> float:
    """Trace-norm gap between ``rho^T`` and the reassembled mixture."""
    target = update_state(T, state).state
    parts = mixture_decomposition(T, state)
    recon = sum(w * s.density for w, s in parts)
    return trace_norm(target.density - recon)


@dataclass(frozen=True)
class LocalityDiagnostics:
    kraus_residual: float  # worst distance of a Kraus operator from span(R), relative
    werner_residual: float  # worst ||sum [Y,K]*[Y,K]||_F over Hermitian basis Y of R'
    factorization_residual: float  # worst ||T(Y) - T(I) Y||_F over the same Y

    @property
    def werner_local(self) -> bool:
        return self.werner_residual <= LOCALITY_TOL

    @property
    def commutant_local(self) -> bool:
        return self.factorization_residual <= LOCALITY_TOL


def locality_diagnostics(T: KrausOperation, R: OperatorAlgebra, R_comm: OperatorAlgebra | None = None) -> LocalityDiagnostics:
    if R.ambient_dim != T.ambient_dim:
        raise DimensionError("operation and algebra act on different spaces")
    comm = commutant(R) if R_comm is None else R_comm
    kraus_res = max(
        R.distance_to_span(k) / max(1.0, float(np.linalg.norm(k))) for k in T.kraus_ops
    )
    effect = T.effect
    werner = 0.0
    fact = 0.0
    for y in comm.basis:
        s = sum(dagger(y @ k - k @ y) @ (y @ k - k @ y) for k in T.kraus_ops)
        werner = max(werner, float(np.linalg.norm(s)))
        fact = max(fact, float(np.linalg.norm(apply_heisenberg(T, y) - effect @ y)))
    return LocalityDiagnostics(kraus_res, werner, fact)


def is_local_to(T: KrausOperation, R: OperatorAlgebra, R_comm: OperatorAlgebra | None = None) -> tuple[bool, LocalityDiagnostics]:
    """Every Kraus operator lies in ``span(R)``; diagnostics give the commutant-side tests."""
    diag = locality_diagnostics(T, R, R_comm)
    return diag.kraus_residual <= LOCALITY_TOL, diag


def werner_identity_residual(T: KrausOperation, y) -> float:
    """``||sum [Y,K]*[Y,K] - (T(Y^2) - T(Y)Y - YT(Y) + YT(I)Y)||_F``; zero for any ``Y``."""
    y = as_matrix(y)
    lhs = sum(dagger(y @ k - k @ y) @ (y @ k - k @ y) for k in T.kraus_ops)
    ty = apply_heisenberg(T, y)
    rhs = apply_heisenberg(T, y @ y) - ty @ y - y @ ty + y @ T.effect @ y
    return float(np.linalg.norm(lhs - rhs))


def factorization_check(T: KrausOperation, RA: OperatorAlgebra, RB: OperatorAlgebra,
                        tol: float = LOCALITY_TOL) -> bool:
    """``T(XY) = T(X) Y`` for basis elements ``X`` of ``RA`` and ``Y`` of ``RB``."""
    if not algebras_commute(RA, RB):
        raise ValueError("algebras do not commute")
    for x in RA.basis:
        tx = apply_heisenberg(T, x)
        for y in RB.basis:
            if np.linalg.norm(apply_heisenberg(T, x @ y) - tx @ y) > tol:
                return False
    return True


def lift_local(kraus_ops: Sequence, dims: tuple[int, int], side: str = "A", label: str = "") -> KrausOperation:
    """``{K_i (x) I}`` (side A) or ``{I (x) K_i}`` (side B)."""
    dA, dB = int(dims[0]), int(dims[1])
    d = dA if side == "A" else dB
    lifted = []
    for k in kraus_ops:
        k = as_matrix(k)
        if k.shape != (d, d):
            raise DimensionError(f"Kraus operator {k.shape} does not act on factor {side} (dim {d})")
        lifted.append(np.kron(k, np.eye(dB)) if side == "A" else np.kron(np.eye(dA), k))
    return KrausOperation(tuple(lifted), label)


def local_algebra(dims: tuple[int, int], side: str = "A") -> OperatorAlgebra:
    return factor_algebra(dims, side)


def random_operation(rng: np.random.Generator, dim: int, n_kraus: int | None = None,
                     selective: bool = False) -> KrausOperation:
    """Random Kraus operation; rescaled so ``T(I) = I`` or, if selective, ``T(I) < I``."""
    n_kraus = int(rng.integers(1, 4)) if n_kraus is None else n_kraus
    ops = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(n_kraus)]
    s = sum(dagger(k) @ k for k in ops)
    w, v = np.linalg.eigh(s)
    if selective:
        scale = np.sqrt(rng.uniform(0.3, 0.95) / w[-1])
        ops = [k * scale for k in ops]
    else:
        inv_sqrt = (v / np.sqrt(w)) @ dagger(v)
        ops = [k @ inv_sqrt for k in ops]
    return KrausOperation(tuple(ops))


def random_local_operation(rng: np.random.Generator, dims: tuple[int, int], side: str = "A",
                           n_kraus: int | None = None, selective: bool = False) -> KrausOperation:
    d = dims[0] if side == "A" else dims[1]
    local = random_operation(rng, d, n_kraus, selective)
    return lift_local(local.kraus_ops, dims, side)
