"""Entanglement: entropy, separability decisions, disentanglers, preparation.

Verdicts are sound by construction. ``"separable"`` always carries an explicit
product decomposition and ``"entangled"`` always carries a negative
partial-transpose eigenvalue with its eigenvector. Everything else is
``"inconclusive"``.
"""

from __future__ import annotations

import math
import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize, nnls

from .algebra import (
    OperatorAlgebra,
    algebras_commute,
    factor_algebra,
    generate_algebra,
    joint_spectral_projections,
    tensor_factor_side,
)
from .numerics import (
    DimensionError,
    as_matrix,
    dagger,
    frozen,
    hermitian_eig,
    partial_trace,
    partial_transpose,
    schmidt_decompose,
)
from .operations import KrausOperation, NULL_THRESHOLD, lift_local
from .states import ProductCertificate, StateFunctional, certificate_from_terms, check_density

SEPARABLE_TOL = 1e-7
WITNESS_TOL = 1e-9
PPT_EXACT_DIMS = {(2, 2), (2, 3), (3, 2)}

PREPARATION_NOTE = (
    "finite-dimensional substitute: rank-one replace maps |psi_i><e_j| (x) I stand in for "
    "partial isometries V_i with V_i V_i* = P_i, V_i* V_i = I, which need type III factors"
)


@dataclass(frozen=True)
class Witness:
    value: float  # minimum eigenvalue of the partial transpose on B
    vector: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SeparabilityVerdict:
    verdict: str  # "separable" | "entangled" | "inconclusive"
    certificate: ProductCertificate | None = None
    witness: Witness | None = None
    distance: float | None = None
    method: str = ""
    note: str = ""

    def __post_init__(self):
        if self.verdict == "separable" and self.certificate is None:
            raise ValueError("separable verdict without a certificate")
        if self.verdict == "entangled" and (self.witness is None or self.witness.value >= -WITNESS_TOL):
            raise ValueError("entangled verdict without a negative witness")
        if self.verdict not in ("separable", "entangled", "inconclusive"):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def separable(self) -> bool:
        return self.verdict == "separable"

    @property
    def entangled(self) -> bool:
        return self.verdict == "entangled"


def _dims_of(state: StateFunctional, dims) -> tuple[int, int]:
    dims = dims or state.dims
    if dims is None:
        raise ValueError("bipartite dims required")
    dA, dB = int(dims[0]), int(dims[1])
    if dA * dB != state.ambient_dim:
        raise DimensionError(f"dims {dims} inconsistent with state on C^{state.ambient_dim}")
    return dA, dB


def entanglement_entropy(x, dims: tuple[int, int]) -> float:
    """Von Neumann entropy (nats) of either reduced state of the pure state ``x``."""
    sd = schmidt_decompose(x, dims)
    p = sd.coefficients**2
    p = p / p.sum()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(density) -> float:
    w = hermitian_eig(as_matrix(density)).eigenvalues
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


def ppt_min_eigen(density, dims: tuple[int, int]) -> Witness:
    es = hermitian_eig(partial_transpose(density, dims, "B"))
    return Witness(float(es.eigenvalues[0]), frozen(es.eigenvectors[:, 0]))


# Separable approximation


@dataclass
class FrankWolfeConfig:
    budget: int = 500
    restarts: int = 8
    inner_iterations: int = 20
    tol: float = SEPARABLE_TOL
    seed: int = 0
    refine_at: tuple[int, ...] = (10, 25, 50, 100, 200, 350)  # iterations that trigger L-BFGS refinement


def _best_product_direction(g: np.ndarray, dims, rng: np.random.Generator, cfg: FrankWolfeConfig):
    """Approximately maximise ``<a (x) b| G |a (x) b>`` over unit ``a``, ``b``.

    Alternates exact top-eigenvector steps on each factor; the best of
    ``cfg.restarts`` random starts wins, ties going to the lower index.
    """
    dA, dB = dims
    t = g.reshape(dA, dB, dA, dB)
    best = (-np.inf, None, None)
    for _ in range(cfg.restarts):
        b = rng.standard_normal(dB) + 1j * rng.standard_normal(dB)
        b /= np.linalg.norm(b)
        a = None
        val = -np.inf
        for _ in range(cfg.inner_iterations):
            ma = np.einsum("ijkl,j,l->ik", t, b.conj(), b)
            w, v = np.linalg.eigh(0.5 * (ma + dagger(ma)))
            a = v[:, -1]
            mb = np.einsum("ijkl,i,k->jl", t, a.conj(), a)
            w, v = np.linalg.eigh(0.5 * (mb + dagger(mb)))
            b = v[:, -1]
            val = float(w[-1])
        if val > best[0]:
            best = (val, a, b)
    return best


def _refine_terms(rho: np.ndarray, terms, dims, maxiter: int = 300):
    """Joint local refinement of a product decomposition by L-BFGS.

    Parametrises ``sigma = sum_k (u_k u_k*) (x) (v_k v_k*)`` with unnormalised
    ``u_k``, ``v_k`` (weights absorbed) and minimises ``||rho - sigma||_F^2``
    from the current pure-product terms. Returns refined terms and distance.
    """
    dA, dB = dims
    r = len(terms)
    z0 = []
    for w, pa, pb in terms:
        a = np.linalg.eigh(pa)[1][:, -1] * w**0.25
        b = np.linalg.eigh(pb)[1][:, -1] * w**0.25
        z0.append(np.concatenate([a, b]))
    z0 = np.concatenate(z0)
    n = dA + dB

    def unpack(p):
        z = p[: r * n] + 1j * p[r * n:]
        z = z.reshape(r, n)
        return z[:, :dA], z[:, dA:]

    def fun(p):
        us, vs = unpack(p)
        xs = np.einsum("ki,kj->kij", us, vs).reshape(r, dA * dB)
        res = xs.T @ xs.conj() - rho
        g = 4 * (res @ xs.T).T.reshape(r, dA, dB)
        gu = np.einsum("kij,kj->ki", g, vs.conj())
        gv = np.einsum("kij,ki->kj", g, us.conj())
        grad = np.concatenate([gu, gv], axis=1).reshape(-1)
        return float(np.vdot(res, res).real), np.concatenate([grad.real, grad.imag])

    p0 = np.concatenate([z0.real, z0.imag])
    sol = minimize(fun, p0, jac=True, method="L-BFGS-B", options={"maxiter": maxiter, "gtol": 1e-14, "ftol": 1e-30})
    us, vs = unpack(sol.x)
    out = []
    for u, v in zip(us, vs):
        nu, nv = np.vdot(u, u).real, np.vdot(v, v).real
        w = nu * nv
        if w > 1e-300:
            out.append((float(w), np.outer(u, u.conj()) / nu, np.outer(v, v.conj()) / nv))
    total = sum(t[0] for t in out)
    out = [(w / total, a, b) for w, a, b in out]
    sigma = sum(w * np.kron(a, b) for w, a, b in out)
    return out, float(np.linalg.norm(rho - sigma))


def _real_rows(m: np.ndarray) -> np.ndarray:
    f = m.reshape(-1)
    return np.concatenate([f.real, f.imag])


def separable_approximation(state: StateFunctional, dims=None, budget: int | None = None,
                            config: FrankWolfeConfig | None = None) -> tuple[float, ProductCertificate]:
    """Frobenius distance from ``state`` to the hull of pure product states.

    Fully corrective conditional gradient: each iteration adds the product
    state with the largest overlap with the residual, then re-solves the
    weights over all active atoms by simplex-constrained least squares. The
    returned distance is the best seen so far, hence nonincreasing in budget.
    """
    cfg = config or FrankWolfeConfig()
    if budget is not None:
        cfg = dataclasses.replace(cfg, budget=budget)
    dims = _dims_of(state, dims)
    dA, dB = dims
    rho = state.density
    rng = np.random.default_rng(cfg.seed)
    target = _real_rows(rho)
    penalty = 10.0 * math.sqrt(dA * dB)

    atoms: list[tuple[np.ndarray, np.ndarray]] = []
    columns: list[np.ndarray] = []
    weights = np.zeros(0)
    sigma = np.zeros_like(rho)
    best_dist, best_terms = np.inf, None
    for it in range(max(1, cfg.budget)):
        _, a, b = _best_product_direction(rho - sigma, dims, rng, cfg)
        pa, pb = np.outer(a, a.conj()), np.outer(b, b.conj())
        atoms.append((pa, pb))
        columns.append(_real_rows(np.kron(pa, pb)))
        mat = np.vstack([np.column_stack(columns), penalty * np.ones((1, len(columns)))])
        rhs = np.concatenate([target, [penalty]])
        weights, _ = nnls(mat, rhs, maxiter=50 * len(columns) + 100)
        if weights.sum() <= 0:
            continue
        weights = weights / weights.sum()
        keep = weights > 1e-14
        atoms = [t for t, k in zip(atoms, keep) if k]
        columns = [c for c, k in zip(columns, keep) if k]
        weights = weights[keep]
        sigma = sum(w * np.kron(pa, pb) for w, (pa, pb) in zip(weights, atoms))
        dist = float(np.linalg.norm(rho - sigma))
        if dist < best_dist:
            best_dist = dist
            best_terms = [(float(w), pa, pb) for w, (pa, pb) in zip(weights, atoms)]
        if best_dist > 0.01 * cfg.tol and it + 1 in cfg.refine_at:
            terms, rdist = _refine_terms(rho, best_terms, dims)
            if rdist < best_dist:
                best_dist, best_terms = rdist, terms
                # continue the greedy phase from the refined atoms
                atoms = [(pa, pb) for _, pa, pb in terms]
                columns = [_real_rows(np.kron(pa, pb)) for pa, pb in atoms]
                weights = np.array([w for w, _, _ in terms])
                sigma = sum(w * np.kron(pa, pb) for w, pa, pb in terms)
        if best_dist <= 0.01 * cfg.tol:
            break
    return best_dist, certificate_from_terms(best_terms)


def ppt_verdict(state: StateFunctional, dims=None, config: FrankWolfeConfig | None = None) -> SeparabilityVerdict:
    """Negative partial transpose proves entanglement; otherwise try to certify separability."""
    dims = _dims_of(state, dims)
    wit = ppt_min_eigen(state.density, dims)
    if wit.value < -WITNESS_TOL:
        return SeparabilityVerdict("entangled", witness=wit, method="ppt")
    dist, cert = separable_approximation(state, dims, config=config)
    if dist <= SEPARABLE_TOL:
        return SeparabilityVerdict("separable", certificate=cert, distance=dist, method="ppt+frank-wolfe")
    note = "PPT is necessary and sufficient here" if dims in PPT_EXACT_DIMS else "PPT state outside the exact domain"
    return SeparabilityVerdict("inconclusive", distance=dist, method="ppt+frank-wolfe", note=note)


def _abelian_certificate(state: StateFunctional, abelian: OperatorAlgebra, dims, side: str) -> ProductCertificate:
    """Point masses on the abelian side's joint spectrum, conditional states on the other."""
    dA, dB = dims
    d = state.density
    terms = []
    for q in joint_spectral_projections(abelian):
        p = float(np.trace(q @ d).real)
        if p <= NULL_THRESHOLD:
            continue
        cond = q @ d @ q / p
        if side == "A":
            qa = partial_trace(q, dims, "A") / dB
            qa = qa / np.trace(qa).real
            terms.append((p, qa, partial_trace(cond, dims, "B")))
        else:
            qb = partial_trace(q, dims, "B") / dA
            qb = qb / np.trace(qb).real
            terms.append((p, partial_trace(cond, dims, "A"), qb))
    return certificate_from_terms(terms)


def decide_entanglement(state: StateFunctional, RA: OperatorAlgebra, RB: OperatorAlgebra,
                        dims=None, config: FrankWolfeConfig | None = None) -> SeparabilityVerdict:
    """Is ``state`` entangled across the commuting pair ``(RA, RB)``?

    Both algebras must sit inside the tensor factors ``B(H_A) (x) I`` and
    ``I (x) B(H_B)`` fixed by ``dims``.
    """
    if not algebras_commute(RA, RB):
        raise ValueError("algebras do not commute")
    dims = _dims_of(state, dims)
    fa, fb = factor_algebra(dims, "A"), factor_algebra(dims, "B")
    if not (fa.contains_algebra(RA) and fb.contains_algebra(RB)):
        return SeparabilityVerdict("inconclusive", method="unsupported",
                                   note="algebras are not subalgebras of the tensor factors")
    if RA.is_abelian or RB.is_abelian:
        side = "A" if RA.is_abelian else "B"
        cert = _abelian_certificate(state, RA if side == "A" else RB, dims, side)
        joint = generate_algebra(list(RA.basis) + list(RB.basis), state.ambient_dim)
        return SeparabilityVerdict("separable", certificate=cert,
                                   distance=cert.residual(state.density, joint), method="abelian")
    full = tensor_factor_side(RA, dims) == "A" and tensor_factor_side(RB, dims) == "B"
    if full:
        es = hermitian_eig(state.density)
        pure = len(es.eigenvalues) == 1 or es.eigenvalues[-2] <= 1e-12
        if pure:
            x = es.eigenvectors[:, -1]
            sd = schmidt_decompose(x, dims)
            if sd.rank > 1:
                return SeparabilityVerdict("entangled", witness=ppt_min_eigen(state.density, dims),
                                           method="schmidt", note=f"Schmidt rank {sd.rank}")
            a, b = sd.left[:, 0], sd.right[:, 0]
            cert = certificate_from_terms([(1.0, np.outer(a, a.conj()), np.outer(b, b.conj()))])
            return SeparabilityVerdict("separable", certificate=cert,
                                       distance=cert.residual(state.density), method="schmidt")
        return ppt_verdict(state, dims, config)
    # Proper nonabelian subalgebras: a product decomposition of the conditional
    # expectation onto the joint algebra restricts to one for the state.
    joint = generate_algebra(list(RA.basis) + list(RB.basis), state.ambient_dim)
    restricted = StateFunctional(joint.project(state.density), dims)
    dist, cert = separable_approximation(restricted, dims, config=config)
    if dist <= SEPARABLE_TOL:
        return SeparabilityVerdict("separable", certificate=cert, distance=cert.residual(state.density, joint),
                                   method="conditional-expectation+frank-wolfe")
    return SeparabilityVerdict("inconclusive", distance=dist, method="conditional-expectation+frank-wolfe")


# Disentanglers


def _check_rank_one_resolution(projections: Sequence, d: int, tol: float = 1e-9) -> list[np.ndarray]:
    ps = [as_matrix(p) for p in projections]
    for p in ps:
        if p.shape != (d, d):
            raise DimensionError(f"projection {p.shape} on factor of dim {d}")
        if np.linalg.norm(p @ p - p) > tol or np.linalg.norm(p - dagger(p)) > tol:
            raise ValueError("not an orthogonal projection")
        if abs(np.trace(p).real - 1) > tol:
            raise ValueError("projection is not rank one")
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if np.linalg.norm(ps[i] @ ps[j]) > tol:
                raise ValueError("projections are not mutually orthogonal")
    if np.linalg.norm(sum(ps) - np.eye(d)) > tol:
        raise ValueError("projections do not sum to the identity")
    return ps


def projective_disentangler(state: StateFunctional, projections: Sequence, dims=None
                            ) -> tuple[StateFunctional, SeparabilityVerdict]:
    """Nonselective measurement of a complete rank-one resolution on factor A.

    The output is ``sum_i p_i P_i (x) rho_B^i`` with ``rho_B^i`` the collapsed
    B state, which is its own product certificate.
    """
    dims = _dims_of(state, dims)
    ps = _check_rank_one_resolution(projections, dims[0])
    T = lift_local(ps, dims, "A", label="projective")
    d = state.density
    out = np.zeros_like(d)
    terms = []
    for p, k in zip(ps, T.kraus_ops):
        branch = k @ d @ k
        out += branch
        w = float(np.trace(branch).real)
        if w > NULL_THRESHOLD:
            terms.append((w, p, partial_trace(branch / w, dims, "B")))
    out = 0.5 * (out + dagger(out))
    cert = certificate_from_terms(terms)
    new_state = StateFunctional(out, dims, state.label)
    verdict = SeparabilityVerdict("separable", certificate=cert, distance=cert.residual(out),
                                  method="projective-disentangler")
    return new_state, verdict


class DegenerateSpectrumError(ValueError):
    pass


def nondegenerate_disentangler(state: StateFunctional, observable, dims=None, gap_tol: float = 1e-8
                               ) -> tuple[StateFunctional, SeparabilityVerdict]:
    dims = _dims_of(state, dims)
    obs = as_matrix(observable)
    if obs.shape != (dims[0], dims[0]):
        raise DimensionError(f"observable {obs.shape} on factor of dim {dims[0]}")
    es = hermitian_eig(obs)
    gaps = np.diff(es.eigenvalues)
    if gaps.size and gaps.min() <= gap_tol:
        raise DegenerateSpectrumError(
            f"spectrum {np.round(es.eigenvalues, 12).tolist()} has minimum gap {gaps.min():.3g} <= {gap_tol}"
        )
    projs = [np.outer(v, v.conj()) for v in es.eigenvectors.T]
    return projective_disentangler(state, projs, dims)


# Preparation channel


def local_preparation_channel(target, dims: tuple[int, int]) -> KrausOperation:
    """Nonselective operation local to ``B(H_A) (x) I`` with ``T(X (x) I) = Tr(rho X) I``.

    Kraus operators are ``sqrt(l_i) |psi_i><e_j| (x) I`` from the spectral
    decomposition of the target; every input is mapped to
    ``target (x) Tr_A(input)``.
    """
    rho = as_matrix(getattr(target, "density", target))
    dA, dB = int(dims[0]), int(dims[1])
    if rho.shape != (dA, dA):
        raise DimensionError(f"target {rho.shape} on factor of dim {dA}")
    check_density(rho)
    es = hermitian_eig(rho)
    lam = np.clip(es.eigenvalues, 0.0, None)
    keep = lam > 1e-15
    lam = lam[keep] / lam[keep].sum()
    psis = es.eigenvectors[:, keep]
    local = []
    for l, psi in zip(lam, psis.T):
        for j in range(dA):
            e = np.zeros(dA, dtype=complex)
            e[j] = 1.0
            local.append(math.sqrt(l) * np.outer(psi, e))
    return lift_local(local, (dA, dB), "A", label="local_preparation")


# Certificate transport under local operations


def local_factors(T: KrausOperation, dims: tuple[int, int], side: str = "A", tol: float = 1e-9) -> list[np.ndarray]:
    """Recover ``k`` from Kraus operators of the form ``k (x) I`` (or ``I (x) k``)."""
    dA, dB = dims
    out = []
    for K in T.kraus_ops:
        if side == "A":
            k = partial_trace(K, dims, "A") / dB
            rebuilt = np.kron(k, np.eye(dB))
        else:
            k = partial_trace(K, dims, "B") / dA
            rebuilt = np.kron(np.eye(dA), k)
        if np.linalg.norm(rebuilt - K) > tol * max(1.0, np.linalg.norm(K)):
            raise ValueError(f"Kraus operator is not local to factor {side}")
        out.append(k)
    return out


def transport_certificate(cert: ProductCertificate, T: KrausOperation, side: str = "A") -> ProductCertificate | None:
    """Push a product decomposition through an operation local to one factor.

    Each term ``(w, omega_A, omega_B)`` and Kraus factor ``k`` gives the term
    ``(w omega_A(k* k), k omega_A k* / omega_A(k* k), omega_B)`` (sides
    swapped for B); weights are renormalised by ``omega(T(I))``. Returns
    ``None`` for the null outcome.
    """
    ks = local_factors(T, cert.dims, side)
    terms = []
    for w, (a, b) in zip(cert.weights, cert.pairs):
        for k in ks:
            loc = a if side == "A" else b
            p = float(np.trace(loc @ dagger(k) @ k).real)
            if w * p <= 0 or p <= 1e-300:
                continue
            moved = k @ loc @ dagger(k) / p
            moved = 0.5 * (moved + dagger(moved))
            terms.append((w * p, moved, b) if side == "A" else (w * p, a, moved))
    total = sum(t[0] for t in terms)
    if total <= NULL_THRESHOLD:
        return None
    return certificate_from_terms(terms)
