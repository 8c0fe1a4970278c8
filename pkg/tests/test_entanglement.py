import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import werner
from test_oracles import SINGLET_HULL_DISTANCE, WERNER_PT_MIN
from operon.algebra import diagonal_algebra, factor_algebra, full_algebra, generate_algebra, lift_algebra
from operon.entanglement import (
    DegenerateSpectrumError,
    FrankWolfeConfig,
    SeparabilityVerdict,
    Witness,
    decide_entanglement,
    entanglement_entropy,
    local_preparation_channel,
    nondegenerate_disentangler,
    ppt_min_eigen,
    ppt_verdict,
    projective_disentangler,
    separable_approximation,
    transport_certificate,
)
from operon.lab import random_certificate
from operon.numerics import (
    I2,
    P_MINUS,
    P_PLUS,
    SIGMA_X,
    SIGMA_Z,
    haar_vector,
    ket,
    projector,
    random_density,
    random_unitary,
    singlet,
)
from operon.operations import apply_heisenberg, is_local_to, random_local_operation, update_state
from operon.states import StateFunctional, certificate_from_terms, is_product_state, vector_state

seeds = st.integers(min_value=0, max_value=2**32 - 1)
DIMS = (2, 2)
RA, RB = factor_algebra(DIMS, "A"), factor_algebra(DIMS, "B")
E01 = np.kron(ket(0, 2), ket(1, 2))
E10 = np.kron(ket(1, 2), ket(0, 2))


def test_entropy_examples():
    assert entanglement_entropy(singlet(), DIMS) == pytest.approx(math.log(2), abs=1e-12)
    assert entanglement_entropy(np.kron(ket(0, 2), ket(1, 3)), (2, 3)) == 0
    x = math.sqrt(0.9) * np.kron(ket(0, 2), ket(0, 2)) + math.sqrt(0.1) * np.kron(ket(1, 2), ket(1, 2))
    assert entanglement_entropy(x, DIMS) == pytest.approx(-0.9 * math.log(0.9) - 0.1 * math.log(0.1), abs=1e-12)
    with pytest.raises(ValueError):
        entanglement_entropy(np.zeros(4), DIMS)


@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 3)]))
def test_entropy_bounds_and_local_unitary_invariance(seed, dims):
    rng = np.random.default_rng(seed)
    x = haar_vector(rng, dims[0] * dims[1])
    e = entanglement_entropy(x, dims)
    assert -1e-15 <= e <= math.log(min(dims)) + 1e-12
    u = np.kron(random_unitary(rng, dims[0]), random_unitary(rng, dims[1]))
    assert entanglement_entropy(u @ x, dims) == pytest.approx(e, abs=1e-10)
    from operon.entanglement import von_neumann_entropy

    rho = vector_state(x, dims)
    assert von_neumann_entropy(rho.reduced("A")) == pytest.approx(e, abs=1e-10)
    assert von_neumann_entropy(rho.reduced("B")) == pytest.approx(e, abs=1e-10)


def test_verdict_soundness_enforced():
    with pytest.raises(ValueError):
        SeparabilityVerdict("separable")
    with pytest.raises(ValueError):
        SeparabilityVerdict("entangled", witness=Witness(0.0, np.zeros(4)))
    with pytest.raises(ValueError):
        SeparabilityVerdict("maybe")


def test_ppt_examples():
    v = ppt_verdict(vector_state(singlet(), DIMS))
    assert v.entangled and v.witness.value == pytest.approx(-0.5)
    v = ppt_verdict(StateFunctional(werner(0.5), DIMS))
    assert v.entangled and v.witness.value == pytest.approx(WERNER_PT_MIN(0.5))
    v = ppt_verdict(StateFunctional(werner(0.25), DIMS))
    assert not v.entangled and v.separable
    v = ppt_verdict(StateFunctional(np.eye(4) / 4, DIMS))
    assert v.separable and v.certificate.residual(np.eye(4) / 4) <= 1e-7


def test_ppt_witness_vector_is_certificate():
    rho = werner(0.8)
    wit = ppt_min_eigen(rho, DIMS)
    from operon.numerics import partial_transpose

    v = wit.vector
    assert np.vdot(v, partial_transpose(rho, DIMS) @ v).real == pytest.approx(wit.value, abs=1e-12)


def test_ppt_dimension_error():
    with pytest.raises(ValueError):
        ppt_verdict(StateFunctional(np.eye(4) / 4), (2, 3))


def test_separable_approximation_examples():
    dist, cert = separable_approximation(StateFunctional(np.eye(4) / 4, DIMS))
    assert dist <= 1e-7 and cert.residual(np.eye(4) / 4) <= 1e-7
    dist, _ = separable_approximation(vector_state(singlet(), DIMS), budget=60)
    assert dist >= 0.3
    assert dist >= SINGLET_HULL_DISTANCE - 1e-6
    eq2 = 0.5 * projector(E01) + 0.5 * projector(E10)
    dist, cert = separable_approximation(StateFunctional(eq2, DIMS))
    assert dist <= 1e-7 and len(cert) == 2


def test_separable_approximation_monotone_in_budget():
    rho = StateFunctional(werner(0.3), DIMS)
    dists = [separable_approximation(rho, budget=b, config=FrankWolfeConfig(tol=0.0))[0] for b in (1, 3, 10, 30)]
    assert all(b <= a + 1e-15 for a, b in zip(dists, dists[1:]))


@given(seeds, st.sampled_from([(2, 2), (2, 3)]))
@settings(max_examples=10)
def test_interior_separable_states_are_certified(seed, dims):
    rng = np.random.default_rng(seed)
    terms = [(rng.random() + 0.01, random_density(rng, dims[0]), random_density(rng, dims[1])) for _ in range(3)]
    state = StateFunctional(certificate_from_terms(terms).density(), dims)
    dist, found = separable_approximation(state)
    assert dist <= 1e-7
    assert found.factors_valid() and found.residual(state.density) <= 1e-7


def test_boundary_separable_state_is_never_called_entangled():
    # rank-deficient mixture of a pure product and a product with a rank-one A part:
    # separable, on the boundary of the separable set, and slow for conditional gradient
    rng = np.random.default_rng(3240455)
    state = StateFunctional(random_certificate(rng, (2, 3)).density(), (2, 3))
    v = ppt_verdict(state, config=FrankWolfeConfig(budget=60))
    assert not v.entangled
    assert v.distance <= 1e-4


def test_decide_examples(rng):
    rho = StateFunctional(random_density(rng, 4), DIMS)
    diag_A = lift_algebra(diagonal_algebra(2), DIMS, "A")
    v = decide_entanglement(rho, diag_A, RB)
    joint = generate_algebra(list(diag_A.basis) + list(RB.basis), 4)
    # the certificate represents the state on the algebra the pair generates
    assert v.separable and v.certificate.residual(rho.density, joint) <= 1e-9
    v = decide_entanglement(vector_state(singlet(), DIMS), RA, RB)
    assert v.entangled and v.method
    mixed = 0.5 * projector(singlet()) + 0.5 * projector(np.kron(SIGMA_Z, I2) @ singlet())
    v = decide_entanglement(StateFunctional(mixed, DIMS), RA, RB)
    assert v.separable and len(v.certificate) == 2 and v.certificate.residual(mixed) <= 1e-7


def test_decide_product_pure_state(rng):
    x = np.kron(haar_vector(rng, 2), haar_vector(rng, 3))
    v = decide_entanglement(vector_state(x, (2, 3)), factor_algebra((2, 3), "A"), factor_algebra((2, 3), "B"))
    assert v.separable and v.certificate.residual(projector(x)) <= 1e-9


def test_decide_rejects_noncommuting():
    with pytest.raises(ValueError):
        decide_entanglement(StateFunctional(np.eye(4) / 4, DIMS), full_algebra(4), RB)


def test_decide_unsupported_algebras_are_inconclusive():
    swap_even = generate_algebra([np.kron(SIGMA_X, SIGMA_X)], 4)
    other = generate_algebra([np.kron(SIGMA_Z, SIGMA_Z)], 4)
    v = decide_entanglement(vector_state(singlet(), DIMS), swap_even, other)
    assert v.verdict in ("inconclusive", "separable")
    assert not v.entangled


def test_projective_disentangler_examples():
    out, v = projective_disentangler(vector_state(singlet(), DIMS), [P_PLUS, P_MINUS])
    expected = 0.5 * projector(E01) + 0.5 * projector(E10)
    np.testing.assert_allclose(out.density, expected, atol=1e-15)
    assert v.separable and len(v.certificate) == 2
    prod = StateFunctional(np.kron(projector(ket(0, 2)), random_density(np.random.default_rng(0), 2)), DIMS)
    out, v = projective_disentangler(prod, [P_PLUS, P_MINUS])
    np.testing.assert_allclose(out.reduced("B"), prod.reduced("B"), atol=1e-14)
    assert v.separable
    out, v = projective_disentangler(StateFunctional(werner(0.9), DIMS), [P_PLUS, P_MINUS])
    assert v.separable and ppt_min_eigen(out.density, DIMS).value >= -1e-12


def test_projective_disentangler_rejects_bad_input():
    state = vector_state(singlet(), DIMS)
    with pytest.raises(ValueError):
        projective_disentangler(state, [np.eye(2)])
    with pytest.raises(ValueError):
        projective_disentangler(state, [P_PLUS, P_PLUS])
    with pytest.raises(ValueError):
        projective_disentangler(state, [P_PLUS, 0.5 * np.eye(2)])


@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 2)]))
@settings(max_examples=25)
def test_disentangler_universality(seed, dims):
    rng = np.random.default_rng(seed)
    n = dims[0] * dims[1]
    state = StateFunctional(random_density(rng, n, int(rng.integers(1, n + 1))), dims)
    u = random_unitary(rng, dims[0])
    out, v = projective_disentangler(state, [np.outer(c, c.conj()) for c in u.T])
    assert v.separable and v.certificate.residual(out.density) <= 1e-12
    assert len(v.certificate) <= dims[0]
    assert ppt_min_eigen(out.density, dims).value >= -1e-9


def test_nondegenerate_disentangler_examples(rng):
    _, v = nondegenerate_disentangler(vector_state(singlet(), DIMS), SIGMA_Z)
    assert v.separable
    for _ in range(20):
        state = StateFunctional(random_density(rng, 6), (2, 3))
        out, v = nondegenerate_disentangler(state, np.diag([1.0, 2.0]))
        assert v.separable and ppt_min_eigen(out.density, (2, 3)).value >= -1e-9
    out, _ = nondegenerate_disentangler(vector_state(np.kron(ket(0, 2), ket(0, 2)), DIMS), SIGMA_X)
    plus, minus = np.array([1, 1]) / math.sqrt(2), np.array([1, -1]) / math.sqrt(2)
    expected = 0.5 * np.kron(projector(plus), projector(ket(0, 2))) + 0.5 * np.kron(projector(minus), projector(ket(0, 2)))
    np.testing.assert_allclose(out.density, expected, atol=1e-14)


def test_nondegenerate_disentangler_reports_gap():
    with pytest.raises(DegenerateSpectrumError, match="gap"):
        nondegenerate_disentangler(vector_state(singlet(), DIMS), np.eye(2))


def test_preparation_examples():
    T = local_preparation_channel(projector(ket(0, 2)), DIMS)
    for x in (singlet(), np.kron(ket(1, 2), ket(1, 2))):
        out = update_state(T, vector_state(x, DIMS)).state
        np.testing.assert_allclose(out.reduced("A"), projector(ket(0, 2)), atol=1e-14)
    np.testing.assert_allclose(apply_heisenberg(T, np.kron(SIGMA_Z, I2)), np.eye(4), atol=1e-14)
    T = local_preparation_channel(np.eye(2) / 2, DIMS)
    out = update_state(T, vector_state(singlet(), DIMS)).state
    np.testing.assert_allclose(out.density, np.eye(4) / 4, atol=1e-14)
    assert is_product_state(out, RA, RB)


@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 2)]))
@settings(max_examples=25)
def test_preparation_properties(seed, dims):
    rng = np.random.default_rng(seed)
    dA, dB = dims
    target = random_density(rng, dA, int(rng.integers(1, dA + 1)))
    T = local_preparation_channel(target, dims)
    assert np.linalg.norm(T.effect - np.eye(dA * dB)) <= 1e-12
    assert is_local_to(T, factor_algebra(dims, "A"))[0]
    inp = StateFunctional(random_density(rng, dA * dB), dims)
    out = update_state(T, inp).state
    assert np.abs(np.linalg.eigvalsh(out.density - np.kron(target, inp.reduced("B")))).sum() <= 1e-9
    assert is_product_state(out, factor_algebra(dims, "A"), factor_algebra(dims, "B"))


def test_preparation_rejects_invalid_target():
    with pytest.raises(ValueError):
        local_preparation_channel(np.diag([1.5, -0.5]), DIMS)


@given(seeds, st.sampled_from([(2, 2), (2, 3)]), st.sampled_from("AB"), st.booleans())
@settings(max_examples=40)
def test_certificate_transport(seed, dims, side, selective):
    rng = np.random.default_rng(seed)
    cert = random_certificate(rng, dims)
    state = StateFunctional(cert.density(), dims)
    T = random_local_operation(rng, dims, side, int(rng.integers(1, 4)), selective)
    out = update_state(T, state)
    moved = transport_certificate(cert, T, side)
    if out.is_null:
        assert moved is None
        return
    assert moved.residual(out.state.density) <= 1e-8
    assert ppt_min_eigen(out.state.density, dims).value >= -1e-9


def test_transport_rejects_nonlocal_operation():
    from operon.numerics import CNOT
    from operon.operations import KrausOperation

    cert = random_certificate(np.random.default_rng(1), DIMS)
    with pytest.raises(ValueError):
        transport_certificate(cert, KrausOperation((CNOT,)), "A")
