import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from operon.lab import (
    EXPERIMENTS,
    ExperimentReport,
    PreconditionError,
    floor_singular_values,
    merge,
    run_abelian_classical,
    run_component_density,
    run_cyclic_approximation,
    run_experiment,
    run_generic_entanglement,
    run_invertible_cyclicity,
    run_no_creation,
    run_preparation_contrast,
    solve_local_intertwiner,
    trial_rng,
)
from operon.numerics import haar_vector, ket, singlet

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_intertwiner_examples():
    A, res = solve_local_intertwiner(singlet(), np.kron(ket(0, 2), ket(0, 2)), (2, 2))
    assert res <= 1e-10
    x = np.kron(ket(0, 2), ket(0, 2))
    _, res = solve_local_intertwiner(x, np.kron(ket(0, 2), ket(1, 2)), (2, 2))
    assert res > 0.5
    rng = np.random.default_rng(0)
    y = haar_vector(rng, 4)
    A, res = solve_local_intertwiner(y, y, (2, 2))
    assert res <= 1e-12
    np.testing.assert_allclose(A, np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        solve_local_intertwiner(np.zeros(4), y, (2, 2))


@given(seeds, st.sampled_from([(2, 2), (3, 2), (3, 3)]), st.sampled_from("AB"))
@settings(max_examples=30)
def test_intertwiner_exact_at_full_schmidt_rank(seed, dims, side):
    rng = np.random.default_rng(seed)
    if side == "B":
        dims = dims[::-1]
    n = dims[0] * dims[1]
    x, y = haar_vector(rng, n), haar_vector(rng, n)
    A, res = solve_local_intertwiner(x, y, dims, side)
    assert res <= 1e-9
    lifted = np.kron(A, np.eye(dims[1])) if side == "A" else np.kron(np.eye(dims[0]), A)
    assert np.linalg.norm(lifted @ x - y) <= 1e-9


def test_floor_singular_values():
    P = np.diag([1.0, 0.0])
    np.testing.assert_allclose(floor_singular_values(P, 1e-3), np.diag([1.0, 1e-3]))
    rng = np.random.default_rng(1)
    A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    if np.linalg.svd(A, compute_uv=False)[-1] > 1e-3:
        np.testing.assert_allclose(floor_singular_values(A, 1e-3), A, atol=1e-12)


def test_trial_rng_is_counter_based():
    a = trial_rng(7, "x", 3).standard_normal(4)
    b = trial_rng(7, "x", 3).standard_normal(4)
    c = trial_rng(7, "x", 4).standard_normal(4)
    d = trial_rng(7, "y", 3).standard_normal(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c) and not np.array_equal(a, d)


def test_merge_semantics():
    checks, residuals, counts = merge([{"ok": True, "r": 0.1, "n": 1}, {"ok": False, "r": 0.3, "n": 2}])
    assert checks == {"ok": False} and residuals == {"r": 0.3} and counts == {"n": 3}


@pytest.mark.parametrize("dims", [(2, 2), (3, 2)])
def test_cyclic_approximation(dims):
    rep = run_cyclic_approximation(1, dims, trials=30, threads=1)
    assert rep.status == "pass", rep
    assert rep.residuals["state_distance"] <= 1e-8
    assert rep.controls["product_vector_cannot_steer"]


def test_cyclic_approximation_refuses_small_acting_factor():
    with pytest.raises(PreconditionError, match="dim H_A"):
        run_cyclic_approximation(1, (2, 3), trials=5)
    rep = run_experiment("cyclic_approximation", 1, (2, 3), trials=5)
    assert rep.status == "skipped" and rep.passed


def test_component_density():
    rep = run_component_density(2, (2, 2), trials=50, threads=1)
    assert rep.status == "pass", rep
    assert rep.controls["product_vector_rejected"] and rep.controls["self_component"]
    with pytest.raises(PreconditionError):
        run_component_density(2, (2, 3), trials=5)


def test_invertible_cyclicity():
    rep = run_invertible_cyclicity(3, (2, 2), trials=30, threads=1)
    assert rep.status == "pass", rep
    assert rep.controls["singular_image_not_cyclic"] and rep.controls["floored_image_cyclic"]
    assert rep.checks["error_linear_in_eps"]


@pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
def test_no_creation(dims):
    rep = run_no_creation(4, dims, trials=60, threads=1)
    assert rep.status == "pass", rep
    assert rep.counts["violations"] == 0
    assert rep.residuals["control_nonlocal_ppt"] <= -0.4


@pytest.mark.parametrize("dims", [(2, 2), (3, 3)])
def test_generic_entanglement(dims):
    rep = run_generic_entanglement(5, dims, trials=100, threads=1)
    assert rep.status == "pass", rep
    assert rep.controls["product_states_not_cyclic"]


def test_abelian_classical():
    rep = run_abelian_classical(6, (2, 2), trials=5, threads=1)
    assert rep.status == "pass", rep
    assert rep.controls["full_factors_admit_entanglement"]


def test_preparation_contrast():
    rep = run_preparation_contrast(7, (2, 3), trials=20, threads=1)
    assert rep.status == "pass", rep
    assert rep.checks["atom_exists"]
    assert any("type III" in n for n in rep.notes)


def test_report_finalize_and_serialisation():
    rep = ExperimentReport("x", 1, (2, 2), 3, checks={"a": np.bool_(True)}, residuals={"r": np.float64(0.5)})
    rep.controls["c"] = False
    rep.finalize()
    assert rep.status == "fail" and not rep.passed
    d = rep.to_dict(stable=True)
    assert d["wall_clock_s"] is None and d["schema_version"] == 1
    assert type(d["checks"]["a"]) is bool


def test_thread_count_does_not_change_results():
    for name in ("no_creation", "component_density"):
        a = run_experiment(name, 11, (2, 2), trials=24, threads=1).to_dict(stable=True)
        b = run_experiment(name, 11, (2, 2), trials=24, threads=4).to_dict(stable=True)
        assert a == b


def test_registry_complete():
    assert set(EXPERIMENTS) == {
        "cyclic_approximation",
        "component_density",
        "invertible_cyclicity",
        "no_creation",
        "generic_entanglement",
        "abelian_classical",
        "preparation_contrast",
    }
