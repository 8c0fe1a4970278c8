"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also written through pytest's terminal reporter at the end.
"""

import math
import os
import time

import numpy as np
import pytest

from conftest import brute_partial_transpose_B, werner
from test_oracles import CNOT_PLUS_ZERO_PT_MIN, WERNER_PT_MIN
from operon.algebra import factor_algebra, is_cyclic_vector
from operon.cli import main
from operon.entanglement import (
    decide_entanglement,
    entanglement_entropy,
    local_preparation_channel,
    ppt_min_eigen,
    ppt_verdict,
    projective_disentangler,
    separable_approximation,
)
from operon.lab import (
    floor_singular_values,
    run_component_density,
    run_cyclic_approximation,
    run_generic_entanglement,
    run_no_creation,
)
from operon.numerics import (
    I2,
    P_MINUS,
    P_PLUS,
    haar_vector,
    ket,
    projector,
    random_density,
    random_hermitian,
    singlet,
    spin_observable,
    trace_norm,
)
from operon.operations import (
    KrausOperation,
    apply_heisenberg,
    is_local_to,
    random_local_operation,
    random_operation,
    update_state,
)
from operon.states import StateFunctional, vector_state

DIMS = (2, 2)
RA, RB = factor_algebra(DIMS, "A"), factor_algebra(DIMS, "B")
RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_01_singlet_entropy():
    rng = np.random.default_rng(101)
    e_singlet = entanglement_entropy(singlet(), DIMS)
    products = [np.kron(ket(0, 2), ket(1, 2))]
    products += [np.kron(haar_vector(rng, da), haar_vector(rng, db)) for da, db in [(2, 2), (2, 3), (3, 3)] * 5]
    worst = max(
        entanglement_entropy(p, (2, 2) if p.size == 4 else ((2, 3) if p.size == 6 else (3, 3))) for p in products
    )
    ok = abs(e_singlet - math.log(2)) <= 1e-12 and worst <= 1e-12
    record(1, ok, f"|E(singlet) - ln 2| = {abs(e_singlet - math.log(2)):.2e}, max E(product) = {worst:.2e}")


def test_criterion_02_projective_disentangler():
    out, verdict = projective_disentangler(vector_state(singlet(), DIMS), [P_PLUS, P_MINUS])
    e01, e10 = np.kron(ket(0, 2), ket(1, 2)), np.kron(ket(1, 2), ket(0, 2))
    expected = 0.5 * projector(e01) + 0.5 * projector(e10)
    err = trace_norm(out.density - expected)
    ok = err <= 1e-12 and verdict.separable and len(verdict.certificate) == 2 and verdict.distance <= 1e-12
    record(2, ok, f"trace-norm error {err:.2e}, certificate terms {len(verdict.certificate)}")


def test_criterion_03_sigma_a_mixing():
    rng = np.random.default_rng(103)
    directions = [np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])]
    directions += [v / np.linalg.norm(v) for v in rng.standard_normal((4, 3))]
    worst_err, worst_dist, all_sep = 0.0, 0.0, True
    for a in directions:
        sa = spin_observable(a)
        T = KrausOperation((np.kron(sa, I2) / math.sqrt(2), np.eye(4) / math.sqrt(2)))
        out = update_state(T, vector_state(singlet(), DIMS)).state
        _, vecs = np.linalg.eigh(sa)
        a_minus, a_plus = vecs[:, 0], vecs[:, 1]
        # the singlet is U (x) U invariant, so B's partner basis is again a+-
        expected = 0.5 * projector(np.kron(a_plus, a_minus)) + 0.5 * projector(np.kron(a_minus, a_plus))
        worst_err = max(worst_err, trace_norm(out.density - expected))
        v = decide_entanglement(out, RA, RB)
        all_sep &= v.separable
        worst_dist = max(worst_dist, v.certificate.residual(out.density) if v.separable else np.inf)
    ok = worst_err <= 1e-12 and all_sep and worst_dist <= 1e-7
    record(3, ok, f"{len(directions)} directions, max trace-norm error {worst_err:.2e}, "
                  f"max certificate residual {worst_dist:.2e}")


def _locality_sample(rng, i):
    kind = i % 6
    if kind == 0:
        return "local_A", random_local_operation(rng, DIMS, "A", selective=bool(rng.integers(2)))
    if kind == 1:
        return "local_B", random_local_operation(rng, DIMS, "B", selective=bool(rng.integers(2)))
    if kind == 2:
        return "generic", random_operation(rng, 4, selective=bool(rng.integers(2)))
    if kind == 3:
        # local Kraus list plus one small nonlocal term
        T = random_local_operation(rng, DIMS, "A")
        leak = 1e-3 * random_hermitian(rng, 4)
        return "leaky", KrausOperation(tuple(0.999 * k for k in T.kraus_ops) + (leak,))
    if kind == 4:
        # nonlocal unitary close to the identity
        w, v = np.linalg.eigh(random_hermitian(rng, 4))
        return "near_identity", KrausOperation(((v * np.exp(1e-2j * w)) @ v.conj().T,))
    return "identity_on_A", KrausOperation((np.eye(4),))


def test_criterion_04_locality_bidirectional():
    rng = np.random.default_rng(104)
    disagreements, counts = 0, {"local": 0, "nonlocal": 0}
    for i in range(240):
        _, T = _locality_sample(rng, i)
        member, diag = is_local_to(T, RA)
        flags = (member, diag.werner_residual <= 1e-9, diag.factorization_residual <= 1e-9)
        disagreements += len(set(flags)) != 1
        counts["local" if member else "nonlocal"] += 1
    cnot_member, cnot_diag = is_local_to(KrausOperation((np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),)), RA)
    cnot_fails = not cnot_member and cnot_diag.werner_residual > 1e-9 and cnot_diag.factorization_residual > 1e-9
    ok = disagreements == 0 and cnot_fails and min(counts.values()) >= 50
    record(4, ok, f"240 operations ({counts['local']} local, {counts['nonlocal']} nonlocal), "
                  f"{disagreements} disagreements, CNOT fails all three: {cnot_fails}")


def test_criterion_05_no_creation():
    start = time.perf_counter()
    reports = [run_no_creation(2024, dims, trials=500) for dims in [(2, 2), (2, 3)]]
    elapsed = time.perf_counter() - start
    violations = sum(r.counts["violations"] for r in reports)
    recon = max(r.residuals["certificate_residual"] for r in reports)
    neg = max(r.residuals["ppt_negativity"] for r in reports)
    control = reports[0].residuals["control_nonlocal_ppt"]
    ok = (
        violations == 0
        and all(r.passed for r in reports)
        and recon <= 1e-8
        and neg <= 1e-9
        and control <= -0.4
        and abs(control - CNOT_PLUS_ZERO_PT_MIN) <= 1e-12
        and elapsed <= 10.0
    )
    record(5, ok, f"1000 trials, {violations} violations, max reconstruction {recon:.2e}, "
                  f"CNOT|+0> PPT {control:.3f}, {elapsed:.2f}s")


def test_criterion_06_cyclicity():
    details, ok = [], True
    for d in (2, 3):
        gen = run_generic_entanglement(106, (d, d), trials=1000 if d == 2 else 500)
        cyc = run_cyclic_approximation(106, (d, d), trials=100)
        ok &= gen.passed and cyc.passed and all(gen.checks.values()) and all(cyc.checks.values())
        ok &= cyc.residuals["intertwiner_residual"] <= 1e-8 and cyc.residuals["state_distance"] <= 1e-8
        details.append(f"{d}x{d}: generic {gen.status}, max intertwiner residual {cyc.residuals['intertwiner_residual']:.1e}")
    record(6, ok, "; ".join(details))


def test_criterion_07_component_density():
    rep = run_component_density(107, DIMS, trials=200)
    ok = rep.passed and all(rep.checks.values()) and rep.residuals["remainder_negativity"] <= 1e-9
    ok &= rep.residuals["component_distance"] <= 1e-6
    record(7, ok, f"200 trials, {rep.status}, max remainder negativity {rep.residuals['remainder_negativity']:.1e}, "
                  f"max component distance {rep.residuals['component_distance']:.1e}")


def test_criterion_08_invertible_trap():
    x = singlet()
    A = P_PLUS
    At = floor_singular_values(A, 1e-3)
    err = float(np.linalg.norm(np.kron(At - A, I2) @ x))
    floored_cyclic = is_cyclic_vector(np.kron(At, I2) @ x, RA)
    singular_cyclic = is_cyclic_vector(np.kron(A, I2) @ x, RA)
    ok = err <= 1e-3 and floored_cyclic and not singular_cyclic
    record(8, ok, f"||(A~ - A)x|| = {err:.3e}, A~x cyclic {floored_cyclic}, Ax cyclic {singular_cyclic}")


def test_criterion_09_preparation_channel():
    rng = np.random.default_rng(109)
    dev = comp = heis = 0.0
    for i in range(200):
        dims = (2, 2) if i % 2 == 0 else (2, 3)
        dA, dB = dims
        target = random_density(rng, dA, int(rng.integers(1, dA + 1)))
        inp = StateFunctional(random_density(rng, dA * dB, int(rng.integers(1, dA * dB + 1))), dims)
        T = local_preparation_channel(target, dims)
        out = update_state(T, inp).state
        dev = max(dev, trace_norm(out.density - np.kron(target, inp.reduced("B"))))
        comp = max(comp, float(np.linalg.norm(T.effect - np.eye(dA * dB))))
        for j in range(dA):
            for k in range(dA):
                X = np.zeros((dA, dA), dtype=complex)
                X[j, k] = 1
                lhs = apply_heisenberg(T, np.kron(X, np.eye(dB)))
                heis = max(heis, float(np.linalg.norm(lhs - np.trace(target @ X) * np.eye(dA * dB))))
    ok = dev <= 1e-9 and comp <= 1e-12 and heis <= 1e-10
    record(9, ok, f"200 pairs, max output deviation {dev:.1e}, completeness {comp:.1e}, Heisenberg {heis:.1e}")


def test_criterion_10_werner_family():
    start = time.perf_counter()
    rows, ok = [], True
    for p in (0.0, 0.2, 0.3, 0.4, 0.7, 1.0):
        rho = StateFunctional(werner(p), DIMS)
        oracle = float(np.linalg.eigvalsh(brute_partial_transpose_B(werner(p), 2, 2))[0])
        ok &= abs(oracle - WERNER_PT_MIN(p)) <= 1e-12
        ok &= abs(ppt_min_eigen(rho.density, DIMS).value - oracle) <= 1e-12
        v = ppt_verdict(rho)
        if p >= 0.4:
            ok &= v.entangled and v.witness.value < -1e-9
            rows.append(f"p={p}: entangled ({v.witness.value:+.3f})")
        else:
            dist, cert = separable_approximation(rho)
            ok &= not v.entangled and v.separable and dist <= 1e-7 and cert.residual(rho.density) <= 1e-7
            rows.append(f"p={p}: separable (d={dist:.0e})")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 30.0
    record(10, ok, ", ".join(rows) + f"; {elapsed:.2f}s")


def test_criterion_11_determinism(tmp_path):
    n_threads = max(2, os.cpu_count() or 1, 4)
    blobs = []
    for i, threads in enumerate((1, 1, n_threads)):
        out = tmp_path / f"run{i}.json"
        code = main(["run", "--suite", "all", "--dims", "2x2", "--seed", "42", "--out", str(out),
                     "--stable-output", "--threads", str(threads)])
        assert code == 0
        blobs.append(out.read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2]
    record(11, ok, f"3 runs (threads 1, 1, {n_threads}), byte-identical: {ok}, {len(blobs[0])} bytes")


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is None or not RESULTS:
        return
    reporter.write_sep("=", "acceptance criteria")
    for n in sorted(RESULTS):
        reporter.write_line(RESULTS[n])
