"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import aligned_distance, problem
from snkeig.eigen import EigenConfig, dominance_ratio, solve_eigen
from snkeig.errors import ConfigurationError
from snkeig.krylov import KrylovConfig, gmres
from snkeig.mge import MgeParams, build_hierarchy, build_preconditioner
from snkeig.multigroup import EnergySetLayout, MultigroupConfig, solve_multigroup, transported_source
from snkeig.operators import apply_A, apply_B, apply_fission, apply_scatter, apply_TM
from snkeig.oracle import oracle_eigenpair, probe_operator
from snkeig.problems import BUILTIN, get_problem
from snkeig.sweep import default_quadrature, sweep_group
from snkeig.xsmodel import CrossSectionSet, ProblemModel

SOLVERS = ("power", "rqi", "arnoldi")


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def test_criterion_1_analytic_infinite_media(verdict):
    worst, slowest, lines = 0.0, 0.0, []
    for name, exact in (("inf1g", 1.2), ("inf2g", 10.0 / 9.0)):
        model, quad = problem(name)
        for s in SOLVERS:
            t = time.perf_counter()
            rep = solve_eigen(model, quad, EigenConfig(solver=s))
            dt = time.perf_counter() - t
            err = abs(rep.k - exact)
            worst, slowest = max(worst, err), max(slowest, dt)
            lines.append(rep.converged)
    ok = all(lines) and worst <= 1e-8 and slowest < 5.0
    verdict(1, ok, f"max |k - exact| = {worst:.2e} (tol 1e-8), slowest run {slowest:.2f} s (limit 5 s)")


def test_criterion_2_oracle_equivalence(verdict, rng):
    dk_worst = flux_worst = probe_worst = 0.0
    converged = True
    for name in ("mini2d", "up3g"):
        model, quad = problem(name)
        assert model.size <= 600
        k_ref, phi_ref, A, B = oracle_eigenpair(model, quad)
        for s in SOLVERS:
            rep = solve_eigen(model, quad, EigenConfig(solver=s))
            converged &= rep.converged
            dk_worst = max(dk_worst, abs(rep.k - k_ref))
            flux_worst = max(flux_worst, aligned_distance(rep.flux, phi_ref))
        d = model.size
        ops = {
            "A": lambda v: apply_A(model, quad, v),
            "B": lambda v: apply_B(model, quad, v),
            "TM": lambda v: apply_TM(model, quad, v),
            "S": lambda v: apply_scatter(model, v),
            "F": lambda v: apply_fission(model, v),
            "A(rho=0.8)": lambda v: apply_A(model, quad, v, 0.8),
        }
        for fn in ops.values():
            M = A if fn is ops["A"] else B if fn is ops["B"] else probe_operator(fn, d)
            for _ in range(10):
                v = rng.standard_normal(d)
                ref = fn(v)
                probe_worst = max(probe_worst, np.linalg.norm(M @ v - ref) / np.linalg.norm(ref))
    ok = converged and dk_worst <= 1e-8 and flux_worst <= 1e-6 and probe_worst <= 1e-10
    verdict(2, ok, f"max |dk| = {dk_worst:.2e} (1e-8), max flux distance = {flux_worst:.2e} (1e-6), "
                   f"max probe mismatch = {probe_worst:.2e} (1e-10)")


def test_criterion_3_rqi_vs_power_on_high_dominance(verdict):
    model, quad = problem("dr95")
    pi = solve_eigen(model, quad, EigenConfig(solver="power", k_tolerance=1e-6))
    rqi = solve_eigen(model, quad, EigenConfig(solver="rqi", k_tolerance=1e-6, precondition=True))
    dr = dominance_ratio(pi.history)
    ratio = rqi.outer_iterations / pi.outer_iterations
    dk = abs(rqi.k - pi.k)
    ok = pi.converged and rqi.converged and dr >= 0.9 and ratio <= 0.2 and dk <= 1e-6
    verdict(3, ok, f"dominance ratio {dr:.3f} (>= 0.9); outers RQI {rqi.outer_iterations} vs PI "
                   f"{pi.outer_iterations}, ratio {ratio:.3f} (<= 0.2); |k_RQI - k_PI| = {dk:.2e} (1e-6)")


def test_criterion_4_preconditioner_effectiveness(verdict):
    model, quad = problem("up3g")
    plain = solve_eigen(model, quad, EigenConfig(solver="rqi"))
    pre = solve_eigen(model, quad, EigenConfig(solver="rqi", precondition=True,
                                              mge=MgeParams(weight=1.2, relaxations=2, v_cycles=1)))
    ratio = pre.krylov_iterations / plain.krylov_iterations
    dk = abs(pre.k - plain.k)
    ok = plain.converged and pre.converged and ratio <= 0.7 and dk <= 1e-7
    verdict(4, ok, f"GMRES iterations {pre.krylov_iterations} with MGE vs {plain.krylov_iterations} without, "
                   f"ratio {ratio:.3f} (<= 0.7); |dk| = {dk:.2e} (1e-7)")


def test_criterion_5_set_count_invariance(verdict):
    model, quad = problem("up4g")
    results = {}
    for sets in (1, 2, 4):
        mg = MultigroupConfig(energy_sets=sets)
        runs = []
        for s in ("power", "rqi"):
            rep = solve_eigen(model, quad, EigenConfig(solver=s, multigroup=mg))
            runs.append((rep.flux, rep.krylov_iterations, rep.k))
        b = transported_source(model, quad, apply_fission(model, np.ones(model.size)))
        x, stats = solve_multigroup(model, quad, b, mg)
        runs.append((x, stats.iterations, 0.0))
        results[sets] = runs
    base = results[1]
    bitwise = all(np.array_equal(a[0], b[0]) and a[2] == b[2] for sets in (2, 4) for a, b in zip(base, results[sets]))
    counts = all(a[1] == b[1] for sets in (2, 4) for a, b in zip(base, results[sets]))
    iters = {sets: [r[1] for r in runs] for sets, runs in results.items()}
    verdict(5, bitwise and counts, f"fluxes bitwise identical: {bitwise}; GMRES counts per sets {iters}")


def _fake_model(G):
    mat = CrossSectionSet(np.ones(G), np.zeros((G, G)), np.zeros(G), np.zeros(G))
    return ProblemModel(1, [1.0], [0], [mat], quadrature_order=2)


def test_criterion_6_grid_counts(verdict):
    p = MgeParams()
    one27 = [h.depth for h in build_hierarchy(_fake_model(27), EnergySetLayout(0, 27, 1), p)]
    ten27 = [h.depth for h in build_hierarchy(_fake_model(27), EnergySetLayout(0, 27, 10), p)]
    one56 = [h.depth for h in build_hierarchy(_fake_model(56), EnergySetLayout(0, 56, 1), p)]
    ok = one27 == [6] and ten27 == [2] * 10 and one56 == [7]
    verdict(6, ok, f"G=27/1 set -> {one27}; G=27/10 sets -> {ten27}; G=56/1 set -> {one56}")


def test_criterion_7_gauss_seidel_agreement(verdict):
    worst, names = 0.0, []
    for name in BUILTIN:
        model, quad = problem(name)
        b = transported_source(model, quad, apply_fission(model, np.ones(model.size)))
        gs, gs_stats = solve_multigroup(model, quad, b, MultigroupConfig(method="gauss_seidel", gs_tolerance=1e-10))
        kr, kr_stats = solve_multigroup(model, quad, b, MultigroupConfig(krylov=KrylovConfig(tolerance=1e-12)))
        assert gs_stats.converged and kr_stats.converged, name
        worst = max(worst, np.linalg.norm(gs - kr) / np.linalg.norm(kr))
        names.append(name)
    # RQI shifts sit at or beyond 1/k, where fission acts as strong upscatter
    model, quad = problem("up3g")
    k = oracle_eigenpair(model, quad)[0]
    b = apply_B(model, quad, np.ones(model.size))
    shifted_reports = []
    for rho in (0.999 / k, 1.001 / k, 2.0):
        _, st = solve_multigroup(model, quad, b, MultigroupConfig(method="gauss_seidel", gs_max_iterations=300),
                                 shift=rho)
        shifted_reports.append(not st.converged)
    ok = worst <= 1e-7 and all(shifted_reports)
    verdict(7, ok, f"max GS vs Krylov distance over {len(names)} problems = {worst:.2e} (1e-7); "
                   f"shifted GS reports non-convergence: {shifted_reports}")


# criterion 8: property suites (the full versions live in the per-module tests)

_slab = st.lists(st.floats(0.05, 3.0), min_size=1, max_size=6)


@settings(max_examples=40, deadline=None)
@given(widths=_slab, sigma=st.floats(0.0, 5.0), q=st.floats(0.0, 10.0), scheme=st.sampled_from(
    ["step_characteristic", "step", "diamond"]), seed=st.integers(0, 2**31))
def _balance_and_positivity(widths, sigma, q, scheme, seed):
    r = np.random.default_rng(seed)
    n = len(widths)
    mat = CrossSectionSet.nonfissile([sigma], [[0.0]])
    model = ProblemModel(1, widths, [0] * n, [mat], quadrature_order=4, scheme=scheme)
    quad = default_quadrature(model)
    src = q * r.random((quad.n_angles, n))
    out = sweep_group(model, quad, 0, src, record_edges=True)
    psi = out.psi[0]
    for a, mu in enumerate(quad.mu):
        e = out.edges["x"][0, a]
        flow = mu * (e[1:] - e[:-1])
        lhs = flow + sigma * np.asarray(widths) * psi[a]
        rhs = src[a] * np.asarray(widths)
        scale = max(np.max(np.abs(rhs)), np.max(np.abs(flow)), 1e-300)
        assert np.max(np.abs(lhs - rhs)) <= 1e-13 * scale
        if scheme != "diamond":
            assert np.all(psi[a] >= 0)


def _linearity(seed):
    r = np.random.default_rng(seed)
    model, quad = problem("up3g")
    x, y = r.standard_normal(model.size), r.standard_normal(model.size)
    a, b = r.standard_normal(2)
    for op in (lambda v: apply_A(model, quad, v), lambda v: apply_B(model, quad, v)):
        lhs = op(a * x + b * y)
        rhs = a * op(x) + b * op(y)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def _gmres_monotone(seed):
    r = np.random.default_rng(seed)
    n = 30
    M = np.eye(n) + 0.4 * r.standard_normal((n, n)) / np.sqrt(n)
    _, stats = gmres(lambda v: M @ v, r.standard_normal(n), config=KrylovConfig(restart=8, tolerance=1e-12))
    for cycle in stats.residual_history:
        assert all(b <= a * (1 + 1e-12) for a, b in zip(cycle, cycle[1:]))


def _preconditioner_properties(seed):
    r = np.random.default_rng(seed)
    model, quad = problem("up4g")
    layout = EnergySetLayout(0, 4, 2)
    pre = build_preconditioner(model, quad, layout, MgeParams())
    y = r.standard_normal(model.size)
    assert np.array_equal(pre(y), pre(y.copy()))
    n = model.n_cells
    y2 = y.copy()
    y2[2 * n:] = r.standard_normal(2 * n)  # change only the second set's input
    assert np.array_equal(pre(y)[:2 * n], pre(y2)[:2 * n])


def test_criterion_8_invariant_suites(verdict):
    start = time.perf_counter()
    failures = []
    for label, check in (("sweep balance and positivity", _balance_and_positivity),):
        try:
            check()
        except AssertionError as exc:
            failures.append(f"{label}: {exc}")
    for label, check in (("operator linearity", _linearity), ("GMRES monotonicity", _gmres_monotone),
                         ("preconditioner determinism and set-locality", _preconditioner_properties)):
        try:
            for seed in range(10):
                check(seed)
        except AssertionError as exc:
            failures.append(f"{label}: {exc}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60.0
    verdict(8, ok, f"{elapsed:.1f} s (< 60 s); failures: {failures or 'none'}")


def test_builtin_names_complete():
    for name in ("inf1g", "inf2g", "slab_vac", "up3g", "dr95", "mini2d"):
        assert get_problem(name).name == name


def test_gauss_seidel_config_rejects_sets():
    with pytest.raises(ConfigurationError):
        MultigroupConfig(method="gauss_seidel", energy_sets=2)
