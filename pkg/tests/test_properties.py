"""Randomized invariants over small generated models."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from snkeig.krylov import KrylovConfig
from snkeig.mge import MgeParams, build_preconditioner
from snkeig.multigroup import EnergySetLayout, MultigroupConfig, solve_mg_krylov
from snkeig.operators import apply_A, apply_B, apply_scatter
from snkeig.oracle import probe_operator
from snkeig.sweep import default_quadrature, sweep_group
from snkeig.xsmodel import CrossSectionSet, ProblemModel


@st.composite
def models(draw, max_groups=4, dims=(1, 2)):
    G = draw(st.integers(1, max_groups))
    dim = draw(st.sampled_from(dims))
    seed = draw(st.integers(0, 2**31))
    r = np.random.default_rng(seed)
    mats = []
    for m in range(draw(st.integers(1, 2))):
        sigma_t = 0.5 + 2 * r.random(G)
        scat = np.tril(r.random((G, G))) * 0.8 * sigma_t / G
        if G > 1 and r.random() < 0.5:
            scat[0, -1] = 0.05 * sigma_t[-1]  # upscatter
        chi = r.random(G)
        mats.append(CrossSectionSet(sigma_t, scat, 0.3 * r.random(G), chi / chi.sum()))
    nx = draw(st.integers(1, 4))
    ny = draw(st.integers(1, 3)) if dim == 2 else 1
    ids = r.integers(0, len(mats), nx * ny)
    faces = ("left", "right") if dim == 1 else ("left", "right", "bottom", "top")
    boundary = {f: draw(st.sampled_from(["vacuum", "reflecting"])) for f in faces}
    scheme = draw(st.sampled_from(["step", "diamond"] + (["step_characteristic"] if dim == 1 else [])))
    return ProblemModel(dim, 0.2 + r.random(nx), ids, mats, cell_widths_y=(0.2 + r.random(ny)) if dim == 2 else None,
                        quadrature_order=4, boundary=boundary, scheme=scheme)


@settings(max_examples=25, deadline=None)
@given(models(), st.integers(0, 2**31))
def test_operator_linearity(model, seed):
    quad = default_quadrature(model)
    r = np.random.default_rng(seed)
    x, y = r.standard_normal((2, model.size))
    a, b = r.standard_normal(2)
    for op in (lambda v: apply_A(model, quad, v), lambda v: apply_B(model, quad, v),
               lambda v: apply_A(model, quad, v, 0.7)):
        ref = a * op(x) + b * op(y)
        assert np.linalg.norm(op(a * x + b * y) - ref) <= 1e-12 * max(np.linalg.norm(ref), 1e-300)


@settings(max_examples=15, deadline=None)
@given(models(max_groups=3), st.integers(0, 2**31))
def test_dense_probe_matches_matrix_free(model, seed):
    quad = default_quadrature(model)
    A = probe_operator(lambda v: apply_A(model, quad, v), model.size)
    x = np.random.default_rng(seed).standard_normal(model.size)
    ref = apply_A(model, quad, x)
    assert np.linalg.norm(A @ x - ref) <= 1e-10 * np.linalg.norm(ref)


@settings(max_examples=25, deadline=None)
@given(models(dims=(1,)), st.integers(0, 2**31))
def test_step_schemes_keep_flux_positive(model, seed):
    quad = default_quadrature(model)
    src = np.random.default_rng(seed).random((quad.n_angles, model.n_cells))
    out = sweep_group(model, quad, 0, src)
    if model.scheme != "diamond":
        assert np.all(out.psi >= 0)


@settings(max_examples=25, deadline=None)
@given(models(), st.integers(0, 2**31))
def test_scatter_is_nonnegative_for_nonnegative_flux(model, seed):
    phi = np.random.default_rng(seed).random(model.size)
    assert np.all(apply_scatter(model, phi) >= 0)


@settings(max_examples=15, deadline=None)
@given(models(max_groups=4), st.integers(0, 2**31))
def test_energy_sets_are_an_execution_detail(model, seed):
    quad = default_quadrature(model)
    b = np.random.default_rng(seed).random(model.size)
    ref, st0 = solve_mg_krylov(model, quad, b, MultigroupConfig(krylov=KrylovConfig(tolerance=1e-10)))
    for sets in range(2, model.group_count + 1):
        x, st1 = solve_mg_krylov(model, quad, b, MultigroupConfig(energy_sets=sets,
                                                                  krylov=KrylovConfig(tolerance=1e-10)))
        assert np.array_equal(x, ref) and st1.iterations == st0.iterations


@settings(max_examples=15, deadline=None)
@given(models(max_groups=4), st.integers(0, 2**31), st.integers(1, 2), st.integers(1, 2))
def test_preconditioner_is_deterministic_and_set_local(model, seed, r, v):
    quad = default_quadrature(model)
    G, n = model.group_count, model.n_cells
    sets = min(2, G)
    layout = EnergySetLayout(0, G, sets)
    pre = build_preconditioner(model, quad, layout, MgeParams(relaxations=r, v_cycles=v))
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(model.size)
    out = pre(y)
    assert np.array_equal(out, pre(y.copy()))
    assert pre.relaxations == 2 * pre.relaxations_per_application()
    if sets == 2:
        a, b = layout.ranges[1]
        z = y.copy()
        z[a * n:b * n] = rng.standard_normal((b - a) * n)
        assert np.array_equal(pre(z)[:a * n], out[:a * n])
