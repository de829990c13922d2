import numpy as np
import pytest

from conftest import problem
from snkeig.errors import ConfigurationError, InputError, NonFissileError
from snkeig.operators import (ShiftedOperatorSpec, apply_A, apply_B, apply_fission, apply_scatter, apply_TM,
                              dense_rayleigh_quotient, fission_density, rayleigh_quotient)
from snkeig.oracle import oracle_eigenpair, probe_operator
from snkeig.quadrature import build_quadrature
from snkeig.xsmodel import CrossSectionSet, ProblemModel


def single_cell(mat):
    model = ProblemModel(1, [1.0], [0], [mat], quadrature_order=2,
                         boundary={"left": "reflecting", "right": "reflecting"})
    return model, build_quadrature(1, 2)


def test_fission_probe_matches_outer_product():
    mat = CrossSectionSet([1.0, 1.0], np.zeros((2, 2)), [0.0, 0.6], [1.0, 0.0])
    model, _ = single_cell(mat)
    assert np.array_equal(probe_operator(lambda v: apply_fission(model, v), 2), [[0.0, 0.6], [0.0, 0.0]])


def test_scatter_orientation_is_into_from():
    mat = CrossSectionSet.nonfissile([1.0, 1.0], [[0.1, 0.0], [0.7, 0.2]])
    model, _ = single_cell(mat)
    assert np.allclose(apply_scatter(model, [1.0, 0.0]), [0.1, 0.7])
    assert np.allclose(probe_operator(lambda v: apply_scatter(model, v), 2), mat.scat)


def test_group_range_restrictions():
    model, _ = problem("up3g")
    phi = np.random.default_rng(1).random(model.size)
    n = model.n_cells
    full = apply_scatter(model, phi)
    parts = apply_scatter(model, phi, group_range=(0, 1)) + apply_scatter(model, phi, group_range=(1, 3))
    assert np.allclose(parts, full, rtol=1e-14)
    only = apply_scatter(model, phi, out_range=(1, 2))
    assert np.all(only[:n] == 0) and np.all(only[2 * n:] == 0)
    assert np.array_equal(only[n:2 * n], full[n:2 * n])
    with pytest.raises(InputError):
        apply_scatter(model, phi, group_range=(2, 5))


def test_shift_adds_rho_fission():
    model, quad = problem("up3g")
    phi = np.random.default_rng(2).random(model.size)
    lhs = apply_A(model, quad, phi, ShiftedOperatorSpec(0.4))
    rhs = apply_A(model, quad, phi) - 0.4 * apply_B(model, quad, phi)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-13 * np.linalg.norm(rhs))


@pytest.mark.parametrize("rho", [-0.1, float("nan"), float("inf")])
def test_invalid_shift(rho):
    with pytest.raises(ConfigurationError):
        ShiftedOperatorSpec(rho)


def test_infinite_medium_tm_is_inverse_sigma_t():
    mat = CrossSectionSet.nonfissile([2.0], [[0.0]])
    model, quad = single_cell(mat)
    assert apply_TM(model, quad, [3.0])[0] == pytest.approx(1.5, rel=1e-12)


def test_rayleigh_quotient_at_eigenvector():
    model, quad = problem("inf2g")
    k, phi, A, B = oracle_eigenpair(model, quad)
    assert rayleigh_quotient(model, quad, phi) == pytest.approx(1.0 / k, rel=1e-11)
    assert dense_rayleigh_quotient(A, B, phi) == pytest.approx(1.0 / k, rel=1e-11)


def test_rayleigh_quotient_without_fission():
    model, quad = problem("up3g")
    phi = np.zeros(model.size)
    phi[-model.n_cells:] = 0.0
    phi[model.n_cells * 2 + 19] = 1.0  # moderator cell only
    with pytest.raises(NonFissileError):
        rayleigh_quotient(model, quad, phi)


def test_fission_density_per_cell():
    model, _ = problem("inf2g")
    phi = np.concatenate([np.full(4, 2.0), np.full(4, 3.0)])
    assert np.allclose(fission_density(model, phi), 0.2 * 2 + 0.9 * 3)


@pytest.mark.parametrize("name", ["up3g", "mini2d"])
def test_linearity(name, rng):
    model, quad = problem(name)
    x, y = rng.standard_normal((2, model.size))
    a, b = 1.7, -0.3
    for op in (lambda v: apply_A(model, quad, v), lambda v: apply_B(model, quad, v),
               lambda v: apply_A(model, quad, v, 0.9)):
        ref = a * op(x) + b * op(y)
        assert np.linalg.norm(op(a * x + b * y) - ref) <= 1e-12 * np.linalg.norm(ref)


def test_wrong_length_is_rejected():
    model, quad = problem("inf1g")
    with pytest.raises(InputError):
        apply_A(model, quad, np.ones(3))
