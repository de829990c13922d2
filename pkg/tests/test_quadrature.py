import numpy as np
import pytest

from snkeig.errors import ConfigurationError
from snkeig.quadrature import build_quadrature, gauss_legendre, level_symmetric_2d


def legendre_roots_newton(n):
    """Independent roots of P_n by Newton's method on the three-term recurrence."""
    roots = []
    for i in range(1, n + 1):
        x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
        for _ in range(100):
            p0, p1 = 1.0, x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1)
            step = p1 / dp
            x -= step
            if abs(step) < 1e-16:
                break
        roots.append(x)
    return np.sort(roots)


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_gauss_legendre_nodes_match_newton_roots(n):
    q = gauss_legendre(n)
    assert np.allclose(np.sort(q.mu), legendre_roots_newton(n), atol=1e-14, rtol=0)


@pytest.mark.parametrize("n", [2, 4, 6, 8, 12, 16])
def test_gauss_legendre_moments(n):
    q = gauss_legendre(n)
    assert abs(q.weights.sum() - 1.0) <= 1e-14
    assert abs(q.weights @ q.mu) <= 1e-15
    assert abs(q.weights @ q.mu ** 2 - 1.0 / 3.0) <= 1e-14


def test_s2_is_plus_minus_inverse_root_three():
    q = gauss_legendre(2)
    assert np.allclose(np.sort(q.mu), [-1 / np.sqrt(3), 1 / np.sqrt(3)])
    assert np.allclose(q.weights, [0.5, 0.5])


@pytest.mark.parametrize("n,count", [(2, 4), (4, 12), (8, 40)])
def test_level_symmetric_counts_and_moments(n, count):
    q = level_symmetric_2d(n)
    assert q.n_angles == count
    assert abs(q.weights.sum() - 1.0) <= 1e-12
    for c in (q.mu, q.eta):
        assert abs(q.weights @ c) <= 1e-14
        assert abs(q.weights @ c ** 2 - 1.0 / 3.0) <= 1e-12
    xi2 = 1.0 - q.mu ** 2 - q.eta ** 2
    assert np.all(xi2 > 0)


def test_s8_weight_classes():
    # published S8 level-symmetric weights, normalized per octant to 1
    q = level_symmetric_2d(8)
    octant = (q.mu > 0) & (q.eta > 0)
    w = np.unique(np.round(q.weights[octant] * 4, 7))
    assert np.allclose(np.sort(w), np.sort([0.1209877, 0.0907407, 0.0925926]), atol=2e-7)


def test_reflection_maps_are_involutions():
    q = level_symmetric_2d(4)
    for axis in (0, 1):
        r = q.reflect(axis)
        assert np.array_equal(r[r], np.arange(q.n_angles))
        assert np.allclose(q.directions[r][:, axis], -q.directions[:, axis])
        assert np.allclose(q.weights[r], q.weights)


@pytest.mark.parametrize("dim,order", [(1, 3), (1, 0), (2, 6), (2, 16), (3, 4)])
def test_unsupported_orders(dim, order):
    with pytest.raises(ConfigurationError):
        build_quadrature(dim, order)
