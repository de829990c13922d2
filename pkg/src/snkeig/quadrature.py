"""Discrete-ordinates angular quadratures, normalized to unit total weight.

1D slabs use Gauss-Legendre; 2D uses level-symmetric sets (S2, S4, S8)
projected onto the x-y plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConfigurationError

LEVEL_SYMMETRIC_ORDERS = (2, 4, 8)


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Directions and weights.

    ``mu`` holds x cosines, ``eta`` the y cosines (``None`` in 1D).
    """

    mu: np.ndarray
    weights: np.ndarray
    eta: np.ndarray | None = None
    order: int = 0

    def __post_init__(self):
        for name in ("mu", "weights", "eta"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.array(value, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dimension(self) -> int:
        return 1 if self.eta is None else 2

    @property
    def n_angles(self) -> int:
        return self.mu.size

    @property
    def directions(self) -> np.ndarray:
        if self.eta is None:
            return self.mu[:, None]
        return np.column_stack([self.mu, self.eta])

    def reflect(self, axis: int) -> np.ndarray:
        """Index map a -> a' where a' is direction a mirrored across ``axis``."""
        dirs = self.directions
        mirrored = dirs.copy()
        mirrored[:, axis] *= -1
        index = np.empty(self.n_angles, dtype=np.int64)
        for a, d in enumerate(mirrored):
            match = np.flatnonzero(np.all(np.abs(dirs - d) < 1e-12, axis=1))
            if match.size != 1:
                raise ConfigurationError("quadrature is not symmetric under reflection")
            index[a] = match[0]
        return index


def gauss_legendre(n: int) -> Quadrature:
    mu, w = np.polynomial.legendre.leggauss(n)
    w = w / w.sum()
    return Quadrature(mu=mu, weights=w, order=n)


def _level_symmetric_octant(n: int):
    """Points (mu, eta, xi) and weights of one octant, weights summing to 1."""
    half = n // 2
    if n == 2:
        mu1_sq = 1.0 / 3.0
    elif n == 4:
        # smaller root of 6a^2 - 4a + 0.4 = 0 (fourth-moment condition)
        mu1_sq = (4.0 - np.sqrt(16.0 - 9.6)) / 12.0
    else:
        mu1_sq = 1.0 / 21.0
    delta = 0.0 if n == 2 else 2.0 * (1.0 - 3.0 * mu1_sq) / (n - 2)
    levels = np.sqrt(mu1_sq + delta * np.arange(half))
    points = [(i, j, k) for i, j, k in product(range(half), repeat=3) if i + j + k == half - 1]
    # weight classes are the sorted level triples
    classes = sorted({tuple(sorted(p)) for p in points})
    klass = np.array([classes.index(tuple(sorted(p))) for p in points])
    # moment conditions on one coordinate: sum w mu^(2m) = 1/(2m+1); m = 1 is
    # implied by m = 0 through symmetry
    n_cls = len(classes)
    moments = [0] + list(range(2, n_cls + 1))
    rows = []
    for m in moments:
        row = np.zeros(n_cls)
        for p, c in zip(points, klass):
            row[c] += levels[p[0]] ** (2 * m)
        rows.append(row)
    rhs = 1.0 / (2.0 * np.array(moments) + 1.0)
    class_w = np.linalg.solve(np.array(rows), rhs)
    coords = np.array([[levels[i], levels[j], levels[k]] for i, j, k in points])
    return coords, class_w[klass]


def level_symmetric_2d(n: int) -> Quadrature:
    if n not in LEVEL_SYMMETRIC_ORDERS:
        raise ConfigurationError(
            f"2D level-symmetric order S{n} is not available; supported orders: {LEVEL_SYMMETRIC_ORDERS}")
    coords, w = _level_symmetric_octant(n)
    mus, etas, ws = [], [], []
    for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
        mus.append(sx * coords[:, 0])
        etas.append(sy * coords[:, 1])
        ws.append(w)
    weights = np.concatenate(ws)
    return Quadrature(mu=np.concatenate(mus), eta=np.concatenate(etas),
                      weights=weights / weights.sum(), order=n)


def build_quadrature(dimension: int, order: int) -> Quadrature:
    if order < 2 or order % 2:
        raise ConfigurationError(
            f"quadrature order must be an even integer >= 2, got {order}; "
            f"2D supports {LEVEL_SYMMETRIC_ORDERS}, 1D any even order")
    if dimension == 1:
        return gauss_legendre(order)
    if dimension == 2:
        return level_symmetric_2d(order)
    raise ConfigurationError(f"dimension must be 1 or 2, got {dimension}")
