"""Multigrid in energy: a right preconditioner built from energy-grid V-cycles.

Each energy set coarsens only its own groups by merging adjacent pairs, so
the sets never exchange data inside the preconditioner. The smoother is
weighted Richardson on the unshifted within-set operator ``I - TMS``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .operators import apply_scatter, apply_TM
from .quadrature import build_quadrature
from .sweep import default_quadrature
from .xsmodel import CrossSectionSet

COARSEST_ORDER = {1: 2, 2: 2}


@dataclass(frozen=True)
class MgeParams:
    weight: float = 1.2
    relaxations: int = 2
    v_cycles: int = 1
    grid_depth: int | str = "auto"
    coarse_quadrature_order: int | str | None = None

    def __post_init__(self):
        if not self.weight > 0:
            raise ConfigurationError("Richardson weight must be positive")
        if self.relaxations < 1 or self.v_cycles < 1:
            raise ConfigurationError("relaxations and v_cycles must be >= 1")
        if self.grid_depth != "auto" and (not isinstance(self.grid_depth, int) or self.grid_depth < 1):
            raise ConfigurationError(f"grid_depth must be 'auto' or a positive integer, got {self.grid_depth!r}")

    @property
    def label(self) -> str:
        return f"w{self.weight:g}r{self.relaxations}v{self.v_cycles}"


def halving_chain(groups: int) -> list[int]:
    """Group counts per level: halve (rounding up) until one group is left."""
    chain = [groups]
    while chain[-1] > 1:
        chain.append(math.ceil(chain[-1] / 2))
    return chain


def pair_mapping(groups: int) -> np.ndarray:
    """Fine group -> coarse group, merging adjacent pairs."""
    return np.arange(groups) // 2


def collapse_xs(material: CrossSectionSet, mapping) -> CrossSectionSet:
    """Flat-flux collapse onto the coarse groups given by ``mapping``."""
    mapping = np.asarray(mapping)
    Gc = int(mapping.max()) + 1
    members = [np.flatnonzero(mapping == h) for h in range(Gc)]
    sigma_t = np.array([material.sigma_t[m].mean() for m in members])
    nu_sigma_f = np.array([material.nu_sigma_f[m].mean() for m in members])
    chi = np.array([material.chi[m].sum() for m in members])
    scat = np.zeros((Gc, Gc))
    for h, rows in enumerate(members):
        for hp, cols in enumerate(members):
            scat[h, hp] = material.scat[np.ix_(rows, cols)].sum() / cols.size
    return CrossSectionSet(sigma_t, scat, nu_sigma_f, chi, name=material.name)


def restrict(residual_fine, mapping) -> np.ndarray:
    """Sum member groups per cell. Input is (G_fine, n) or flat group-major."""
    mapping = np.asarray(mapping)
    fine = np.asarray(residual_fine, dtype=float)
    flat = fine.ndim == 1
    fine = fine.reshape(mapping.size, -1)
    Gc = int(mapping.max()) + 1
    coarse = np.zeros((Gc, fine.shape[1]))
    for g, h in enumerate(mapping):
        coarse[h] += fine[g]
    return coarse.reshape(-1) if flat else coarse


def prolong(correction_coarse, mapping) -> np.ndarray:
    """Each fine group takes its coarse parent's value."""
    mapping = np.asarray(mapping)
    coarse = np.asarray(correction_coarse, dtype=float)
    flat = coarse.ndim == 1
    Gc = int(mapping.max()) + 1
    fine = coarse.reshape(Gc, -1)[mapping]
    return fine.reshape(-1) if flat else fine


def _subset(material: CrossSectionSet, lo: int, hi: int) -> CrossSectionSet:
    """Groups [lo, hi) of a material with fission dropped."""
    return CrossSectionSet.nonfissile(material.sigma_t[lo:hi], material.scat[lo:hi, lo:hi], name=material.name)


@dataclass
class Level:
    group_count: int
    mapping: np.ndarray | None  # from the next finer level; None on the finest
    model: object
    quadrature: object

    @property
    def materials(self):
        return self.model.materials


@dataclass
class GridHierarchy:
    group_range: tuple[int, int]
    levels: list

    @property
    def depth(self) -> int:
        return len(self.levels)


def grid_depth(layout, params: MgeParams) -> int:
    """Levels every set uses: the chain length of the smallest set, or the
    requested depth clamped to it."""
    natural = len(halving_chain(min(layout.sizes)))
    if params.grid_depth == "auto":
        return natural
    if params.grid_depth > natural:
        warnings.warn(f"grid depth {params.grid_depth} exceeds the {natural} levels available; clamped",
                      stacklevel=3)
        return natural
    return params.grid_depth


def _level_quadrature(model, quadrature, params: MgeParams):
    order = params.coarse_quadrature_order
    if order is None or order == "same":
        return quadrature if quadrature is not None else default_quadrature(model)
    if not model.all_vacuum:
        raise ConfigurationError("a reduced preconditioner quadrature requires vacuum boundaries on every face")
    if order == "coarse":
        order = COARSEST_ORDER[model.dimension]
    return build_quadrature(model.dimension, int(order))


def build_hierarchy(model, layout, params: MgeParams, quadrature=None) -> list[GridHierarchy]:
    """One hierarchy per energy set of ``layout``, all with the same depth."""
    depth = grid_depth(layout, params)
    quad = _level_quadrature(model, quadrature, params)
    out = []
    for lo, hi in layout.ranges:
        mats = [_subset(m, lo, hi) for m in model.materials]
        level_model = model.with_materials(mats)
        levels = [Level(hi - lo, None, level_model, quad)]
        for _ in range(depth - 1):
            mapping = pair_mapping(levels[-1].group_count)
            mats = [collapse_xs(m, mapping) for m in levels[-1].materials]
            levels.append(Level(len(mats[0].sigma_t), mapping, level_model.with_materials(mats), quad))
        out.append(GridHierarchy((lo, hi), levels))
    return out


def _tms(level: Level, x):
    return apply_TM(level.model, level.quadrature, apply_scatter(level.model, x))


def relax(level_model, level_quadrature, phi, b, params: MgeParams, count: int, counter=None):
    """``count`` weighted Richardson steps on (I - TMS) phi = b."""
    if count < 1:
        raise ConfigurationError("relaxation count must be >= 1")
    w = params.weight
    phi = np.asarray(phi, dtype=float)
    b = np.asarray(b, dtype=float)
    for _ in range(count):
        tms = apply_TM(level_model, level_quadrature, apply_scatter(level_model, phi))
        phi = phi + w * (tms - phi) + w * b
        if counter is not None:
            counter[0] += 1
    return phi


class Preconditioner:
    """Callable applying ``v`` V-cycles set by set to a block vector."""

    def __init__(self, hierarchies, params: MgeParams, n_cells: int):
        self.hierarchies = hierarchies
        self.params = params
        self.n = n_cells
        self.lo = hierarchies[0].group_range[0]
        self.relaxations = 0
        self.applications = 0

    @property
    def depth(self) -> int:
        return self.hierarchies[0].depth

    def relaxations_per_application(self) -> int:
        p = self.params
        return len(self.hierarchies) * p.v_cycles * p.relaxations * (2 * self.depth - 1)

    def _cycle(self, levels, k, x, b, counter):
        level = levels[k]
        r = self.params.relaxations
        x = relax(level.model, level.quadrature, x, b, self.params, r, counter)
        if k == len(levels) - 1:
            return x
        residual = b - (x - _tms(level, x))
        coarse = levels[k + 1]
        rc = restrict(residual, coarse.mapping)
        e = self._cycle(levels, k + 1, np.zeros_like(rc), rc, counter)
        x = x + prolong(e, coarse.mapping)
        return relax(level.model, level.quadrature, x, b, self.params, r, counter)

    def apply_set(self, k, y_block):
        levels = self.hierarchies[k].levels
        counter = [0]
        x = np.zeros_like(y_block)
        for _ in range(self.params.v_cycles):
            x = self._cycle(levels, 0, x, y_block, counter)
        return x, counter[0]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        self.applications += 1
        for k, h in enumerate(self.hierarchies):
            a, b = h.group_range
            sl = slice((a - self.lo) * self.n, (b - self.lo) * self.n)
            out[sl], count = self.apply_set(k, y[sl])
            self.relaxations += count
        return out


def build_preconditioner(model, quadrature, layout, params: MgeParams) -> Preconditioner:
    return Preconditioner(build_hierarchy(model, layout, params, quadrature), params, model.n_cells)


def apply_preconditioner(y_in, hierarchy, params: MgeParams):
    """Apply the V-cycles described by ``hierarchy`` (list of per-set hierarchies)."""
    hierarchies = hierarchy if isinstance(hierarchy, list) else [hierarchy]
    n = hierarchies[0].levels[0].model.n_cells
    return Preconditioner(hierarchies, params, n)(y_in)
