"""Multigroup fixed-source solvers: Gauss-Seidel in energy and block GMRES.

Both solve ``(I - TM S~) phi = b`` where ``b`` is an already transported
right-hand side (``TM q`` for a fixed source, ``TMF phi / k`` inside power
iteration) and ``S~ = S + rho F``.

Energy sets split the Krylov-solved block of groups into contiguous ranges.
Each set computes the scattering contributions of the groups it owns, a
single ordered reduce-plus-scatter combines them, and each set then sweeps
its own groups. The reduction always adds contributions in ascending source
group order, so the result is bitwise independent of the set count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError
from .krylov import KrylovConfig, KrylovStats, gmres
from .operators import _rho, as_groups, transfer_coefficients
from .sweep import plan_for, scalar_flux
from .xsmodel import upscatter_start

log = logging.getLogger(__name__)

METHODS = ("gauss_seidel", "mg_krylov")
PARTITIONS = ("full", "upscatter")


@dataclass(frozen=True)
class MultigroupConfig:
    method: str = "mg_krylov"
    partitioning: str = "full"
    gs_max_iterations: int = 1000
    gs_tolerance: float = 1e-8
    krylov: KrylovConfig = field(default_factory=KrylovConfig)
    energy_sets: int = 1
    threads: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown multigroup method {self.method!r}; choose from {METHODS}")
        if self.partitioning not in PARTITIONS:
            raise ConfigurationError(f"unknown partitioning {self.partitioning!r}; choose from {PARTITIONS}")
        if self.energy_sets < 1:
            raise ConfigurationError("energy_sets must be >= 1")
        if self.method == "gauss_seidel" and self.energy_sets != 1:
            raise ConfigurationError("Gauss-Seidel is serial in energy: energy_sets must be 1")
        if not self.gs_tolerance > 0:
            raise ConfigurationError("gs_tolerance must be positive")


@dataclass(frozen=True)
class EnergySetLayout:
    """Contiguous, balanced split of groups [lo, hi) into ``set_count`` sets."""

    lo: int
    hi: int
    set_count: int

    def __post_init__(self):
        size = self.hi - self.lo
        if self.set_count < 1 or size < 1:
            raise ConfigurationError("a layout needs at least one set and one group")
        if self.set_count > size:
            raise ConfigurationError(f"{self.set_count} energy sets exceed the {size} groups in the block")

    @property
    def ranges(self) -> list[tuple[int, int]]:
        size = self.hi - self.lo
        base, extra = divmod(size, self.set_count)
        out, start = [], self.lo
        for k in range(self.set_count):
            stop = start + base + (1 if k < extra else 0)
            out.append((start, stop))
            start = stop
        return out

    @property
    def sizes(self) -> list[int]:
        return [b - a for a, b in self.ranges]

    @property
    def group_count(self) -> int:
        return self.hi - self.lo


def reduce_plus_scatter(layout: EnergySetLayout, partials):
    """Sum per-set contributions in fixed order; hand each set its own rows.

    ``partials[k]`` is set k's additive contribution to the whole block, either
    one array of shape (G_block, ...) or a stack (n_terms, G_block, ...) whose
    terms are added one at a time. A flat array is read as (G_block, -1).
    Returns the list of owned blocks, ``out[k]`` with shape (size_k, ...).
    """
    if len(partials) != layout.set_count:
        raise InputError(f"expected {layout.set_count} partial contributions, got {len(partials)}")
    Gb = layout.group_count
    acc = None
    for part in partials:
        arr = np.asarray(part, dtype=float)
        if arr.ndim == 1:
            if arr.size % Gb:
                raise InputError("partial vector length is not a multiple of the block group count")
            arr = arr.reshape(Gb, -1)[None]
        elif arr.shape[0] == Gb and arr.ndim == 2:
            arr = arr[None]
        if arr.shape[1] != Gb:
            raise InputError(f"partial has {arr.shape[1]} groups, block has {Gb}")
        if acc is not None and arr.shape[1:] != acc.shape:
            raise InputError("partial contributions have mismatched shapes")
        for term in arr:
            acc = term.copy() if acc is None else acc + term
    return [acc[a - layout.lo:b - layout.lo] for a, b in layout.ranges]


class BlockOperator:
    """``x -> x - TM S~ x`` restricted to groups [lo, hi), decomposed by sets."""

    def __init__(self, model, quadrature, layout: EnergySetLayout, rho: float = 0.0, threads: bool = False):
        self.model = model
        self.quadrature = quadrature
        self.layout = layout
        self.rho = rho
        self.plan = plan_for(model, quadrature)
        self.coef = transfer_coefficients(model, rho)
        self.n = model.n_cells
        self.threads = threads and layout.set_count > 1
        self.applications = 0

    @property
    def size(self) -> int:
        return self.layout.group_count * self.n

    def _map_sets(self, fn):
        ks = range(self.layout.set_count)
        if self.threads:
            with ThreadPoolExecutor(max_workers=self.layout.set_count) as pool:
                return list(pool.map(fn, ks))
        return [fn(k) for k in ks]

    def set_contributions(self, x2d, k):
        """Set k's stacked column contributions to the block's S~ x."""
        lo, hi = self.layout.lo, self.layout.hi
        a, b = self.layout.ranges[k]
        return np.stack([self.coef[lo:hi, gp, :] * x2d[gp - lo] for gp in range(a, b)])

    def transport_owned(self, k, owned):
        a, b = self.layout.ranges[k]
        flux = self.plan.sweep(owned, np.arange(a, b), isotropic=True)
        return scalar_flux(self.plan, flux.psi)

    def tm_s(self, x):
        x2d = np.asarray(x, dtype=float).reshape(self.layout.group_count, self.n)
        partials = self._map_sets(lambda k: self.set_contributions(x2d, k))
        owned = reduce_plus_scatter(self.layout, partials)
        parts = self._map_sets(lambda k: self.transport_owned(k, owned[k]))
        return np.concatenate(parts, axis=0).reshape(-1)

    def __call__(self, x):
        self.applications += 1
        x = np.asarray(x, dtype=float)
        return x - self.tm_s(x)


def transported_source(model, quadrature, q=None):
    """``TM q`` for the model's fixed source (or the given one)."""
    from .operators import apply_TM
    q = model.fixed_source if q is None else q
    if q is None:
        raise InputError("model has no fixed source")
    return apply_TM(model, quadrature, np.asarray(q, dtype=float).reshape(-1))


def _coupled_from(coef) -> int:
    """First group receiving from any lower-energy group through ``coef``."""
    G = coef.shape[0]
    for g in range(G):
        if np.any(coef[g, g + 1:, :] > 0):
            return g
    return G


def _group_transport(plan, g, src):
    flux = plan.sweep(src[None], [g], isotropic=True)
    return scalar_flux(plan, flux.psi)[0]


class _WithinGroup:
    """Single-group solves of (I - TM K_gg) x = rhs by GMRES."""

    def __init__(self, model, quadrature, coef, config: KrylovConfig):
        self.plan = plan_for(model, quadrature)
        self.coef = coef
        self.config = config
        self.iterations = 0
        self.failures = 0

    def rhs(self, phi2d, g, b2d, exclude=None, columns=None):
        """b_g + TM_g(sum_{g' != g} K[g, g'] phi[g']) over the listed columns."""
        G = phi2d.shape[0]
        cols = range(G) if columns is None else columns
        acc = None
        for gp in cols:
            if gp == g:
                continue
            term = self.coef[g, gp, :] * phi2d[gp]
            acc = term if acc is None else acc + term
        if acc is None:
            return b2d[g].copy()
        return b2d[g] + _group_transport(self.plan, g, acc)

    def solve(self, g, rhs, x0):
        kgg = self.coef[g, g, :]

        def op(x):
            return x - _group_transport(self.plan, g, kgg * x)

        x, stats = gmres(op, rhs, x0, self.config)
        self.iterations += stats.iterations
        if not stats.converged:
            self.failures += 1
        return x


@dataclass
class GaussSeidelStats:
    iterations: int = 0  # within-group GMRES iterations
    converged: bool = False
    outer_passes: int = 0
    upscatter_iterations: int = 0
    final_change: float = math.nan
    message: str = ""


def solve_gauss_seidel(model, quadrature, b, config: MultigroupConfig | None = None, shift=None, x0=None):
    """Gauss-Seidel over groups, high to low energy.

    Groups above the first upscatter-coupled group are solved once; the
    remaining block is swept repeatedly until the relative change of its flux
    is at most ``gs_tolerance``. Returns ``(phi, GaussSeidelStats)``.
    """
    config = config or MultigroupConfig(method="gauss_seidel")
    if config.energy_sets != 1:
        raise ConfigurationError("Gauss-Seidel is serial in energy: energy_sets must be 1")
    G, n = model.group_count, model.n_cells
    b2d = as_groups(model, b)
    coef = transfer_coefficients(model, _rho(shift))
    inner = _WithinGroup(model, quadrature, coef,
                         KrylovConfig(restart=30, tolerance=0.1 * config.gs_tolerance,
                                      max_iterations=config.krylov.max_iterations))
    phi = np.zeros((G, n)) if x0 is None else as_groups(model, x0).copy()
    stats = GaussSeidelStats()
    up = _coupled_from(coef)
    for g in range(up):
        phi[g] = inner.solve(g, inner.rhs(phi, g, b2d), phi[g])
    stats.outer_passes = 1
    if up == G:
        stats.converged = True
        stats.final_change = 0.0
        stats.iterations = inner.iterations
        return phi.reshape(-1), stats
    growth = 0
    prev_change = math.inf
    first_norm = None
    for j in range(config.gs_max_iterations):
        old = phi[up:].copy()
        for g in range(up, G):
            phi[g] = inner.solve(g, inner.rhs(phi, g, b2d), phi[g])
        stats.upscatter_iterations = j + 1
        stats.outer_passes = 1 + (j + 1 if up > 0 else j)
        norm = float(np.linalg.norm(phi[up:]))
        change = float(np.linalg.norm(phi[up:] - old)) / norm if norm > 0 else 0.0
        stats.final_change = change
        if not np.isfinite(change):
            stats.message = "flux became non-finite"
            break
        if change <= config.gs_tolerance:
            stats.converged = True
            break
        first_norm = first_norm or norm
        growth = growth + 1 if change >= prev_change else 0
        prev_change = change
        if growth >= 25 or norm > 1e12 * max(first_norm, 1e-300):
            stats.message = "upscatter iteration is not contracting"
            break
    else:
        stats.message = f"no convergence in {config.gs_max_iterations} upscatter iterations"
    stats.iterations = inner.iterations
    if not stats.converged:
        log.info("Gauss-Seidel did not converge: %s (last change %.3e)", stats.message, stats.final_change)
    return phi.reshape(-1), stats


def krylov_block(model, shift=None, partitioning="full") -> tuple[int, int]:
    """Group range handled by the block Krylov solve."""
    G = model.group_count
    if partitioning == "full":
        return 0, G
    up = upscatter_start(model.materials)
    if up == G:
        # downscatter only: nothing to iterate, keep the last group as block
        up = G - 1
    if shift is not None and _rho(shift) > 0:
        fissile = set()
        for mat in model.materials:
            fissile.update(np.flatnonzero(mat.chi > 0).tolist())
            fissile.update(np.flatnonzero(mat.nu_sigma_f > 0).tolist())
        outside = sorted(g for g in fissile if g < up)
        if outside:
            raise ConfigurationError(
                f"upscatter partitioning with a shift: fission-coupled groups {outside} lie outside "
                f"the Krylov block [{up}, {G}); use full partitioning")
    return up, G


def solve_mg_krylov(model, quadrature, b, config: MultigroupConfig | None = None, shift=None,
                    precond=None, x0=None):
    """Block GMRES multigroup solve. Returns ``(phi, KrylovStats)``.

    ``precond`` is a callable acting on block vectors, or ``MgeParams`` to
    build the energy multigrid preconditioner for the block here.
    """
    config = config or MultigroupConfig()
    G, n = model.group_count, model.n_cells
    b2d = as_groups(model, b)
    rho = _rho(shift)
    lo, hi = krylov_block(model, shift, config.partitioning)
    layout = EnergySetLayout(lo, hi, config.energy_sets)
    op = BlockOperator(model, quadrature, layout, rho, threads=config.threads)
    phi = np.zeros((G, n)) if x0 is None else as_groups(model, x0).copy()
    inner_iterations = 0
    if lo > 0:
        inner = _WithinGroup(model, quadrature, op.coef, config.krylov)
        for g in range(lo):
            phi[g] = inner.solve(g, inner.rhs(phi, g, b2d, columns=range(lo)), phi[g])
        inner_iterations = inner.iterations
        # upscatter source from the solved groups into the block
        rhs = b2d[lo:hi].copy()
        src = None
        for gp in range(lo):
            term = op.coef[lo:hi, gp, :] * phi[gp]
            src = term if src is None else src + term
        plan = plan_for(model, quadrature)
        rhs += scalar_flux(plan, plan.sweep(src, np.arange(lo, hi), isotropic=True).psi)
    else:
        rhs = b2d
    if precond is not None and not callable(precond):
        from .mge import build_preconditioner
        precond = build_preconditioner(model, quadrature, layout, precond)
    x, stats = gmres(op, rhs.reshape(-1), phi[lo:hi].reshape(-1) if x0 is not None else None,
                     config.krylov, precond)
    phi[lo:hi] = x.reshape(hi - lo, n)
    stats.iterations += inner_iterations
    if not stats.converged:
        log.info("block GMRES did not converge (relative residual %.3e)", stats.final_relative_residual)
    return phi.reshape(-1), stats


def solve_multigroup(model, quadrature, b, config: MultigroupConfig | None = None, shift=None,
                     precond=None, x0=None):
    config = config or MultigroupConfig()
    if config.method == "gauss_seidel":
        if precond is not None:
            raise ConfigurationError("the energy multigrid preconditioner requires the mg_krylov method")
        return solve_gauss_seidel(model, quadrature, b, config, shift=shift, x0=x0)
    return solve_mg_krylov(model, quadrature, b, config, shift=shift, precond=precond, x0=x0)
