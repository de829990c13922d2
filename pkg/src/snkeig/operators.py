"""Matrix-free multigroup operators on flat group-major flux vectors.

A flux vector has length G * n_cells with group g occupying
``[g * n_cells, (g + 1) * n_cells)``. Sums over source groups are always
accumulated in ascending group order so results do not depend on how the
groups are partitioned among workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError, NonFissileError
from .sweep import plan_for, scalar_flux


@dataclass(frozen=True)
class ShiftedOperatorSpec:
    """Shift rho applied as S + rho * F."""

    rho: float

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho < 0:
            raise ConfigurationError(f"shift must be finite and nonnegative, got {self.rho}")


def _rho(shift) -> float:
    if shift is None:
        return 0.0
    if isinstance(shift, ShiftedOperatorSpec):
        return shift.rho
    return ShiftedOperatorSpec(float(shift)).rho


def as_groups(model, phi) -> np.ndarray:
    """View a flat flux vector as (G, n_cells)."""
    arr = np.asarray(phi, dtype=float)
    if arr.size != model.size:
        raise InputError(f"flux vector has {arr.size} entries, expected {model.size}")
    return arr.reshape(model.group_count, model.n_cells)


def transfer_coefficients(model, rho: float = 0.0) -> np.ndarray:
    """Per-cell coefficients K[g, g', c] of S + rho * chi f^T."""
    scat = model.cell_field("scat")  # (G, G, n)
    if rho:
        chi = model.cell_field("chi")
        nsf = model.cell_field("nu_sigma_f")
        scat = scat + rho * chi[:, None, :] * nsf[None, :, :]
    return scat


def fold_columns(coef, phi2d, columns, rows=None):
    """sum_{g' in columns} coef[rows, g'] * phi[g'], ascending g'."""
    rows = slice(None) if rows is None else rows
    acc = None
    for gp in columns:
        term = coef[rows, gp, :] * phi2d[gp]
        acc = term if acc is None else acc + term
    return acc


def apply_scatter(model, phi, group_range=None, out_range=None, rho: float = 0.0) -> np.ndarray:
    """Scattering source (optionally S + rho F) from the groups in ``group_range``.

    Returns a full-length vector; groups outside ``out_range`` are zero.
    """
    G, n = model.group_count, model.n_cells
    phi2d = as_groups(model, phi)
    cols = range(G) if group_range is None else range(*_bounds(group_range, G))
    lo, hi = (0, G) if out_range is None else _bounds(out_range, G)
    out = np.zeros((G, n))
    coef = transfer_coefficients(model, rho)
    acc = fold_columns(coef, phi2d, cols, slice(lo, hi))
    if acc is not None:
        out[lo:hi] = acc
    return out.reshape(-1)


def _bounds(rng, G):
    lo, hi = (rng.start, rng.stop) if isinstance(rng, range) else tuple(rng)
    if not 0 <= lo <= hi <= G:
        raise InputError(f"group range {lo}:{hi} outside [0, {G})")
    return lo, hi


def fission_density(model, phi) -> np.ndarray:
    """Per-cell fission production sum_g nu_sigma_f[g] * phi[g]."""
    nsf = model.cell_field("nu_sigma_f")
    phi2d = as_groups(model, phi)
    acc = nsf[0] * phi2d[0]
    for g in range(1, model.group_count):
        acc = acc + nsf[g] * phi2d[g]
    return acc


def apply_fission(model, phi) -> np.ndarray:
    chi = model.cell_field("chi")
    return (chi * fission_density(model, phi)[None, :]).reshape(-1)


def apply_TM(model, quadrature, source_moments, groups=None, scheme=None) -> np.ndarray:
    """Transport an isotropic source: D L^-1 M q.

    ``groups`` restricts the sweep to a subset; the input and output then hold
    only those groups, stacked in order.
    """
    plan = plan_for(model, quadrature, scheme)
    ng = model.group_count if groups is None else len(groups)
    q = np.asarray(source_moments, dtype=float).reshape(ng, model.n_cells)
    flux = plan.sweep(q, groups, isotropic=True)
    return scalar_flux(plan, flux.psi).reshape(-1)


def apply_A(model, quadrature, phi, shift=None) -> np.ndarray:
    """(I - TM(S + rho F)) phi."""
    rho = _rho(shift)
    phi = np.asarray(phi, dtype=float)
    return phi - apply_TM(model, quadrature, apply_scatter(model, phi, rho=rho))


def apply_B(model, quadrature, phi) -> np.ndarray:
    """TMF phi."""
    return apply_TM(model, quadrature, apply_fission(model, phi))


def rayleigh_quotient(model, quadrature, phi) -> float:
    """<phi, (I - TMS) phi> / <phi, TMF phi> with the Euclidean product."""
    phi = np.asarray(phi, dtype=float)
    num = float(np.dot(phi, apply_A(model, quadrature, phi)))
    den = float(np.dot(phi, apply_B(model, quadrature, phi)))
    return quotient(num, den)


def quotient(num, den):
    if abs(den) < 1e-300:
        raise NonFissileError("Rayleigh quotient denominator vanishes: vector has no fission coupling")
    return num / den


def dense_rayleigh_quotient(A, B, x) -> float:
    x = np.asarray(x, dtype=float)
    return quotient(float(x @ (A @ x)), float(x @ (B @ x)))
