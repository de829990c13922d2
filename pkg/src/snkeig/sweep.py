"""Transport sweeps: apply the inverse streaming-plus-collision operator.

Every cell update is linear in the incoming face flux and the cell source, so
the coefficients are tabulated once per (model, quadrature, scheme) in a
:class:`SweepPlan`. Sweeps then use only elementwise ``+``, ``*`` and
``/``, which makes the result for each group independent of which other
groups are swept in the same batch (bitwise).
"""

from __future__ import annotations

import logging
import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError
from .quadrature import Quadrature, build_quadrature
from .xsmodel import REFLECTING, ProblemModel

log = logging.getLogger(__name__)

REFLECT_TOL = 1e-12
REFLECT_MAX_PASSES = 200

# opposite face and the axis a face is normal to
_AXIS = {"left": 0, "right": 0, "bottom": 1, "top": 1}
_LOW = {0: "left", 1: "bottom"}
_HIGH = {0: "right", 1: "top"}


@dataclass
class AngularFlux:
    """Cell-average angular flux ``psi[g, a, c]`` and boundary outflows.

    ``outflow[face]`` has shape (G, A, n_face); only entries for directions
    leaving through that face are meaningful. ``edges`` is filled only when
    requested and holds face fluxes on every mesh edge (1D: (G, A, nx+1);
    2D: ``"x"`` (G, A, ny, nx+1) and ``"y"`` (G, A, ny+1, nx)).
    """

    psi: np.ndarray
    outflow: dict
    groups: np.ndarray
    passes: int = 1
    edges: dict | None = None


def _sc_factors(tau):
    """(1 - e^-t)/t and (1 - (1 - e^-t)/t)/t with their t -> 0 limits."""
    tau = np.asarray(tau, dtype=float)
    safe = np.where(tau > 0, tau, 1.0)
    e1 = np.where(tau > 0, -np.expm1(-safe) / safe, 1.0)
    e2 = np.where(tau > 1e-2, (1.0 - e1) / safe, 0.0)
    small = tau <= 1e-2
    if np.any(small):
        t = tau[small]
        # sum_k (-t)^k / (k+2)!
        series = np.zeros_like(t)
        fact = 2.0
        term_pow = np.ones_like(t)
        for k in range(7):
            series += term_pow / fact
            term_pow = -term_pow * t
            fact *= k + 3
        e2 = e2.copy()
        e2[small] = series
    return e1, e2


def _directions_order(model: ProblemModel, quad: Quadrature):
    """Direction blocks (octants) in sweep order.

    Each block is (index array, signs). Octants heading toward a reflecting
    face go first so a single reflecting face per axis resolves in one pass.
    """
    dims = model.dimension
    dirs = quad.directions
    first_sign = []
    for axis in range(dims):
        low = model.boundary[_LOW[axis]] == REFLECTING
        high = model.boundary[_HIGH[axis]] == REFLECTING
        first_sign.append(+1 if (high and not low) else -1)
    signs = np.where(dirs[:, :dims] > 0, 1, -1)
    blocks = {}
    for a, s in enumerate(map(tuple, signs)):
        blocks.setdefault(s, []).append(a)

    def rank(s):
        # outer key: last axis
        return tuple(0 if s[ax] == first_sign[ax] else 1 for ax in reversed(range(dims)))

    ordered = sorted(blocks, key=rank)
    return [(np.array(blocks[s], dtype=np.int64), s) for s in ordered]


def _needs_iteration(model: ProblemModel) -> bool:
    for axis in range(model.dimension):
        if model.boundary[_LOW[axis]] == REFLECTING and model.boundary[_HIGH[axis]] == REFLECTING:
            return True
    return False


class SweepPlan:
    """Tabulated sweep coefficients for one model, quadrature and scheme."""

    def __init__(self, model: ProblemModel, quadrature: Quadrature, scheme: str | None = None):
        scheme = scheme or model.scheme
        if quadrature.dimension != model.dimension:
            raise ConfigurationError("quadrature dimension does not match the model")
        if scheme == "step_characteristic" and model.dimension != 1:
            raise ConfigurationError("step_characteristic is only implemented in 1D")
        if scheme not in ("step_characteristic", "step", "diamond"):
            raise ConfigurationError(f"unknown scheme {scheme!r}")
        self.model = model
        self.quadrature = quadrature
        self.scheme = scheme
        self.G = model.group_count
        self.A = quadrature.n_angles
        self.blocks = _directions_order(model, quadrature)
        self.iterate = _needs_iteration(model)
        self.reflect_map = {axis: quadrature.reflect(axis) for axis in range(model.dimension)}
        sigma_t = model.cell_field("sigma_t").T  # (n, G)
        if model.dimension == 1:
            self._tabulate_1d(sigma_t)
        else:
            self._tabulate_2d(sigma_t)
        self._block_cache = {}

    # -- coefficient tables, all shaped (n_cells, G, A) --------------------
    def _tabulate_1d(self, sigma_t):
        amu = np.abs(self.quadrature.mu)[None, None, :]
        dx = self.model.cell_widths_x[:, None, None]
        st = sigma_t[:, :, None]
        if self.scheme == "step_characteristic":
            tau = st * dx / amu
            e1, e2 = _sc_factors(tau)
            path = dx / amu
            self.coef = dict(a_avg=e1, b_avg=path * e2, a_out=np.exp(-tau), b_out=path * e1)
        elif self.scheme == "step":
            den = amu + st * dx
            a = amu / den
            b = dx / den
            self.coef = dict(a_avg=a, b_avg=b, a_out=a, b_out=b)
        else:
            den = 2.0 * amu + st * dx
            a_avg = 2.0 * amu / den
            b_avg = dx / den
            self.coef = dict(a_avg=a_avg, b_avg=b_avg, a_out=2.0 * a_avg - 1.0, b_out=2.0 * b_avg)

    def _tabulate_2d(self, sigma_t):
        m = self.model
        amu = np.abs(self.quadrature.mu)
        aeta = np.abs(self.quadrature.eta)
        dx = np.tile(m.cell_widths_x, m.ny)
        dy = np.repeat(m.cell_widths_y, m.nx)
        factor = 1.0 if self.scheme == "step" else 2.0
        cx = factor * amu[None, :] / dx[:, None]
        cy = factor * aeta[None, :] / dy[:, None]
        inv = 1.0 / (sigma_t[:, :, None] + cx[:, None, :] + cy[:, None, :])
        self.coef = dict(cx=np.broadcast_to(cx[:, None, :], inv.shape),
                         cy=np.broadcast_to(cy[:, None, :], inv.shape), inv=inv)

    def _block_coef(self, groups_key, groups, block_index):
        key = (groups_key, block_index)
        hit = self._block_cache.get(key)
        if hit is None:
            idx = self.blocks[block_index][0]
            hit = {name: np.ascontiguousarray(arr[:, groups][:, :, idx])
                   for name, arr in self.coef.items()}
            if len(self._block_cache) > 256:
                self._block_cache.clear()
            self._block_cache[key] = hit
        return hit

    # -- public entry point -------------------------------------------------
    def sweep(self, source, groups=None, *, isotropic=False, incident=None,
              record_edges=False) -> AngularFlux:
        """Sweep ``source`` for the listed groups.

        ``source`` is (len(groups), A, n_cells), or (len(groups), n_cells)
        with ``isotropic=True``. ``incident`` optionally prescribes incoming
        fluxes on vacuum faces: face -> array broadcastable to (len(groups),
        A, n_face).
        """
        groups = np.arange(self.G) if groups is None else np.atleast_1d(np.asarray(groups, dtype=np.int64))
        src = np.asarray(source, dtype=float)
        n = self.model.n_cells
        expected = (groups.size, n) if isotropic else (groups.size, self.A, n)
        if src.shape != expected:
            raise InputError(f"source shape {src.shape} does not match {expected}")
        if not np.all(np.isfinite(src)):
            raise InputError("sweep source has non-finite entries")
        if np.any((groups < 0) | (groups >= self.G)):
            raise InputError("group index out of range")

        fixed_in = self._incident_arrays(groups.size, incident)
        psi = np.empty((groups.size, self.A, n))
        outflow = {face: np.zeros_like(arr) for face, arr in fixed_in.items()}
        edges = self._edge_arrays(groups.size) if record_edges else None
        reflect_in = {face: np.zeros_like(arr) for face, arr in fixed_in.items()}

        active = np.arange(groups.size)
        passes = 0
        while True:
            passes += 1
            sub_groups = groups[active]
            sub_key = tuple(sub_groups.tolist())
            sub_src = src[active]
            for b, (idx, signs) in enumerate(self.blocks):
                coef = self._block_coef(sub_key, sub_groups, b)
                inflow = {}
                for axis, s in enumerate(signs):
                    face = _LOW[axis] if s > 0 else _HIGH[axis]
                    arr = fixed_in[face][active][:, idx]
                    if self.model.boundary[face] == REFLECTING:
                        mirror = self.reflect_map[axis][idx]
                        arr = outflow[face][active][:, mirror]
                        reflect_in[face][np.ix_(active, idx)] = arr
                    inflow[axis] = arr
                q = sub_src[:, None, :] if isotropic else sub_src[:, idx, :]
                if self.model.dimension == 1:
                    self._sweep_1d(coef, q, idx, signs, inflow, active, psi, outflow, edges)
                else:
                    self._sweep_2d(coef, q, idx, signs, inflow, active, psi, outflow, edges)
            if not self.iterate:
                break
            still = []
            for k, gi in enumerate(active):
                change = 0.0
                scale = 0.0
                for axis in range(self.model.dimension):
                    for face in (_LOW[axis], _HIGH[axis]):
                        if self.model.boundary[face] != REFLECTING:
                            continue
                        mirror = self.reflect_map[axis]
                        now = outflow[face][gi][mirror]
                        used = reflect_in[face][gi]
                        # only directions entering through this face
                        entering = self._entering(face)
                        change = max(change, float(np.max(np.abs(now[entering] - used[entering]), initial=0.0)))
                        scale = max(scale, float(np.max(np.abs(now[entering]), initial=0.0)))
                if change > REFLECT_TOL * scale:
                    still.append(gi)
            active = np.array(still, dtype=np.int64)
            if active.size == 0:
                break
            if passes >= REFLECT_MAX_PASSES:
                log.warning("reflecting boundary iteration stopped after %d passes "
                            "with %d group(s) unconverged", passes, active.size)
                break
        return AngularFlux(psi=psi, outflow=outflow, groups=groups, passes=passes, edges=edges)

    def _entering(self, face):
        axis = _AXIS[face]
        comp = self.quadrature.directions[:, axis]
        return comp > 0 if face == _LOW[axis] else comp < 0

    def _incident_arrays(self, ng, incident):
        m = self.model
        shapes = {"left": m.ny, "right": m.ny, "bottom": m.nx, "top": m.nx}
        out = {}
        for face in m.faces:
            arr = np.zeros((ng, self.A, shapes[face]))
            if incident and face in incident:
                if m.boundary[face] == REFLECTING:
                    raise ConfigurationError(f"incident flux given on reflecting face {face}")
                arr[...] = incident[face]
            out[face] = arr
        return out

    def _edge_arrays(self, ng):
        m = self.model
        if m.dimension == 1:
            return {"x": np.zeros((ng, self.A, m.nx + 1))}
        return {"x": np.zeros((ng, self.A, m.ny, m.nx + 1)),
                "y": np.zeros((ng, self.A, m.ny + 1, m.nx))}

    def _sweep_1d(self, coef, q, idx, signs, inflow, active, psi, outflow, edges):
        nx = self.model.nx
        a_avg, b_avg, a_out, b_out = coef["a_avg"], coef["b_avg"], coef["a_out"], coef["b_out"]
        forward = signs[0] > 0
        cells = range(nx) if forward else range(nx - 1, -1, -1)
        cur = inflow[0][:, :, 0].copy()
        avg = np.empty((nx,) + cur.shape)
        if edges is not None:
            e = np.empty((nx + 1,) + cur.shape)
            e[0 if forward else nx] = cur
        for c in cells:
            qc = q[:, :, c]
            avg[c] = a_avg[c] * cur + b_avg[c] * qc
            cur = a_out[c] * cur + b_out[c] * qc
            if edges is not None:
                e[c + 1 if forward else c] = cur
        psi[np.ix_(active, idx)] = np.moveaxis(avg, 0, -1)
        face = "right" if forward else "left"
        outflow[face][np.ix_(active, idx)] = cur[:, :, None]
        if edges is not None:
            edges["x"][np.ix_(active, idx)] = np.moveaxis(e, 0, -1)

    def _sweep_2d(self, coef, q, idx, signs, inflow, active, psi, outflow, edges):
        m = self.model
        nx, ny = m.nx, m.ny
        cx, cy, inv = coef["cx"], coef["cy"], coef["inv"]
        step = self.scheme == "step"
        fx, fy = signs
        cols = range(nx) if fx > 0 else range(nx - 1, -1, -1)
        rows = range(ny) if fy > 0 else range(ny - 1, -1, -1)
        ng, na = inflow[0].shape[0], idx.size
        avg = np.empty((nx * ny, ng, na))
        ypsi = [inflow[1][:, :, i].copy() for i in range(nx)]
        xout = np.empty((ng, na, ny))
        for j in rows:
            cur = inflow[0][:, :, j].copy()
            if edges is not None:
                edges["x"][np.ix_(active, idx, [j], [0 if fx > 0 else nx])] = cur[:, :, None, None]
            for i in cols:
                c = j * nx + i
                qc = q[:, :, c]
                yin = ypsi[i]
                if edges is not None and (j == (0 if fy > 0 else ny - 1)):
                    edges["y"][np.ix_(active, idx, [0 if fy > 0 else ny], [i])] = yin[:, :, None, None]
                bar = (qc + cx[c] * cur + cy[c] * yin) * inv[c]
                avg[c] = bar
                if step:
                    cur = bar
                    ypsi[i] = bar
                else:
                    cur = 2.0 * bar - cur
                    ypsi[i] = 2.0 * bar - yin
                if edges is not None:
                    edges["x"][np.ix_(active, idx, [j], [i + 1 if fx > 0 else i])] = cur[:, :, None, None]
                    edges["y"][np.ix_(active, idx, [j + 1 if fy > 0 else j], [i])] = ypsi[i][:, :, None, None]
            xout[:, :, j] = cur
        psi[np.ix_(active, idx)] = np.moveaxis(avg, 0, -1)
        outflow["right" if fx > 0 else "left"][np.ix_(active, idx)] = xout
        outflow["top" if fy > 0 else "bottom"][np.ix_(active, idx)] = np.stack(ypsi, axis=-1)


_PLANS: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def plan_for(model: ProblemModel, quadrature: Quadrature | None = None, scheme: str | None = None) -> SweepPlan:
    """Cached :class:`SweepPlan` (one per model/quadrature/scheme)."""
    if quadrature is None:
        quadrature = default_quadrature(model)
    scheme = scheme or model.scheme
    per_model = _PLANS.setdefault(model, {})
    key = (id(quadrature), scheme)
    hit = per_model.get(key)
    if hit is None or hit.quadrature is not quadrature:
        hit = SweepPlan(model, quadrature, scheme)
        per_model[key] = hit
    return hit


_QUADS: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def default_quadrature(model: ProblemModel) -> Quadrature:
    quad = _QUADS.get(model)
    if quad is None:
        quad = build_quadrature(model.dimension, model.quadrature_order)
        _QUADS[model] = quad
    return quad


def sweep_group(model, quadrature, group, source, scheme=None, incident=None, record_edges=False) -> AngularFlux:
    """Sweep a single group; ``source`` has shape (A, n_cells)."""
    src = np.asarray(source, dtype=float)[None]
    inc = None
    if incident:
        inc = {face: np.asarray(v, dtype=float)[None] if np.ndim(v) else v for face, v in incident.items()}
    return plan_for(model, quadrature, scheme).sweep(src, [group], incident=inc, record_edges=record_edges)


def apply_Linv(model, quadrature, source, scheme=None) -> AngularFlux:
    """Sweep every group; ``source`` has shape (G, A, n_cells)."""
    return plan_for(model, quadrature, scheme).sweep(source)


def scalar_flux(plan: SweepPlan, psi) -> np.ndarray:
    """Weighted angular sum with a fixed accumulation order over angles."""
    w = plan.quadrature.weights
    phi = w[0] * psi[:, 0, :]
    for a in range(1, psi.shape[1]):
        phi = phi + w[a] * psi[:, a, :]
    return phi
