"""Problem definition: multigroup cross sections, Cartesian mesh, boundaries, sources."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

VACUUM = "vacuum"
REFLECTING = "reflecting"
BOUNDARY_KINDS = (VACUUM, REFLECTING)

FACES_1D = ("left", "right")
FACES_2D = ("left", "right", "bottom", "top")

SCHEMES = ("step_characteristic", "step", "diamond")


def _frozen(values, ndim, name):
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ConfigurationError(f"{name} must have {ndim} dimension(s), got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CrossSectionSet:
    """Multigroup data for one material.

    ``scat[g, gp]`` is the transfer cross section into group ``g`` from group
    ``gp``. Group 0 is the highest energy group.
    """

    sigma_t: np.ndarray
    scat: np.ndarray
    nu_sigma_f: np.ndarray
    chi: np.ndarray
    name: str = ""

    def __post_init__(self):
        sigma_t = _frozen(self.sigma_t, 1, "sigma_t")
        G = sigma_t.size
        if G < 1:
            raise ConfigurationError("a material needs at least one group")
        scat = _frozen(self.scat, 2, "scat") if np.ndim(self.scat) == 2 else _frozen(
            np.reshape(self.scat, (G, G)), 2, "scat")
        nu_sigma_f = _frozen(self.nu_sigma_f, 1, "nu_sigma_f")
        chi = _frozen(self.chi, 1, "chi")
        if scat.shape != (G, G) or nu_sigma_f.size != G or chi.size != G:
            raise ConfigurationError(
                f"material {self.name!r}: inconsistent group dimensions "
                f"(sigma_t {G}, scat {scat.shape}, nu_sigma_f {nu_sigma_f.size}, chi {chi.size})")
        object.__setattr__(self, "sigma_t", sigma_t)
        object.__setattr__(self, "scat", scat)
        object.__setattr__(self, "nu_sigma_f", nu_sigma_f)
        object.__setattr__(self, "chi", chi)

    @property
    def group_count(self) -> int:
        return self.sigma_t.size

    @property
    def is_fissile(self) -> bool:
        return bool(np.any(self.nu_sigma_f > 0))

    @classmethod
    def nonfissile(cls, sigma_t, scat, name=""):
        G = np.size(sigma_t)
        return cls(sigma_t, scat, np.zeros(G), np.zeros(G), name=name)


@dataclass(frozen=True, eq=False)
class ProblemModel:
    """Cartesian 1D/2D mesh with per-cell materials.

    Cells are numbered x-fastest (``cell = j * nx + i``). ``fixed_source`` has
    shape (G, n_cells) when present.
    """

    dimension: int
    cell_widths_x: np.ndarray
    material_id: np.ndarray
    materials: tuple
    quadrature_order: int = 4
    boundary: dict = field(default_factory=dict)
    cell_widths_y: np.ndarray | None = None
    fixed_source: np.ndarray | None = None
    scheme: str | None = None
    name: str = ""

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.dimension}")
        dx = _frozen(self.cell_widths_x, 1, "cell_widths_x")
        object.__setattr__(self, "cell_widths_x", dx)
        if self.dimension == 2:
            if self.cell_widths_y is None:
                raise ConfigurationError("2D problems need cell_widths_y")
            object.__setattr__(self, "cell_widths_y", _frozen(self.cell_widths_y, 1, "cell_widths_y"))
        elif self.cell_widths_y is not None:
            raise ConfigurationError("1D problems take no cell_widths_y")
        mats = tuple(self.materials)
        if not mats:
            raise ConfigurationError("at least one material is required")
        object.__setattr__(self, "materials", mats)
        ids = np.array(self.material_id, dtype=np.int64).reshape(-1)
        if ids.size != self.n_cells:
            raise ConfigurationError(f"material map has {ids.size} entries for {self.n_cells} cells")
        ids.setflags(write=False)
        object.__setattr__(self, "material_id", ids)
        faces = self.faces
        bc = {face: VACUUM for face in faces}
        for face, kind in dict(self.boundary).items():
            if face not in faces:
                raise ConfigurationError(f"unknown boundary face {face!r} for a {self.dimension}D problem")
            if kind not in BOUNDARY_KINDS:
                raise ConfigurationError(f"boundary {face}: unknown kind {kind!r}")
            bc[face] = kind
        object.__setattr__(self, "boundary", bc)
        scheme = self.scheme or ("step_characteristic" if self.dimension == 1 else "step")
        if scheme not in SCHEMES:
            raise ConfigurationError(f"unknown spatial scheme {scheme!r}; choose from {SCHEMES}")
        if scheme == "step_characteristic" and self.dimension == 2:
            raise ConfigurationError("step_characteristic is only available in 1D")
        object.__setattr__(self, "scheme", scheme)
        if self.fixed_source is not None:
            q = np.array(self.fixed_source, dtype=float)
            G = mats[0].group_count
            if q.shape != (G, self.n_cells):
                raise ConfigurationError(f"fixed_source must have shape {(G, self.n_cells)}, got {q.shape}")
            q.setflags(write=False)
            object.__setattr__(self, "fixed_source", q)

    @property
    def faces(self):
        return FACES_1D if self.dimension == 1 else FACES_2D

    @property
    def nx(self) -> int:
        return self.cell_widths_x.size

    @property
    def ny(self) -> int:
        return 1 if self.dimension == 1 else self.cell_widths_y.size

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def group_count(self) -> int:
        return self.materials[0].group_count

    @property
    def size(self) -> int:
        """Length of a flux vector (G x n_cells)."""
        return self.group_count * self.n_cells

    @property
    def all_vacuum(self) -> bool:
        return all(kind == VACUUM for kind in self.boundary.values())

    @property
    def is_fissile(self) -> bool:
        used = set(int(i) for i in np.unique(self.material_id) if 0 <= i < len(self.materials))
        return any(self.materials[i].is_fissile for i in used)

    def cell_field(self, attr: str) -> np.ndarray:
        """Per-cell material attribute with the cell axis last (read-only)."""
        cache = self.__dict__.setdefault("_cell_fields", {})
        hit = cache.get(attr)
        if hit is None:
            stacked = np.stack([getattr(m, attr) for m in self.materials])
            hit = np.ascontiguousarray(np.moveaxis(stacked[self.material_id], 0, -1))
            hit.setflags(write=False)
            cache[attr] = hit
        return hit

    def with_materials(self, materials, name=None) -> ProblemModel:
        """Same mesh and boundaries, different material data (and group count)."""
        return ProblemModel(
            dimension=self.dimension,
            cell_widths_x=self.cell_widths_x,
            cell_widths_y=self.cell_widths_y,
            material_id=self.material_id,
            materials=tuple(materials),
            quadrature_order=self.quadrature_order,
            boundary=dict(self.boundary),
            fixed_source=None,
            scheme=self.scheme,
            name=self.name if name is None else name,
        )

    def with_options(self, **changes) -> ProblemModel:
        kwargs = dict(
            dimension=self.dimension,
            cell_widths_x=self.cell_widths_x,
            cell_widths_y=self.cell_widths_y,
            material_id=self.material_id,
            materials=self.materials,
            quadrature_order=self.quadrature_order,
            boundary=dict(self.boundary),
            fixed_source=self.fixed_source,
            scheme=self.scheme,
            name=self.name,
        )
        kwargs.update(changes)
        return ProblemModel(**kwargs)


def upscatter_start(materials) -> int:
    """First upscatter-coupled group, or G when the problem is downscatter only.

    Group g is upscatter-coupled when it receives scattering from any lower
    energy group g' > g in any material.
    """
    G = materials[0].group_count
    for g in range(G):
        for mat in materials:
            if np.any(mat.scat[g, g + 1:] > 0):
                return g
    return G


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    message: str

    def __str__(self):
        return f"{self.severity}: {self.message}"


def validate_model(model: ProblemModel) -> list[Diagnostic]:
    """Check model invariants.

    Returns hard errors for invariant violations and a warning for each
    material group whose outscatter plus production exceeds its total cross
    section. An empty list means the model is clean.
    """
    out = []
    G = model.group_count
    for m, mat in enumerate(model.materials):
        label = mat.name or f"#{m}"
        if mat.group_count != G:
            out.append(Diagnostic("error", f"material {label} has {mat.group_count} groups, expected {G}"))
            continue
        for attr in ("sigma_t", "scat", "nu_sigma_f", "chi"):
            values = getattr(mat, attr)
            if not np.all(np.isfinite(values)):
                out.append(Diagnostic("error", f"material {label}: {attr} has non-finite entries"))
            elif np.any(values < 0):
                out.append(Diagnostic("error", f"material {label}: {attr} has negative entries"))
        if mat.is_fissile:
            total = float(np.sum(mat.chi))
            if abs(total - 1.0) > 1e-12:
                out.append(Diagnostic("error", f"material {label}: chi sums to {total!r}, expected 1"))
        elif np.any(mat.chi != 0):
            out.append(Diagnostic("error", f"material {label}: chi must be zero without fission"))
        production = mat.scat.sum(axis=0) + mat.nu_sigma_f
        for g in np.flatnonzero(production > mat.sigma_t):
            out.append(Diagnostic(
                "warning",
                f"material {label} group {g}: outscatter + nu_sigma_f = {production[g]:.6g} "
                f"exceeds sigma_t = {mat.sigma_t[g]:.6g}"))
    bad = [int(i) for i in model.material_id if not 0 <= i < len(model.materials)]
    if bad:
        out.append(Diagnostic("error", f"material map references unknown ids {sorted(set(bad))}"))
    for name, widths in (("x", model.cell_widths_x), ("y", model.cell_widths_y)):
        if widths is not None and (np.any(~np.isfinite(widths)) or np.any(widths <= 0)):
            out.append(Diagnostic("error", f"cell widths along {name} must be positive"))
    if model.quadrature_order < 2 or model.quadrature_order % 2:
        out.append(Diagnostic("error", f"quadrature order must be even and >= 2, got {model.quadrature_order}"))
    if model.fixed_source is not None:
        q = model.fixed_source
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            out.append(Diagnostic("error", "fixed source must be finite and nonnegative"))
    return out


def hard_errors(diagnostics):
    return [d for d in diagnostics if d.severity == "error"]


def require_valid(model: ProblemModel) -> None:
    errors = hard_errors(validate_model(model))
    if errors:
        raise ConfigurationError("; ".join(d.message for d in errors))
