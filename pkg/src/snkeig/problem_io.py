"""Plain-text problem files.

Example::

    # one-group bare slab
    [mesh]
    name slab
    dim 1
    nx 4
    dx 1.0            # one value is broadcast, or give nx values
    materials 0 0 0 0
    quadrature 8
    scheme step_characteristic

    [material 0]
    name fuel
    groups 1
    sigma_t 1.0
    nu_sigma_f 0.45
    chi 1.0
    scat_row 0 0.7

    [boundary]
    left reflecting

    [source]
    group 0 1.0 1.0 1.0 1.0

    [solver]
    solver rqi
    ktol 1e-8

2D meshes add ``ny``/``dy``; ``materials`` lists nx*ny ids with x fastest and
may span several ``materials`` lines. Floats are written with ``repr`` and
read with ``float``, so a write/read cycle is bit-exact and independent of
the locale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .xsmodel import CrossSectionSet, ProblemModel

SECTIONS = ("mesh", "material", "boundary", "source", "solver")


@dataclass
class ProblemFile:
    model: ProblemModel
    solver_options: dict = field(default_factory=dict)


def _floats(tokens, where):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def _int(token, where):
    try:
        return int(token)
    except ValueError:
        raise InputError(f"{where}: expected an integer, got {token!r}") from None


def _lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_problem(text: str, name: str = "") -> ProblemFile:
    mesh, boundary, source, solver = {}, {}, {}, {}
    materials: dict[int, dict] = {}
    section = None
    current = None
    for lineno, line in _lines(text):
        where = f"line {lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise InputError(f"{where}: malformed section header {line!r}")
            parts = line[1:-1].split()
            if not parts or parts[0] not in SECTIONS:
                raise InputError(f"{where}: unknown section {line!r}; expected one of {SECTIONS}")
            section = parts[0]
            if section == "material":
                if len(parts) != 2:
                    raise InputError(f"{where}: material sections need an id, e.g. [material 0]")
                mid = _int(parts[1], where)
                if mid in materials:
                    raise InputError(f"{where}: material {mid} defined twice")
                current = materials[mid] = {"scat_rows": {}}
            elif len(parts) != 1:
                raise InputError(f"{where}: section [{section}] takes no arguments")
            continue
        if section is None:
            raise InputError(f"{where}: data before the first section header")
        key, *vals = line.split()
        if section == "mesh":
            if key == "materials":
                mesh.setdefault("materials", []).extend(_int(v, where) for v in vals)
            elif key in ("dx", "dy"):
                mesh[key] = _floats(vals, where)
            elif key in ("dim", "nx", "ny", "quadrature"):
                if len(vals) != 1:
                    raise InputError(f"{where}: {key} takes one integer")
                mesh[key] = _int(vals[0], where)
            elif key in ("scheme", "name"):
                mesh[key] = " ".join(vals)
            else:
                raise InputError(f"{where}: unknown mesh key {key!r}")
        elif section == "material":
            if key == "scat_row":
                if not vals:
                    raise InputError(f"{where}: scat_row needs a group index")
                current["scat_rows"][_int(vals[0], where)] = _floats(vals[1:], where)
            elif key in ("sigma_t", "chi", "nu_sigma_f"):
                current[key] = _floats(vals, where)
            elif key == "groups":
                current["groups"] = _int(vals[0], where) if len(vals) == 1 else None
            elif key == "name":
                current["name"] = " ".join(vals)
            else:
                raise InputError(f"{where}: unknown material key {key!r}")
        elif section == "boundary":
            if len(vals) != 1:
                raise InputError(f"{where}: boundary lines are '<face> vacuum|reflecting'")
            boundary[key] = vals[0]
        elif section == "source":
            if key != "group" or not vals:
                raise InputError(f"{where}: source lines are 'group <g> <values per cell>'")
            source[_int(vals[0], where)] = _floats(vals[1:], where)
        else:
            solver[key] = " ".join(vals)
    return ProblemFile(_assemble(mesh, materials, boundary, source, name), solver)


def _material(mid, data) -> CrossSectionSet:
    G = data.get("groups")
    if G is None or G < 1:
        raise InputError(f"material {mid}: 'groups' must be a positive integer")
    if "sigma_t" not in data:
        raise InputError(f"material {mid}: sigma_t is required")
    rows = data["scat_rows"]
    if sorted(rows) != list(range(G)):
        raise InputError(f"material {mid}: expected scat_row lines for groups 0..{G - 1}")
    for key in ("sigma_t", "chi", "nu_sigma_f"):
        if key in data and len(data[key]) != G:
            raise InputError(f"material {mid}: {key} has {len(data[key])} values for {G} groups")
    for g, row in rows.items():
        if len(row) != G:
            raise InputError(f"material {mid}: scat_row {g} has {len(row)} values for {G} groups")
    zeros = [0.0] * G
    return CrossSectionSet(data["sigma_t"], [rows[g] for g in range(G)], data.get("nu_sigma_f", zeros),
                           data.get("chi", zeros), name=data.get("name", str(mid)))


def _widths(mesh, key, count_key, where):
    if count_key not in mesh:
        raise InputError(f"[mesh] needs '{count_key}'")
    n = mesh[count_key]
    w = mesh.get(key)
    if w is None:
        raise InputError(f"[mesh] needs '{key}'")
    if len(w) == 1:
        w = w * n
    if len(w) != n:
        raise InputError(f"[mesh] {key} has {len(w)} widths for {count_key} {n} ({where})")
    return w


def _assemble(mesh, materials, boundary, source, name) -> ProblemModel:
    dim = mesh.get("dim")
    if dim not in (1, 2):
        raise InputError("[mesh] needs 'dim 1' or 'dim 2'")
    if not materials:
        raise InputError("no [material] sections")
    ids = sorted(materials)
    if ids != list(range(len(ids))):
        raise InputError(f"material ids must be 0..{len(ids) - 1}, got {ids}")
    mats = [_material(i, materials[i]) for i in ids]
    dx = _widths(mesh, "dx", "nx", "x")
    dy = _widths(mesh, "dy", "ny", "y") if dim == 2 else None
    n_cells = len(dx) * (len(dy) if dy else 1)
    mat_ids = mesh.get("materials")
    if mat_ids is None or len(mat_ids) != n_cells:
        raise InputError(f"[mesh] materials must list {n_cells} ids")
    q = None
    if source:
        G = mats[0].group_count
        q = np.zeros((G, n_cells))
        for g, vals in source.items():
            if not 0 <= g < G or len(vals) not in (1, n_cells):
                raise InputError(f"[source] group {g}: need a valid group and 1 or {n_cells} values")
            q[g] = vals
    kwargs = dict(boundary=boundary, cell_widths_y=dy, fixed_source=q, scheme=mesh.get("scheme"),
                  name=mesh.get("name", name))
    if "quadrature" in mesh:
        kwargs["quadrature_order"] = mesh["quadrature"]
    try:
        return ProblemModel(dim, dx, mat_ids, mats, **kwargs)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def read_problem(path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem(text, name=path.stem)


def _row(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def format_problem(model: ProblemModel, solver_options: dict | None = None) -> str:
    out = ["[mesh]"]
    if model.name:
        out.append(f"name {model.name}")
    out += [f"dim {model.dimension}", f"nx {model.nx}", f"dx {_row(model.cell_widths_x)}"]
    if model.dimension == 2:
        out += [f"ny {model.ny}", f"dy {_row(model.cell_widths_y)}"]
    ids = model.material_id.reshape(model.ny, model.nx)
    out += ["materials " + " ".join(str(int(i)) for i in row) for row in ids]
    out += [f"quadrature {model.quadrature_order}", f"scheme {model.scheme}"]
    for i, m in enumerate(model.materials):
        out += ["", f"[material {i}]"]
        if m.name:
            out.append(f"name {m.name}")
        out += [f"groups {m.group_count}", f"sigma_t {_row(m.sigma_t)}",
                f"nu_sigma_f {_row(m.nu_sigma_f)}", f"chi {_row(m.chi)}"]
        out += [f"scat_row {g} {_row(m.scat[g])}" for g in range(m.group_count)]
    out += ["", "[boundary]"] + [f"{face} {kind}" for face, kind in model.boundary.items()]
    if model.fixed_source is not None:
        out += ["", "[source]"] + [f"group {g} {_row(row)}" for g, row in enumerate(model.fixed_source)]
    if solver_options:
        out += ["", "[solver]"] + [f"{k} {v}" for k, v in solver_options.items()]
    return "\n".join(out) + "\n"


def write_problem(path, model: ProblemModel, solver_options: dict | None = None) -> None:
    Path(path).write_text(format_problem(model, solver_options), encoding="utf-8")
