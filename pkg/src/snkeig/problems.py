"""Built-in test problems."""

from __future__ import annotations

import numpy as np

from .xsmodel import CrossSectionSet, ProblemModel

REFLECT_ALL_1D = {"left": "reflecting", "right": "reflecting"}


def inf1g() -> ProblemModel:
    """One-group infinite medium; k = nu_sigma_f / sigma_a = 1.2."""
    fuel = CrossSectionSet([1.0], [[0.5]], [0.6], [1.0], name="fuel")
    return ProblemModel(1, [5.0] * 4, [0] * 4, [fuel], quadrature_order=4,
                        boundary=REFLECT_ALL_1D, name="inf1g")


def inf2g() -> ProblemModel:
    """Two-group infinite medium with upscatter; k = 10/9."""
    fuel = CrossSectionSet([1.0, 1.2], [[0.3, 0.1], [0.4, 0.5]], [0.2, 0.9], [1.0, 0.0], name="fuel")
    return ProblemModel(1, [5.0] * 4, [0] * 4, [fuel], quadrature_order=4,
                        boundary=REFLECT_ALL_1D, name="inf2g")


def slab_vac() -> ProblemModel:
    """Ten-cell one-group bare slab."""
    fuel = CrossSectionSet([1.0], [[0.7]], [0.45], [1.0], name="fuel")
    return ProblemModel(1, [1.0] * 10, [0] * 10, [fuel], quadrature_order=8, name="slab_vac")


def _thermal_materials(groups: int):
    """Fuel and moderator with strong thermal upscatter among the low groups."""
    if groups == 3:
        fuel = CrossSectionSet(
            sigma_t=[0.60, 1.40, 2.20],
            scat=[[0.40, 0.00, 0.00],
                  [0.15, 0.95, 0.55],
                  [0.00, 0.35, 1.55]],
            nu_sigma_f=[0.010, 0.080, 0.150],
            chi=[0.95, 0.05, 0.0], name="fuel")
        moderator = CrossSectionSet.nonfissile(
            sigma_t=[0.70, 1.80, 2.60],
            scat=[[0.48, 0.00, 0.00],
                  [0.21, 1.20, 0.75],
                  [0.00, 0.58, 1.83]], name="moderator")
    else:
        fuel = CrossSectionSet(
            sigma_t=[0.55, 0.90, 1.50, 2.30],
            scat=[[0.38, 0.00, 0.00, 0.00],
                  [0.14, 0.62, 0.05, 0.00],
                  [0.00, 0.21, 0.95, 0.55],
                  [0.00, 0.00, 0.38, 1.62]],
            nu_sigma_f=[0.010, 0.030, 0.090, 0.150],
            chi=[0.80, 0.20, 0.0, 0.0], name="fuel")
        moderator = CrossSectionSet.nonfissile(
            sigma_t=[0.65, 1.10, 1.90, 2.70],
            scat=[[0.45, 0.00, 0.00, 0.00],
                  [0.19, 0.78, 0.08, 0.00],
                  [0.00, 0.30, 1.22, 0.76],
                  [0.00, 0.00, 0.60, 1.92]], name="moderator")
    return fuel, moderator


def up3g() -> ProblemModel:
    """Three-group slab with strong thermal upscatter, reflected on the left."""
    fuel, moderator = _thermal_materials(3)
    ids = [0] * 12 + [1] * 8
    return ProblemModel(1, [0.5] * 20, ids, [fuel, moderator], quadrature_order=4,
                        boundary={"left": "reflecting"}, name="up3g")


def up4g() -> ProblemModel:
    """Four-group variant of up3g."""
    fuel, moderator = _thermal_materials(4)
    ids = [0] * 12 + [1] * 8
    return ProblemModel(1, [0.5] * 20, ids, [fuel, moderator], quadrature_order=4,
                        boundary={"left": "reflecting"}, name="up4g")


def dr95() -> ProblemModel:
    """Two fissile slabs separated by an absorber: a high dominance ratio."""
    fuel_a = CrossSectionSet([0.55, 1.30], [[0.42, 0.00], [0.10, 1.10]], [0.012, 0.21], [1.0, 0.0], name="fuel_a")
    fuel_b = CrossSectionSet([0.55, 1.30], [[0.42, 0.00], [0.10, 1.10]], [0.012, 0.20], [1.0, 0.0], name="fuel_b")
    absorber = CrossSectionSet.nonfissile([0.60, 1.40], [[0.50, 0.00], [0.08, 1.25]], name="absorber")
    ids = [0] * 20 + [2] * 10 + [1] * 20
    return ProblemModel(1, [1.0] * 50, ids, [fuel_a, fuel_b, absorber], quadrature_order=4,
                        boundary=REFLECT_ALL_1D, name="dr95")


def mini2d() -> ProblemModel:
    """8x8 2D, four groups, fuel core in a reflector, vacuum all round."""
    fuel = CrossSectionSet(
        sigma_t=[0.60, 0.95, 1.40, 2.10],
        scat=[[0.40, 0.00, 0.00, 0.00],
              [0.13, 0.70, 0.02, 0.00],
              [0.00, 0.18, 1.00, 0.30],
              [0.00, 0.00, 0.28, 1.70]],
        nu_sigma_f=[0.015, 0.040, 0.120, 0.230],
        chi=[0.75, 0.25, 0.0, 0.0], name="fuel")
    reflector = CrossSectionSet.nonfissile(
        sigma_t=[0.65, 1.10, 1.80, 2.60],
        scat=[[0.45, 0.00, 0.00, 0.00],
              [0.18, 0.85, 0.03, 0.00],
              [0.00, 0.22, 1.35, 0.45],
              [0.00, 0.00, 0.40, 2.10]], name="reflector")
    ids = np.ones((8, 8), dtype=int)
    ids[1:6, 1:6] = 0
    return ProblemModel(2, [1.0] * 8, ids.reshape(-1), [fuel, reflector], cell_widths_y=[1.0] * 8,
                        quadrature_order=4, name="mini2d")


BUILTIN = {
    "inf1g": inf1g,
    "inf2g": inf2g,
    "slab_vac": slab_vac,
    "up3g": up3g,
    "up4g": up4g,
    "dr95": dr95,
    "mini2d": mini2d,
}

ANALYTIC_K = {"inf1g": 1.2, "inf2g": 10.0 / 9.0}


def builtin_problems() -> list[ProblemModel]:
    return [factory() for factory in BUILTIN.values()]


def get_problem(name: str) -> ProblemModel:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown built-in problem {name!r}; available: {', '.join(BUILTIN)}") from None
