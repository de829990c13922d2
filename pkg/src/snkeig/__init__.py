"""Multigroup discrete-ordinates k-eigenvalue solvers with an energy multigrid preconditioner."""

from .eigen import EigenConfig, EigenReport, solve_arnoldi, solve_eigen, solve_power, solve_rqi
from .errors import (ConfigurationError, ConvergenceError, InputError, NonFissileError, SingularMatrixError,
                     SnkeigError)
from .krylov import KrylovConfig, KrylovStats, gmres
from .mge import MgeParams, build_hierarchy, build_preconditioner
from .multigroup import EnergySetLayout, MultigroupConfig, solve_gauss_seidel, solve_mg_krylov, solve_multigroup
from .oracle import dense_dominant_eig, dense_solve, oracle_eigenpair, probe_operator
from .problem_io import parse_problem, read_problem, write_problem
from .problems import builtin_problems, get_problem
from .quadrature import Quadrature, build_quadrature
from .sweep import sweep_group
from .xsmodel import CrossSectionSet, ProblemModel, validate_model

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "ConvergenceError", "CrossSectionSet", "EigenConfig", "EigenReport", "EnergySetLayout",
    "InputError", "KrylovConfig", "KrylovStats", "MgeParams", "MultigroupConfig", "NonFissileError",
    "ProblemModel", "Quadrature", "SingularMatrixError", "SnkeigError", "build_hierarchy",
    "build_preconditioner", "build_quadrature", "builtin_problems", "dense_dominant_eig", "dense_solve",
    "get_problem", "gmres", "oracle_eigenpair", "parse_problem", "probe_operator", "read_problem",
    "solve_arnoldi", "solve_eigen", "solve_gauss_seidel", "solve_mg_krylov", "solve_multigroup",
    "solve_power", "solve_rqi", "sweep_group", "validate_model", "write_problem",
]
