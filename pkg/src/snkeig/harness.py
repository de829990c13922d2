"""Run configuration, comparison tables and machine-readable reports."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .eigen import EigenConfig, EigenReport, solve_eigen
from .errors import ConfigurationError, InputError
from .krylov import KrylovConfig
from .mge import MgeParams
from .multigroup import MultigroupConfig
from .oracle import oracle_eigenpair
from .problem_io import read_problem
from .problems import BUILTIN, get_problem
from .sweep import default_quadrature
from .xsmodel import ProblemModel

ORACLE_LIMIT = 600
BENCH_HEADER = ("problem", "solver", "precond", "sets", "outer", "krylov", "k", "seconds")

# option name -> (parser, default)
_OPTIONS = {
    "solver": (str, "power"),
    "mg": (str, "krylov"),
    "partition": (str, "full"),
    "sets": (int, 1),
    "precond": (lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on"), False),
    "mge_w": (float, 1.2),
    "mge_r": (int, 2),
    "mge_v": (int, 1),
    "mge_depth": (lambda v: v if v == "auto" else int(v), "auto"),
    "mge_quad": (str, "same"),
    "restart": (int, 50),
    "ktol": (float, 1e-8),
    "fluxtol": (float, 1e-6),
    "krylov_tol": (float, 1e-10),
    "max_outer": (int, 500),
    "arnoldi_mode": (str, "energy_dependent"),
}
_MG = {"krylov": "mg_krylov", "gs": "gauss_seidel"}


def resolve_options(*layers: dict) -> dict:
    """Defaults overlaid by each layer in turn (later wins; None is skipped)."""
    out = {k: d for k, (_, d) in _OPTIONS.items()}
    for layer in layers:
        for key, value in (layer or {}).items():
            key = key.replace("-", "_")
            if key not in _OPTIONS:
                raise InputError(f"unknown solver option {key!r}")
            if value is None:
                continue
            try:
                out[key] = _OPTIONS[key][0](value)
            except ValueError:
                raise InputError(f"bad value {value!r} for option {key!r}") from None
    return out


def eigen_config(options: dict) -> EigenConfig:
    if options["mg"] not in _MG:
        raise ConfigurationError(f"unknown multigroup method {options['mg']!r}; use krylov or gs")
    mg = MultigroupConfig(
        method=_MG[options["mg"]],
        partitioning=options["partition"],
        energy_sets=options["sets"],
        krylov=KrylovConfig(restart=options["restart"], tolerance=options["krylov_tol"]),
    )
    quad = None if options["mge_quad"] == "same" else options["mge_quad"]
    mge = MgeParams(weight=options["mge_w"], relaxations=options["mge_r"], v_cycles=options["mge_v"],
                    grid_depth=options["mge_depth"], coarse_quadrature_order=quad)
    return EigenConfig(solver=options["solver"], k_tolerance=options["ktol"], flux_tolerance=options["fluxtol"],
                       max_outer_iterations=options["max_outer"], arnoldi_mode=options["arnoldi_mode"],
                       multigroup=mg, precondition=options["precond"], mge=mge)


def load(problem: str) -> tuple[ProblemModel, dict]:
    """A problem file path, or the name of a built-in problem (``inf1g`` or ``inf1g.prob``)."""
    path = Path(problem)
    if path.is_file():
        pf = read_problem(path)
        return pf.model, pf.solver_options
    stem = path.name[:-5] if path.name.endswith(".prob") else path.name
    if stem in BUILTIN:
        return get_problem(stem), {}
    raise InputError(f"no problem file {problem!r} and no built-in problem of that name "
                     f"(built-ins: {', '.join(BUILTIN)})")


def oracle_k(model: ProblemModel):
    """Dense-oracle k for small problems; None when the problem is too large."""
    if model.size > ORACLE_LIMIT:
        return None
    return oracle_eigenpair(model, default_quadrature(model))[0]


@dataclass
class RunRow:
    solver: str
    precond: bool
    sets: int
    k: float
    outer_iterations: int
    krylov_iterations: int
    converged: bool
    seconds: float
    oracle_delta: float | None = None
    message: str = ""


@dataclass
class RunReport:
    problem: str
    options: dict
    rows: list = field(default_factory=list)
    oracle_k: float | None = None
    reports: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def table(self) -> str:
        head = f"{'solver':8} {'precond':7} {'sets':>4} {'outer':>6} {'krylov':>7} {'k':>22} {'|dk| oracle':>12} {'seconds':>8}"
        lines = [f"problem {self.problem}", head]
        for r in self.rows:
            dk = "" if r.oracle_delta is None else f"{r.oracle_delta:.3e}"
            flag = "" if r.converged else "  NOT CONVERGED"
            lines.append(f"{r.solver:8} {'yes' if r.precond else 'no':7} {r.sets:>4} {r.outer_iterations:>6} "
                         f"{r.krylov_iterations:>7} {r.k!r:>22} {dk:>12} {r.seconds:>8.3f}{flag}")
        return "\n".join(lines)

    def to_json(self, index: int = 0) -> dict:
        """Report for one run, in the fixed top-level schema."""
        row, rep = self.rows[index], self.reports[index]
        out = {
            "problem": self.problem,
            "solver": row.solver,
            "config": dict(self.options, solver=row.solver),
            "k": row.k,
            "outer_iterations": row.outer_iterations,
            "krylov_iterations": row.krylov_iterations,
            "converged": row.converged,
            "history": [{key: float(v) for key, v in h.items()} for h in rep.history],
            "seconds": row.seconds,
        }
        if self.oracle_k is not None:
            out["oracle_k"] = self.oracle_k
            out["oracle_delta"] = row.oracle_delta
        if row.message:
            out["message"] = row.message
        return out


def run(model: ProblemModel, options: dict, oracle: float | None = None) -> tuple[RunRow, EigenReport]:
    config = eigen_config(options)
    start = time.perf_counter()
    rep = solve_eigen(model, None, config)
    seconds = time.perf_counter() - start
    delta = None if oracle is None else abs(rep.k - oracle)
    row = RunRow(options["solver"], options["precond"], options["sets"], float(rep.k), rep.outer_iterations,
                 rep.krylov_iterations, bool(rep.converged), seconds, delta, rep.message)
    return row, rep


def compare(model: ProblemModel, options: dict, solvers, with_oracle: bool = True) -> RunReport:
    ok = oracle_k(model) if with_oracle else None
    report = RunReport(model.name, options, oracle_k=ok)
    for s in solvers:
        row, rep = run(model, dict(options, solver=s), ok)
        report.rows.append(row)
        report.reports.append(rep)
    return report


BENCH_RUNS = (("power", False), ("power", True), ("rqi", False), ("rqi", True), ("arnoldi", False),
              ("arnoldi", True))


def bench_rows(models, base: dict, runs=BENCH_RUNS, sets=(1,)):
    for model in models:
        for solver, pre in runs:
            for n in sets:
                if n > model.group_count:
                    continue
                opts = dict(base, solver=solver, precond=pre, sets=n)
                row, _ = run(model, opts)
                yield model.name, row


def bench_csv(rows, stream=None) -> str:
    stream = stream or io.StringIO()
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for name, r in rows:
        w.writerow([name, r.solver, int(r.precond), r.sets, r.outer_iterations, r.krylov_iterations, repr(r.k),
                    f"{r.seconds:.4f}"])
        stream.flush()
    return stream.getvalue() if isinstance(stream, io.StringIO) else ""


def oracle_json(model: ProblemModel, include_matrices: bool = True) -> dict:
    quad = default_quadrature(model)
    k, phi, A, B = oracle_eigenpair(model, quad)
    out = {"problem": model.name, "dimension": int(model.size), "k": float(k), "flux": phi.tolist()}
    if include_matrices:
        out["A"] = A.tolist()
        out["B"] = B.tolist()
    return out


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
