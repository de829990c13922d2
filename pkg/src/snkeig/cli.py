"""Command-line entry point: ``snkeig solve|compare|oracle|bench|export``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .errors import ConvergenceError, SnkeigError
from .problem_io import write_problem
from .problems import BUILTIN, builtin_problems

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool reserves 2 for non-convergence."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver options (override the problem file's [solver] section)")
    g.add_argument("--mg", choices=("gs", "krylov"))
    g.add_argument("--partition", choices=("full", "upscatter"))
    g.add_argument("--sets", type=int, help="energy sets for the MG Krylov solver")
    g.add_argument("--precond", action="store_true", default=None, help="enable the energy multigrid preconditioner")
    g.add_argument("--mge-w", type=float, dest="mge_w", help="Richardson weight")
    g.add_argument("--mge-r", type=int, dest="mge_r", help="relaxations per level")
    g.add_argument("--mge-v", type=int, dest="mge_v", help="V-cycles per application")
    g.add_argument("--mge-depth", dest="mge_depth", help="grid depth or 'auto'")
    g.add_argument("--mge-quad", choices=("coarse", "same"), dest="mge_quad",
                   help="quadrature for preconditioner sweeps (coarse needs vacuum boundaries)")
    g.add_argument("--restart", type=int, help="GMRES restart length")
    g.add_argument("--ktol", type=float)
    g.add_argument("--fluxtol", type=float)
    g.add_argument("--krylov-tol", type=float, dest="krylov_tol")
    g.add_argument("--max-outer", type=int, dest="max_outer")
    g.add_argument("--arnoldi-mode", choices=("energy_dependent", "energy_independent"), dest="arnoldi_mode")


_FLAG_KEYS = ("mg", "partition", "sets", "precond", "mge_w", "mge_r", "mge_v", "mge_depth", "mge_quad", "restart",
              "ktol", "fluxtol", "krylov_tol", "max_outer", "arnoldi_mode")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="snkeig", description="Multigroup SN k-eigenvalue solvers.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one problem with one eigensolver")
    p.add_argument("problem", help="problem file, or a built-in name such as inf1g")
    p.add_argument("--solver", choices=("power", "rqi", "arnoldi"))
    p.add_argument("--report", type=Path, help="write the JSON report here")
    p.add_argument("--no-oracle", action="store_true", help="skip the dense reference on small problems")
    _solver_flags(p)

    p = sub.add_parser("compare", help="run several eigensolvers on one problem")
    p.add_argument("problem")
    p.add_argument("--solvers", default="power,rqi,arnoldi", help="comma-separated list")
    p.add_argument("--report", type=Path, help="write a JSON list of reports here")
    p.add_argument("--no-oracle", action="store_true")
    _solver_flags(p)

    p = sub.add_parser("oracle", help="dense reference eigenpair (and matrices) as JSON")
    p.add_argument("problem")
    p.add_argument("--no-matrices", action="store_true", help="omit the probed matrices")
    p.add_argument("--output", type=Path)

    p = sub.add_parser("bench", help="run the built-in library and print CSV rows")
    p.add_argument("--suite", choices=("builtin",), default="builtin")
    p.add_argument("--problems", help="comma-separated subset of the built-in names")
    p.add_argument("--sets", default="1", help="comma-separated energy-set counts")
    p.add_argument("--output", type=Path, help="write CSV here instead of stdout")

    p = sub.add_parser("export", help="write the built-in problems as problem files")
    p.add_argument("directory", type=Path)
    return parser


def _options(args, file_options):
    flags = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    if getattr(args, "solver", None):
        flags["solver"] = args.solver
    return harness.resolve_options(file_options, flags)


def _cmd_solve(args) -> int:
    model, file_opts = harness.load(args.problem)
    opts = _options(args, file_opts)
    report = harness.compare(model, opts, [opts["solver"]], with_oracle=not args.no_oracle)
    print(report.table())
    if args.report:
        harness.write_json(args.report, report.to_json(0))
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _cmd_compare(args) -> int:
    model, file_opts = harness.load(args.problem)
    opts = _options(args, file_opts)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    if not solvers:
        raise SnkeigError("--solvers is empty")
    report = harness.compare(model, opts, solvers, with_oracle=not args.no_oracle)
    print(report.table())
    if args.report:
        harness.write_json(args.report, [report.to_json(i) for i in range(len(report.rows))])
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _cmd_oracle(args) -> int:
    model, _ = harness.load(args.problem)
    data = harness.oracle_json(model, include_matrices=not args.no_matrices)
    text = json.dumps(data)
    if args.output:
        args.output.write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def _cmd_bench(args) -> int:
    names = list(BUILTIN) if not args.problems else [s.strip() for s in args.problems.split(",")]
    unknown = [n for n in names if n not in BUILTIN]
    if unknown:
        raise SnkeigError(f"unknown built-in problems: {', '.join(unknown)}")
    models = [BUILTIN[n]() for n in names]
    try:
        sets = tuple(int(s) for s in args.sets.split(","))
    except ValueError:
        raise SnkeigError(f"--sets must be comma-separated integers, got {args.sets!r}") from None
    base = harness.resolve_options()
    rows = []
    stream = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        harness.bench_csv(_collect(harness.bench_rows(models, base, sets=sets), rows), stream)
    finally:
        if args.output:
            stream.close()
    return EXIT_OK if all(r.converged for _, r in rows) else EXIT_NOT_CONVERGED


def _collect(gen, sink):
    for item in gen:
        sink.append(item)
        yield item


def _cmd_export(args) -> int:
    args.directory.mkdir(parents=True, exist_ok=True)
    for model in builtin_problems():
        path = args.directory / f"{model.name}.prob"
        write_problem(path, model)
        print(path)
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "compare": _cmd_compare, "oracle": _cmd_oracle, "bench": _cmd_bench,
             "export": _cmd_export}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (SnkeigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
