import csv
import io
import json

import pytest

from snkeig.cli import cli_main
from snkeig.harness import BENCH_HEADER, resolve_options
from snkeig.problem_io import write_problem
from snkeig.problems import get_problem


def run(argv, capsys):
    code = cli_main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_builtin_power(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(["solve", "inf1g.prob", "--solver", "power", "--report", str(report)], capsys)
    assert code == 0
    data = json.loads(report.read_text())
    assert set(data) >= {"problem", "solver", "config", "k", "outer_iterations", "krylov_iterations", "converged",
                         "history", "seconds"}
    assert data["k"] == pytest.approx(1.2, abs=1e-8)
    assert all({"k", "flux_delta"} <= set(h) for h in data["history"])
    assert "oracle_delta" in data
    # the printed row carries the same values as the report
    row = out.splitlines()[-1].split()
    assert int(row[3]) == data["outer_iterations"] and int(row[4]) == data["krylov_iterations"]
    assert float(row[5]) == data["k"]


def test_compare_three_solvers(capsys, tmp_path):
    report = tmp_path / "c.json"
    code, out, _ = run(["compare", "inf2g", "--solvers", "power,rqi,arnoldi", "--report", str(report)], capsys)
    assert code == 0
    rows = json.loads(report.read_text())
    assert [r["solver"] for r in rows] == ["power", "rqi", "arnoldi"]
    assert all(abs(r["k"] - 10 / 9) <= 1e-7 for r in rows)
    assert len(out.strip().splitlines()) == 5


def test_problem_file_options_and_flag_override(capsys, tmp_path):
    path = tmp_path / "slab.prob"
    write_problem(path, get_problem("slab_vac"), {"solver": "arnoldi", "ktol": "1e-9"})
    report = tmp_path / "r.json"
    assert cli_main(["solve", str(path), "--report", str(report), "--no-oracle"]) == 0
    data = json.loads(report.read_text())
    assert data["solver"] == "arnoldi" and data["config"]["ktol"] == 1e-9 and "oracle_k" not in data
    assert cli_main(["solve", str(path), "--solver", "rqi", "--precond", "--sets", "1", "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["solver"] == "rqi" and data["config"]["precond"] is True


def test_non_convergence_exit_code(capsys):
    code, out, _ = run(["solve", "dr95", "--max-outer", "3"], capsys)
    assert code == 2 and "NOT CONVERGED" in out


@pytest.mark.parametrize("argv", [["solve", "no_such_problem"], ["solve", "inf1g", "--bogus"],
                                  ["solve", "inf1g", "--solver", "jacobi"], ["frobnicate"],
                                  ["solve", "inf1g", "--mg", "gs", "--sets", "2"],
                                  ["bench", "--problems", "nope"]])
def test_input_errors_exit_one(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_oracle_json(capsys):
    code, out, _ = run(["oracle", "inf2g"], capsys)
    data = json.loads(out)
    assert code == 0 and data["k"] == pytest.approx(10 / 9, rel=1e-12)
    assert len(data["A"]) == data["dimension"] == len(data["flux"])


def _bench(capsys):
    code, out, _ = run(["bench", "--suite", "builtin", "--problems", "inf1g,inf2g", "--sets", "1,2"], capsys)
    assert code == 0
    return list(csv.reader(io.StringIO(out)))


def test_bench_csv_is_deterministic_apart_from_time(capsys):
    first, second = _bench(capsys), _bench(capsys)
    assert tuple(first[0]) == BENCH_HEADER
    assert len(first) > 1
    strip = lambda rows: [r[:-1] for r in rows]  # noqa: E731
    assert strip(first) == strip(second)


def test_export_writes_loadable_files(capsys, tmp_path):
    assert cli_main(["export", str(tmp_path)]) == 0
    capsys.readouterr()
    assert cli_main(["solve", str(tmp_path / "inf1g.prob"), "--no-oracle"]) == 0


def test_resolve_options_layers():
    opts = resolve_options({"ktol": "1e-5", "precond": "yes"}, {"ktol": None, "sets": 2})
    assert opts["ktol"] == 1e-5 and opts["precond"] is True and opts["sets"] == 2 and opts["solver"] == "power"
