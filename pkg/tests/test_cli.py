import json
import os

import pytest

from conftest import r1_instance, r1_start
from ptfm.bench import GenConfig, run_cell
from ptfm.cli import main
from ptfm.lp_core import check_feasibility, load_instance, save_instance
from ptfm.methods import MethodConfig


@pytest.fixture
def r1_file(tmp_path):
    path = tmp_path / "r1.json"
    save_instance(path, r1_instance(), r1_start())
    return path


def test_solve_r1_exact_basis(r1_file, tmp_path):
    report = tmp_path / "rep.json"
    trace = tmp_path / "trace.csv"
    code = main(["solve", "--input", str(r1_file), "--method", "ptfm2",
                 "--finite-termination", "--report", str(report), "--trace", str(trace)])
    assert code == 0
    d = json.loads(report.read_text())
    assert d["termination"] == "finite_term_success"
    assert d["exact_solution"]["basis"] == [1]
    assert d["exact_solution"]["x_star"] == pytest.approx([2.0, 0.0], abs=1e-14)
    lines = trace.read_text().splitlines()
    assert lines[0] == "k,kind,alpha,v0,gap,delta,psi"
    assert len(lines) > 1


def test_solve_to_stdout(r1_file, capsys):
    assert main(["solve", "--input", str(r1_file)]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["termination"] == "eps_reached"
    assert d["final_gap"] <= 1e-8


def test_looser_eps(r1_file, capsys):
    main(["solve", "--input", str(r1_file)])
    tight = json.loads(capsys.readouterr().out)
    main(["solve", "--input", str(r1_file), "--eps", "1e-2"])
    loose = json.loads(capsys.readouterr().out)
    assert loose["predictor_count"] < tight["predictor_count"]
    assert loose["final_gap"] > tight["final_gap"]


def test_iteration_limit_exit_code(r1_file, capsys):
    assert main(["solve", "--input", str(r1_file), "--max-outer", "1"]) == 2


@pytest.mark.parametrize("argv", [
    ["solve", "--input", "x.json", "--method", "simplex"],
    ["solve", "--input", "x.json", "--eps", "-1"],
    ["frobnicate"],
    [],
])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 64


def test_bad_r_is_usage_error(r1_file):
    assert main(["solve", "--input", str(r1_file), "--r", "1.5"]) == 64


def test_unreadable_input(tmp_path):
    assert main(["solve", "--input", str(tmp_path / "missing.json")]) == 66
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["solve", "--input", str(bad)]) == 66


def test_input_without_start(tmp_path):
    path = tmp_path / "nostart.json"
    save_instance(path, r1_instance())
    assert main(["solve", "--input", str(path)]) == 66


def test_unwritable_report(r1_file, tmp_path):
    target = tmp_path / "nodir" / "rep.json"
    assert main(["solve", "--input", str(r1_file), "--report", str(target)]) == 73


def test_gen_and_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--m", "32", "--n", "64", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "--m", "32", "--n", "64", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    inst, u = load_instance(a)
    assert check_feasibility(inst, u).ok


def test_gen_bad_shape(tmp_path):
    assert main(["gen", "--m", "64", "--n", "64", "--out", str(tmp_path / "x.json")]) == 64


def test_gen_unwritable(tmp_path):
    assert main(["gen", "--m", "2", "--n", "4", "--out", str(tmp_path / "no" / "x.json")]) == 73


def test_gen_solve_pipeline_matches_run_cell(tmp_path, capsys):
    cell = run_cell(GenConfig(8, 16, 4, 3), MethodConfig())
    for k in range(3):
        path = tmp_path / f"i{k}.json"
        main(["gen", "--m", "8", "--n", "16", "--seed", "4", "--index", str(k), "--out", str(path)])
        main(["solve", "--input", str(path)])
        d = json.loads(capsys.readouterr().out)
        assert d["predictor_count"] == cell.runs[k].predictors
        assert d["corrector_count"] == cell.runs[k].correctors


def test_reports_reproducible(r1_file, capsys):
    out = []
    for _ in range(2):
        main(["solve", "--input", str(r1_file)])
        d = json.loads(capsys.readouterr().out)
        d.pop("wall_time")
        for rec in d["records"]:
            rec.pop("wall_time")
        out.append(d)
    assert out[0] == out[1]


def test_bench_cells(tmp_path, capsys):
    out = tmp_path / "bench"
    code = main(["bench", "--cells", "4x8,4x10", "--count", "3", "--finite-termination",
                 "--out", str(out)])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "m,n,method,count,mean_pred,rel_std_pct,mean_corr,ft_count,forecast,abs_dev"
    assert len(lines) == 3
    assert os.path.exists(out / "bench.json")


def test_bench_unknown_indicator(tmp_path):
    assert main(["bench", "--cells", "4x8", "--count", "1", "--indicators", "foo",
                 "--out", str(tmp_path)]) == 64


def test_bench_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["bench", "--cells", "4x8", "--count", "1", "--out", str(blocker / "x")]) == 73


@pytest.mark.slow
def test_bench_default_grid_smoke(tmp_path, capsys):
    assert main(["bench", "--count", "20", "--jobs", "4", "--out", str(tmp_path)]) in (0, 2)
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7
