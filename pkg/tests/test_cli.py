import json

import numpy as np
import pytest

from heatsos.cli import EXIT_IO, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, main
from heatsos.pdesim import read_trace, trace_cost
from conftest import CONFIGS

LINEAR = str(CONFIGS / "linear.json")
NONLINEAR = str(CONFIGS / "nonlinear.json")
QUICK = ["--h", "0.02", "--dt", "1e-3", "--no-plots"]


def _last_json(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def _write_config(tmp_path, **overrides):
    raw = json.loads((CONFIGS / "linear.json").read_text())
    raw.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_relax_d6_dump(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert main(["relax", LINEAR, "-o", str(out)]) == EXIT_OK
    rec = _last_json(capsys)
    assert rec["status"] == "optimal" and rec["d"] == 6
    doc = json.loads(out.read_text())
    assert set(doc["measures"]) == {"mu", "mu_I", "mu_F", "mu_W", "mu_E"}
    assert len(doc["measures"]["mu"]["moments"]) == 462


def test_relax_odd_degree_is_a_config_error(tmp_path, capsys):
    assert main(["relax", LINEAR, "--degree", "3", "-o", str(tmp_path / "m.json")]) == EXIT_USAGE
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "config"


def test_relax_zero_data_objective(tmp_path, capsys):
    cfg = _write_config(tmp_path, y0_coeffs=[0, 0])
    code = main(["relax", cfg, "--degree", "4", "--max-iter", "60", "-o", str(tmp_path / "m.json")])
    rec = _last_json(capsys)
    assert abs(rec["objective"]) < 1e-6
    assert code in (EXIT_OK, EXIT_SOLVER)


def test_solver_failure_exit_code(tmp_path, capsys):
    code = main(["relax", LINEAR, "--degree", "4", "--max-iter", "2", "-o", str(tmp_path / "m.json")])
    assert code == EXIT_SOLVER
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "solver"


def test_missing_files_are_io_errors(tmp_path):
    assert main(["relax", str(tmp_path / "nope.json"), "-o", str(tmp_path / "m.json")]) == EXIT_IO
    assert main(["extract", str(tmp_path / "nope.json"), "--form", "linear", "--m", "0", "--p", "1",
                 "-o", str(tmp_path / "c.json")]) == EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", str(bad), "--out-dir", str(tmp_path)]) == EXIT_IO


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["relax"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE


def test_thread_variable_is_validated(tmp_path, monkeypatch):
    monkeypatch.setenv("HEATSOS_THREADS", "many")
    assert main(["simulate", LINEAR, "--out-dir", str(tmp_path), *QUICK]) == EXIT_USAGE
    monkeypatch.setenv("HEATSOS_THREADS", "1")
    assert main(["simulate", LINEAR, "--out-dir", str(tmp_path), *QUICK]) == EXIT_OK


def test_extract_linear_from_d6(linear_d6, session_dir, tmp_path, capsys):
    dump = linear_d6.dump(session_dir)
    out = tmp_path / "c.json"
    assert main(["extract", str(dump), "--form", "linear", "--m", "0", "--p", "5", "-o", str(out)]) == EXIT_OK
    rec = _last_json(capsys)
    assert len(rec["coeffs"]) == 1 and rec["coeffs"][0] < 0
    assert rec["mode"] == "least-squares"


def test_extract_semilinear_shape(nonlinear_d6, tmp_path, capsys):
    dump = nonlinear_d6.dump(tmp_path)
    out = tmp_path / "c.json"
    assert main(["extract", str(dump), "--form", "semilinear", "--m", "1", "--p", "2", "--r", "3",
                 "--mr", "0", "-o", str(out)]) == EXIT_OK
    rec = _last_json(capsys)
    assert len(rec["coeffs"]) == 3 and len(rec["coeffs_delta"]) == 1


def test_extract_budget_violation(linear_d6, session_dir, tmp_path, capsys):
    dump = linear_d6.dump(session_dir)
    code = main(["extract", str(dump), "--form", "general", "--m", "2", "--p", "5",
                 "-o", str(tmp_path / "c.json")])
    assert code == EXIT_USAGE
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "degree-budget" and "d-m" in err["message"]


def test_simulate_zero_control_blowup(tmp_path, capsys):
    assert main(["simulate", NONLINEAR, "--out-dir", str(tmp_path), "--no-plots"]) == EXIT_OK
    rec = _last_json(capsys)
    assert rec["blowup"] and abs(rec["time"] - 0.1) <= 0.05


def test_simulate_zero_data_zero_cost(tmp_path, capsys):
    cfg = _write_config(tmp_path, y0_coeffs=[0, 0])
    assert main(["simulate", cfg, "--out-dir", str(tmp_path), *QUICK]) == EXIT_OK
    assert _last_json(capsys)["cost"] == 0


def test_simulate_writes_parseable_csv_and_figure(tmp_path, capsys):
    assert main(["simulate", LINEAR, "--out-dir", str(tmp_path), "--name", "z",
                 "--h", "0.05", "--dt", "1e-3"]) == EXIT_OK
    rec = _last_json(capsys)
    assert (tmp_path / "z.png").stat().st_size > 0
    assert (tmp_path / "z_report.json").exists()
    back = read_trace(tmp_path / "z")
    assert back.final_cost == rec["cost"]
    assert trace_cost(back, 1e-3) == pytest.approx(rec["cost"], rel=1e-2)


def test_lqr_command(tmp_path, capsys):
    assert main(["lqr", LINEAR, "--out-dir", str(tmp_path), "--no-plots"]) == EXIT_OK
    rec = _last_json(capsys)
    assert rec["residual"] <= 1e-8 and rec["spectral_abscissa"] < 0 and not rec["blowup"]
    assert json.loads((tmp_path / "lqr_gain.json").read_text())["form"] == "lqr"


def test_compare_linear_gap(linear_d6, session_dir, tmp_path, capsys):
    dump = linear_d6.dump(session_dir)
    ctrl = tmp_path / "c.json"
    main(["extract", str(dump), "--form", "linear", "--m", "0", "--p", "5", "-o", str(ctrl)])
    capsys.readouterr()
    assert main(["compare", LINEAR, str(ctrl), "--moments", str(dump), "--out-dir", str(tmp_path),
                 "--extend-tol", "1e-9"]) == EXIT_OK
    rec = _last_json(capsys)
    assert 0 <= rec["relative_gap"] < 0.05
    report = json.loads((tmp_path / "compare_report.json").read_text())
    assert report["bound_consistent"]
    assert report["objective"] <= report["cost_lqr"] + 1e-6
    assert (tmp_path / "compare_sup.png").exists()


def test_report_is_deterministic(tmp_path, capsys):
    runs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert main(["report", LINEAR, "--out-dir", str(out), "--form", "linear", "--m", "0", "--p", "3",
                     *QUICK]) in (EXIT_OK,)
        doc = json.loads((out / "report.json").read_text())
        doc.pop("timings")
        runs.append(doc)
    assert runs[0] == runs[1]


def test_report_on_degree_four(tmp_path, capsys):
    cfg = _write_config(tmp_path, relaxation_degree=4)
    assert main(["report", cfg, "--out-dir", str(tmp_path / "r"), "--form", "linear", "--m", "0",
                 "--p", "3", *QUICK]) == EXIT_OK
    doc = json.loads((tmp_path / "r" / "report.json").read_text())
    assert doc["d"] == 4 and doc["bound_consistent"]
    for name in ("moment_y.csv", "moment_u.csv", "lqr_y.csv", "controller.json", "moments.json"):
        assert (tmp_path / "r" / name).exists()


def test_sweep_ranks_bounded_first(nonlinear_d6, tmp_path, capsys):
    dump = nonlinear_d6.dump(tmp_path)
    code = main(["sweep", NONLINEAR, str(dump), "--form", "semilinear", "--m", "0", "--p", "0,1",
                 "--r", "3", "--mr", "0", "--jobs", "2", "--out-dir", str(tmp_path / "sw")])
    assert code == EXIT_OK
    rows = json.loads((tmp_path / "sw" / "sweep.json").read_text())["rows"]
    flags = [r["blowup"] for r in rows]
    assert flags == sorted(flags)
    costs = [r["cost"] for r in rows if not r["blowup"]]
    assert costs == sorted(costs)
    assert (tmp_path / "sw" / "best_controller.json").exists()
    assert np.isfinite(rows[0]["cost"])
