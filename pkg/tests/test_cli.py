# tests/test_cli.py
import json

import pytest

from cli_app import cli, verify
from common.errors import DomainError
from common.protocol import (
    BRANCH_FIELDS, EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, EXIT_SOLVER, EXIT_VERIFY_FAILED,
)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_rays_include_the_double_point(capsys):
    code, out, _ = run(capsys, "rays", "--r", "3.141592653589793", "--m-max", "2", "--alpha-max", "1")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "kind,m1,m2,alpha,beta"
    assert "double_point,1,2,0.625,0.03515625" in lines
    assert all(float(line.split(",")[4]) > 0 for line in lines[1:])


def test_rays_follow_l1(capsys):
    code, out, _ = run(capsys, "rays", "--r", "1", "--m-max", "1", "--alpha-max", "2", "--output", "json")
    assert code == EXIT_OK
    rows = json.loads(out)
    assert rows and all(row["kind"] == "ray" and row["m2"] is None for row in rows)
    for row in rows:
        assert row["beta"] == pytest.approx(0.6168503 * row["alpha"] - 0.3805042, abs=1e-6)


def test_rays_output_is_deterministic(capsys):
    first = run(capsys, "rays", "--m-max", "3", "--alpha-max", "2")
    second = run(capsys, "rays", "--m-max", "3", "--alpha-max", "2")
    assert first == second


def test_rays_rejects_zero_modes(capsys):
    code, _, err = run(capsys, "rays", "--m-max", "0")
    assert code == EXIT_CONFIG
    assert "m_max" in err


def test_kernel_reports(capsys):
    code, out, _ = run(capsys, "kernel", "--alpha", "1", "--beta", "0.2", "--r", "3.141592653589793",
                       "--n", "201")
    assert code == EXIT_OK
    assert json.loads(out)["dim"] == 0
    code, out, _ = run(capsys, "kernel", "--alpha", "0.625", "--beta", "0.03515625")
    report = json.loads(out)
    assert (report["dim"], report["matched_modes"]) == (2, [1, 2])


@pytest.mark.parametrize("argv, field", [
    (["kernel", "--alpha", "1"], "--beta"),
    (["kernel", "--alpha", "1", "--beta", "0.2", "--n", "200"], "(n)"),
    (["kernel", "--alpha", "-1", "--beta", "0.2"], "(alpha)"),
    (["kernel", "--alpha", "one", "--beta", "0.2"], "(alpha)"),
    (["kernel", "--alpha", "1", "--beta", "0.2", "--output", "csv"], "(output)"),
])
def test_kernel_configuration_errors(capsys, argv, field):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert field in err


def test_config_file_and_flag_precedence(capsys, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("# kernel settings\nalpha = 1\nbeta = 0.2   # off the rays\nn = 101\n")
    code, out, _ = run(capsys, "kernel", "--config", str(config))
    assert code == EXIT_OK
    assert json.loads(out)["dim"] == 0
    code, out, _ = run(capsys, "kernel", "--config", str(config), "--beta", "0.05859375")
    assert json.loads(out)["dim"] == 1


def test_config_file_errors(capsys, tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("colour = blue\n")
    code, _, err = run(capsys, "kernel", "--config", str(config))
    assert code == EXIT_CONFIG
    assert "colour" in err
    code, _, _ = run(capsys, "kernel", "--config", str(tmp_path / "missing.cfg"))
    assert code == EXIT_CONFIG


def test_scan_csv(capsys, tmp_path):
    target = tmp_path / "scan.csv"
    code, out, _ = run(capsys, "scan", "--n", "51", "--resolution", "16", "--alpha-range", "0.5", "1.5",
                       "--beta-range", "0.01", "0.3", "--out", str(target))
    assert code == EXIT_OK
    assert out == ""
    lines = target.read_text().splitlines()
    assert lines[0] == "alpha,beta,sigma_min,sigma_2,dim"
    assert len(lines) == 257


def test_detect(capsys):
    code, out, _ = run(capsys, "detect", "--start", "0.5", "0.05859375", "--end", "1.5", "0.05859375",
                       "--steps", "16")
    assert code == EXIT_OK
    found = json.loads(out)
    assert [c["mode"] for c in found] == [2, 1]
    assert found[1]["alpha"] == pytest.approx(1.0, abs=1e-3)


def test_detect_needs_a_path(capsys):
    assert run(capsys, "detect", "--start", "0.5", "0.1")[0] == EXIT_CONFIG
    assert run(capsys, "detect", "--start", "-0.5", "0.1", "--end", "1", "0.1")[0] == EXIT_CONFIG


def test_reduce_windings(capsys):
    code, out, _ = run(capsys, "reduce", "--m1", "1", "--m2", "2", "--r", "3.141592653589793",
                       "--gamma0", "1", "--offsets", "0.1", "--slopes", "0.3", "1.0")
    assert code == EXIT_OK
    reports = json.loads(out)
    assert [r["winding"] for r in reports] == [-1, 1]
    assert [r["classification"] for r in reports] == [-1, 1]
    assert reports[0]["det_closed_form"] < 0 < reports[1]["det_closed_form"]


def test_reduce_boundary_slope(capsys):
    code, out, _ = run(capsys, "reduce", "--offsets", "0.1", "--slopes", "0.0625")
    assert code == EXIT_OK
    (report,) = json.loads(out)
    assert report["status"] == "boundary"
    assert report["winding"] is None


def test_reduce_solver_failure_keeps_partial_report(capsys):
    code, out, err = run(capsys, "reduce", "--offsets", "0.1", "--slopes", "0.3", "--max-iter", "1")
    assert code == EXIT_SOLVER
    (report,) = json.loads(out)
    assert report["status"] == "solver_failure"
    assert report["det_closed_form"] < 0
    assert report["message"]
    assert "slope=0.3 solver_failure" in err


def test_branch_jsonl(capsys):
    code, out, _ = run(capsys, "branch", "--m", "1", "--free", "alpha", "--fixed-beta", "0.05859375",
                       "--steps", "4", "--downsample", "4")
    assert code == EXIT_OK
    records = [json.loads(line) for line in out.splitlines()]
    assert len(records) == 6
    assert all(list(rec) == BRANCH_FIELDS for rec in records)
    assert records[0]["t"] == 0.0 and records[-1]["t"] == pytest.approx(0.021)
    assert len(records[-1]["x"]) == 51
    assert records[-1]["param_value"] < records[0]["param_value"]


def test_branch_early_stop_is_partial(capsys):
    code, out, _ = run(capsys, "branch", "--m", "1", "--free", "beta", "--fixed-alpha", "1",
                       "--steps", "10", "--dt", "0.05")
    assert code == EXIT_PARTIAL
    assert len(out.splitlines()) < 12


@pytest.mark.parametrize("argv", [
    ["branch", "--m", "1", "--free", "gamma", "--fixed-beta", "0.05"],
    ["branch", "--m", "1", "--free", "alpha"],
    ["branch", "--free", "alpha", "--fixed-beta", "0.05"],
])
def test_branch_configuration_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_CONFIG


def test_verify_reports_failures(capsys, monkeypatch):
    def broken():
        raise DomainError("seeded bug")

    checks = [("fine", lambda: (True, "ok")), ("wrong", lambda: (False, "off by one")), ("raises", broken)]
    monkeypatch.setattr(verify, "checks_for", lambda level: checks)
    code, out, err = run(capsys, "verify", "--level", "quick")
    assert code == EXIT_VERIFY_FAILED
    summary = json.loads(out)
    assert (summary["passed"], summary["failed"]) == (1, 2)
    assert "[PASS] fine: ok" in err
    assert "[FAIL] wrong: off by one" in err
    assert "[FAIL] raises: DomainError: seeded bug" in err


def test_verify_all_passing(capsys, monkeypatch):
    monkeypatch.setattr(verify, "checks_for", lambda level: [("fine", lambda: (True, "ok"))])
    code, out, _ = run(capsys, "verify")
    assert code == EXIT_OK
    assert json.loads(out)["level"] == "quick"


def test_argparse_errors_map_to_config_exit(capsys):
    assert run(capsys)[0] == EXIT_CONFIG
    assert run(capsys, "verify", "--level", "huge")[0] == EXIT_CONFIG
    assert run(capsys, "--help")[0] == EXIT_OK


@pytest.mark.slow
def test_verify_quick_passes(capsys):
    code, out, err = run(capsys, "verify", "--level", "quick")
    assert code == EXIT_OK, err
    assert json.loads(out)["failed"] == 0


@pytest.mark.slow
@pytest.mark.parametrize("name, check", verify.FULL_CHECKS[len(verify.QUICK_CHECKS):])
def test_full_checks(name, check):
    passed, message = check()
    assert passed, f"{name}: {message}"


def _refinement_floors():
    grids = [verify.build_grid(n, verify.R) for n in verify.REFINEMENT]
    return [g.h for g in grids], [verify.roundoff_floor(2.0, g) for g in grids]


def test_asymmetry_bound_allows_a_roundoff_plateau():
    spacings, floors = _refinement_floors()
    assert verify.asymmetry_within_bound(spacings, [2.06e-8, 5.19e-9, 3.12e-9], floors)
    assert verify.asymmetry_within_bound(spacings, [2.0e-8, 5.0e-9, 1.25e-9], [0.0] * 3)


def test_asymmetry_bound_rejects_a_stalled_asymmetry():
    spacings, floors = _refinement_floors()
    assert not verify.asymmetry_within_bound(spacings, [2e-8, 2e-8, 2e-8], floors)
    assert not verify.asymmetry_within_bound(spacings, [2e-8, 1e-8, 5e-9], [0.0] * 3)


def test_self_adjointness_check_passes():
    passed, message = verify.check_self_adjointness()
    assert passed, message
