"""Command line interface: artifacts, exit codes, configuration handling."""

import json
import subprocess
import sys

import numpy as np
import pytest

import sharmonic as sh
from sharmonic.cli import main


def _read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return header, rows


# ---------------------------------------------------------------------------
# fraclap command


def test_fraclap_block_writes_artifacts(tmp_path, capsys):
    csv_path = tmp_path / "out.csv"
    json_path = tmp_path / "out.json"
    rc = main(["fraclap", "--target", "block:t=1", "--s", "0.6", "--grid", "21",
               "--out-csv", str(csv_path), "--out-json", str(json_path)])
    assert rc == 0
    header, rows = _read_csv(csv_path)
    assert header == ["x", "value", "fraclap_value", "tail_halfwidth"]
    assert len(rows) == 21
    for row in rows:
        assert abs(row[2]) <= 1e-4  # annihilated on (-0.9, 0.9)
        assert row[3] >= 0.0
    payload = json.loads(json_path.read_text())
    assert payload["command"] == "fraclap"
    assert len(payload["rows"]) == 21
    out = capsys.readouterr().out
    assert "fraclap target=block:t=1.0" in out
    assert "max|result|=" in out


def test_fraclap_constant_gives_exact_zero_column(tmp_path):
    csv_path = tmp_path / "c.csv"
    rc = main(["fraclap", "--target", "const:1", "--grid", "7",
               "--out-csv", str(csv_path)])
    assert rc == 0
    _, rows = _read_csv(csv_path)
    assert all(row[2] == 0.0 for row in rows)


def test_fraclap_pv_route(tmp_path):
    csv_path = tmp_path / "pv.csv"
    rc = main(["fraclap", "--target", "sin", "--method", "pv", "--grid", "3",
               "--out-csv", str(csv_path)])
    assert rc == 0
    header, rows = _read_csv(csv_path)
    assert header == ["x", "value", "fraclap_value"]
    assert len(rows) == 3


def test_fraclap_unknown_target_exits_2(capsys):
    rc = main(["fraclap", "--target", "cubic"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_fraclap_missing_csv_exits_2_and_names_path(capsys):
    rc = main(["fraclap", "--target", "csv:no/such/grid.csv"])
    assert rc == 2
    assert "no/such/grid.csv" in capsys.readouterr().err


def test_fraclap_rejects_growing_target(capsys):
    rc = main(["fraclap", "--target", "x2", "--grid", "2"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_flag_exits_2_without_artifacts(tmp_path):
    out = tmp_path / "never.csv"
    with pytest.raises(SystemExit) as info:
        main(["fraclap", "--target", "sin", "--s", "abc",
              "--out-csv", str(out)])
    assert info.value.code == 2
    assert not out.exists()


def test_out_of_range_order_exits_2(capsys):
    rc = main(["fraclap", "--target", "sin", "--s", "1.5"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# approximate command


def test_approximate_writes_report_trace_and_readable_combo(tmp_path):
    csv_path = tmp_path / "trace.csv"
    json_path = tmp_path / "report.json"
    rc = main(["approximate", "--target", "x2", "--epsilon", "0.0625",
               "--grid", "9", "--out-csv", str(csv_path),
               "--out-json", str(json_path)])
    assert rc == 0
    header, rows = _read_csv(csv_path)
    assert header == ["x", "target", "v_eps", "diff", "residual"]
    for row in rows:
        assert abs(row[3]) <= 0.0625
        assert 0.0 <= row[4] <= 1e-3
    payload = json.loads(json_path.read_text())
    assert payload["report"]["epsilon_total"] <= 0.0625
    assert payload["report"]["n_blocks"] == len(payload["combo"]["blocks"]) > 0

    # the artifact must reproduce the function it describes
    combo = sh.combo_from_json(json_path.read_text())
    xs = np.array([row[0] for row in rows])
    got = sh.combo_eval(combo, xs)
    want = np.array([row[2] for row in rows])
    assert np.max(np.abs(got - want)) <= 1e-9


def test_approximate_impossible_budget_exits_4_with_diagnostic(tmp_path, capsys):
    json_path = tmp_path / "fail.json"
    rc = main(["approximate", "--target", "exp", "--epsilon", "1e-8",
               "--degree-cap", "5", "--out-json", str(json_path)])
    assert rc == 4
    assert "error:" in capsys.readouterr().err
    payload = json.loads(json_path.read_text())
    assert "error" in payload
    assert payload["target"] == "exp"


def test_approximate_zero_target_emits_empty_block_list(tmp_path):
    json_path = tmp_path / "zero.json"
    rc = main(["approximate", "--target", "const:0", "--grid", "5",
               "--out-json", str(json_path)])
    assert rc == 0
    payload = json.loads(json_path.read_text())
    assert payload["combo"]["blocks"] == []
    assert payload["report"]["n_blocks"] == 0


def test_approximate_negative_epsilon_exits_2(capsys):
    rc = main(["approximate", "--target", "sin", "--epsilon", "-0.5"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# demo commands


def test_demo_harnack_artifacts(tmp_path):
    csv_path = tmp_path / "h.csv"
    json_path = tmp_path / "h.json"
    rc = main(["demo", "harnack", "--grid", "101",
               "--out-csv", str(csv_path), "--out-json", str(json_path)])
    assert rc == 0
    _, rows = _read_csv(csv_path)
    assert all(row[1] >= 0.0 for row in rows)
    payload = json.loads(json_path.read_text())
    report = payload["report"]
    assert report["nonneg_margin"] >= 0.0
    assert report["inf_inner"] <= 1e-10
    assert report["sup_inner"] >= 0.125
    assert report["harnack_ratio"] is None or report["harnack_ratio"] >= 1e10
    assert report["negative_site"] is None or report["negative_site"][1] < 0.0
    assert payload["combo"]["blocks"]


def test_demo_logistic_artifacts(tmp_path):
    csv_path = tmp_path / "l.csv"
    json_path = tmp_path / "l.json"
    rc = main(["demo", "logistic", "--grid", "11",
               "--out-csv", str(csv_path), "--out-json", str(json_path)])
    assert rc == 0
    header, rows = _read_csv(csv_path)
    assert header == ["x", "u", "sigma", "sigma_eps", "residual"]
    assert len(rows) == 11
    payload = json.loads(json_path.read_text())
    report = payload["report"]
    assert report["feasibility_margin"] == 0.0
    assert report["residual_reaction"] == 0.0
    assert report["sigma_error"] <= 0.05


def test_demo_meanvalue_table(tmp_path, capsys):
    csv_path = tmp_path / "mv.csv"
    json_path = tmp_path / "mv.json"
    rc = main(["demo", "meanvalue", "--target", "x2",
               "--out-csv", str(csv_path), "--out-json", str(json_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "rho,ball,sphere,ball_error,sphere_error" in out
    assert "observed orders" in out
    assert "exact" in out  # sphere rule is exact on quadratics
    _, rows = _read_csv(csv_path)
    assert len(rows) == 3
    payload = json.loads(json_path.read_text())
    assert payload["orders"]["sphere"] == [None, None]


def test_demo_meanvalue_rejects_bad_radii(capsys):
    assert main(["demo", "meanvalue", "--rhos", "0.1,abc"]) == 2
    assert main(["demo", "meanvalue", "--rhos=-0.1,0.01"]) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# configuration files


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\ns = 0.6\ngrid=7\n\n")
    j1 = tmp_path / "a.json"
    rc = main(["fraclap", "--target", "block:t=2", "--config", str(cfg),
               "--out-json", str(j1)])
    assert rc == 0
    payload = json.loads(j1.read_text())
    assert payload["s"] == 0.6
    assert len(payload["rows"]) == 7

    j2 = tmp_path / "b.json"
    rc = main(["fraclap", "--target", "block:t=2", "--config", str(cfg),
               "--s", "0.7", "--out-json", str(j2)])
    assert rc == 0
    assert json.loads(j2.read_text())["s"] == 0.7


def test_config_file_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("wibble=3\n")
    rc = main(["fraclap", "--target", "sin", "--config", str(cfg)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "wibble" in err
    assert ":1:" in err


def test_config_file_malformed_line_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("just nonsense\n")
    rc = main(["fraclap", "--target", "sin", "--config", str(cfg)])
    assert rc == 2
    assert "key=value" in capsys.readouterr().err


def test_config_file_missing_exits_2(capsys):
    rc = main(["fraclap", "--target", "sin", "--config", "/no/such.cfg"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_config_file_non_numeric_value_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("s=half\n")
    rc = main(["fraclap", "--target", "sin", "--config", str(cfg)])
    assert rc == 2
    assert "not a number" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# determinism


def test_artifacts_are_byte_identical_across_runs(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACLAP_SEEDLESS", "20260823")
    pairs = []
    for tag in ("one", "two"):
        csv_path = tmp_path / f"{tag}.csv"
        json_path = tmp_path / f"{tag}.json"
        rc = main(["approximate", "--target", "sin", "--epsilon", "0.1",
                   "--grid", "17", "--out-csv", str(csv_path),
                   "--out-json", str(json_path)])
        assert rc == 0
        pairs.append((csv_path.read_bytes(), json_path.read_bytes()))
    assert pairs[0][0] == pairs[1][0]
    assert pairs[0][1] == pairs[1][1]


def test_fraclap_byte_identical_across_runs(tmp_path):
    blobs = []
    for tag in ("one", "two"):
        csv_path = tmp_path / f"{tag}.csv"
        rc = main(["fraclap", "--target", "block:t=1", "--grid", "9",
                   "--out-csv", str(csv_path)])
        assert rc == 0
        blobs.append(csv_path.read_bytes())
    assert blobs[0] == blobs[1]


# ---------------------------------------------------------------------------
# module entry point


def test_module_entry_point_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "sharmonic", "fraclap", "--target", "const:1",
         "--grid", "3"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "max|result|=0" in proc.stdout
    assert "elapsed:" in proc.stderr
