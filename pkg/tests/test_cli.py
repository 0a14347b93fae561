"""Command line surface: output schemas, determinism, exit codes."""

import json
import subprocess
import sys

import pytest

from qpersuade.cli import main

FRONTIER_HEADER = "theta,x_ap,x_sm,W_L_ap,W_H_ap,W_L_sm,W_H_sm,sm_equals_ap"
XGRID_HEADER = "x,W_L,W_H,L_value"
HEATMAP_HEADER = "lambda_h,theta,x_sm,sm_equals_ap"
ABANDON_HEADER = "gamma,theta,n_states,tail_bound,w_l,w_h,objective"


def test_benchmarks_json_payload(capsys):
    rc = main(["benchmarks", "--lambda-l", "0.13", "--lambda-h", "0.87",
               "--cost", "0.15"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["m_fi"] == 6
    assert data["p_ni"] == 0.0
    assert data["ni_dominant"] is True
    assert data["fi_dominated"] is True
    # low-need users stay out; high-need users still join the congested
    # queue, so their no-information welfare is strictly negative
    assert data["ni"]["w_l"] == 0.0 and data["ni"]["w_h"] < 0.0
    assert data["lambda_bar_h"] == 0.85
    assert data["fi"]["threshold"] == 6
    for key in ("lambda_l", "lambda_h", "cost", "fi", "ni", "lambda_bar_l"):
        assert key in data


def test_benchmarks_rejects_out_of_range_cost(capsys):
    rc = main(["benchmarks", "--lambda-l", "0.5", "--cost", "1.5"])
    assert rc == 2
    assert "--cost" in capsys.readouterr().err


def test_benchmarks_requires_rate(capsys):
    rc = main(["benchmarks", "--cost", "0.15"])
    assert rc == 2
    assert "--lambda-l" in capsys.readouterr().err


def test_frontier_csv_schema(tmp_path):
    rc = main(["frontier", "--lambda-l", "0.5", "--cost", "0.15",
               "--thetas", "0:1:0.1", "--out-dir", str(tmp_path)])
    assert rc == 0
    frontier = (tmp_path / "frontier.csv").read_text().splitlines()
    assert frontier[0] == FRONTIER_HEADER
    assert len(frontier) == 1 + 11
    assert all(len(line.split(",")) == 8 for line in frontier[1:])
    xgrid = (tmp_path / "xgrid.csv").read_text().splitlines()
    assert xgrid[0] == XGRID_HEADER
    # grid covers [0, m_fi + 2] in hundredths; m_fi = 6 at cost 0.15
    assert len(xgrid) == 1 + 100 * (6 + 2) + 1
    first = frontier[1].split(",")
    assert float(first[0]) == 0.0
    assert first[7] in ("true", "false")


def test_frontier_byte_deterministic(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    args = ["frontier", "--lambda-l", "0.4", "--lambda-h", "0.3",
            "--cost", "0.2", "--thetas", "0:1:0.25"]
    assert main(args + ["--out-dir", str(d1)]) == 0
    assert main(args + ["--out-dir", str(d2)]) == 0
    for name in ("frontier.csv", "xgrid.csv"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_heatmap_sweep_skips_saturated_rate(tmp_path, capsys):
    rc = main(["frontier", "--lambda-l", "0.5", "--cost", "0.15",
               "--sweep-lambda-h", "0.5:1:0.25", "--sweep-theta", "0:1:0.5",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    assert "skipping" in capsys.readouterr().err
    lines = (tmp_path / "heatmap.csv").read_text().splitlines()
    assert lines[0] == HEATMAP_HEADER
    # lambda_h = 1.0 dropped, so 2 rates x 3 thetas survive
    assert len(lines) == 1 + 2 * 3
    top = [line for line in lines[1:] if line.startswith("0.9")]
    assert all(line.endswith("true") for line in top)


def test_heatmap_insensitive_to_worker_count(tmp_path, monkeypatch):
    args = ["frontier", "--lambda-l", "0.5", "--cost", "0.15",
            "--sweep-lambda-h", "0.2:0.8:0.2", "--sweep-theta", "0:1:0.5"]
    monkeypatch.setenv("QP_THREADS", "1")
    assert main(args + ["--out-dir", str(tmp_path / "serial")]) == 0
    monkeypatch.setenv("QP_THREADS", "4")
    assert main(args + ["--out-dir", str(tmp_path / "pool")]) == 0
    assert (tmp_path / "serial" / "heatmap.csv").read_bytes() == \
        (tmp_path / "pool" / "heatmap.csv").read_bytes()


def test_bad_worker_count_is_validation_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QP_THREADS", "abc")
    rc = main(["frontier", "--lambda-l", "0.5", "--cost", "0.15",
               "--sweep-lambda-h", "0.2:0.8:0.2", "--out-dir",
               str(tmp_path)])
    assert rc == 2
    assert "QP_THREADS" in capsys.readouterr().err


def test_abandon_table(capsys):
    rc = main(["extensions", "abandon", "--lambda-l", "0.5", "--lambda-h",
               "0.3", "--cost", "0.15", "--gamma", "0,0.02",
               "--thetas", "0:1:0.5"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ABANDON_HEADER
    assert len(lines) == 1 + 2 * 3
    for line in lines[1:]:
        cells = line.split(",")
        g, theta = float(cells[0]), float(cells[1])
        w_l, w_h, obj = (float(c) for c in cells[4:7])
        assert obj == pytest.approx(theta * w_l + (1 - theta) * w_h,
                                    abs=1e-9)
        assert float(cells[3]) <= 1e-9  # truncation tail bound


def test_multitype_one_shot_json(capsys):
    rc = main(["extensions", "multitype", "--rates", "0.2,0.2,0.3",
               "--outside", "0,-0.25,-inf", "--weights", "0.25,0.25,0.5",
               "--cost", "0.25"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["welfare_sm"]) == 3
    assert data["gap"] >= -1e-7
    assert data["objective_ap"] == pytest.approx(
        sum(w * v for w, v in zip([0.25, 0.25, 0.5], data["welfare_ap"])),
        abs=1e-9)
    assert data["n_states"] > 3 and data["tail_bound"] <= 1e-8


def test_multitype_length_mismatch(capsys):
    rc = main(["extensions", "multitype", "--rates", "0.2,0.2",
               "--outside", "0,-0.25,-inf", "--weights", "0.5,0.5",
               "--cost", "0.25"])
    assert rc == 2
    assert "must have equal lengths" in capsys.readouterr().err


def test_simulate_json_smoke(capsys):
    rc = main(["simulate", "--lambda-l", "0.4", "--lambda-h", "0.2",
               "--cost", "0.2", "--threshold", "3", "--horizon", "1e4",
               "--seed", "7"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["backend"] in ("cython", "python")
    assert data["event_count"] > 1000
    assert abs(sum(data["empirical_pi"]) - 1.0) < 1e-9
    assert data["joins_l"] <= data["arrivals_l"]


def test_simulate_requires_mechanism(capsys):
    rc = main(["simulate", "--lambda-l", "0.4", "--cost", "0.2"])
    assert rc == 2
    assert "--threshold or --p" in capsys.readouterr().err


def test_simulate_explicit_p_vector(capsys):
    rc = main(["simulate", "--lambda-l", "0.4", "--lambda-h", "0.2",
               "--cost", "0.2", "--p", "1,0.5", "--tail-join", "0",
               "--horizon", "1e4", "--seed", "7"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["max_queue_length"] >= 2


def test_config_file_with_flag_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# base case\nlambda-l=0.2\ncost=0.3\n")
    rc = main(["benchmarks", "--config", str(conf), "--cost", "0.15"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["lambda_l"] == 0.2
    assert data["cost"] == 0.15


def test_config_unknown_key(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("lambda-l=0.2\nnope=3\n")
    rc = main(["benchmarks", "--config", str(conf), "--cost", "0.15"])
    assert rc == 2
    assert "unknown config key" in capsys.readouterr().err


def test_missing_config_file_is_io_error(capsys):
    rc = main(["benchmarks", "--lambda-l", "0.5", "--cost", "0.15",
               "--config", "/nonexistent/run.conf"])
    assert rc == 3


def test_unwritable_output_is_io_error(capsys):
    rc = main(["benchmarks", "--lambda-l", "0.5", "--cost", "0.15",
               "--out", "/nonexistent_dir_xyz/out.json"])
    assert rc == 3


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qpersuade", "benchmarks",
         "--lambda-l", "0.5", "--cost", "0.15"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["m_fi"] == 6
