from __future__ import annotations

import csv
import io
import json

import pytest

from slotted_lorawan.cli import main, parse_grid
from slotted_lorawan.errors import ConfigInvalid


def _call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_airtime(capsys):
    code, out, _ = _call(capsys, "airtime", "--sf", "8", "--payload", "200", "--no-crc")
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["t_on_air_us"] == "553472" and row["n_phy"] == "258"


def test_curves_json_and_csv_agree(capsys):
    _, as_csv, _ = _call(capsys, "curves", "--g-steps", "11", "--overhead-k", "2.22")
    _, as_json, _ = _call(capsys, "--format", "json", "curves", "--g-steps", "11", "--overhead-k", "2.22")
    rows_csv = list(csv.DictReader(io.StringIO(as_csv)))
    rows_json = json.loads(as_json)
    assert len(rows_csv) == len(rows_json) == 11
    for a, b in zip(rows_csv, rows_json):
        assert {k: float(v) for k, v in a.items()} == {k: float(v) for k, v in b.items()}


def test_global_flags_after_subcommand(capsys):
    code, out, _ = _call(capsys, "curves", "--g-steps", "2", "--format", "json")
    assert code == 0 and out.startswith("[")


def test_run_missing_config(capsys):
    code, out, err = _call(capsys, "run", "--config", "missing.toml")
    assert code == 2 and out == "" and "config" in err


def test_usage_error(capsys):
    code, out, err = _call(capsys, "frobnicate")
    assert code == 2 and out == "" and err


def test_run_with_trace_and_samples(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text("[scenario]\nn_nodes = 3\nduration_s = 300.0\n")
    out_path = tmp_path / "r.csv"
    trace = tmp_path / "t.csv"
    samples = tmp_path / "sync.csv"
    argv = ["--seed", "4", "--out", str(out_path), "run", "--config", str(cfg)]
    code, out, _ = _call(capsys, *argv, "--trace", str(trace), "--sync-samples", str(samples))
    assert code == 0 and out == ""
    first = out_path.read_bytes()
    assert first.startswith(b"scenario,seed,mode")
    assert trace.read_text().startswith("true_time_us,")
    code, out, _ = _call(capsys, "sync-stats", "--samples", str(samples))
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert int(row["count"]) > 0
    # same argv, same bytes
    _call(capsys, *argv)
    assert out_path.read_bytes() == first


def test_sync_stats_from_config(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text("[scenario]\nn_nodes = 2\nduration_s = 300.0\n")
    code, out, _ = _call(capsys, "sync-stats", "--config", str(cfg))
    assert code == 0 and out.startswith("count,min_us")


def test_sync_stats_empty_is_runtime_fault(tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("node_id,true_time_us,error_us\n")
    code, _, err = _call(capsys, "sync-stats", "--samples", str(p))
    assert code == 3 and "runtime" in err


def test_sweep(capsys):
    code, out, err = _call(
        capsys, "sweep", "--grid", "scenario.n_nodes=2,3", "--grid", "scenario.duration_s=120", "--seeds", "2"
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["scenario.n_nodes"] for r in rows] == ["2", "2", "3", "3"]
    assert all(r["error"] == "" for r in rows)


def test_sweep_bad_point_goes_to_stderr(capsys):
    code, out, err = _call(capsys, "sweep", "--grid", "slot.t_r_us=5", "--grid", "scenario.duration_s=60")
    assert code == 0 and "slot-geometry" in err
    assert "slot-geometry" in out


def test_parse_grid():
    assert parse_grid(["a.b=1,2.5,x", "c.d=true"]) == {"a.b": [1, 2.5, "x"], "c.d": [True]}
    with pytest.raises(ConfigInvalid):
        parse_grid(["nokey"])


def test_preset_fig5(capsys):
    code, out, _ = _call(capsys, "preset", "fig5_curves")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 301
    assert float(rows[-1]["g"]) == pytest.approx(3.0)


def test_unknown_preset(capsys):
    code, _, _ = _call(capsys, "preset", "table9")
    assert code == 2
