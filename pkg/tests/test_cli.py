import json
import math

import pytest

from yamabe_lab.cli import RunConfig, UsageError, main, read_config_file, resolve_config
from yamabe_lab.reports import SCAN_COLUMNS, TRACE_COLUMNS, read_csv


@pytest.fixture(autouse=True)
def pinned_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_invariants_equality(capsys):
    code, out, _ = run(capsys, "invariants", "--k", "2", "--l", "2", "--t", "2")
    assert code == 0
    data = json.loads(out)
    assert data["energy"] == pytest.approx(12 * math.sqrt(2) * math.pi, rel=1e-12)
    assert data["classification"] == "equality"
    assert data["meta"]["seed"] == 42
    assert data["meta"]["wall_clock"] == "2023-11-14T22:13:20Z"
    assert data["meta"]["config"]["t"] == 2.0


def test_invariants_einstein(capsys):
    code, out, _ = run(capsys, "invariants", "--k", "2", "--l", "2", "--t", "1")
    assert code == 0 and json.loads(out)["classification"] == "einstein"


def test_invariants_csv(capsys):
    code, out, _ = run(capsys, "invariants", "--t", "1.5", "--format", "csv")
    assert code == 0
    (row,) = read_csv(out)
    assert row["classification"] == "necessary_holds"
    assert out.startswith("# yamabe-lab")


def test_t_below_one_is_usage_error(capsys):
    code, _, err = run(capsys, "invariants", "--k", "2", "--l", "2", "--t", "0.5")
    assert code == 2
    assert "t must be ≥ 1" in err


def test_scan_csv(capsys):
    code, out, _ = run(capsys, "scan", "--t-min", "1", "--t-max", "2.5", "--steps", "16")
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 16
    assert list(rows[0]) == [c for c in SCAN_COLUMNS if c != "estimate"]
    ts = [float(r["t"]) for r in rows]
    labels = [r["classification"] for r in rows]
    assert labels[0] == "einstein"
    ok = [t for t, lab in zip(ts, labels) if lab != "violated"]
    bad = [t for t, lab in zip(ts, labels) if lab == "violated"]
    assert max(ok) <= 2.0 < min(bad)
    assert all(float(r["drop"]) > 0 for r in rows if r["classification"] == "violated")
    assert all(r["drop"] == "" for r in rows if r["classification"] != "violated")


def test_scan_with_minimizer_column(capsys):
    code, out, _ = run(
        capsys, "scan", "--t-min", "2", "--t-max", "2.5", "--steps", "2", "--with-minimizer", "--lmax", "2", "--restarts", "2"
    )
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == SCAN_COLUMNS
    assert float(rows[1]["estimate"]) < float(rows[1]["energy"])


@pytest.mark.parametrize("argv", [["--t-min", "2", "--t-max", "1.5"], ["--t-min", "2", "--t-max", "2"], ["--steps", "0"]])
def test_empty_range(capsys, argv):
    code, _, err = run(capsys, "scan", *argv)
    assert code == 2 and "empty" in err


def test_unknown_flag_is_error(capsys):
    code, _, _ = run(capsys, "invariants", "--bogus", "1")
    assert code == 2


def test_unknown_command_is_error(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# example\nk = 3\nl = 2\nrestarts = 3\nseed = 7\n")
    merged = resolve_config(["minimize", "--config", str(cfg), "--seed", "9"])
    assert (merged.k, merged.l, merged.restarts, merged.seed) == (3, 2, 3, 9)
    assert merged.lmax == 6 and merged.grid_degree == 24 and merged.tol == 1e-6


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(UsageError, match="unknown key"):
        read_config_file(bad)
    bad.write_text("just words\n")
    with pytest.raises(UsageError):
        read_config_file(bad)


def test_config_file_usage_exit(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("steps = many\n")
    code, _, _ = run(capsys, "scan", "--config", str(bad))
    assert code == 2


def test_runconfig_validation():
    with pytest.raises(UsageError):
        RunConfig("invariants", tol=0.0).validate()
    with pytest.raises(UsageError):
        RunConfig("scan", format="png").validate()


def test_minimize_json_and_trace(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, _, _ = run(capsys, "minimize", "--t", "2.5", "--lmax", "3", "--restarts", "3", "--out", str(out))
    assert code == 0
    data = json.loads(out.read_text())
    for key in ("estimate", "gap_to_energy", "gap_to_aubin", "seed", "basis_size"):
        assert key in data
    assert data["estimate"] < data["energy"]
    assert data["gap_to_energy"] > 0
    trace = read_csv((tmp_path / "m.trace.csv").read_text())
    assert list(trace[0]) == TRACE_COLUMNS
    assert {int(r["restart"]) for r in trace} == {0, 1, 2}


def test_minimize_byte_identical(tmp_path, capsys):
    out = tmp_path / "m.json"
    args = ["minimize", "--t", "2.5", "--lmax", "3", "--restarts", "3", "--out", str(out)]
    assert main(args) == 0
    first = out.read_bytes(), (tmp_path / "m.trace.csv").read_bytes()
    assert main(args) == 0
    second = out.read_bytes(), (tmp_path / "m.trace.csv").read_bytes()
    assert first == second


def test_static_check_critical(capsys):
    code, out, _ = run(capsys, "static-check", "--k", "2", "--l", "2")
    assert code == 0
    data = json.loads(out)
    assert data["status"] == "static"
    assert all(v <= 1e-8 for k, v in data["residuals"].items() if k != "rayleigh")
    assert data["residuals"]["rayleigh"] == pytest.approx(2.0, abs=1e-10)
    assert data["cokernel_max"] <= 1e-10 and data["upstairs_mismatch"] <= 1e-12


def test_static_check_k3(capsys):
    code, out, _ = run(capsys, "static-check", "--k", "3", "--l", "2")
    data = json.loads(out)
    assert code == 0 and data["threshold"] == pytest.approx(3.0, abs=1e-12)


def test_static_check_off_critical(capsys):
    code, out, _ = run(capsys, "static-check", "--k", "2", "--l", "2", "--t", "1.5")
    data = json.loads(out)
    assert code == 0 and data["status"] == "not static"
    assert data["residuals"]["static_residual"] > 0.1


def test_scan_svg(tmp_path, capsys):
    out = tmp_path / "scan.svg"
    code, _, _ = run(capsys, "scan", "--steps", "8", "--format", "svg", "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert "stroke-dasharray" in text and "seed=42" in text
    assert text.count("<polyline") == 4 - 1  # energy, lambda1, threshold (no estimate column)


def test_scan_json(capsys):
    code, out, _ = run(capsys, "scan", "--steps", "4", "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data["records"]) == 4 and data["columns"] == SCAN_COLUMNS
