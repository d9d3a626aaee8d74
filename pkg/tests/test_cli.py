import json
from pathlib import Path

import pytest

from spinrouter.cli import main, parse_values
from spinrouter.output import read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
RING = str(CONFIGS / "ring_single_receiver.json")
BARRIER = str(CONFIGS / "barrier_default.json")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def ok(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)["files"]


def write_spec(tmp_path, data, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return str(path)


def test_spectrum(tmp_path, capsys):
    files = ok(capsys, "spectrum", "--spec", RING, "--out", tmp_path)
    meta, header, rows = read_csv(files[0])
    assert header == ["index", "eigenvalue"] and len(rows) == 18
    assert meta["units"] == "4J" and meta["command"] == "spectrum"
    assert [r[1] for r in rows] == sorted(r[1] for r in rows)


def test_units_conversion_scales_spectrum(tmp_path, capsys):
    base = read_csv(ok(capsys, "spectrum", "--spec", RING, "--out", tmp_path, "--name", "a")[0])[2]
    conv = read_csv(ok(capsys, "spectrum", "--spec", RING, "--out", tmp_path, "--name", "b",
                       "--units", "J")[0])
    assert conv[0]["units"] == "J"
    for a, b in zip(base, conv[2]):
        assert b[1] == pytest.approx(4 * a[1], abs=1e-14)


def test_evolve_and_run_section_defaults(tmp_path, capsys):
    spec = json.loads(Path(RING).read_text())
    spec["run"] = {"t_max": 100.0, "samples": 11}
    path = write_spec(tmp_path, spec)
    csv_file, json_file = ok(capsys, "evolve", "--spec", path, "--out", tmp_path)
    rows = read_csv(csv_file)[2]
    assert len(rows) == 11 and rows[-1][0] == 100.0
    assert rows[0][3] < 1e-24 and rows[0][4] == pytest.approx(0.5)
    summary = json.loads(Path(json_file).read_text())
    assert summary["t_max"] == 100.0
    # flags override the run section
    csv_file = ok(capsys, "evolve", "--spec", path, "--out", tmp_path, "--samples", "5")[0]
    assert len(read_csv(csv_file)[2]) == 5


def test_set_overrides_spec_keys(tmp_path, capsys):
    files = ok(capsys, "spectrum", "--spec", BARRIER, "--out", tmp_path,
               "--set", "receiver_blocks.0.barrier_field=25", "--set", "field_h=0.5")
    meta = read_csv(files[0])[0]
    files = ok(capsys, "spectrum", "--spec", BARRIER, "--out", tmp_path, "--name", "plain")
    assert read_csv(files[0])[0]["spec_sha256"] != meta["spec_sha256"]


def test_output_dir_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SPINROUTER_OUTPUT_DIR", str(tmp_path / "env"))
    files = ok(capsys, "spectrum", "--spec", RING)
    assert Path(files[0]).parent == tmp_path / "env"
    assert Path(files[0]).exists()


def test_compare_analytic_passes_on_reference_config(tmp_path, capsys):
    files = ok(capsys, "compare-analytic", "--spec", RING, "--out", tmp_path, "--samples", "801")
    summary = json.loads(Path(files[1]).read_text())
    assert summary["passed"] is True
    assert summary["formula"] == "weak" and summary["max_deviation"] < 0.05


def test_barrier_table_has_row_per_receiver(tmp_path, capsys):
    files = ok(capsys, "table", "--spec", BARRIER, "--out", tmp_path, "--workers", "2")
    meta, header, rows = read_csv(files[0])
    assert len(rows) == 5 and meta["scheme"] == "barrier"
    summary = json.loads(Path(files[1]).read_text())
    assert summary["selective"] is True
    for row in rows:
        diag = row[header.index(f"F_bar_{row[1]}")]
        others = [row[i] for i, h in enumerate(header) if h.startswith("F_bar_") and h != f"F_bar_{row[1]}"]
        assert diag > max(others)


def test_route_single_target(tmp_path, capsys):
    files = ok(capsys, "route", "--spec", BARRIER, "--out", tmp_path, "--target", "R2")
    row = json.loads(Path(files[1]).read_text())["row"]
    assert row["target"] == 2 and row["tuned_fields"]["sender_barrier_field"] == 30.0


def test_sweep(tmp_path, capsys):
    files = ok(capsys, "sweep", "--spec", RING, "--out", tmp_path, "--param", "sender_field",
               "--values", "0,0.05", "--t-max", "700", "--workers", "2")
    rows = read_csv(files[0])[2]
    assert [r[0] for r in rows] == [0.0, 0.05]
    assert rows[0][1] > 0.99 > rows[1][1]


def test_parse_values():
    assert parse_values("1,2.5") == [1.0, 2.5]
    assert parse_values("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_values([1, 2]) == [1.0, 2.0]


@pytest.mark.parametrize("edit, kind", [
    (lambda d: d.update(receivers=[]), "ConfigError"),
    (lambda d: d.pop("units"), "ConfigError"),
    (lambda d: d.update(n_chain=1), "ConfigError"),
])
def test_invalid_spec_gives_json_error(tmp_path, capsys, edit, kind):
    spec = json.loads(Path(RING).read_text())
    edit(spec)
    code, out, err = run(capsys, "spectrum", "--spec", write_spec(tmp_path, spec), "--out", tmp_path)
    assert code == 1 and out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["error"] == kind


def test_usage_errors_exit_2(tmp_path, capsys):
    for argv in (["spectrum"], ["nope", "--spec", RING],
                 ["evolve", "--spec", RING, "--target", "7", "--out", str(tmp_path)],
                 ["sweep", "--spec", RING, "--out", str(tmp_path)],
                 ["spectrum", "--spec", RING, "--set", "novalue", "--out", str(tmp_path)]):
        code, out, err = run(capsys, *argv)
        assert code == 2, argv
        assert json.loads(err)["error"] == "UsageError"


def test_missing_file_and_bad_json(tmp_path, capsys):
    code, _, err = run(capsys, "spectrum", "--spec", tmp_path / "absent.json")
    assert code == 1 and json.loads(err)["error"] == "OSError"
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "units": "J",\n  "n_chain": 16,,\n}')
    code, _, err = run(capsys, "spectrum", "--spec", bad)
    assert code == 1 and "line 3" in json.loads(err)["message"]


def test_physics_error_is_reported(tmp_path, capsys):
    code, _, err = run(capsys, "compare-analytic", "--spec", RING, "--out", tmp_path,
                       "--formula", "barrier")
    assert code == 1
    assert json.loads(err)["error"] == "ConfigurationError"
