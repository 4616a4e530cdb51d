import csv
import io
import json
import math
from pathlib import Path

import pytest

from contact_forge.cli import SEED_ENV, main
from contact_forge.flows import find_r_M
from contact_forge.suites import resolve_seed

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name, code", [("pass", 0), ("fail", 1), ("error", 2)])
def test_golden_exit_codes(capsys, name, code):
    got, out, err = run(capsys, "run", "--config", str(GOLDEN / f"{name}.cfg"))
    assert got == code
    if name == "error":
        assert "line 5, column 5: h must be positive" in err
    else:
        assert out.strip()


def test_failing_golden_reports_a_witness(capsys):
    code, out, _ = run(capsys, "run", "--config", str(GOLDEN / "fail.cfg"), "--json", "-")
    doc = json.loads(out[out.index("{"):])
    (rep,) = doc["reports"]
    assert code == 1 and rep["status"] == "FAIL" and rep["witness"] is not None


def strip_times(doc):
    for r in doc["reports"]:
        r["wall_time"] = None
    return json.dumps(doc, sort_keys=True)


def json_run(capsys, tmp_path, *extra):
    path = tmp_path / f"out{len(list(tmp_path.iterdir()))}.json"
    run(capsys, "run", "--config", str(GOLDEN / "pass.cfg"), "--json", str(path), *extra)
    return json.loads(path.read_text())


def test_json_is_reproducible(capsys, tmp_path):
    a = json_run(capsys, tmp_path)
    b = json_run(capsys, tmp_path)
    assert a["schema"] == 1
    assert strip_times(a) == strip_times(b)
    names = [r["check"] for r in a["reports"]]
    assert names == sorted(names)
    assert set(a["reports"][0]) == {"check", "status", "parameters", "samples", "max_residual", "witness",
                                    "wall_time", "seed", "message", "metrics"}


def test_parallel_matches_sequential(capsys, tmp_path):
    assert strip_times(json_run(capsys, tmp_path)) == strip_times(json_run(capsys, tmp_path, "--parallel"))


def test_seed_changes_samples(capsys, tmp_path):
    a = json_run(capsys, tmp_path, "--seed", "1")
    b = json_run(capsys, tmp_path, "--seed", "2")
    assert strip_times(a) != strip_times(b)


def test_seed_precedence(capsys, tmp_path, monkeypatch):
    assert resolve_seed(3, "4", 5) == 3
    assert resolve_seed(None, "4", 5) == 4
    assert resolve_seed(None, None, 5) == 5
    assert resolve_seed(None, None, None) == 0
    monkeypatch.setenv(SEED_ENV, "99")
    env = json_run(capsys, tmp_path)
    flag = json_run(capsys, tmp_path, "--seed", "99")
    assert strip_times(env) == strip_times(flag)


def test_bad_seed_env(capsys, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "seven")
    code, _, err = run(capsys, "run", "--suite", "constants")
    assert code == 2 and SEED_ENV in err


def test_suite_selection(capsys):
    code, out, _ = run(capsys, "run", "--suite", "constants", "g_profile")
    assert code == 0
    assert [line.split()[1] for line in out.splitlines()] == ["constants", "g_profile"]


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "run", "--config", str(tmp_path / "nope.cfg"))
    assert code == 2 and "config error" in err


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in row] for row in rows[1:]]


def test_g_scan_table(capsys, tmp_path):
    out = tmp_path / "g.csv"
    assert run(capsys, "table", "--kind", "g_scan", "--points", "1000", "--out", str(out))[0] == 0
    header, rows = read_csv(out)
    assert header == ["r", "g"] and len(rows) == 1000
    assert max(g for _, g in rows) < 0.1
    crossings = [(a[0], b[0]) for a, b in zip(rows, rows[1:]) if (a[1] < 0) != (b[1] < 0) and a[1] != 0]
    targets = [math.pi / 2, find_r_M()]
    assert len(crossings) == 2
    for (lo, hi), t in zip(crossings, targets):
        assert lo <= t <= hi
    assert round(targets[1], 4) == 2.0288


def test_csv_uses_17_significant_digits(capsys, tmp_path):
    out = tmp_path / "g.csv"
    run(capsys, "table", "--kind", "g_scan", "--points", "7", "--out", str(out))
    r_text = out.read_text().splitlines()[2].split(",")[0]
    # grid covers [0, pi + 0.1]
    assert float(r_text) == pytest.approx((math.pi + 0.1) / 6, rel=1e-15)
    assert r_text == format(float(r_text), ".17g") and len(r_text.replace(".", "").lstrip("0")) == 17


def test_G_scan_table(capsys):
    code, out, _ = run(capsys, "table", "--kind", "G_scan", "--points", "100")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["r", "maxG", "t_at_max"]
    assert max(float(r[1]) for r in rows[1:]) < math.log(7 / 6)


def test_flow_portrait_table(capsys):
    code, out, _ = run(capsys, "table", "--kind", "flow_portrait", "--points", "26", "--radii", "2.5,0.5")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["t", "r0=2.5", "r0=0.5"]
    last = [float(x) for x in rows[-1]]
    assert last[0] == 50.0 and abs(last[1] - math.pi) < 1e-4


def test_table_rejects_bad_points(capsys):
    assert run(capsys, "table", "--kind", "g_scan", "--points", "1")[0] == 2


def test_table_reports_unwritable_path(capsys, tmp_path):
    code, _, err = run(capsys, "table", "--kind", "g_scan", "--points", "5", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 2 and "cannot write" in err


def test_constants_command(capsys):
    code, out, _ = run(capsys, "constants")
    doc = json.loads(out)
    assert code == 0 and set(doc) == {"r_M", "sharp_bound", "ln_7_6", "g_max", "g_argmax"}
    assert round(doc["r_M"], 4) == 2.0288 and doc["sharp_bound"] < doc["ln_7_6"] == math.log(7 / 6)
