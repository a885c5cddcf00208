import csv
import json
import math

import pytest

from paircluster.cli import main

MINIMAL_CSV = """pair_id,unit_id,treatment,outcome
p1,a,1,2.0
p1,b,0,0.0
p2,c,0,1.0
p2,d,1,1.0
"""


@pytest.fixture
def minimal_csv(tmp_path):
    path = tmp_path / "exp.csv"
    path.write_text(MINIMAL_CSV, encoding="utf-8")
    return path


def test_analyze_minimal(minimal_csv, tmp_path, capsys):
    json_path = tmp_path / "report.json"
    code = main(["analyze", "--data", str(minimal_csv), "--json-out", str(json_path)])
    assert code == 0
    text = capsys.readouterr().out
    assert "pairs: 2" in text
    report = json.loads(json_path.read_text())
    assert report["variances"]["pair_nofe"]["variance"] == pytest.approx(0.5)
    assert report["variances"]["unit_fe"]["variance"] == pytest.approx(0.25)
    assert report["unit_pair_ratio_fe"] == pytest.approx(0.5)
    assert report["estimates"]["nofe"] == pytest.approx(1.0)
    # every reported standard error is the square root of its variance
    for entry in report["variances"].values():
        assert entry["std_error"] == pytest.approx(math.sqrt(entry["variance"]))
    assert len(report["tests"]) == 4


def test_analyze_single_test(minimal_csv, tmp_path):
    json_path = tmp_path / "r.json"
    code = main(
        ["analyze", "--data", str(minimal_csv), "--cluster", "pair", "--fe", "on",
         "--json-out", str(json_path)]
    )
    assert code == 0
    report = json.loads(json_path.read_text())
    assert list(report["tests"]) == ["pair_fe"]


def test_analyze_text_matches_json(minimal_csv, tmp_path, capsys):
    json_path = tmp_path / "r.json"
    main(["analyze", "--data", str(minimal_csv), "--json-out", str(json_path)])
    text = capsys.readouterr().out
    report = json.loads(json_path.read_text())
    for key in ("pair_nofe", "unit_fe"):
        rendered = f"{report['variances'][key]['variance']:.6g}"
        assert rendered in text


def test_analyze_missing_data_flag(capsys):
    assert main(["analyze"]) == 1
    assert "error" in capsys.readouterr().err


def test_analyze_missing_file(tmp_path, capsys):
    assert main(["analyze", "--data", str(tmp_path / "nope.csv")]) == 2


def test_analyze_bad_treatment(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text(
        "pair_id,unit_id,treatment,outcome\np1,a,yes,2.0\np1,b,0,0.0\n", encoding="utf-8"
    )
    assert main(["analyze", "--data", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_analyze_nonbinary_treatment_value(tmp_path):
    path = tmp_path / "bad2.csv"
    path.write_text(
        "pair_id,unit_id,treatment,outcome\np1,a,2,2.0\np1,b,0,0.0\n", encoding="utf-8"
    )
    assert main(["analyze", "--data", str(path)]) == 2


def test_analyze_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("pair_id,unit_id,treatment,outcome\n", encoding="utf-8")
    assert main(["analyze", "--data", str(path)]) == 2


def test_analyze_degenerate_pair(tmp_path):
    path = tmp_path / "deg.csv"
    path.write_text(
        "pair_id,unit_id,treatment,outcome\np1,a,1,2.0\np1,b,1,0.0\n", encoding="utf-8"
    )
    assert main(["analyze", "--data", str(path)]) == 2


def test_simulate_deterministic_csv(capsys):
    argv = [
        "simulate", "--design", "paired", "--P", "20", "--n", "2",
        "--reps", "60", "--seed", "123", "--threads", "1",
    ]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    second = capsys.readouterr().out
    assert first == second
    lines = first.strip().split("\n")
    assert lines[0] == "test,model,G,reps,rejection_rate,mc_se,mean_se_ratio"
    assert len(lines) == 5


def test_simulate_scan_outputs(tmp_path, capsys):
    csv_path = tmp_path / "table.csv"
    json_path = tmp_path / "table.json"
    argv = [
        "simulate", "--design", "stratified", "--scan-G", "2..4", "--P", "15",
        "--n", "2", "--reps", "40", "--seed", "9", "--threads", "1",
        "--csv-out", str(csv_path), "--json-out", str(json_path),
    ]
    assert main(argv) == 0
    stdout = capsys.readouterr().out
    assert csv_path.read_text() == stdout
    with open(csv_path) as handle:
        rows = list(csv.DictReader(handle))
    assert sorted({r["G"] for r in rows}) == ["2", "3", "4"]
    payload = json.loads(json_path.read_text())
    assert len(payload["cells"]) == len(rows)
    by_key = {(c["test"], c["model"], c["G"]): c for c in payload["cells"]}
    for row in rows:
        cell = by_key[(row["test"], row["model"], int(row["G"]))]
        assert float(row["rejection_rate"]) == cell["rejection_rate"]


def test_simulate_usage_errors(capsys):
    base = ["simulate", "--design", "stratified", "--P", "10", "--n", "1", "--seed", "1"]
    assert main(base + ["--reps", "0", "--G", "3"]) == 1
    assert main(base + ["--reps", "5"]) == 1  # neither --G nor --scan-G
    assert main(base + ["--reps", "5", "--G", "1"]) == 1
    assert main(base + ["--reps", "5", "--scan-G", "5"]) == 1
    assert main(base + ["--reps", "5", "--G", "3", "--scan-G", "3..4"]) == 1
    paired = ["simulate", "--design", "paired", "--P", "10", "--n", "1", "--seed", "1"]
    assert main(paired + ["--reps", "5", "--G", "3"]) == 1
    assert main(["simulate", "--design", "nope", "--P", "1", "--n", "1",
                 "--reps", "1", "--seed", "1"]) == 1


def test_help_exits_zero():
    assert main(["--help"]) == 0


def test_simulate_effect_flag(capsys):
    argv = [
        "simulate", "--design", "paired", "--P", "30", "--n", "5",
        "--reps", "200", "--seed", "77", "--effect", "2.0", "--threads", "1",
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    rows = list(csv.DictReader(out.splitlines()))
    by_key = {(r["test"], r["model"]): float(r["rejection_rate"]) for r in rows}
    # a huge true effect is rejected essentially always under every test
    assert by_key[("stratum", "nofe")] > 0.9
