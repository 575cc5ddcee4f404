import csv
import math
import subprocess
import sys

import pytest

from lexisgrid.cli import main
from lexisgrid.io import read_table


@pytest.fixture(scope="module")
def cohort_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "cohort.csv"
    assert main(["simulate", "--n", "200", "--seed", "1", "--out", str(path)]) == 0
    return path


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_writes_cohort(cohort_csv):
    with open(cohort_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 200
    assert rows[0]["id"] == "1"


def test_exposure_total_matches_follow_up(cohort_csv, tmp_path, capsys):
    out = tmp_path / "exp.csv"
    code, _, _ = _run(
        ["exposure", "--cohort", cohort_csv, "--t-r", 5, "--dim", 3, "--semantics", "post-onset", "--out", out],
        capsys,
    )
    assert code == 0
    with open(cohort_csv) as fh:
        expected = math.fsum(float(r["exit_time"]) - float(r["entry_time"]) for r in csv.DictReader(fh))
    assert abs(read_table(out).total() - expected) <= 1e-9 * expected


def test_full_pipeline(cohort_csv, tmp_path, capsys):
    exp, ev, rt = tmp_path / "e.csv", tmp_path / "v.csv", tmp_path / "r.csv"
    common = ["--cohort", cohort_csv, "--t-r", 5, "--dim", 3, "--semantics", "post-onset"]
    assert _run(["exposure", *common, "--out", exp], capsys)[0] == 0
    assert _run(["events", *common, "--out", ev], capsys)[0] == 0
    code, out, _ = _run(["rates", "--exposure", exp, "--events", ev, "--out", rt], capsys)
    assert code == 0 and "rates:" in out
    table = read_table(rt)
    assert sum(r.events for r in table.entries.values()) == 200


def test_rates_on_mismatched_grids(cohort_csv, tmp_path, capsys):
    exp, ev = tmp_path / "e.csv", tmp_path / "v.csv"
    base = ["--cohort", cohort_csv, "--dim", 3, "--semantics", "post-onset"]
    _run(["exposure", *base, "--t-r", 5, "--out", exp], capsys)
    _run(["events", *base, "--t-r", 1, "--out", ev], capsys)
    code, _, err = _run(["rates", "--exposure", exp, "--events", ev, "--out", tmp_path / "r.csv"], capsys)
    assert code == 1
    assert err.startswith("lexisgrid: ConfigurationError:")


def test_validate(cohort_csv, capsys):
    code, out, _ = _run(["validate", "--cohort", cohort_csv, "--t-r", 5], capsys)
    assert code == 0
    fields = dict(tok.split("=") for tok in out.split())
    assert fields["status"] == "ok"
    assert float(fields["max_deviation"]) <= float(fields["tolerance"])


def test_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,birth_time,entry_time,entry_duration,exit_time,event_at_exit\n7,0,60,1,50,1\n")
    code, _, err = _run(["exposure", "--cohort", bad, "--t-r", 5, "--dim", 3, "--semantics", "incidence", "--out", tmp_path / "o"], capsys)
    assert code == 1 and "ValidationError" in err and "'7'" in err


def test_missing_input_file(tmp_path, capsys):
    code, _, err = _run(["events", "--cohort", tmp_path / "none.csv", "--t-r", 5, "--dim", 3, "--semantics", "incidence", "--out", tmp_path / "o"], capsys)
    assert code == 1 and err.startswith("lexisgrid: ")


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["exposure", "--t-r", "5"],
        ["exposure", "--cohort", "c", "--t-r", "x", "--dim", "3", "--semantics", "incidence", "--out", "o"],
        ["events", "--cohort", "c", "--t-r", "5", "--dim", "4", "--semantics", "incidence", "--out", "o"],
        ["events", "--cohort", "c", "--t-r", "5", "--dim", "3", "--semantics", "prevalence", "--out", "o"],
    ],
)
def test_usage_errors(argv, capsys):
    code, _, err = _run(argv, capsys)
    assert code == 2
    assert "lexisgrid: usage-error:" in err


def test_invalid_configuration_is_data_error(tmp_path, capsys):
    code, _, err = _run(["simulate", "--n", 0, "--out", tmp_path / "c.csv"], capsys)
    assert code == 1 and "ConfigurationError" in err
    code, _, _ = _run(["exposure", "--cohort", "c", "--t-r", -1, "--dim", 3, "--semantics", "incidence", "--out", "o"], capsys)
    assert code == 1


def test_byte_identical_reruns(tmp_path, capsys):
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        _run(["simulate", "--n", 300, "--seed", 11, "--out", d / "c.csv"], capsys)
        common = ["--cohort", d / "c.csv", "--t-r", 2.5, "--dim", 3, "--semantics", "post-onset"]
        _run(["exposure", *common, "--out", d / "e.csv"], capsys)
        _run(["events", *common, "--out", d / "v.csv"], capsys)
        _run(["rates", "--exposure", d / "e.csv", "--events", d / "v.csv", "--out", d / "r.csv"], capsys)
        outputs.append([(d / f).read_bytes() for f in ("c.csv", "e.csv", "v.csv", "r.csv")])
    assert outputs[0] == outputs[1]


def test_bench_output(capsys):
    code, out, _ = _run(["bench", "--n", 2000, "--t-r", 5, "--backend", "python", "--repeat", 1], capsys)
    assert code == 0
    fields = dict(tok.split("=") for tok in out.split())
    assert fields["backend"] == "python"
    assert float(fields["seconds"]) > 0 and int(fields["segments"]) == 2000


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "lexisgrid", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "simulate" in out.stdout
