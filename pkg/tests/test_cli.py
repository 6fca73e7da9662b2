import csv
import io
import json
import subprocess
import sys

import pytest

from permuton_lab.cli import main, parse_n_grid, UsageError


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_n_grid_parsing():
    assert parse_n_grid("4096:524288:geometric:8") == [2**k for k in range(12, 20)]
    assert parse_n_grid("10:100:geometric") == [10, 20, 40, 80]
    assert parse_n_grid("5:5:geometric:1") == [5]
    for bad in ("1:2", "1:2:linear", "a:b:geometric", "10:5:geometric", "0:4:geometric"):
        with pytest.raises(UsageError):
            parse_n_grid(bad)


def test_estimate_grid_row_count(capsys):
    code, out, _ = run(
        ["estimate", "--family", "ref:beta=1.5,gamma=0", "--n-grid", "4096:524288:geometric:8",
         "--replicates", "2", "--seed", "1"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 8
    assert list(rows[0]) == ["family", "N", "replicates", "mean_lis", "std_lis", "stderr", "seed"]
    assert rows[0]["family"] == "ref:beta=1.5,gamma=0"


def test_outputs_are_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p, threads in zip(paths, ("1", "3")):
        assert main(["estimate", "--family", "corner-pinched:beta=1.5,c=1", "--n-grid", "100:400:geometric",
                     "--replicates", "6", "--seed", "9", "--threads", threads, "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sample_csv_and_witness(capsys):
    code, out, _ = run(["sample", "--family", "uniform", "--n", "200", "--seed", "3", "--emit-witness"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 200
    chain = sorted((float(r["x"]), float(r["y"])) for r in rows if r["in_lis"] == "1")
    assert all(a[1] < b[1] for a, b in zip(chain, chain[1:]))
    code, out2, _ = run(["sample", "--family", "uniform", "--n", "200", "--seed", "3"], capsys)
    assert [line.split(",")[:2] for line in out2.splitlines()[1:]] == [line.split(",")[:2] for line in out.splitlines()[1:]]


def test_json_lines(capsys):
    code, out, _ = run(["sample", "--family", "uniform", "--n", "3", "--json"], capsys)
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 3 and set(recs[0]) == {"x", "y"}


def test_fit_from_estimates_file(tmp_path, capsys):
    est = tmp_path / "est.csv"
    assert main(["estimate", "--family", "uniform", "--n-grid", "256:4096:geometric", "--replicates", "8",
                 "--out", str(est)]) == 0
    code, out, _ = run(["fit", "--input", str(est), "--with-log-correction"], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert list(row) == ["family", "exponent", "log_coeff", "intercept", "r_squared", "n_points"]
    assert row["n_points"] == "5"


def test_grid_check_rows(capsys):
    code, out, _ = run(["grid-check", "--family", "diag-power:alpha=-0.5", "--n", "5000", "--replicates", "3",
                        "--seed", "2"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    assert list(rows[0]) == ["N", "alpha", "b", "lower", "lis", "upper", "chain_cap", "seed"]
    for r in rows:
        assert int(r["lower"]) <= int(r["lis"]) <= int(r["upper"])


def test_concentration_columns(capsys):
    code, out, _ = run(["concentration", "--family", "uniform", "--n", "200", "--replicates", "300",
                        "--lambdas", "0,5,20"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["lambda"] for r in rows] == ["0.0", "5.0", "20.0"]
    assert list(rows[0])[:8] == ["family", "N", "lambda", "empirical_tail", "mcdiarmid", "talagrand_up",
                                 "talagrand_down", "median"]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "uniform", "n": 300, "replicates": 4, "seed": 5}))
    code, out, _ = run(["estimate", "--config", str(cfg), "--replicates", "6"], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["replicates"] == "6" and row["seed"] == "5" and row["N"] == "300"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(["estimate", "--config", str(cfg)], capsys)
    assert code == 1 and "bogus" in err


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("PERMUTON_LAB_THREADS", "2")
    assert run(["estimate", "--family", "uniform", "--n", "50", "--replicates", "4"], capsys)[0] == 0
    monkeypatch.setenv("PERMUTON_LAB_THREADS", "many")
    code, _, err = run(["estimate", "--family", "uniform", "--n", "50", "--replicates", "4"], capsys)
    assert code == 1 and "PERMUTON_LAB_THREADS" in err


@pytest.mark.parametrize(
    "args, needle",
    [
        (["estimate", "--family", "nope", "--n", "10"], "uniform | ref"),
        (["estimate", "--family", "ref:beta=0.5", "--n", "10"], "beta"),
        (["estimate", "--family", "uniform"], "--n"),
        (["estimate", "--family", "uniform", "--n-grid", "1:2"], "start:stop:geometric"),
        (["concentration", "--family", "uniform", "--n", "10", "--lambdas", "a,b"], "--lambdas"),
        (["estimate", "--family", "uniform", "--n", "10", "--bogus"], "unrecognized"),
        ([], "command"),
    ],
)
def test_usage_errors_exit_one(args, needle, capsys):
    code, _, err = run(args, capsys)
    assert code == 1
    assert needle in err


def test_verify_failure_exits_two(capsys):
    code, out, _ = run(["verify", "--suite", "smoke", "--only", "9"], capsys)
    assert code == 2
    assert "[FAIL] criterion 9" in out


def test_verify_smoke_pass_lines(capsys):
    code, out, _ = run(["verify", "--suite", "smoke", "--only", "1,7,10", "--json"], capsys)
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert [r["criterion"] for r in recs] == [1, 7, 10] and all(r["passed"] for r in recs)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "permuton_lab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "grid-check" in res.stdout and "stream" not in res.stderr
