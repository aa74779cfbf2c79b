import csv
import io
import json
import os

import numpy as np
import pytest

from lrpe.cli import (
    BENCH_HEADER,
    BenchReport,
    CHECK_HEADER,
    DUMP_HEADER,
    EXIT_IO,
    EXIT_OK,
    EXIT_PROPERTY_FAILURE,
    EXIT_USAGE,
    main,
)


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def test_check_passes_on_valid_spec(capsys):
    code, out, _ = run(["check", "--spec", "orthogonal:householder:a:16", "--n", "16", "--seed", "7"], capsys)
    assert code == EXIT_OK
    lines = [line for line in out.splitlines() if line]
    assert all(line.startswith("PASS") for line in lines)
    assert any("unitarity" in line for line in lines)
    assert any("decomposability" in line for line in lines)
    assert any("theta_gradient" in line for line in lines)


def test_check_rejects_fourier_on_real_family(capsys):
    code, _, err = run(["check", "--spec", "orthogonal:fourier:a:16"], capsys)
    assert code == EXIT_USAGE
    assert "fourier" in err


def test_check_degenerate_none_spec(capsys):
    code, out, _ = run(["check", "--spec", "none:identity:a:8"], capsys)
    assert code == EXIT_OK
    assert "theta_gradient" not in out  # no theta for the none family


def test_check_permutation_adds_lemma_line(capsys):
    code, out, _ = run(["check", "--spec", "permutation:identity:a:8:seed=3", "--n", "8"], capsys)
    assert code == EXIT_OK
    assert "permutation_lemmas" in out


def test_check_csv_out(tmp_path, capsys):
    path = tmp_path / "reports.csv"
    code, _, _ = run(
        ["check", "--spec", "unitary:fourier:a:8", "--n", "8", "--out", str(path)], capsys
    )
    assert code == EXIT_OK
    rows = list(csv.reader(path.read_text().splitlines()))
    assert tuple(rows[0]) == CHECK_HEADER
    assert all(row[3] == "True" for row in rows[1:])


def test_check_json_out(tmp_path, capsys):
    path = tmp_path / "reports.json"
    code, _, _ = run(
        ["check", "--spec", "mixed:odd_even:a:7", "--n", "8", "--format", "json", "--out", str(path)],
        capsys,
    )
    assert code == EXIT_OK
    payload = json.loads(path.read_text())
    assert payload["spec"].startswith("mixed:odd_even")
    assert all(rep["passed"] for rep in payload["reports"])


def test_usage_error_on_bad_spec(capsys):
    code, _, err = run(["check", "--spec", "garbage"], capsys)
    assert code == EXIT_USAGE
    assert "error" in err


def test_usage_error_on_bad_subcommand(capsys):
    code, _, _ = run(["frobnicate", "--spec", "none:identity:a:4"], capsys)
    assert code == EXIT_USAGE


def test_property_failure_exit_code(monkeypatch, capsys):
    # inject a failing report so the all-pass gate trips
    import lrpe.cli as cli
    from lrpe.verify import PropertyReport

    failing = PropertyReport(name="unitarity", max_error=1.0, tolerance=1e-10,
                             passed=False, cases=1)
    monkeypatch.setattr(cli, "check_unitarity", lambda *a, **kw: failing)
    code, out, _ = run(["check", "--spec", "none:identity:a:4", "--n", "4"], capsys)
    assert code == EXIT_PROPERTY_FAILURE
    assert any(line.startswith("FAIL unitarity") for line in out.splitlines())


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

BENCH_ARGS = [
    "bench", "--spec", "orthogonal:householder:a:8", "--d", "8",
    "--sizes", "32,64,128,256", "--trials", "2", "--seed", "5",
]


def test_bench_csv_schema_and_roundtrip(tmp_path, capsys):
    path = tmp_path / "bench.csv"
    code, out, _ = run(BENCH_ARGS + ["--out", str(path)], capsys)
    assert code == EXIT_OK
    assert "slope=" in out
    text = path.read_text()
    assert text.endswith("\n") and "\r" not in text
    rows = list(csv.reader(text.splitlines()))
    assert tuple(rows[0]) == BENCH_HEADER
    # 4 sizes x 2 trials + 1 slope summary row
    assert len(rows) - 1 == 4 * 2 + 1
    report = BenchReport.from_csv(text)
    assert len(report.rows) == len(rows) - 1
    assert np.isfinite(report.slope)


def test_bench_determinism_modulo_wall_ns(tmp_path, capsys):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(BENCH_ARGS + ["--out", str(p1)], capsys)[0] == EXIT_OK
    assert run(BENCH_ARGS + ["--out", str(p2)], capsys)[0] == EXIT_OK

    def mask(path):
        rows = list(csv.reader(path.read_text().splitlines()))
        return [row[:5] for row in rows]

    assert mask(p1) == mask(p2)


def test_bench_vanilla_mode(tmp_path, capsys):
    path = tmp_path / "v.csv"
    code, out, _ = run(
        ["bench", "--spec", "none:identity:a:8", "--d", "8", "--attention", "vanilla",
         "--sizes", "32,64,128,256", "--trials", "1", "--out", str(path)],
        capsys,
    )
    assert code == EXIT_OK
    rows = list(csv.reader(path.read_text().splitlines()))
    assert rows[1][0] == "vanilla"


def test_bench_causal_flag(tmp_path, capsys):
    code, _, _ = run(BENCH_ARGS + ["--causal", "--out", str(tmp_path / "c.csv")], capsys)
    assert code == EXIT_OK


def test_bench_json(tmp_path, capsys):
    path = tmp_path / "bench.json"
    code, _, _ = run(BENCH_ARGS + ["--format", "json", "--out", str(path)], capsys)
    assert code == EXIT_OK
    payload = json.loads(path.read_text())
    assert set(payload) == {"rows", "slope", "r2"}


def test_bench_rejects_bad_sizes(capsys):
    code, _, _ = run(["bench", "--spec", "none:identity:a:8", "--sizes", "8,4,2,1"], capsys)
    assert code == EXIT_USAGE


def test_bench_io_error(capsys):
    code, _, err = run(BENCH_ARGS + ["--out", "/nonexistent-dir/x.csv"], capsys)
    assert code == EXIT_IO
    assert "io error" in err


# ---------------------------------------------------------------------------
# dump
# ---------------------------------------------------------------------------

def test_dump_identity_at_zero(tmp_path, capsys):
    path = tmp_path / "dump.csv"
    code, _, _ = run(
        ["dump", "--spec", "orthogonal:identity:a:2", "--n", "2", "--out", str(path)], capsys
    )
    assert code == EXIT_OK
    rows = list(csv.reader(path.read_text().splitlines()))
    assert tuple(rows[0]) == DUMP_HEADER
    w0 = {(r[1], r[2]): float(r[3]) for r in rows[1:] if r[0] == "0"}
    assert w0[("0", "0")] == 1.0 and w0[("1", "1")] == 1.0
    assert w0[("0", "1")] == 0.0 and w0[("1", "0")] == 0.0


def test_dump_orthogonal_d2_entries_follow_schedule(tmp_path, capsys):
    path = tmp_path / "dump.csv"
    code, _, _ = run(
        ["dump", "--spec", "orthogonal:identity:a:2", "--n", "2", "--out", str(path)], capsys
    )
    assert code == EXIT_OK
    rows = list(csv.reader(path.read_text().splitlines()))
    w1 = {(r[1], r[2]): float(r[3]) for r in rows[1:] if r[0] == "1"}
    alpha = 1.0  # kind a, first (only) angle: 10000^0
    assert w1[("0", "0")] == pytest.approx(np.cos(alpha))
    assert w1[("0", "1")] == pytest.approx(-np.sin(alpha))
    assert w1[("1", "0")] == pytest.approx(np.sin(alpha))
    assert w1[("1", "1")] == pytest.approx(np.cos(alpha))


def test_dump_permutation_rows_are_one_hot(tmp_path, capsys):
    path = tmp_path / "dump.csv"
    code, _, _ = run(
        ["dump", "--spec", "permutation:identity:a:5:seed=2", "--n", "4", "--out", str(path)],
        capsys,
    )
    assert code == EXIT_OK
    rows = list(csv.reader(path.read_text().splitlines()))[1:]
    for s in range(4):
        for i in range(5):
            vals = [float(r[3]) for r in rows if r[0] == str(s) and r[1] == str(i)]
            assert sorted(vals) == [0.0, 0.0, 0.0, 0.0, 1.0]


def test_dump_rejects_large_n(capsys):
    code, _, _ = run(["dump", "--spec", "none:identity:a:4", "--n", "300"], capsys)
    assert code == EXIT_USAGE


def test_dump_json(tmp_path, capsys):
    path = tmp_path / "dump.json"
    code, _, _ = run(
        ["dump", "--spec", "unitary:fourier:a:4", "--n", "3", "--format", "json",
         "--out", str(path)],
        capsys,
    )
    assert code == EXIT_OK
    payload = json.loads(path.read_text())
    assert len(payload["matrices"]) == 3
    w0 = np.array(payload["matrices"][0]["re"])
    np.testing.assert_allclose(w0, np.eye(4), atol=1e-12)


# ---------------------------------------------------------------------------
# module entry point
# ---------------------------------------------------------------------------

def test_python_dash_m_entry(tmp_path):
    import subprocess
    import sys

    env = dict(os.environ)
    proc = subprocess.run(
        [sys.executable, "-m", "lrpe", "check", "--spec", "none:identity:a:4", "--n", "4"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == EXIT_OK
    assert "PASS" in proc.stdout
