import filecmp
import json
import os
import subprocess
import sys

import pytest

import regsum.cli as cli
from regsum.identities import VerifyReport


def run(argv, capsys=None):
    try:
        code = cli.main(argv)
    except SystemExit as exc:  # argparse errors
        code = exc.code
    out = capsys.readouterr() if capsys else None
    return code, out


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors


# --- verify ----------------------------------------------------------------------------

def test_verify_power(tmp_path, capsys):
    code, out = run(["verify", "--kind", "power", "--f", "id", "--nmax", "2000", "--r", "3",
                     "--output-dir", str(tmp_path), "--workers", "1"], capsys)
    assert code == 0
    assert out.out.startswith("ok: power_sum f=id n=1..2000 r=3 checked=2000 mismatches=0")
    data = json.loads((tmp_path / "verify_power_sum_id_r3.json").read_text())
    assert data["ok"] and data["mismatches"] == []


def test_verify_gamma_prints_residual(tmp_path, capsys):
    code, out = run(["verify", "--kind", "gamma", "--f", "mu", "--nmax", "500",
                     "--output-dir", str(tmp_path), "--workers", "1"], capsys)
    assert code == 0 and "max_residual=" in out.out


def test_verify_parallel_matches_serial(tmp_path):
    args = ["verify", "--kind", "bernoulli", "--f", "tau", "--nmax", "900", "--m", "2"]
    assert run(args + ["--output-dir", str(tmp_path / "a"), "--workers", "1"])[0] == 0
    assert run(args + ["--output-dir", str(tmp_path / "b"), "--workers", "3"])[0] == 0
    assert same_tree(tmp_path / "a", tmp_path / "b")


def test_verify_mismatch_exits_1(tmp_path, monkeypatch, capsys):
    def broken(kind, f, rng, params, dps=50):
        rep = VerifyReport(kind, "id", rng, params, checked=1)
        rep.mismatches.append((4, 5, 6, -1))
        return rep

    monkeypatch.setattr(cli, "verify", broken)
    code, out = run(["verify", "--kind", "power", "--nmax", "10", "--r", "1",
                     "--output-dir", str(tmp_path), "--workers", "1"], capsys)
    assert code == 1 and out.out.startswith("FAILED")


@pytest.mark.parametrize("argv", [
    ["verify", "--kind", "power", "--f", "mu", "--nmax", "0", "--r", "1"],
    ["verify", "--kind", "power", "--nmax", "10"],
    ["verify", "--kind", "bernoulli", "--nmax", "10", "--m", "0"],
    ["verify", "--kind", "power", "--f", "lambda", "--nmax", "10", "--r", "1"],
    ["verify", "--kind", "coprime", "--nmax", "10", "--x", "1/2"],
    ["verify", "--kind", "power", "--nmax", "1.5", "--r", "1"],
    ["verify", "--kind", "power", "--nmax", "10", "--r", "1", "--digits", "0"],
    ["verify", "--kind", "power", "--nmax", "10", "--r", "1", "--workers", "0"],
    ["verify", "--kind", "power", "--nmax", "10", "--r", "1", "--format", "xml"],
    ["sweep", "--eq", "eq2", "--f", "mu", "--r", "1", "--xmax", "100"],
    ["sweep", "--eq", "eq6", "--f", "mobius", "--xmax", "100"],
    ["sweep", "--eq", "eq1", "--f", "id", "--xmax", "100"],
    ["sweep", "--eq", "eq3", "--f", "one", "--m", "1", "--xmax", "1e4", "--mode", "brute"],
    ["sweep", "--eq", "eqcor12", "--r", "1", "--variant", "derived", "--xmax", "100"],
    ["frobnicate"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    code, _ = run(argv + ["--output-dir", str(tmp_path)] if argv != ["frobnicate"] else argv, capsys)
    assert code == 2


def test_sieve_limit_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("REGSUM_SIEVE_LIMIT", "1000")
    code, _ = run(["sweep", "--eq", "eq1", "--f", "id", "--r", "1", "--xmax", "5000",
                   "--output-dir", str(tmp_path)], capsys)
    assert code == 2
    code, _ = run(["sweep", "--eq", "eq1", "--f", "id", "--r", "1", "--xmax", "1000",
                   "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    monkeypatch.setenv("REGSUM_SIEVE_LIMIT", "lots")
    assert run(["constants", "--output-dir", str(tmp_path)], capsys)[0] == 2


# --- sweep -------------------------------------------------------------------------------

def test_sweep_default_grid(tmp_path, capsys):
    code, out = run(["sweep", "--eq", "eqcor12", "--r", "2", "--xmax", "1e6",
                     "--output-dir", str(tmp_path), "--workers", "1"], capsys)
    assert code == 0
    lines = (tmp_path / "eqcor12_mu_r2.csv").read_text().splitlines()
    assert len(lines) == 6 and [l.split(",")[0] for l in lines[1:]] == \
        ["10000", "31622", "100000", "316227", "1000000"]
    assert sorted(os.listdir(tmp_path)) == ["eqcor12_mu_r2.csv", "eqcor12_mu_r2.dat", "eqcor12_mu_r2.json"]


def test_sweep_brute_matches_convolution(tmp_path):
    base = ["sweep", "--eq", "eq3", "--f", "one", "--m", "1", "--xmax", "1e3", "--format", "json"]
    assert run(base + ["--mode", "brute", "--output-dir", str(tmp_path / "b")])[0] == 0
    assert run(base + ["--output-dir", str(tmp_path / "c")])[0] == 0
    b = json.loads((tmp_path / "b" / "eq3_one_m1.json").read_text())
    c = json.loads((tmp_path / "c" / "eq3_one_m1.json").read_text())
    assert [p["lhs_exact"] for p in b["points"]] == [p["lhs_exact"] for p in c["points"]]


def test_sweep_deterministic_across_workers(tmp_path):
    base = ["sweep", "--eq", "eqthm62", "--xmax", "2e5", "--arithmetic", "float", "--prime-bound", "1e5"]
    assert run(base + ["--output-dir", str(tmp_path / "w1"), "--workers", "1"])[0] == 0
    assert run(base + ["--output-dir", str(tmp_path / "w3"), "--workers", "3"])[0] == 0
    assert run(base + ["--output-dir", str(tmp_path / "again"), "--workers", "1"])[0] == 0
    assert same_tree(tmp_path / "w1", tmp_path / "w3")
    assert same_tree(tmp_path / "w1", tmp_path / "again")


# --- constants ------------------------------------------------------------------------------

def test_constants_dump(tmp_path, capsys):
    code, out = run(["constants", "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    rows = {r["name"]: r for r in json.loads(out.out)}
    assert rows["K1"]["value"].startswith("0.704442")
    assert rows["zeta(2)"]["value"].startswith("1.644934")
    assert all(0 < r["error_bound"] < float("inf") for r in rows.values())
    assert json.loads((tmp_path / "constants.json").read_text()) == list(
        sorted(rows.values(), key=lambda r: r["name"]))


# --- report --------------------------------------------------------------------------------------

def test_report_small_and_deterministic(tmp_path, capsys):
    base = ["report", "--xmax", "3e4", "--xmin", "1e3", "--prime-bound", "1e5"]
    code, out = run(base + ["--output-dir", str(tmp_path / "r1"), "--workers", "1"], capsys)
    assert code == 0
    assert "K2 fit" in out.out and "within 3 SE" in out.out
    summary = json.loads((tmp_path / "r1" / "report.json").read_text())
    files = set(summary["files"])
    assert {"relative_residuals.png", "k2_fit.png", "constants.json", "k2_fit.dat",
            "eqthm61_id_none.csv", "eqthm61_id_none_derived.csv"} <= files
    assert all((tmp_path / "r1" / f).exists() for f in files)
    with open(tmp_path / "r1" / "relative_residuals.png", "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"
    assert run(base + ["--output-dir", str(tmp_path / "r2"), "--workers", "2"])[0] == 0
    assert same_tree(tmp_path / "r1", tmp_path / "r2")


def test_report_without_figures(tmp_path):
    assert run(["report", "--xmax", "1e4", "--xmin", "1e3", "--prime-bound", "1e5", "--no-figures",
                "--output-dir", str(tmp_path), "--workers", "1"])[0] == 0
    assert not [f for f in os.listdir(tmp_path) if f.endswith(".png")]


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "regsum", "verify", "--kind", "coprime", "--nmax", "50",
                           "--x", "1001/7", "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("ok: coprime_count")
    bad = subprocess.run([sys.executable, "-m", "regsum", "sweep", "--eq", "eq2", "--f", "mu", "--r", "1"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert bad.returncode == 2 and "vanishes" in bad.stderr
