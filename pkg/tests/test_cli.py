import json
import subprocess
import sys
from fractions import Fraction

import pytest

from gibbsfields.cli import main, reproduce_example1, reproduce_example2
from gibbsfields.fields import seeded_positive_table, write_distribution_file
from gibbsfields.lattice import binary_alphabet, line_window


def run_cli(*argv, env=None):
    cmd = [sys.executable, "-m", "gibbsfields.cli", *argv]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


def write_table(tmp_path, seed=5, corrupt=False):
    m = seeded_positive_table(line_window(3), binary_alphabet(), seed)
    path = tmp_path / ("corrupt.tbl" if corrupt else "table.tbl")
    write_distribution_file(m.table, path)
    if corrupt:
        lines = path.read_text().splitlines()
        body = lines[3].split("\t")
        num, den = body[1].split("/")
        lines[3] = f"{body[0]}\t{int(num) + int(den)}/{den}"
        path.write_text("\n".join(lines) + "\n")
    return path


def test_validate_exit_codes(tmp_path):
    good = write_table(tmp_path)
    assert main(["validate", "--model", f"table:{good}", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validate.json").read_text())
    assert report["ok"] is True
    assert {r["axiom"] for r in report["reports"]} >= {
        "marginal-consistency", "pair-consistency", "one-point-consistency"}

    bad = write_table(tmp_path, corrupt=True)
    assert main(["validate", "--model", f"table:{bad}", "--out", str(tmp_path)]) == 1
    report = json.loads((tmp_path / "validate.json").read_text())
    assert report["ok"] is False
    assert report["reports"][0]["violations"]


def test_validate_ising_and_example1(tmp_path):
    assert main(["validate", "--model", "ising:beta=0.4,d=1,window=7",
                 "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validate.json").read_text())
    axioms = {r["axiom"] for r in report["reports"]}
    assert axioms == {"energy-field-axioms", "one-point-exchange",
                      "specification-consistency", "gibbs-spec-coherence"}
    assert main(["validate", "--model", "example1:N=6,c=1/2,kappa=1/2",
                 "--out", str(tmp_path)]) == 0


def test_diagnose_exit_codes(tmp_path):
    assert main(["diagnose", "--model", "ising:beta=0.4,window=9",
                 "--out", str(tmp_path)]) == 0
    assert main(["diagnose", "--model", "example2:tau=1,window=325",
                 "--out", str(tmp_path)]) == 2
    report = json.loads((tmp_path / "diagnose.json").read_text())
    assert report["verdict"] == "divergence-witness"
    assert report["witness"]["generator"].startswith("oscillating")
    assert (tmp_path / "diagnose.csv").exists()
    assert main(["diagnose", "--model", "bernoulli:p=1/2,window=9",
                 "--out", str(tmp_path)]) == 0
    # tiny window cannot run the full battery: inconclusive
    assert main(["diagnose", "--model", "example2:tau=1,window=13",
                 "--family", "constants", "--out", str(tmp_path)]) == 3


def test_reproduce_checks(tmp_path):
    assert main(["reproduce", "example1", "--check", "--out", str(tmp_path)]) == 0
    assert main(["reproduce", "example2", "--check", "--out", str(tmp_path)]) == 0
    assert main(["reproduce", "example2", "--tau", "2", "--out", str(tmp_path)]) == 0
    fresh = json.loads((tmp_path / "reproduce_example2.json").read_text())
    assert fresh["tau"] == 2
    by_key = {(row["size"], row["ones"]): row["up_prob"]
              for row in fresh["conditionals"]}
    assert Fraction(by_key[(4, 2)]) == Fraction(2 + 2, 4 + 3)


def test_reproduce_golden_content():
    r1 = reproduce_example1()
    assert r1["unit_case_up_up"] == "9/10"
    assert r1["kernels_coincide"] is True
    assert r1["marginal_consistency"] == "pass"
    # k_1 = (1/2)^8 = 1/256, so the initial law is (1 + 1/256)/2
    assert r1["initial_law_plus_up"] == "257/512"

    r2 = reproduce_example2()
    assert r2["conditional_formula_matches"] is True
    rows = {(h["density"], h["symbol"]): h["H"] for h in r2["limiting_hamiltonian"]}
    assert rows[("0", 0)] == "0"
    assert rows[("0", 1)] == "+inf"
    assert rows[("1", 0)] == "+inf"
    assert float(rows[("1/2", 1)]) == pytest.approx(0.6931471805599453)


def test_energy_command(tmp_path):
    assert main(["energy", "--model", "example2:tau=1,window=9",
                 "--target", "(0)", "--boundary", "(1)=1;(2)=0",
                 "--out", str(tmp_path)]) == 0
    text = (tmp_path / "energy.txt").read_text()
    assert "1/1" in text
    payload = json.loads((tmp_path / "energy.json").read_text())
    assert payload["energy_ratios"]["1|0"] == "1/1"
    assert (tmp_path / "hamiltonian.txt").exists()


def test_reconstruct_command(tmp_path):
    table = write_table(tmp_path, seed=11)
    assert main(["reconstruct", "--table", str(table), "--target", "(0);(1)",
                 "--condition", "(-1)=1", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "reconstruct.json").read_text())
    assert payload["agree"] is True
    assert payload["direct"] == payload["reconstructed"]


def test_config_file_and_override(tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text("model=bernoulli:p=1/2,window=9\nseed=7\nout=" + str(tmp_path) + "\n")
    assert main(["diagnose", "--config", str(config)]) == 0
    report = json.loads((tmp_path / "diagnose.json").read_text())
    assert report["config"]["seed"] == "7"
    assert report["config"]["model"].startswith("bernoulli")
    # CLI flag overrides the file
    assert main(["diagnose", "--config", str(config), "--seed", "9"]) == 0
    report = json.loads((tmp_path / "diagnose.json").read_text())
    assert report["config"]["seed"] == "9"


def test_reports_identical_across_threads_and_processes(tmp_path):
    """Rational-mode reports must be byte-identical for any --threads value
    and across interpreter runs (different hash seeds)."""
    outputs = []
    for threads, hashseed in (("1", "0"), ("4", "12345")):
        out_dir = tmp_path / f"run{threads}_{hashseed}"
        env = {"PATH": "/usr/bin:/bin", "PYTHONHASHSEED": hashseed}
        result = run_cli("diagnose", "--model", "example2:tau=1,window=325",
                         "--threads", threads, "--out", str(out_dir), env=env)
        assert result.returncode == 2, result.stderr
        payload = json.loads((out_dir / "diagnose.json").read_text())
        payload["config"].pop("threads")
        payload["config"].pop("out")
        outputs.append(json.dumps(payload, sort_keys=True))
    assert outputs[0] == outputs[1]


def test_enum_cap_env(tmp_path):
    table = write_table(tmp_path, seed=3)
    env = {"PATH": "/usr/bin:/bin", "GFL_ENUM_CAP": "4"}
    result = run_cli("validate", "--model", f"table:{table}", "--out",
                     str(tmp_path), env=env)
    assert result.returncode == 1
    assert "cap" in result.stdout + result.stderr
