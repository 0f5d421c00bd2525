import json
import subprocess
import sys

import pytest

from fitvalley.cli import main

from conftest import CONFIGS


def test_theory_reports_effective_rate(capsys):
    assert main(["theory", "--config", str(CONFIGS / "strict_valley.json")]) == 0
    out = capsys.readouterr().out
    assert '"R_eff": 0.125' in out
    assert json.loads(out)["classification"] == "strict_valley"


def test_theory_csv_and_out(tmp_path, capsys):
    assert main(["theory", "--config", str(CONFIGS / "pitstop.json"), "--format", "csv", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "phase,trait,equilibrium,fitness_vs_0"
    assert (tmp_path / "fitness.csv").read_text().startswith("# config_sha256=")
    assert json.loads((tmp_path / "theory.json").read_text())["rates"]["R_pitstop"] == pytest.approx(1.5)


def test_validate_alpha_integer(tmp_path, capsys):
    doc = json.loads((CONFIGS / "strict_valley.json").read_text())
    doc["alpha"] = 2.0
    p = tmp_path / "a.json"
    p.write_text(json.dumps(doc))
    assert main(["validate", "--config", str(p)]) == 1
    assert "alpha must be non-integer" in capsys.readouterr().out


def test_validate_ok(capsys):
    assert main(["validate", "--config", str(CONFIGS / "strict_valley.json")]) == 0
    assert "StrictValley" in capsys.readouterr().out


@pytest.mark.parametrize("text", ["{not json", '{"L": 1}', "[]"])
def test_malformed_config_exit_2(tmp_path, text):
    p = tmp_path / "bad.json"
    p.write_text(text)
    assert main(["theory", "--config", str(p)]) == 2
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2


def test_simulate_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        assert main(["simulate", "--config", str(CONFIGS / "strict_valley.json"), "--seed", "42",
                     "--max-time", "10", "--out", str(d)]) == 0
        outs.append({f.name: f.read_bytes() for f in d.iterdir()})
    assert outs[0] == outs[1]
    for name, data in outs[0].items():
        assert b"seed=42" in data.splitlines()[0] or name.endswith(".json")
    assert json.loads(outs[0]["run.json"])["provenance"].endswith("seed=42")


def test_missing_seed_is_generated_and_printed(tmp_path, capsys):
    assert main(["simulate", "--config", str(CONFIGS / "strict_valley.json"), "--max-time", "1"]) == 0
    assert "seed:" in capsys.readouterr().err


def test_experiment_exit_codes(tmp_path):
    assert main(["experiment", "excursion", "--seed", "1", "--replicas", "100000", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "summary_excursion.json").exists()
    # a handful of replicas cannot satisfy the TV tolerance
    assert main(["experiment", "excursion", "--seed", "1", "--replicas", "50"]) == 1


def test_experiment_refuses_wrong_landscape(capsys):
    assert main(["experiment", "crossing", "--config", str(CONFIGS / "mesoscopic.json"), "--seed", "1",
                 "--replicas", "2"]) == 1
    assert "refused" in capsys.readouterr().err


def test_selftest_passes():
    assert main(["selftest", "--seed", "5"]) == 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "fitvalley", "validate", "--config", str(CONFIGS / "pitstop.json")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "Pitstop" in r.stdout
