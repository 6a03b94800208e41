import json
import subprocess
import sys

import pytest

from offrl.cli import EXIT_CELLS, EXIT_CONFIG, EXIT_OK, main

TINY = {"grid": {"rows": ["S.L", "..G"], "slip_prob": 0.1, "gamma": 0.9}}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def config(tmp_path, **kw):
    doc = {"envs": [TINY], "recipes": ["expert"], "learners": ["bc", "rl-c"],
           "n_values": [100], "seeds": 2}
    doc.update(kw)
    return write(tmp_path / "cfg.json", doc)


class TestRun:
    def test_success_writes_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", config(tmp_path), "--out", str(out),
                     "--workers", "1"]) == EXIT_OK
        for name in ("results.csv", "summary.json", "config-echo.json"):
            assert (out / name).exists()
        assert len((out / "results.csv").read_text().splitlines()) == 1 + 4

    def test_seeds_override(self, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", config(tmp_path), "--out", str(out), "--seeds", "1",
              "--workers", "1"])
        assert json.loads((out / "config-echo.json").read_text())["seeds"] == 1

    @pytest.mark.parametrize("doc", [{"envs": ["nowhere"], "recipes": ["expert"],
                                      "learners": ["bc"], "n_values": [10]},
                                     {"envs": [TINY], "recipes": ["expert"],
                                      "learners": ["dqn"], "n_values": [10]},
                                     [1, 2]])
    def test_invalid_config(self, tmp_path, doc):
        assert main(["run", "--config", write(tmp_path / "c.json", doc)]) == EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_cell_failures(self, tmp_path):
        cfg = config(tmp_path, learners=["bc", "bc-filtered"])
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"),
                     "--workers", "1"]) == EXIT_CELLS


class TestOther:
    def test_unknown_preset(self):
        assert main(["preset", "figure9"]) == EXIT_CONFIG

    def test_sample_and_diagnose(self, tmp_path, capsys):
        env = write(tmp_path / "env.json", TINY)
        data = str(tmp_path / "d.csv")
        assert main(["sample", "--env", env, "--n", "5000", "--out", data]) == EXIT_OK
        capsys.readouterr()
        assert main(["diagnose", "--env", env, "--data", data]) == EXIT_OK
        rep = json.loads(capsys.readouterr().out)
        assert rep["c_star"] >= 1.0 and 0 < rep["coverage_b"] < 1
        assert 0 <= rep["u_b"] <= rep["horizon"]
        assert main(["diagnose", "--env", env, "--data", data, "--b", "0"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["u_b"] == pytest.approx(0.0, abs=1e-12)
        assert set(rep) >= {"c_star", "coverage_b", "p_c", "u_b", "critical_states"}

    def test_diagnose_bad_data(self, tmp_path):
        env = write(tmp_path / "env.json", TINY)
        assert main(["diagnose", "--env", env, "--data", str(tmp_path / "x.csv")]) == EXIT_CONFIG

    def test_bounds(self, tmp_path, capsys):
        inputs = write(tmp_path / "b.json", [{"c_star": 1.1, "h": 20, "s_size": 100,
                                              "n": 1000, "iota": 5}])
        out = tmp_path / "b.csv"
        assert main(["bounds", "--inputs", inputs, "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[1].split(",")[1] == "bound:bc" and float(lines[1].split(",")[8]) == 11.0
        bad = write(tmp_path / "bad.json", {"c_star": 0.5, "h": 20, "s_size": 1, "n": 1})
        assert main(["bounds", "--inputs", bad]) == EXIT_CONFIG

    def test_audit(self, tmp_path, capsys):
        cfg = write(tmp_path / "a.json", {"random_mdps": {"count": 1}, "n": 100, "seeds": 10})
        assert main(["audit-pessimism", "--config", cfg, "--workers", "1"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["passed"] is True

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "offrl.cli", "preset", "nope"],
                              capture_output=True, text=True)
        assert proc.returncode == EXIT_CONFIG and "unknown preset" in proc.stderr
