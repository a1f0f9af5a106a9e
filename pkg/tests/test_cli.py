import csv
import json
import subprocess
import sys

import pytest

from berman.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, ConfigError, RunConfig, load_config, main

BASE = ["estimate", "--model", "fbm", "--hurst", "0.5", "--half-width", "4", "--step", "0.03125", "--n", "200", "--x", "0,1", "--seed", "3"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestEstimate:
    def test_outputs(self, tmp_path):
        assert main(BASE + ["--out", str(tmp_path), "--delta", "0,0.5"]) == EXIT_OK
        rows = read_csv(tmp_path / "estimates.csv")
        assert len(rows) == 8
        assert set(rows[0]) == {"x", "delta", "estimator", "value", "halfWidth95", "N", "flaggedFraction"}
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert len(man["config_hash"]) == 16 and man["seed"] == 3 and "wall_time" in man

    def test_thread_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(BASE + ["--out", str(a), "--threads", "1"]) == EXIT_OK
        assert main(BASE + ["--out", str(b), "--threads", "4"]) == EXIT_OK
        assert (a / "estimates.csv").read_bytes() == (b / "estimates.csv").read_bytes()

    def test_single_estimator(self, tmp_path):
        assert main(BASE + ["--out", str(tmp_path), "--estimator", "spectral"]) == EXIT_OK
        assert {r["estimator"] for r in read_csv(tmp_path / "estimates.csv")} == {"spectral"}

    def test_dump_paths(self, tmp_path):
        from berman.paths import PathBatch

        f = tmp_path / "paths.bin"
        assert main(BASE + ["--out", str(tmp_path), "--dump-paths", str(f)]) == EXIT_OK
        assert PathBatch.load(f).values.shape == (200, 257)

    def test_config_file_and_override(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[model]\nmodel = fbm\nhurst = 0.7\n\n[grid]\nhalf_width = 4\nstep = 0.0625\n\n[run]\nn = 100\nx = 0,2\nseed = 9\n")
        out = tmp_path / "out"
        assert main(["estimate", "--config", str(ini), "--hurst", "0.5", "--out", str(out)]) == EXIT_OK
        man = json.loads((out / "manifest.json").read_text())
        assert man["config"]["hurst"] == 0.5 and man["config"]["n_paths"] == 100


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            ["estimate", "--model", "fbm", "--x", "0"],
            ["estimate", "--model", "fbm", "--hurst", "1.5", "--x", "0"],
            ["estimate", "--model", "fbm", "--hurst", "0.5", "--x", "0", "--delta", ""],
            ["estimate", "--model", "fbm", "--hurst", "0.5", "--x", "0", "--step", "0.3"],
            ["estimate", "--model", "fbm", "--hurst", "0.5", "--x", "a,b"],
            ["exact", "--model", "fbm", "--delta", "0"],
            ["exact", "--hurst", "0.5", "--delta", ""],
        ],
    )
    def test_config_errors(self, argv, tmp_path):
        assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_study(self):
        with pytest.raises(SystemExit) as info:
            main(["study", "bogus"])
        assert info.value.code == EXIT_CONFIG

    def test_budget(self, tmp_path):
        argv = BASE + ["--n", "100000000", "--budget", "5", "--out", str(tmp_path)]
        assert main(argv) == EXIT_BUDGET
        assert not (tmp_path / "estimates.csv").exists()

    def test_budget_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BERMAN_BUDGET_SECONDS", "1")
        assert main(BASE[:-6] + ["--n", "100000000", "--out", str(tmp_path)]) == EXIT_BUDGET


class TestConfig:
    def test_hash_ignores_threads_and_output(self):
        a = RunConfig(hurst=0.5, threads=1, output="a")
        b = RunConfig(hurst=0.5, threads=4, output="b")
        assert a.config_hash == b.config_hash
        assert RunConfig(hurst=0.6).config_hash != a.config_hash

    def test_canonical_text(self):
        text = RunConfig(hurst=0.5).canonical_text()
        assert text.startswith("[model]\nmodel = fbm\nhurst = 0.5\n")
        assert "step = 0.0078125" in text

    def test_unknown_key(self, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[run]\ncolour = blue\n")
        with pytest.raises(ConfigError):
            load_config(ini)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.ini")


class TestOtherCommands:
    def test_exact(self, tmp_path):
        assert main(["exact", "--hurst", "0.5", "--delta", "0,1", "--markov-x", "1,2", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "exact.csv")
        assert float(rows[0]["expected_sojourn"]) == pytest.approx(4.0)
        assert len(read_csv(tmp_path / "markov.csv")) == 4

    def test_exact_table(self, tmp_path, capsys):
        assert main(["exact", "--table", "1", "--out", str(tmp_path)]) == EXIT_OK
        assert len(read_csv(tmp_path / "exact.csv")) == 40
        assert "37/40" in capsys.readouterr().out

    def test_study_rate(self, tmp_path):
        assert main(["study", "rate", "--lambda", "0.5", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "study_rate.csv")
        seq = [float(r["computed"]) for r in rows if r["x"] == "1.0"]
        assert seq == sorted(seq, reverse=True)
        assert json.loads((tmp_path / "study_rate.json").read_text())["passed"]

    def test_study_table_needs_number(self, tmp_path):
        assert main(["study", "table", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_selftest(self, capsys):
        assert main(["selftest"]) == EXIT_OK
        assert "FAIL" not in capsys.readouterr().out


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "berman.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout
