"""Command line interface tests, run in process via main(argv)."""

import json
import re
import subprocess
import sys

import numpy as np
import pytest

from ical import save_predictions
from ical.cli import main


def write_config(tmp_path, **cfg):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def write_tensor(tmp_path, n=8, m=12, c=3, seed=0, name="preds.npt"):
    rng = np.random.default_rng(seed)
    preds = rng.dirichlet(np.ones(c), size=(n, m)).astype(np.float64)
    path = tmp_path / name
    save_predictions(path, preds)
    return path, preds


class TestExample1Command:
    def test_prints_the_four_constants(self, capsys):
        assert main(["example1"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out == [
            "mi_x1=0.940448",
            "mi_clone=0.325083",
            "clone_entropy_after_x1=0.287081",
            "clone_entropy_after_clone=0.000000",
        ]

    def test_point_count_flag(self, capsys):
        assert main(["example1", "--n-points", "10"]) == 0
        assert "mi_x1=" in capsys.readouterr().out


class TestRunCommand:
    def run_cfg(self, tmp_path, **extra):
        cfg = dict(
            task="example1", n_points=10, policy="random",
            batch_size=2, n_rounds=2, n_samples=8,
        )
        cfg.update(extra)
        return write_config(tmp_path, **cfg)

    def test_writes_results_and_summary(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["run", "--config", self.run_cfg(tmp_path), "--out", str(out)])
        assert rc == 0
        assert (out / "results.csv").exists()
        assert (out / "summary.json").exists()
        line = capsys.readouterr().out.strip()
        assert re.fullmatch(
            r"seed=0 rounds=2 final: accuracy=- nll=- pool_entropy=\d+\.\d{4}", line
        )

    def test_seed_override_lands_in_summary(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            ["run", "--config", self.run_cfg(tmp_path), "--out", str(out), "--seed", "5"]
        )
        assert rc == 0
        payload = json.loads((out / "summary.json").read_text())
        assert payload["rng_seed"] == 5
        assert capsys.readouterr().out.startswith("seed=5 ")

    def test_seed_list_writes_subdirectories(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            ["run", "--config", self.run_cfg(tmp_path), "--out", str(out),
             "--seeds", "1,2"]
        )
        assert rc == 0
        for seed in (1, 2):
            assert (out / f"seed_{seed}" / "results.csv").exists()
            assert (out / f"seed_{seed}" / "summary.json").exists()
        assert len(capsys.readouterr().out.splitlines()) == 2

    def test_no_timing_blanks_the_column(self, tmp_path):
        out = tmp_path / "out"
        rc = main(
            ["run", "--config", self.run_cfg(tmp_path), "--out", str(out), "--no-timing"]
        )
        assert rc == 0
        for line in (out / "results.csv").read_text().splitlines()[1:]:
            assert line.endswith(",")

    def test_unknown_key_is_a_config_error(self, tmp_path, capsys):
        cfg = self.run_cfg(tmp_path, typo_key=1)
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "typo_key" in capsys.readouterr().err

    def test_unknown_task(self, tmp_path):
        cfg = write_config(tmp_path, task="mystery")
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 2

    def test_non_object_config(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 2

    def test_missing_config_file(self, tmp_path):
        rc = main(
            ["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]
        )
        assert rc == 3

    def test_missing_required_argument(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--out", "somewhere"])
        assert exc.value.code == 2

    def test_empty_seeds_list(self, tmp_path):
        rc = main(
            ["run", "--config", self.run_cfg(tmp_path), "--out", str(tmp_path / "out"),
             "--seeds", ","]
        )
        assert rc == 2


class TestTensorTask:
    def test_external_run(self, tmp_path, capsys):
        path, preds = write_tensor(tmp_path)
        labels = np.arange(8) % 3
        labels_path = tmp_path / "labels.txt"
        np.savetxt(labels_path, labels, fmt="%d")
        cfg = write_config(
            tmp_path, task="tensor", predictions=str(path), labels=str(labels_path),
            n_test=2, policy="maxent", batch_size=2, n_rounds=2, n_samples=4,
        )
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
        line = capsys.readouterr().out
        assert re.search(r"accuracy=\d\.\d{4}", line)

    def test_corrupt_tensor_is_a_data_error(self, tmp_path, capsys):
        path, _ = write_tensor(tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        labels_path = tmp_path / "labels.txt"
        np.savetxt(labels_path, np.zeros(8), fmt="%d")
        cfg = write_config(
            tmp_path, task="tensor", predictions=str(path), labels=str(labels_path),
        )
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 3
        assert "byte offset" in capsys.readouterr().err

    def test_label_length_mismatch(self, tmp_path):
        path, _ = write_tensor(tmp_path)
        labels_path = tmp_path / "labels.txt"
        np.savetxt(labels_path, np.zeros(5), fmt="%d")
        cfg = write_config(
            tmp_path, task="tensor", predictions=str(path), labels=str(labels_path),
        )
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


class TestDhsicCommand:
    def test_prints_twelve_decimals(self, tmp_path, capsys):
        path, _ = write_tensor(tmp_path)
        assert main(["dhsic", "--tensors", str(path), "--points", "0,1"]) == 0
        out = capsys.readouterr().out.strip()
        assert re.fullmatch(r"\d+\.\d{12}", out)
        assert float(out) >= 0.0

    def test_custom_scales_change_the_value(self, tmp_path, capsys):
        path, _ = write_tensor(tmp_path)
        main(["dhsic", "--tensors", str(path), "--points", "0,1"])
        default = capsys.readouterr().out
        main(["dhsic", "--tensors", str(path), "--points", "0,1", "--scales", "1.0"])
        assert capsys.readouterr().out != default

    def test_degenerate_warns_and_reports_zero(self, tmp_path, capsys):
        path, _ = write_tensor(tmp_path)  # m=12 < 2*7 variables
        rc = main(["dhsic", "--tensors", str(path), "--points", "0,1,2,3,4,5,6"])
        assert rc == 0
        captured = capsys.readouterr()
        assert "degenerate" in captured.err
        assert captured.out.strip() == "0.000000000000"

    def test_single_point_is_an_input_error(self, tmp_path):
        path, _ = write_tensor(tmp_path)
        assert main(["dhsic", "--tensors", str(path), "--points", "0"]) == 2

    def test_out_of_range_point(self, tmp_path):
        path, _ = write_tensor(tmp_path)
        assert main(["dhsic", "--tensors", str(path), "--points", "0,99"]) == 2

    def test_missing_tensor_file(self, tmp_path):
        assert main(["dhsic", "--tensors", str(tmp_path / "nope.npt")]) == 3

    def test_two_files_pool_their_points(self, tmp_path, capsys):
        p1, _ = write_tensor(tmp_path, n=1, seed=1, name="a.npt")
        p2, _ = write_tensor(tmp_path, n=1, seed=2, name="b.npt")
        rc = main(["dhsic", "--tensors", str(p1), str(p2)])
        assert rc == 0
        assert float(capsys.readouterr().out) >= 0.0


class TestReportCommand:
    def test_aggregates_run_output(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, task="example1", n_points=10, policy="random",
            batch_size=2, n_rounds=2, n_samples=8,
        )
        out = tmp_path / "runs"
        main(["run", "--config", cfg, "--out", str(out), "--seeds", "1,2"])
        capsys.readouterr()
        report = tmp_path / "report.csv"
        rc = main(["report", "--results", str(out), "--out", str(report)])
        assert rc == 0
        assert "wrote" in capsys.readouterr().out
        lines = report.read_text().splitlines()
        assert lines[1].startswith("policy,round,")
        data = [l for l in lines[2:] if l.startswith("random,")]
        assert len(data) == 3                      # rounds 0..2 for one policy
        assert all(row.split(",")[2] == "2" for row in data)

    def test_empty_directory_is_an_input_error(self, tmp_path):
        rc = main(["report", "--results", str(tmp_path), "--out", str(tmp_path / "r.csv")])
        assert rc == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ical.cli", "example1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "mi_x1=0.940448" in proc.stdout
