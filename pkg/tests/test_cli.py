"""Command-line plumbing: files, reports, exit codes, reproducibility."""

import json

import numpy as np

import gwmc.cli as cli
from gwmc.data import (
    ObservedMatrix,
    generate_synthetic,
    save_gray_image,
    save_masked_csv,
)
from gwmc.errors import NumericalError


class TestComplete:
    def test_csv_roundtrip_with_report(self, tmp_path):
        inst = generate_synthetic(24, 30, 2, 0.6, seed=5)
        y_path = tmp_path / "y.csv"
        save_masked_csv(y_path, inst.observed)
        out = tmp_path / "xhat.csv"
        report = tmp_path / "r.json"
        code = cli.main([
            "complete", "--input", str(y_path), "--solver", "gamp",
            "--w", "identity", "--w-scale", "1e10",
            "--out", str(out), "--report", str(report),
        ])
        assert code == 0
        assert out.exists() and report.exists()
        payload = json.loads(report.read_text())
        assert payload["schema_version"] == 1
        assert payload["command"] == "complete"
        assert payload["converged"] is True
        assert payload["effective_rank"] == 2
        assert "iter_seconds" not in payload

    def test_truth_flag_adds_metrics(self, tmp_path):
        inst = generate_synthetic(24, 30, 2, 0.6, seed=6)
        y_path = tmp_path / "y.csv"
        t_path = tmp_path / "x.csv"
        save_masked_csv(y_path, inst.observed)
        save_masked_csv(t_path, ObservedMatrix(inst.x_true, np.ones((24, 30), dtype=bool)))
        report = tmp_path / "r.json"
        code = cli.main([
            "complete", "--input", str(y_path), "--truth", str(t_path),
            "--report", str(report),
        ])
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["metrics"]["relative_error"] < 1e-2
        assert payload["metrics"]["success"] is True

    def test_graymap_laplacian_configuration(self, tmp_path):
        rng = np.random.default_rng(3)
        t = np.linspace(0, 1, 32)
        img = 200 * np.outer(np.exp(-((t - 0.4) ** 2) / 0.1), np.exp(-((t - 0.6) ** 2) / 0.2))
        img_path = tmp_path / "img.pgm"
        save_gray_image(img_path, img)
        out = tmp_path / "rec.pgm"
        report = tmp_path / "r.json"
        code = cli.main([
            "complete", "--input", str(img_path), "--keep-fraction", "0.5",
            "--w", "laplacian", "--theta", "1.7320508", "--eps-hat", "1e-6",
            "--truth", str(img_path), "--out", str(out), "--report", str(report),
            "--seed", "2",
        ])
        assert code == 0
        payload = json.loads(report.read_text())
        assert "psnr_db" in payload["metrics"]
        assert "ssim" in payload["metrics"]
        assert out.exists()

    def test_keep_fraction_rejected_for_csv(self, tmp_path):
        inst = generate_synthetic(10, 12, 2, 0.6, seed=7)
        y_path = tmp_path / "y.csv"
        save_masked_csv(y_path, inst.observed)
        assert cli.main(["complete", "--input", str(y_path), "--keep-fraction", "0.5"]) == 1

    def test_missing_input_exit_one(self, tmp_path):
        assert cli.main(["complete", "--input", str(tmp_path / "nope.csv")]) == 1

    def test_numerical_failure_exit_two(self, tmp_path, monkeypatch):
        inst = generate_synthetic(10, 12, 2, 0.6, seed=8)
        y_path = tmp_path / "y.csv"
        save_masked_csv(y_path, inst.observed)

        def boom(*args, **kwargs):
            raise NumericalError("synthetic failure")

        monkeypatch.setitem(cli._solve.__globals__, "solve_gamp", boom)
        assert cli.main(["complete", "--input", str(y_path)]) == 2

    def test_byte_identical_reruns(self, tmp_path):
        inst = generate_synthetic(20, 24, 2, 0.6, seed=9)
        y_path = tmp_path / "y.csv"
        save_masked_csv(y_path, inst.observed)
        outputs = []
        for tag in ("a", "b"):
            out = tmp_path / f"xhat-{tag}.csv"
            report = tmp_path / f"r-{tag}.json"
            assert cli.main([
                "complete", "--input", str(y_path), "--seed", "4",
                "--out", str(out), "--report", str(report),
            ]) == 0
            outputs.append((out.read_bytes(), report.read_bytes()))
        assert outputs[0] == outputs[1]


class TestSynthBench:
    def test_row_count_and_full_observation(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = cli.main([
            "synth-bench", "--m", "16", "--n", "16", "--ranks", "2,3",
            "--rhos", "0.5,1.0", "--trials", "2", "--seed", "3",
            "--out", str(out), "--max-iters", "120",
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 4  # header + 2 ranks x 2 rhos
        header = lines[0].split(",")
        by_col = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
        full = [r for r in by_col if r["rho"] == "1.0"]
        assert all(float(r["success_rate"]) == 1.0 for r in full)

    def test_two_solvers_give_two_row_blocks(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = cli.main([
            "synth-bench", "--m", "14", "--n", "14", "--ranks", "2",
            "--rhos", "0.6", "--trials", "1", "--solver", "exact,gamp",
            "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("exact,") and lines[2].startswith("gamp,")

    def test_byte_identical_reruns(self, tmp_path):
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / f"bench-{tag}.csv"
            assert cli.main([
                "synth-bench", "--m", "12", "--n", "12", "--ranks", "2",
                "--rhos", "0.7", "--trials", "2", "--seed", "11", "--out", str(out),
            ]) == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]


class TestRatePredict:
    @staticmethod
    def _ratings_fixture(tmp_path, seed=0):
        rng = np.random.default_rng(seed)
        users, items, k = 30, 40, 2
        a = rng.uniform(0.5, 1.5, (users, k))
        b = rng.uniform(0.5, 1.5, (items, k))
        raw = a @ b.T
        ratings = np.clip(np.rint(1 + 4 * (raw - raw.min()) / (raw.max() - raw.min())), 1, 5)
        mask = rng.random((users, items)) < 0.6
        path = tmp_path / "ratings.csv"
        lines = [
            f"{u},{i},{ratings[u, i]:.0f}"
            for u in range(users)
            for i in range(items)
            if mask[u, i]
        ]
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_beats_global_mean_baseline(self, tmp_path):
        path = self._ratings_fixture(tmp_path)
        report = tmp_path / "r.json"
        code = cli.main([
            "rate-predict", "--ratings", str(path), "--train-fraction", "0.5",
            "--seed", "1", "--report", str(report),
        ])
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["nmae"] < payload["nmae_global_mean"]

    def test_full_train_fraction_fails_cleanly(self, tmp_path):
        path = self._ratings_fixture(tmp_path)
        assert cli.main([
            "rate-predict", "--ratings", str(path), "--train-fraction", "1.0",
        ]) == 1

    def test_byte_identical_reruns(self, tmp_path):
        path = self._ratings_fixture(tmp_path)
        blobs = []
        for tag in ("a", "b"):
            report = tmp_path / f"r-{tag}.json"
            assert cli.main([
                "rate-predict", "--ratings", str(path), "--train-fraction", "0.5",
                "--seed", "2", "--report", str(report),
            ]) == 0
            blobs.append(report.read_bytes())
        assert blobs[0] == blobs[1]
