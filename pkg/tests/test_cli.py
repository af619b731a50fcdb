import json
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from xaikit.arrayio import read_array_file, read_table, write_array_file, write_table
from xaikit.cli import main
from xaikit.edm import activation_map, class_scores
from xaikit.metrics import roc_auc
from xaikit.mil import MilConfig, aggregate_patient, classification_loss, one_hot_label

PREDICTOR = f"{sys.executable} -m xaikit.testpred"


def run(argv):
    return main([str(a) for a in argv])


class TestParsing:
    def test_version_exits_zero(self, capsys):
        assert run(["--version"]) == 0
        assert "xaikit" in capsys.readouterr().out

    def test_help_exits_zero(self, capsys):
        assert run(["--help"]) == 0
        capsys.readouterr()

    def test_missing_subcommand(self, capsys):
        assert run([]) == 2
        capsys.readouterr()

    def test_unknown_flag(self, capsys):
        assert run(["cam", "--bogus"]) == 2
        capsys.readouterr()

    def test_missing_input_file_names_path(self, tmp_path, capsys):
        code = run(
            ["cam", "--features", tmp_path / "absent.npy", "--weights",
             tmp_path / "w.npy", "--class", "0"]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "absent.npy" in err
        assert "not found" in err

    def test_unreadable_array_file(self, tmp_path, capsys):
        bad = tmp_path / "junk.npy"
        bad.write_bytes(b"this is not an array")
        w = tmp_path / "w.npy"
        write_array_file(w, np.ones((3, 2)))
        code = run(["cam", "--features", bad, "--weights", w, "--class", "0"])
        assert code == 2
        assert "cannot read array file" in capsys.readouterr().err


class TestCam:
    def make_inputs(self, tmp_path, seed=0):
        rng = np.random.default_rng(seed)
        features = rng.uniform(size=(6, 5, 4))
        weights = rng.normal(size=(4, 3))
        f_path = tmp_path / "features.npy"
        w_path = tmp_path / "weights.npy"
        write_array_file(f_path, features)
        write_array_file(w_path, weights)
        return features, weights, f_path, w_path

    def test_report_matches_library(self, tmp_path, capsys):
        features, weights, f_path, w_path = self.make_inputs(tmp_path)
        report = tmp_path / "report.json"
        map_out = tmp_path / "map.npy"
        code = run(
            ["cam", "--features", f_path, "--weights", w_path, "--class", "1",
             "--map-out", map_out, "--report", report]
        )
        assert code == 0
        assert capsys.readouterr().out == ""
        payload = json.loads(report.read_text())
        assert payload["command"] == "cam"
        scores = class_scores(features, weights)
        assert_allclose(payload["results"]["score"], scores[1], atol=1e-12)
        assert payload["results"]["identity_gap"] <= 1e-9
        saliency = activation_map(features, weights, 1)
        assert np.array_equal(read_array_file(map_out), saliency.values)

    def test_raster_outputs(self, tmp_path):
        _, _, f_path, w_path = self.make_inputs(tmp_path, seed=1)
        pgm = tmp_path / "map.pgm"
        ppm = tmp_path / "map.ppm"
        code = run(
            ["cam", "--features", f_path, "--weights", w_path, "--class", "0",
             "--out", pgm, "--ppm", ppm, "--scale", "3"]
        )
        assert code == 0
        # 6 x 5 map upscaled 3x: P5 header carries width then height
        assert pgm.read_bytes().startswith(b"P5\n15 18\n255\n")
        assert ppm.read_bytes().startswith(b"P6\n15 18\n255\n")

    def test_boxes_output(self, tmp_path):
        _, _, f_path, w_path = self.make_inputs(tmp_path, seed=2)
        boxes = tmp_path / "boxes.json"
        code = run(
            ["cam", "--features", f_path, "--weights", w_path, "--class", "0",
             "--threshold", "0.5", "--boxes", boxes]
        )
        assert code == 0
        payload = json.loads(boxes.read_text())
        assert payload["threshold"] == 0.5
        for box in payload["boxes"]:
            assert box["row_min"] <= box["row_max"]
            assert box["col_min"] <= box["col_max"]


class TestMil:
    def make_scores(self, tmp_path, n=40, seed=3):
        rng = np.random.default_rng(seed)
        logits = rng.normal(size=(n, 2))
        path = tmp_path / "scores.npy"
        write_array_file(path, logits)
        return logits, path

    def test_report_matches_library(self, tmp_path):
        logits, path = self.make_scores(tmp_path)
        report = tmp_path / "mil.json"
        code = run(["mil", "--scores", path, "--label", "1", "--report", report])
        assert code == 0
        payload = json.loads(report.read_text())
        config = MilConfig()
        summary = aggregate_patient(logits, config)
        assert_allclose(payload["results"]["patient_probs"], summary.patient_probs, atol=0)
        expected_l_cls = classification_loss(
            summary.patient_probs, one_hot_label(1), config.clamp_eps
        )
        assert_allclose(payload["results"]["l_cls"], expected_l_cls, atol=0)
        assert payload["results"]["l_noisy"] is None

    def test_repeat_runs_byte_identical(self, tmp_path):
        _, path = self.make_scores(tmp_path, seed=4)
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert run(["mil", "--scores", path, "--label", "0", "--report", a]) == 0
        assert run(["mil", "--scores", path, "--label", "0", "--report", b]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_noise_head_outputs(self, tmp_path):
        rng = np.random.default_rng(5)
        _, path = self.make_scores(tmp_path, n=24, seed=5)
        emb = tmp_path / "emb.npy"
        hw = tmp_path / "hw.npy"
        hb = tmp_path / "hb.npy"
        write_array_file(emb, rng.normal(size=(24, 4)))
        write_array_file(hw, rng.normal(scale=0.1, size=(2, 2, 2, 4)))
        write_array_file(hb, rng.normal(scale=0.1, size=(2, 2, 2)))
        grad_out = tmp_path / "grad.npy"
        report = tmp_path / "mil.json"
        code = run(
            ["mil", "--scores", path, "--label", "1", "--embeddings", emb,
             "--head-weights", hw, "--head-biases", hb,
             "--grad-scores", grad_out, "--report", report]
        )
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["results"]["l_noisy"] is not None
        assert payload["results"]["l_total"] is not None
        assert read_array_file(grad_out).shape == (24, 2)

    def test_partial_head_trio_rejected(self, tmp_path, capsys):
        _, path = self.make_scores(tmp_path, seed=6)
        emb = tmp_path / "emb.npy"
        write_array_file(emb, np.zeros((40, 4)))
        code = run(["mil", "--scores", path, "--label", "0", "--embeddings", emb])
        assert code == 2
        assert "must be given together" in capsys.readouterr().err

    def test_grads_without_head_rejected(self, tmp_path, capsys):
        _, path = self.make_scores(tmp_path, seed=7)
        code = run(
            ["mil", "--scores", path, "--label", "0", "--grad-scores", tmp_path / "g.npy"]
        )
        assert code == 2
        assert "noise head" in capsys.readouterr().err


class TestExplainers:
    def make_image(self, tmp_path, h=4, w=4):
        path = tmp_path / "image.npy"
        write_array_file(path, np.ones((h, w, 1)))
        return path

    def test_lime_constant_predictor_gives_flat_weights(self, tmp_path):
        image = self.make_image(tmp_path)
        weights_out = tmp_path / "weights.npy"
        report = tmp_path / "lime.json"
        code = run(
            ["lime", "--image", image, "--predictor-cmd", PREDICTOR + " --mode constant",
             "--superpixels", "4", "--class", "1", "--samples", "64", "--seed", "0",
             "--weights-out", weights_out, "--report", report]
        )
        assert code == 0
        weights = read_array_file(weights_out)
        assert weights.shape == (4,)
        assert_allclose(weights, 0.0, atol=1e-9)
        payload = json.loads(report.read_text())
        # baseline + full image + 64 sampled masks in two batches of 32
        assert payload["results"]["invocations"] == 4
        assert payload["results"]["superpixels"]["count"] == 4

    def test_shap_efficiency_in_report(self, tmp_path):
        image = self.make_image(tmp_path)
        report = tmp_path / "shap.json"
        code = run(
            ["shap", "--image", image, "--predictor-cmd", PREDICTOR + " --mode mean",
             "--superpixels", "4", "--class", "1", "--samples", "64", "--seed", "0",
             "--baseline", "zero", "--report", report]
        )
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["results"]["efficiency_gap"] <= 1e-9
        total = sum(payload["results"]["weights"])
        gap = abs(
            total
            - (payload["results"]["full_value"] - payload["results"]["baseline_value"])
        )
        assert gap <= 1e-9

    def test_failing_predictor_exits_one(self, tmp_path, capsys):
        image = self.make_image(tmp_path)
        code = run(
            ["lime", "--image", image, "--predictor-cmd", PREDICTOR + " --mode fail",
             "--superpixels", "4", "--class", "0", "--samples", "16", "--seed", "0"]
        )
        assert code == 1
        assert "predictor failed" in capsys.readouterr().err

    def test_rank_2_image_rejected(self, tmp_path, capsys):
        path = tmp_path / "flat.npy"
        write_array_file(path, np.ones((4, 4)))
        code = run(
            ["lime", "--image", path, "--predictor-cmd", "true", "--class", "0"]
        )
        assert code == 2
        assert "H x W x C" in capsys.readouterr().err


class TestTsne:
    def make_embeddings(self, tmp_path, n=12, d=3, seed=8):
        rng = np.random.default_rng(seed)
        path = tmp_path / "emb.npy"
        write_array_file(path, rng.normal(size=(n, d)))
        return path

    def test_outputs_and_determinism(self, tmp_path):
        emb = self.make_embeddings(tmp_path)
        out_a = tmp_path / "a.npy"
        out_b = tmp_path / "b.npy"
        rep_a = tmp_path / "a.json"
        rep_b = tmp_path / "b.json"
        argv = ["tsne", "--embeddings", emb, "--iterations", "20", "--seed", "4",
                "--threads", "1"]
        assert run(argv + ["--out", out_a, "--report", rep_a]) == 0
        assert run(argv + ["--out", out_b, "--report", rep_b]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        assert rep_a.read_bytes() == rep_b.read_bytes()

    def test_csv_outputs(self, tmp_path):
        emb = self.make_embeddings(tmp_path, seed=9)
        coords_csv = tmp_path / "coords.csv"
        trace_csv = tmp_path / "trace.csv"
        code = run(
            ["tsne", "--embeddings", emb, "--iterations", "15", "--seed", "0",
             "--coords-csv", coords_csv, "--trace-csv", trace_csv]
        )
        assert code == 0
        header, rows = read_table(coords_csv)
        assert header == ["index", "y1", "y2"]
        assert len(rows) == 12
        header, rows = read_table(trace_csv)
        assert header == ["iteration", "objective"]
        assert len(rows) == 16

    def test_env_seed_equivalent_to_flag(self, tmp_path, monkeypatch):
        emb = self.make_embeddings(tmp_path, seed=10)
        by_flag = tmp_path / "flag.npy"
        by_env = tmp_path / "env.npy"
        assert run(["tsne", "--embeddings", emb, "--iterations", "10",
                    "--seed", "5", "--out", by_flag]) == 0
        monkeypatch.setenv("XAIKIT_SEED", "5")
        assert run(["tsne", "--embeddings", emb, "--iterations", "10",
                    "--out", by_env]) == 0
        assert by_flag.read_bytes() == by_env.read_bytes()

    def test_infeasible_input_exits_one(self, tmp_path, capsys):
        path = tmp_path / "tiny.npy"
        write_array_file(path, np.zeros((4, 2)))
        assert run(["tsne", "--embeddings", path]) == 1
        capsys.readouterr()


class TestLandscape:
    def make_inputs(self, tmp_path, n=20, seed=11):
        rng = np.random.default_rng(seed)
        emb = tmp_path / "emb.npy"
        write_array_file(emb, rng.normal(size=(n, 5)))
        dice = tmp_path / "dice.csv"
        write_table(dice, ["case", "dice"], [(i, v) for i, v in enumerate(rng.uniform(size=n))])
        return emb, dice

    def test_outputs(self, tmp_path):
        emb, dice = self.make_inputs(tmp_path)
        grid_out = tmp_path / "grid.npy"
        coords_out = tmp_path / "coords.npy"
        report = tmp_path / "land.json"
        code = run(
            ["landscape", "--embeddings", emb, "--dice", dice, "--seed", "0",
             "--iterations", "60", "--resolution", "4",
             "--grid-out", grid_out, "--coords-out", coords_out, "--report", report]
        )
        assert code == 0
        assert read_array_file(grid_out).shape == (4, 4)
        assert read_array_file(coords_out).shape == (20, 2)
        payload = json.loads(report.read_text())
        assert payload["results"]["n"] == 20
        assert len(payload["results"]["bounds"]) == 4
        assert len(payload["results"]["explained_variance"]) == 2
        lo1, hi1, lo2, hi2 = payload["results"]["bounds"]
        coords = read_array_file(coords_out)
        assert_allclose([lo1, hi1], [coords[:, 0].min(), coords[:, 0].max()], atol=0)
        assert_allclose([lo2, hi2], [coords[:, 1].min(), coords[:, 1].max()], atol=0)

    def test_count_mismatch_rejected(self, tmp_path, capsys):
        emb, _ = self.make_inputs(tmp_path, seed=12)
        dice = tmp_path / "short.csv"
        write_table(dice, ["dice"], [(0.5,), (0.6,)])
        code = run(["landscape", "--embeddings", emb, "--dice", dice])
        assert code == 2
        assert "does not match" in capsys.readouterr().err

    def test_missing_dice_column(self, tmp_path, capsys):
        emb, _ = self.make_inputs(tmp_path, seed=13)
        dice = tmp_path / "nocol.csv"
        write_table(dice, ["value"], [(0.5,)])
        code = run(["landscape", "--embeddings", emb, "--dice", dice])
        assert code == 2
        assert "'dice' column" in capsys.readouterr().err


class TestMetrics:
    def make_data(self, tmp_path, seed=14, n=30):
        rng = np.random.default_rng(seed)
        scores = rng.uniform(size=n)
        labels = rng.integers(2, size=n)
        labels[:2] = (0, 1)
        path = tmp_path / "data.csv"
        write_table(path, ["score", "label"], list(zip(scores, labels)))
        return scores, labels, path

    def test_report_matches_library(self, tmp_path):
        scores, labels, path = self.make_data(tmp_path)
        report = tmp_path / "metrics.json"
        code = run(["metrics", "--data", path, "--threshold", "0.5", "--report", report])
        assert code == 0
        payload = json.loads(report.read_text())
        assert_allclose(payload["results"]["auc"], roc_auc(scores, labels).auc, atol=1e-15)
        assert payload["results"]["given_threshold"]["threshold"] == 0.5
        counts = payload["results"]["given_threshold"]
        assert counts["tp"] + counts["fp"] + counts["tn"] + counts["fn"] == 30

    def test_roc_csv_first_row_is_infinite_threshold(self, tmp_path):
        _, _, path = self.make_data(tmp_path, seed=15)
        roc_csv = tmp_path / "roc.csv"
        assert run(["metrics", "--data", path, "--roc-csv", roc_csv]) == 0
        header, rows = read_table(roc_csv)
        assert header == ["threshold", "fpr", "tpr"]
        assert float(rows[0][0]) == np.inf
        assert rows[0][1:] == ["0.0", "0.0"]
        assert rows[-1][1:] == ["1.0", "1.0"]

    def test_single_class_exits_one(self, tmp_path, capsys):
        path = tmp_path / "one.csv"
        write_table(path, ["score", "label"], [(0.1, 1), (0.9, 1)])
        assert run(["metrics", "--data", path]) == 1
        assert "both classes" in capsys.readouterr().err

    def test_dice_masks(self, tmp_path):
        _, _, path = self.make_data(tmp_path, seed=16)
        a = tmp_path / "a.npy"
        b = tmp_path / "b.npy"
        write_array_file(a, np.array([[1.0, 1.0, 0.0]]))
        write_array_file(b, np.array([[1.0, 0.0, 0.0]]))
        report = tmp_path / "m.json"
        code = run(["metrics", "--data", path, "--mask-a", a, "--mask-b", b,
                    "--report", report])
        assert code == 0
        payload = json.loads(report.read_text())
        assert_allclose(payload["results"]["dice"], 2.0 / 3.0, atol=1e-12)

    def test_lone_mask_rejected(self, tmp_path, capsys):
        _, _, path = self.make_data(tmp_path, seed=17)
        a = tmp_path / "a.npy"
        write_array_file(a, np.array([[1.0]]))
        assert run(["metrics", "--data", path, "--mask-a", a]) == 2
        assert "together" in capsys.readouterr().err

    def test_missing_column_rejected(self, tmp_path, capsys):
        path = tmp_path / "wrong.csv"
        write_table(path, ["score", "target"], [(0.1, 0), (0.9, 1)])
        assert run(["metrics", "--data", path]) == 2
        assert "'label' column" in capsys.readouterr().err


class TestSeglossCheck:
    def make_inputs(self, tmp_path, seed=18, h=3, w=4, c=2):
        rng = np.random.default_rng(seed)
        raw = rng.uniform(0.1, 1.0, size=(h, w, c))
        p_sup = raw / raw.sum(axis=2, keepdims=True)
        labels = np.zeros((h, w, c))
        picks = rng.integers(c, size=(h, w))
        for i in range(h):
            for j in range(w):
                labels[i, j, picks[i, j]] = 1.0
        raw = rng.uniform(0.1, 1.0, size=(h, w, c))
        p_unsup = raw / raw.sum(axis=2, keepdims=True)
        paths = []
        for name, arr in (("psup", p_sup), ("lab", labels), ("punsup", p_unsup)):
            path = tmp_path / f"{name}.npy"
            write_array_file(path, arr)
            paths.append(path)
        return paths

    def test_report_and_gradient(self, tmp_path):
        psup, lab, punsup = self.make_inputs(tmp_path)
        grad_out = tmp_path / "grad.npy"
        report = tmp_path / "seg.json"
        code = run(
            ["segloss-check", "--prob-sup", psup, "--labels", lab,
             "--prob-unsup", punsup, "--seed", "0",
             "--grad-out", grad_out, "--report", report]
        )
        assert code == 0
        payload = json.loads(report.read_text())
        results = payload["results"]
        assert results["fd_max_rel_err"] <= 1e-6
        assert_allclose(
            results["combined"], results["l_sup"] + 0.01 * results["l_div"], atol=1e-12
        )
        assert read_array_file(grad_out).shape == (3, 4, 2)

    def test_repeat_runs_byte_identical(self, tmp_path):
        psup, lab, punsup = self.make_inputs(tmp_path, seed=19)
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        argv = ["segloss-check", "--prob-sup", psup, "--labels", lab,
                "--prob-unsup", punsup, "--seed", "7", "--divergence", "kl"]
        assert run(argv + ["--report", a]) == 0
        assert run(argv + ["--report", b]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_probabilities_exit_one(self, tmp_path, capsys):
        psup, lab, punsup = self.make_inputs(tmp_path, seed=20)
        bad = tmp_path / "bad.npy"
        write_array_file(bad, np.full((3, 4, 2), 0.9))
        code = run(["segloss-check", "--prob-sup", psup, "--labels", lab,
                    "--prob-unsup", bad])
        assert code == 1
        capsys.readouterr()
