"""End-to-end command line checks, run in process through main().

Each experiment subcommand is driven by a JSON config file; fit and
predict round-trip a model file over a CSV on disk.
"""

import csv
import json

import numpy as np
import pytest

from steinfeatures.bench.datasets import synthetic_ssgp_dataset
from steinfeatures.bench.reports import load_report
from steinfeatures.cli import main


def _write_config(path, **settings):
    path.write_text(json.dumps(settings), encoding="utf-8")
    return str(path)


def _write_dataset_csv(path, data):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.feature_names) + [data.target_name])
        for i in range(data.n):
            row = [repr(float(v)) for v in data.x[:, i]]
            writer.writerow(row + [repr(float(data.y[i]))])
    return str(path)


class TestExperimentCommands:
    def test_kernel_approx_writes_report(self, tmp_path, capsys):
        out = tmp_path / "kernel.csv"
        config = _write_config(
            tmp_path / "config.json",
            experiment="kernel-approx",
            output=str(out),
            samplers=["mc", "qmc"],
            r_values=[8],
            dims=[1],
            seeds=[0, 1],
            n_points=20,
        )
        assert main(["kernel-approx", "--config", config]) == 0
        rows = load_report(str(out))
        assert len(rows) == 4
        assert {row["sampler"] for row in rows} == {"mc", "qmc"}
        assert "wrote 4 rows" in capsys.readouterr().out

    def test_seed_override_replaces_config_seeds(self, tmp_path):
        out = tmp_path / "kernel.csv"
        config = _write_config(
            tmp_path / "config.json",
            experiment="kernel-approx",
            output=str(out),
            samplers=["mc"],
            r_values=[8],
            dims=[1],
            seeds=[0, 1, 2],
            n_points=20,
        )
        assert main(["kernel-approx", "--config", config, "--seed", "9"]) == 0
        rows = load_report(str(out))
        assert [row["seed"] for row in rows] == [9]

    def test_format_override_emits_json(self, tmp_path):
        out = tmp_path / "kernel.json"
        config = _write_config(
            tmp_path / "config.json",
            experiment="kernel-approx",
            output=str(out),
            format="csv",
            samplers=["mc"],
            r_values=[8],
            dims=[1],
            seeds=[0],
            n_points=20,
        )
        assert main(["kernel-approx", "--config", config, "--format", "json"]) == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert isinstance(payload, list) and payload[0]["sampler"] == "mc"

    def test_regression_writes_report(self, tmp_path):
        out = tmp_path / "reg.csv"
        config = _write_config(
            tmp_path / "config.json",
            experiment="regression",
            output=str(out),
            datasets=[{"name": "toy", "n": 30, "dim": 2, "seed": 1}],
            methods=["ssgp"],
            seeds=[0],
            r=3,
            iterations=5,
            timing=False,
        )
        assert main(["regression", "--config", config]) == 0
        rows = load_report(str(out))
        assert len(rows) == 1
        assert rows[0]["status"] == "ok"

    def test_bad_config_exits_nonzero_with_message(self, tmp_path, capsys):
        config = _write_config(tmp_path / "config.json", experiment="regression")
        assert main(["regression", "--config", config]) == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_config_file_exits_nonzero(self, tmp_path, capsys):
        missing = str(tmp_path / "absent.json")
        assert main(["kernel-approx", "--config", missing]) == 1
        assert "absent.json" in capsys.readouterr().err


class TestFitPredict:
    @staticmethod
    def _fit_args(data_path, model_path, method="ssgp", extra=()):
        return [
            "fit",
            "--data", data_path,
            "--target", "y",
            "--method", method,
            "--out", model_path,
            "--r", "4",
            "--m", "2",
            "--iterations", "15",
        ] + list(extra)

    def test_fit_then_predict_round_trip(self, tmp_path, capsys):
        """A model fit on a CSV predicts that CSV better than the mean
        baseline, in original target units."""
        data = synthetic_ssgp_dataset("train", n=60, dim=2, seed=8)
        data_path = _write_dataset_csv(tmp_path / "train.csv", data)
        model_path = str(tmp_path / "model.json")
        assert main(self._fit_args(data_path, model_path)) == 0
        assert "fit ssgp on 60 rows" in capsys.readouterr().out

        payload = json.loads((tmp_path / "model.json").read_text(encoding="utf-8"))
        assert payload["format"] == "stein-features-model"
        assert payload["feature_names"] == ["x0", "x1"]

        pred_path = str(tmp_path / "preds.csv")
        assert main(["predict", "--model", model_path, "--data", data_path,
                     "--out", pred_path]) == 0
        rows = load_report(pred_path)
        assert len(rows) == 60
        mean = np.array([row["mean"] for row in rows])
        variance = np.array([row["variance"] for row in rows])
        assert np.all(variance > 0)
        fit_rmse = float(np.sqrt(np.mean((mean - data.y) ** 2)))
        baseline = float(np.std(data.y))
        assert fit_rmse < baseline

    def test_fit_is_deterministic(self, tmp_path):
        data = synthetic_ssgp_dataset("train", n=40, dim=2, seed=9)
        data_path = _write_dataset_csv(tmp_path / "train.csv", data)
        first, second = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        assert main(self._fit_args(data_path, first)) == 0
        assert main(self._fit_args(data_path, second)) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_fit_mixture_stores_all_components(self, tmp_path):
        data = synthetic_ssgp_dataset("train", n=40, dim=2, seed=10)
        data_path = _write_dataset_csv(tmp_path / "train.csv", data)
        model_path = str(tmp_path / "model.json")
        assert main(self._fit_args(data_path, model_path, method="msrfr")) == 0
        payload = json.loads((tmp_path / "model.json").read_text(encoding="utf-8"))
        assert payload["mixture"]["m"] == 2

    def test_predict_rejects_foreign_model_file(self, tmp_path, capsys):
        data = synthetic_ssgp_dataset("train", n=20, dim=1, seed=11)
        data_path = _write_dataset_csv(tmp_path / "train.csv", data)
        model_path = tmp_path / "model.json"
        model_path.write_text('{"format": "other", "version": 0}', encoding="utf-8")
        code = main(["predict", "--model", str(model_path), "--data", data_path,
                     "--out", str(tmp_path / "p.csv")])
        assert code == 1
        assert "expected stein-features-model" in capsys.readouterr().err

    def test_predict_requires_the_training_features(self, tmp_path, capsys):
        data = synthetic_ssgp_dataset("train", n=30, dim=2, seed=12)
        data_path = _write_dataset_csv(tmp_path / "train.csv", data)
        model_path = str(tmp_path / "model.json")
        assert main(self._fit_args(data_path, model_path)) == 0
        narrow = tmp_path / "narrow.csv"
        narrow.write_text("x0\n0.5\n", encoding="utf-8")
        code = main(["predict", "--model", model_path, "--data", str(narrow),
                     "--out", str(tmp_path / "p.csv")])
        assert code == 1
        assert "x1" in capsys.readouterr().err

    def test_fit_with_missing_target_column_fails_cleanly(self, tmp_path, capsys):
        data = synthetic_ssgp_dataset("train", n=20, dim=1, seed=13)
        data_path = _write_dataset_csv(tmp_path / "train.csv", data)
        code = main(["fit", "--data", data_path, "--target", "label",
                     "--method", "ssgp", "--out", str(tmp_path / "m.json")])
        assert code == 1
        assert "label" in capsys.readouterr().err
