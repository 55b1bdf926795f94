"""
Unit tests for ExperimentController and the command-line entry point.
"""
import io
import json
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock, patch

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import app
from src.controllers.experiment_controller import ExperimentController, exit_code_for
from src.database.db_manager import DatabaseManager
from src.models.model import PackedModel
from src.models.serialization import load_model
from src.services.search_service import SearchSpace
from src.services.trainer import TrainConfig
from src.ui.report_renderer import ReportRenderer
from src.utils.config import SPLIT_FILE_NAMES
from src.utils.exceptions import (
    ConfigError,
    DataFormatError,
    SearchFailedError,
    TruncatedFileError,
    WrongModelKindError,
)
from tests.fixtures import ratings_text


class TestExitCodes(unittest.TestCase):
    """Test cases for exception to exit-code mapping."""

    def test_mapping(self):
        self.assertEqual(exit_code_for(ConfigError("x")), 1)
        self.assertEqual(exit_code_for(DataFormatError("x", 3)), 2)
        self.assertEqual(exit_code_for(TruncatedFileError("x")), 2)
        self.assertEqual(exit_code_for(FileNotFoundError("x")), 2)
        self.assertEqual(exit_code_for(SearchFailedError("x")), 3)
        self.assertEqual(exit_code_for(RuntimeError("x")), 3)


class TestExperimentController(unittest.TestCase):
    """Test cases for ExperimentController commands."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.ratings = self.root / "ratings.dat"
        self.ratings.write_text(ratings_text(), encoding="utf-8")
        self.controller = self._controller("out")

    def tearDown(self):
        self.tmp.cleanup()

    def _controller(self, name, seed=42):
        out = self.root / name
        return ExperimentController(
            out_dir=out,
            seed=seed,
            db_manager=DatabaseManager(out / "runs.db"),
            renderer=ReportRenderer(io.StringIO()),
        )

    def _split(self, controller=None):
        return (controller or self.controller).cmd_split(self.ratings, (0.8, 0.1, 0.1))

    def test_split_writes_parts_and_manifest(self):
        paths = self._split()
        for name in SPLIT_FILE_NAMES:
            self.assertTrue(paths[name].exists())
        self.assertTrue((self.controller.out_dir / "manifest.json").exists())
        self.assertTrue((self.controller.out_dir / "id_maps.npz").exists())

        manifest = self.controller.db_manager.get_runs("split")[0]
        self.assertIn("[32, 4, 4]", manifest["metrics"])

    def test_split_is_byte_identical_on_rerun(self):
        first = self._split()
        second = self._split(self._controller("again"))
        for name in SPLIT_FILE_NAMES:
            self.assertEqual(first[name].read_bytes(), second[name].read_bytes())

    def test_split_rejects_empty_part(self):
        code = self.controller.run(
            "split", lambda: self.controller.cmd_split(self.ratings, (0.5, 0.5, 0.0)), err=io.StringIO()
        )
        self.assertEqual(code, 1)

    def test_fit_writes_loadable_model(self):
        paths = self._split()
        model_path = self.controller.cmd_fit(paths["train.blri"], TrainConfig(epochs=2, seed=3))

        model = load_model(model_path)
        self.assertEqual(model.dim, 32)
        self.assertTrue(model_path.with_name("dense-32.train.json").exists())

    def test_fit_is_deterministic(self):
        paths = self._split()
        config = TrainConfig(epochs=2, seed=3)
        first = self.controller.cmd_fit(paths["train.blri"], config, name="a")
        second = self.controller.cmd_fit(paths["train.blri"], config, name="b")
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_mutated_dataset_is_detected(self):
        paths = self._split()
        train = paths["train.blri"]
        payload = bytearray(train.read_bytes())
        payload[-1] ^= 1
        train.write_bytes(bytes(payload))
        with self.assertRaises(DataFormatError):
            self.controller.cmd_fit(train, TrainConfig(epochs=1))

    def test_binarize_and_evaluate(self):
        paths = self._split()
        dense_path = self.controller.cmd_fit(paths["train.blri"], TrainConfig(epochs=2))
        packed_path = self.controller.cmd_binarize(dense_path)
        self.assertIsInstance(load_model(packed_path), PackedModel)

        with self.assertRaises(WrongModelKindError):
            self.controller.cmd_binarize(packed_path)

        report = self.controller.cmd_evaluate(packed_path, paths["validation.blri"], paths["train.blri"])
        self.assertEqual(report.representation, "binary")
        self.assertTrue(0.0 < report.mrr <= 1.0)
        self.assertTrue((self.controller.out_dir / "reports.jsonl").exists())

    def test_evaluate_missing_file(self):
        paths = self._split()
        code = self.controller.run(
            "evaluate",
            lambda: self.controller.cmd_evaluate(self.root / "missing.blrm", paths["test.blri"], paths["train.blri"]),
            err=io.StringIO(),
        )
        self.assertEqual(code, 2)

    def test_search_stores_trials(self):
        paths = self._split()
        space = SearchSpace(minibatch_size=(8,), epochs=(1,), trials=2, seed=1)
        result = self.controller.cmd_search(paths["train.blri"], paths["test.blri"], space, TrainConfig())

        run_id = self.controller.db_manager.get_runs("search")[0]["id"]
        self.assertEqual(len(self.controller.db_manager.get_trials(run_id)), 2)
        self.assertEqual(self.controller.db_manager.best_trial(run_id).index, result.best.index)
        self.assertTrue((self.controller.out_dir / "best_config.json").exists())

    def test_search_winner_refits_to_the_same_model(self):
        paths = self._split()
        space = SearchSpace(minibatch_size=(8,), epochs=(1, 2), trials=3, seed=4)
        result = self.controller.cmd_search(paths["train.blri"], paths["test.blri"], space, TrainConfig())

        config = self.controller.load_train_config(self.controller.out_dir / "best_config.json")
        self.assertEqual(config, result.best_config)
        self.assertEqual(config.seed, 4 + result.best.index)

        model_path = self.controller.cmd_fit(paths["train.blri"], config, name="winner")
        report = self.controller.cmd_evaluate(model_path, paths["test.blri"], paths["train.blri"])
        self.assertAlmostEqual(report.mrr, result.best.mrr, places=12)

    def test_load_train_config_errors(self):
        unknown = self.root / "unknown.json"
        unknown.write_text('{"dim": 32, "momentum": 0.9}', encoding="utf-8")
        with self.assertRaises(ConfigError):
            self.controller.load_train_config(unknown)

        not_json = self.root / "list.json"
        not_json.write_text("[1, 2]", encoding="utf-8")
        with self.assertRaises(DataFormatError):
            self.controller.load_train_config(not_json)

    def test_benchmark_then_report(self):
        self.controller.cmd_benchmark((32,), items=100, reps=2)
        rows = self.controller.cmd_report([self.controller.out_dir / "reports.jsonl"])
        self.assertEqual(rows[0].dim, 32)
        self.assertAlmostEqual(rows[0].memory_ratio, 12 / 132)

    def test_run_logs_and_maps_failures(self):
        err = io.StringIO()
        action = MagicMock(side_effect=ConfigError("bad"))
        self.assertEqual(self.controller.run("fit", action, err=err), 1)
        self.assertIn("bad", err.getvalue())
        self.assertEqual(self.controller.run("fit", MagicMock()), 0)


class TestCommandLine(unittest.TestCase):
    """Test cases for app.main."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name) / "out"
        self.ratings = Path(self.tmp.name) / "ratings.dat"
        self.ratings.write_text(ratings_text(), encoding="utf-8")

    def tearDown(self):
        self.tmp.cleanup()

    def test_split_and_fit(self):
        self.assertEqual(app.main(["--out", str(self.out), "split", str(self.ratings)]), 0)
        code = app.main(["--out", str(self.out), "--seed", "1", "fit", str(self.out / "train.blri"),
                         "--epochs", "1", "--name", "cli"])
        self.assertEqual(code, 0)
        self.assertTrue((self.out / "cli.blrm").exists())

    def test_binary_dim_must_be_multiple_of_32(self):
        app.main(["--out", str(self.out), "split", str(self.ratings)])
        code = app.main(["--out", str(self.out), "fit", str(self.out / "train.blri"),
                         "--representation", "binary", "--dim", "33"])
        self.assertEqual(code, 1)

    def test_benchmark_rejects_zero_items(self):
        self.assertEqual(app.main(["--out", str(self.out), "benchmark", "--items", "0"]), 1)

    def test_usage_error(self):
        with self.assertRaises(SystemExit) as ctx:
            app.main(["--out", str(self.out), "split"])
        self.assertEqual(ctx.exception.code, 1)

    def test_fit_from_config_file(self):
        app.main(["--out", str(self.out), "split", str(self.ratings)])
        config = Path(self.tmp.name) / "best_config.json"
        config.write_text(json.dumps(TrainConfig(epochs=1, seed=77).to_dict()), encoding="utf-8")

        code = app.main(["--out", str(self.out), "fit", str(self.out / "train.blri"),
                         "--config", str(config), "--name", "from-config"])
        self.assertEqual(code, 0)
        report = json.loads((self.out / "from-config.train.json").read_text(encoding="utf-8"))
        self.assertEqual(report["config"]["seed"], 77)

        config.write_text("not json", encoding="utf-8")
        code = app.main(["--out", str(self.out), "fit", str(self.out / "train.blri"), "--config", str(config)])
        self.assertEqual(code, 2)

    def test_non_integer_seed_variable(self):
        with patch.dict(os.environ, {"BINRANK_SEED": "forty-two"}):
            code = app.main(["--out", str(self.out), "benchmark", "--items", "10", "--reps", "1"])
        self.assertEqual(code, 1)


if __name__ == '__main__':
    unittest.main()
