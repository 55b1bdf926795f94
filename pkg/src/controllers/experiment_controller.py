"""
Experiment Controller: orchestrates the split, fit, search, binarize,
evaluate, benchmark and report commands.
"""
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TextIO

from ..data.dataset import InteractionSet, SplitSpec, parse_movielens_file, positive_sets, split
from ..data.interaction_store import read_interactions, save_id_maps, write_interactions
from ..database.db_manager import DatabaseManager, RunManifest
from ..models.model import PackedModel, binarize
from ..models.serialization import load_model, save_model
from ..services.benchmark import BenchReport, run_benchmark
from ..services.evaluator import EvalReport, mrr
from ..services.search_service import SearchResult, SearchSpace, random_search
from ..services.trainer import TrainConfig, fit
from ..ui.report_renderer import ReportRenderer, read_records, write_records
from ..utils.config import (
    DEFAULT_SEED,
    ERROR_MESSAGES,
    EXIT_CODES,
    ID_MAPS_FILE_NAME,
    MANIFEST_FILE_NAME,
    SPLIT_FILE_NAMES,
)
from ..utils.exceptions import BinRankError, DataFormatError, WrongModelKindError
from ..utils.helpers import fingerprint_file, safe_json_loads
from ..utils.logging_config import log_command, log_error, log_training_epoch

logger = logging.getLogger(__name__)

MODEL_SUFFIX = ".blrm"
REPORTS_FILE_NAME = "reports.jsonl"


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, BinRankError):
        return EXIT_CODES[error.exit_kind]
    if isinstance(error, OSError):
        return EXIT_CODES['data']
    return EXIT_CODES['runtime']


def _exit_kind(code: int) -> str:
    return next(kind for kind, value in EXIT_CODES.items() if value == code)


class ExperimentController:
    """Runs each command against an output directory and the run store."""

    def __init__(
        self,
        out_dir: Path,
        seed: int = DEFAULT_SEED,
        data_format: str = "dat",
        db_manager: Optional[DatabaseManager] = None,
        renderer: Optional[ReportRenderer] = None,
    ):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.data_format = data_format
        self.db_manager = db_manager or DatabaseManager(self.out_dir / "runs.db")
        self.renderer = renderer or ReportRenderer()

    # --- dispatch ---

    def run(self, command: str, action: Callable[[], object], details: Dict = None,
            err: TextIO = None) -> int:
        """Run one command and return its exit code; failures are logged and reported."""
        log_command(command, details)
        try:
            action()
            return EXIT_CODES['success']
        except Exception as e:
            log_error(e, context=command)
            code = exit_code_for(e)
            print(ERROR_MESSAGES[_exit_kind(code)].format(detail=e), file=err or sys.stderr)
            return code

    # --- helpers ---

    def _record(self, manifest: RunManifest, manifest_dir: Optional[Path] = None) -> int:
        if manifest_dir is not None:
            (manifest_dir / MANIFEST_FILE_NAME).write_text(manifest.to_json(), encoding="utf-8")
        return self.db_manager.record_run(manifest)

    def _verify_fingerprint(self, path: Path) -> str:
        """
        Fingerprint ``path`` and compare against the split manifest beside it.

        Raises:
            DataFormatError: The file changed since the manifest was written
        """
        path = Path(path)
        fingerprint = fingerprint_file(path)
        manifest_path = path.parent / MANIFEST_FILE_NAME
        if manifest_path.exists():
            manifest = RunManifest.from_json(manifest_path.read_text(encoding="utf-8"))
            recorded = manifest.fingerprints.get(path.name)
            if recorded is not None and recorded != fingerprint:
                raise DataFormatError(
                    ERROR_MESSAGES['fingerprint'].format(path=path, manifest=manifest_path)
                )
        return fingerprint

    def _load_interactions(self, path: Path) -> InteractionSet:
        path = Path(path)
        self._verify_fingerprint(path)
        id_maps = path.parent / ID_MAPS_FILE_NAME
        return read_interactions(path, id_maps if id_maps.exists() else None)

    def _append_reports(self, records: List[Dict[str, object]]) -> Path:
        return write_records(self.out_dir / REPORTS_FILE_NAME, records)

    # --- commands ---

    def cmd_split(self, input_path: Path, fractions: Sequence[float],
                  min_rating: Optional[float] = None) -> Dict[str, Path]:
        """Parse ratings, split them and write the three parts plus id maps and manifest."""
        interactions = parse_movielens_file(input_path, self.data_format, min_rating)
        spec = SplitSpec(*fractions, seed=self.seed)
        parts = split(interactions, spec)

        paths = {}
        for name, part in zip(SPLIT_FILE_NAMES, parts):
            paths[name] = write_interactions(self.out_dir / name, part)
        paths[ID_MAPS_FILE_NAME] = save_id_maps(self.out_dir / ID_MAPS_FILE_NAME, interactions)

        self._record(RunManifest(
            command="split",
            config={"fractions": list(spec.fractions), "format": self.data_format,
                    "min_rating": min_rating},
            fingerprints={
                "input": fingerprint_file(input_path),
                **{name: fingerprint_file(paths[name]) for name in SPLIT_FILE_NAMES},
            },
            seed=self.seed,
            artifacts={name: str(path) for name, path in paths.items()},
            metrics={"sizes": [len(part) for part in parts],
                     "num_users": interactions.num_users,
                     "num_items": interactions.num_items},
        ), manifest_dir=self.out_dir)
        return paths

    def load_train_config(self, path: Path) -> TrainConfig:
        """Read a training configuration such as the ``best_config.json`` written by search."""
        data = safe_json_loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise DataFormatError(f"{path} is not a JSON training configuration")
        return TrainConfig.from_dict(data)

    def cmd_fit(self, train_path: Path, config: TrainConfig, name: Optional[str] = None) -> Path:
        """Fit a model on ``train_path`` and write the model file and train report."""
        train = self._load_interactions(train_path)
        model, report = fit(train, positive_sets(train), config, progress=self._progress(report_losses=[]))

        name = name or f"{config.representation}-{config.dim}"
        model_path = self.out_dir / f"{name}{MODEL_SUFFIX}"
        save_model(model, model_path)
        report_path = self.out_dir / f"{name}.train.json"
        report_path.write_text(
            json.dumps({"config": config.to_dict(), **report.to_dict()}, indent=2), encoding="utf-8"
        )
        self.renderer.render_training(report)

        self._record(RunManifest(
            command="fit",
            config=config.to_dict(),
            fingerprints={"train": fingerprint_file(train_path), "model": fingerprint_file(model_path)},
            seed=config.seed,
            artifacts={"model": str(model_path), "report": str(report_path)},
            metrics={"final_loss": report.epoch_losses[-1], "skipped_pairs": report.skipped_pairs},
        ))
        return model_path

    @staticmethod
    def _progress(report_losses: List[float]):
        def sink(epoch: int, mean_loss: float, duration: float):
            trend = "first" if not report_losses else ("down" if mean_loss < report_losses[-1] else "up")
            report_losses.append(mean_loss)
            log_training_epoch(epoch, mean_loss, duration, {"trend": trend})
        return sink

    def cmd_search(self, train_path: Path, test_path: Path, space: SearchSpace,
                   base: TrainConfig, workers: int = 1) -> SearchResult:
        """Random search scored by test MRR; every trial is stored in the run store."""
        train = self._load_interactions(train_path)
        test = self._load_interactions(test_path)
        result = random_search(train, test, space, base, workers=workers)

        best_path = self.out_dir / "best_config.json"
        best_path.write_text(json.dumps(result.best.config, indent=2), encoding="utf-8")
        run_id = self._record(RunManifest(
            command="search",
            config={"space": {k: list(v) if isinstance(v, tuple) else v
                              for k, v in vars(space).items()},
                    "base": base.to_dict(), "workers": workers},
            fingerprints={"train": fingerprint_file(train_path), "test": fingerprint_file(test_path)},
            seed=space.seed,
            artifacts={"best_config": str(best_path)},
            metrics={"best_mrr": result.best.mrr, "best_trial": result.best.index},
        ))
        self.db_manager.save_trials(run_id, result.trials)
        self.renderer.render_trials(result.trials, result.best)
        return result

    def cmd_binarize(self, model_path: Path, name: Optional[str] = None) -> Path:
        """
        Pack a dense model file.

        Raises:
            WrongModelKindError: The input is already packed
        """
        model = load_model(model_path)
        if isinstance(model, PackedModel):
            raise WrongModelKindError(f"{model_path} already holds a packed model")
        packed = binarize(model)
        out_path = self.out_dir / f"{name or Path(model_path).stem + '-packed'}{MODEL_SUFFIX}"
        save_model(packed, out_path)
        self._record(RunManifest(
            command="binarize",
            fingerprints={"input": fingerprint_file(model_path), "model": fingerprint_file(out_path)},
            artifacts={"model": str(out_path)},
        ))
        return out_path

    def cmd_evaluate(self, model_path: Path, eval_path: Path, train_path: Path) -> EvalReport:
        """MRR of a model file on ``eval_path`` excluding training positives."""
        model = load_model(model_path)
        eval_set = self._load_interactions(eval_path)
        train = self._load_interactions(train_path)
        report = mrr(model, eval_set, positive_sets(train))
        self.renderer.render_eval(report)
        self._append_reports([report.to_record()])
        self._record(RunManifest(
            command="evaluate",
            fingerprints={
                "model": fingerprint_file(model_path),
                "eval": fingerprint_file(eval_path),
                "train": fingerprint_file(train_path),
            },
            artifacts={"reports": str(self.out_dir / REPORTS_FILE_NAME)},
            metrics=report.to_record(),
        ))
        return report

    def cmd_benchmark(self, dims: Sequence[int], items: int, reps: int) -> List[BenchReport]:
        reports = run_benchmark(dims, items, reps, seed=self.seed)
        self.renderer.render_bench(reports)
        self._append_reports([r.to_record() for r in reports])
        self._record(RunManifest(
            command="benchmark",
            config={"dims": list(dims), "items": items, "reps": reps},
            seed=self.seed,
            artifacts={"reports": str(self.out_dir / REPORTS_FILE_NAME)},
            metrics={str(r.dim): r.to_record() for r in reports},
        ))
        return reports

    def cmd_report(self, paths: Sequence[Path]):
        """Merge JSON-lines reports into the comparison table."""
        return self.renderer.render_comparison(read_records(paths))
