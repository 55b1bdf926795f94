"""
Report Renderer for fixed-width result tables and JSON-lines report files.
"""
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

import pandas as pd

from ..services.benchmark import BenchReport, ops_per_prediction
from ..services.comparison import ComparisonRow, build_comparison_rows, tradeoff_summary
from ..services.evaluator import EvalReport
from ..services.search_service import TrialRecord
from ..services.trainer import TrainReport
from ..utils.config import COMPARISON_COLUMNS
from ..utils.exceptions import DataFormatError
from ..utils.helpers import format_duration, get_trend_indicator, safe_json_loads

logger = logging.getLogger(__name__)

_FLOAT_FORMATS = {
    "mrr": "{:.3f}",
    "binary_mrr": "{:.3f}",
    "mrr_ratio": "{:.3f}",
    "ppms": "{:,.0f}",
    "binary_ppms": "{:,.0f}",
    "ppms_ratio": "{:.3f}",
    "memory_ratio": "{:.3f}",
}


def _cell_formatter(pattern: str):
    return lambda value: "-" if pd.isna(value) else pattern.format(value)


def write_records(path: Path, records: Iterable[Dict[str, object]], append: bool = True) -> Path:
    """Write one JSON object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a" if append else "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    return path


def read_records(paths: Sequence[Path]) -> List[Dict[str, object]]:
    """
    Read JSON-lines report files in order.

    Raises:
        DataFormatError: A non-blank line is not a JSON object
    """
    records = []
    for path in paths:
        with open(path, encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                record = safe_json_loads(line)
                if not isinstance(record, dict):
                    raise DataFormatError(f"{path} is not a JSON-lines report", number)
                records.append(record)
    return records


def _format_frame(frame: pd.DataFrame) -> str:
    formatters = {
        COMPARISON_COLUMNS[name]: _cell_formatter(pattern)
        for name, pattern in _FLOAT_FORMATS.items()
        if COMPARISON_COLUMNS[name] in frame.columns
    }
    return frame.to_string(index=False, formatters=formatters, na_rep="-")


def comparison_frame(rows: List[ComparisonRow]) -> pd.DataFrame:
    """Table with one row per dim and the comparison headings."""
    frame = pd.DataFrame([row.to_record() for row in rows], columns=list(COMPARISON_COLUMNS))
    return frame.rename(columns=COMPARISON_COLUMNS)


class ReportRenderer:
    """Renders reports as human-readable tables on a text stream."""

    def __init__(self, stream: Optional[TextIO] = None):
        self.stream = stream or sys.stdout

    def _emit(self, text: str = ""):
        self.stream.write(text + "\n")

    def render_comparison(self, records: List[Dict[str, object]]) -> List[ComparisonRow]:
        """Table of every dim plus the trade-off summary against the largest dense model."""
        rows = build_comparison_rows(records)
        if not rows:
            self._emit("No eval or bench records found.")
            return rows
        self._emit(_format_frame(comparison_frame(rows)))

        summary = tradeoff_summary(rows)
        if summary:
            self._emit()
            self._emit("Trade-off against the largest dense model:")
            frame = pd.DataFrame(summary)
            frame["speedup"] = frame["speedup"].map("{:.2f}x".format)
            frame["accuracy_change"] = frame["accuracy_change"].map("{:+.1%}".format)
            self._emit(frame.to_string(index=False))
        self._emit()
        self._emit("Naive operation counts: dense 2n flops, binary 3n/32 word ops per prediction.")
        return rows

    def render_bench(self, reports: List[BenchReport]):
        frame = pd.DataFrame([
            {
                "Dimension": r.dim,
                "PPMS": f"{r.ppms_dense:,.0f}",
                "Binary PPMS": f"{r.ppms_packed:,.0f}",
                "PPMS ratio": f"{r.ppms_ratio:.3f}",
                "Memory use ratio": f"{r.memory_ratio:.3f}",
                "Ops dense/binary": f"{ops_per_prediction('dense', r.dim):.0f}/"
                                    f"{ops_per_prediction('binary', r.dim):.0f}",
            }
            for r in reports
        ])
        self._emit(frame.to_string(index=False))

    def render_eval(self, report: EvalReport):
        self._emit(
            f"{'Dimension':>9}  {'Representation':<14}  {'MRR':>7}  {'Evaluated':>9}\n"
            f"{report.dim:>9}  {report.representation:<14}  {report.mrr:>7.4f}  {report.num_evaluated:>9}"
        )

    def render_training(self, report: TrainReport):
        losses = report.epoch_losses
        trend = get_trend_indicator(losses[-1], losses[0]) if len(losses) > 1 else "→"
        total = format_duration(sum(report.epoch_durations))
        self._emit(
            f"Trained {len(losses)} epochs in {total}; "
            f"loss {losses[0]:.4f} {trend} {losses[-1]:.4f}"
        )
        if report.skipped_pairs:
            self._emit(f"Skipped {report.skipped_pairs} pairs with no available negatives")

    def render_trials(self, trials: List[TrialRecord], best: TrialRecord):
        frame = pd.DataFrame([
            {
                "trial": t.index,
                "loss": t.config.get("loss"),
                "lr": f"{t.config.get('learning_rate', 0):.2e}",
                "l2": f"{t.config.get('l2', 0):.2e}",
                "batch": t.config.get("minibatch_size"),
                "epochs": t.config.get("epochs"),
                "mrr": "-" if t.mrr is None else f"{t.mrr:.4f}",
                "status": t.status,
                "best": "*" if t.index == best.index else "",
            }
            for t in trials
        ])
        self._emit(frame.to_string(index=False))
