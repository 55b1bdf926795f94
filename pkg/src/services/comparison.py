"""
Joins evaluation and benchmark records into accuracy/speed comparison rows
and summarizes the trade-off against the largest dense configuration.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class ComparisonRow:
    """Dense vs binary accuracy, throughput and memory at one dimension."""

    dim: int
    mrr: Optional[float] = None
    binary_mrr: Optional[float] = None
    ppms: Optional[float] = None
    binary_ppms: Optional[float] = None
    memory_ratio: Optional[float] = None

    @property
    def mrr_ratio(self) -> Optional[float]:
        if self.mrr and self.binary_mrr is not None:
            return self.binary_mrr / self.mrr
        return None

    @property
    def ppms_ratio(self) -> Optional[float]:
        if self.ppms and self.binary_ppms is not None:
            return self.binary_ppms / self.ppms
        return None

    def to_record(self) -> Dict[str, object]:
        return {
            "dim": self.dim,
            "mrr": self.mrr,
            "binary_mrr": self.binary_mrr,
            "mrr_ratio": self.mrr_ratio,
            "ppms": self.ppms,
            "binary_ppms": self.binary_ppms,
            "ppms_ratio": self.ppms_ratio,
            "memory_ratio": self.memory_ratio,
        }


def build_comparison_rows(records: Iterable[Dict[str, object]]) -> List[ComparisonRow]:
    """
    Merge ``eval`` and ``bench`` records by dim.

    Later records for the same (dim, representation) replace earlier ones.
    """
    rows: Dict[int, ComparisonRow] = {}
    for record in records:
        dim = record.get("dim")
        if dim is None:
            continue
        row = rows.setdefault(int(dim), ComparisonRow(dim=int(dim)))
        kind = record.get("type")
        if kind == "eval":
            if record.get("representation") == "binary":
                row.binary_mrr = float(record["mrr"])
            else:
                row.mrr = float(record["mrr"])
        elif kind == "bench":
            row.ppms = float(record["ppms_dense"])
            row.binary_ppms = float(record["ppms_packed"])
            row.memory_ratio = float(record["memory_ratio"])
        else:
            logger.warning(f"Ignoring record of unknown type {kind!r}")
    return [rows[dim] for dim in sorted(rows)]


def tradeoff_summary(rows: List[ComparisonRow]) -> List[Dict[str, object]]:
    """
    Speed-up and relative accuracy change of every configuration against the
    largest-dim dense model that has both an MRR and a PPMS figure.
    """
    complete = [row for row in rows if row.mrr and row.ppms]
    if not complete:
        return []
    reference = max(complete, key=lambda row: row.dim)
    summary = []
    for row in rows:
        for representation, accuracy, speed in (
            ("dense", row.mrr, row.ppms),
            ("binary", row.binary_mrr, row.binary_ppms),
        ):
            if accuracy is None or speed is None:
                continue
            summary.append({
                "dim": row.dim,
                "representation": representation,
                "speedup": speed / reference.ppms,
                "accuracy_change": accuracy / reference.mrr - 1.0,
            })
    return summary
