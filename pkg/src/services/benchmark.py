"""
Scoring-throughput benchmark (predictions per millisecond) and memory accounting.

Throughput is measured on synthetic Normal(0, 1) parameters: scoring cost depends
on shapes only, and the catalog size may exceed any real dataset.
"""
import logging
import time
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from ..kernels.scoring import new_score_buffer, score_all
from ..models.model import DenseModel, PackedModel, binarize, validate_dim
from ..utils.config import (
    DEFAULT_BENCH_ITEMS,
    DEFAULT_BENCH_REPETITIONS,
    DEFAULT_DIMS,
    DEFAULT_SEED,
    FLOAT_BYTES,
    REPRESENTATIONS,
)
from ..utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

Model = Union[DenseModel, PackedModel]
_BENCH_USERS = 16


class Footprint(NamedTuple):
    bytes_per_entity: int
    ratio: float


@dataclass
class TimingStats:
    """Per-repetition wall-clock statistics of one scorer."""

    ppms: float
    mean_ms: float
    min_ms: float
    std_ms: float
    checksum: float


@dataclass
class BenchReport:
    """One Table-1 row of throughput and memory figures."""

    dim: int
    ppms_dense: float
    ppms_packed: float
    bytes_per_pair_dense: int
    bytes_per_pair_binary: int
    repetitions: int
    items_per_rep: int
    min_ms_dense: Optional[float] = None
    min_ms_packed: Optional[float] = None
    std_ms_dense: Optional[float] = None
    std_ms_packed: Optional[float] = None

    @property
    def ppms_ratio(self) -> float:
        return self.ppms_packed / self.ppms_dense

    @property
    def memory_ratio(self) -> float:
        return self.bytes_per_pair_binary / self.bytes_per_pair_dense

    def to_record(self) -> Dict[str, object]:
        return {
            "type": "bench",
            "dim": self.dim,
            "ppms_dense": float(self.ppms_dense),
            "ppms_packed": float(self.ppms_packed),
            "ppms_ratio": float(self.ppms_ratio),
            "memory_ratio": float(self.memory_ratio),
            "bytes_per_pair_dense": self.bytes_per_pair_dense,
            "bytes_per_pair_binary": self.bytes_per_pair_binary,
            "repetitions": self.repetitions,
            "items_per_rep": self.items_per_rep,
            "min_ms_dense": self.min_ms_dense,
            "min_ms_packed": self.min_ms_packed,
            "std_ms_dense": self.std_ms_dense,
            "std_ms_packed": self.std_ms_packed,
        }


def memory_footprint(kind: str, dim: int) -> Footprint:
    """
    Bytes stored per user or item, and the binary/dense ratio.

    Dense entities hold n floats plus a bias; binary entities hold n bits,
    a scale and a bias.
    """
    if kind not in REPRESENTATIONS:
        raise ConfigError(f"kind must be one of {REPRESENTATIONS}, got {kind!r}")
    dim = validate_dim(dim)
    dense = FLOAT_BYTES * dim + FLOAT_BYTES
    binary = dim // 8 + 2 * FLOAT_BYTES
    return Footprint(dense if kind == "dense" else binary, binary / dense)


def ops_per_prediction(kind: str, dim: int) -> float:
    """Naive operation count: 2n flops dense, 3n/32 word ops binary."""
    dim = validate_dim(dim)
    return 2.0 * dim if kind == "dense" else 3.0 * dim / 32


def synthetic_model(dim: int, num_items: int, rng: np.random.Generator, num_users: int = _BENCH_USERS) -> DenseModel:
    """Dense model with Normal(0, 1) parameters for throughput runs."""
    dim = validate_dim(dim)
    return DenseModel(
        user_factors=rng.standard_normal((num_users, dim), dtype=np.float32),
        item_factors=rng.standard_normal((num_items, dim), dtype=np.float32),
        user_bias=rng.standard_normal(num_users, dtype=np.float32),
        item_bias=rng.standard_normal(num_items, dtype=np.float32),
    )


def benchmark_ppms(
    scorer: Model,
    num_items: int,
    repetitions: int,
    rng: np.random.Generator,
) -> TimingStats:
    """
    Time full-catalog scoring of ``num_items`` items, ``repetitions`` times.

    A warm-up pass (which also triggers JIT compilation) is excluded; a
    checksum of every output buffer is accumulated outside the timed region.

    Raises:
        ConfigError: ``num_items`` or ``repetitions`` is below 1 or exceeds the scorer
    """
    if num_items < 1:
        raise ConfigError("benchmark needs at least one item")
    if repetitions < 1:
        raise ConfigError("benchmark needs at least one repetition")
    if num_items > scorer.num_items:
        raise ConfigError(f"scorer holds {scorer.num_items} items, asked for {num_items}")

    out = new_score_buffer(num_items)
    item_range = (0, num_items)
    score_all(scorer, 0, out, item_range)

    timings = np.empty(repetitions, dtype=np.float64)
    checksum = 0.0
    for rep in range(repetitions):
        u = int(rng.integers(scorer.num_users))
        started = time.perf_counter_ns()
        score_all(scorer, u, out, item_range)
        timings[rep] = (time.perf_counter_ns() - started) / 1e6
        checksum += float(out[rep % num_items])

    mean_ms = float(timings.mean())
    return TimingStats(
        ppms=num_items / mean_ms,
        mean_ms=mean_ms,
        min_ms=float(timings.min()),
        std_ms=float(timings.std()),
        checksum=checksum,
    )


def run_benchmark(
    dims: Sequence[int] = DEFAULT_DIMS,
    num_items: int = DEFAULT_BENCH_ITEMS,
    repetitions: int = DEFAULT_BENCH_REPETITIONS,
    seed: int = DEFAULT_SEED,
) -> List[BenchReport]:
    """Benchmark dense and packed scoring at every dim."""
    if num_items < 1:
        raise ConfigError("benchmark needs at least one item")
    reports = []
    for dim in dims:
        rng = np.random.default_rng([seed, dim])
        dense = synthetic_model(dim, num_items, rng)
        packed = binarize(dense)
        dense_stats = benchmark_ppms(dense, num_items, repetitions, rng)
        packed_stats = benchmark_ppms(packed, num_items, repetitions, rng)
        report = BenchReport(
            dim=dim,
            ppms_dense=dense_stats.ppms,
            ppms_packed=packed_stats.ppms,
            bytes_per_pair_dense=memory_footprint("dense", dim).bytes_per_entity,
            bytes_per_pair_binary=memory_footprint("binary", dim).bytes_per_entity,
            repetitions=repetitions,
            items_per_rep=num_items,
            min_ms_dense=dense_stats.min_ms,
            min_ms_packed=packed_stats.min_ms,
            std_ms_dense=dense_stats.std_ms,
            std_ms_packed=packed_stats.std_ms,
        )
        logger.info(
            f"dim {dim}: dense {report.ppms_dense:,.0f} PPMS, packed {report.ppms_packed:,.0f} PPMS "
            f"(ratio {report.ppms_ratio:.3f}, memory {report.memory_ratio:.3f})"
        )
        reports.append(report)
        del dense, packed
    return reports
