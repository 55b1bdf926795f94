"""
Unit tests for memory accounting, throughput measurement and comparison rows.
"""
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.models.model import binarize
from src.services.benchmark import (
    benchmark_ppms,
    memory_footprint,
    ops_per_prediction,
    run_benchmark,
    synthetic_model,
)
from src.services.comparison import build_comparison_rows, tradeoff_summary
from src.utils.config import DEFAULT_DIMS
from src.utils.exceptions import ConfigError

RUN_SLOW = os.getenv("BINRANK_RUN_SLOW") == "1"


class TestMemoryFootprint(unittest.TestCase):
    """Test cases for memory_footprint."""

    def test_ratios_per_dim(self):
        expected = [0.091, 0.062, 0.047, 0.039, 0.035, 0.033]
        got = [round(memory_footprint("binary", dim).ratio, 3) for dim in DEFAULT_DIMS]
        self.assertEqual(got, expected)

    def test_bytes_per_entity(self):
        self.assertEqual(memory_footprint("dense", 32).bytes_per_entity, 132)
        self.assertEqual(memory_footprint("binary", 32).bytes_per_entity, 12)
        self.assertEqual(memory_footprint("binary", 1024).bytes_per_entity, 136)

    def test_invalid_arguments(self):
        with self.assertRaises(ConfigError):
            memory_footprint("ternary", 32)
        with self.assertRaises(ConfigError):
            memory_footprint("dense", 40)

    def test_ops_per_prediction(self):
        self.assertEqual(ops_per_prediction("dense", 64), 128.0)
        self.assertEqual(ops_per_prediction("binary", 64), 6.0)


class TestThroughput(unittest.TestCase):
    """Test cases for benchmark_ppms and run_benchmark."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(4)
        self.model = synthetic_model(64, 500, self.rng)

    def test_reports_positive_rate(self):
        stats = benchmark_ppms(self.model, 500, 5, self.rng)
        self.assertGreater(stats.ppms, 0.0)
        self.assertLessEqual(stats.min_ms, stats.mean_ms)
        self.assertTrue(np.isfinite(stats.checksum))

    def test_rejects_empty_runs(self):
        with self.assertRaises(ConfigError):
            benchmark_ppms(self.model, 0, 5, self.rng)
        with self.assertRaises(ConfigError):
            benchmark_ppms(self.model, 10, 0, self.rng)
        with self.assertRaises(ConfigError):
            run_benchmark((32,), num_items=0)

    def test_run_benchmark_records(self):
        reports = run_benchmark((32, 64), num_items=200, repetitions=3, seed=1)
        self.assertEqual([r.dim for r in reports], [32, 64])
        record = reports[0].to_record()
        self.assertEqual(record["type"], "bench")
        self.assertAlmostEqual(record["memory_ratio"], 12 / 132)
        self.assertEqual(record["items_per_rep"], 200)

    @unittest.skipUnless(RUN_SLOW, "set BINRANK_RUN_SLOW=1 to run")
    def test_packed_is_faster(self):
        reports = {r.dim: r for r in run_benchmark(DEFAULT_DIMS, 100_000, 50, seed=0)}
        self.assertGreaterEqual(reports[1024].ppms_ratio, 5.0)
        self.assertGreaterEqual(reports[32].ppms_ratio, 1.5)
        dense_rates = [reports[dim].ppms_dense for dim in DEFAULT_DIMS]
        self.assertEqual(dense_rates, sorted(dense_rates, reverse=True))


class TestComparison(unittest.TestCase):
    """Test cases for comparison rows and the trade-off summary."""

    def setUp(self):
        """Set up test fixtures."""
        self.records = [
            {"type": "eval", "dim": 32, "representation": "dense", "mrr": 0.08},
            {"type": "eval", "dim": 32, "representation": "binary", "mrr": 0.06},
            {"type": "eval", "dim": 64, "representation": "dense", "mrr": 0.1},
            {"type": "bench", "dim": 32, "ppms_dense": 1000.0, "ppms_packed": 3000.0, "memory_ratio": 0.091},
            {"type": "bench", "dim": 64, "ppms_dense": 500.0, "ppms_packed": 2000.0, "memory_ratio": 0.062},
        ]

    def test_rows_join_by_dim(self):
        rows = build_comparison_rows(self.records)
        self.assertEqual([row.dim for row in rows], [32, 64])
        self.assertAlmostEqual(rows[0].mrr_ratio, 0.75)
        self.assertAlmostEqual(rows[0].ppms_ratio, 3.0)
        self.assertIsNone(rows[1].mrr_ratio)

    def test_tradeoff_against_largest_dense(self):
        summary = tradeoff_summary(build_comparison_rows(self.records))
        by_key = {(s["dim"], s["representation"]): s for s in summary}

        self.assertAlmostEqual(by_key[(64, "dense")]["speedup"], 1.0)
        self.assertAlmostEqual(by_key[(32, "dense")]["speedup"], 2.0)
        self.assertAlmostEqual(by_key[(32, "binary")]["accuracy_change"], -0.4)
        self.assertNotIn((64, "binary"), by_key)

    def test_packed_scorer_is_benchmarked(self):
        packed = binarize(synthetic_model(32, 100, np.random.default_rng(0)))
        self.assertGreater(benchmark_ppms(packed, 100, 2, np.random.default_rng(1)).ppms, 0.0)


if __name__ == '__main__':
    unittest.main()
