"""
Opt-in accuracy check on the MovieLens 1M ratings file.
"""
import os
import sys
import unittest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.data.dataset import SplitSpec, parse_movielens_file, positive_sets, split
from src.services.evaluator import mrr
from src.services.search_service import SearchSpace, random_search
from src.services.trainer import TrainConfig, fit

RUN_SLOW = os.getenv("BINRANK_RUN_SLOW") == "1"
ML1M_PATH = os.getenv("BINRANK_ML1M_PATH")


@unittest.skipUnless(RUN_SLOW and ML1M_PATH, "set BINRANK_RUN_SLOW=1 and BINRANK_ML1M_PATH to run")
class TestMovieLensAccuracy(unittest.TestCase):
    """Dense and binary dim-32 models after a 30-trial search."""

    @classmethod
    def setUpClass(cls):
        interactions = parse_movielens_file(ML1M_PATH)
        cls.train, cls.test, cls.validation = split(interactions, SplitSpec(seed=42))
        cls.positives = positive_sets(cls.train)
        cls.workers = os.cpu_count() or 1

    def _validation_mrr(self, representation):
        space = SearchSpace(trials=30, seed=42)
        base = TrainConfig(dim=32, representation=representation, seed=42)
        result = random_search(self.train, self.test, space, base, workers=self.workers)
        model, _ = fit(self.train, self.positives, result.best_config)
        return mrr(model, self.validation, self.positives).mrr

    def test_dense_and_binary_mrr(self):
        dense = self._validation_mrr("dense")
        binary = self._validation_mrr("binary")

        self.assertGreaterEqual(dense, 0.06)
        self.assertLess(binary, dense)
        self.assertTrue(0.5 <= binary / dense <= 1.0)


if __name__ == '__main__':
    unittest.main()
