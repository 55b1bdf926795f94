"""
Random hyperparameter search: sample configurations, fit on the training
set, score MRR on the test set and keep the best.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .evaluator import mrr
from .trainer import TrainConfig, fit
from ..data.dataset import InteractionSet, positive_sets
from ..utils.config import DEFAULT_SEARCH_TRIALS, DEFAULT_SEED, LOSSES, SEARCH_SPACE
from ..utils.exceptions import ConfigError, SearchFailedError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchSpace:
    """Distributions for each searched hyperparameter.

    Learning rate and L2 are log-uniform over their ranges; the rest are
    uniform choices.
    """

    learning_rate: Tuple[float, float] = SEARCH_SPACE["learning_rate"]
    l2: Tuple[float, float] = SEARCH_SPACE["l2"]
    minibatch_size: Tuple[int, ...] = SEARCH_SPACE["minibatch_size"]
    epochs: Tuple[int, ...] = SEARCH_SPACE["epochs"]
    loss: Tuple[str, ...] = SEARCH_SPACE["loss"]
    trials: int = DEFAULT_SEARCH_TRIALS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for name in ("learning_rate", "l2"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} range must satisfy 0 < lo <= hi, got {(lo, hi)}")
        for name in ("minibatch_size", "epochs", "loss"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} choices must not be empty")
        if any(loss not in LOSSES for loss in self.loss):
            raise ConfigError(f"unknown loss in {self.loss}")
        if self.trials < 1:
            raise ConfigError(f"search budget must be at least 1, got {self.trials}")


@dataclass
class TrialRecord:
    index: int
    config: Dict[str, object]
    mrr: Optional[float] = None
    status: str = "ok"
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass
class SearchResult:
    best: TrialRecord
    trials: List[TrialRecord] = field(default_factory=list)

    @property
    def best_config(self) -> TrainConfig:
        return TrainConfig(**self.best.config)


def _log_uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def sample_configs(space: SearchSpace, base: TrainConfig) -> List[TrainConfig]:
    """Draw ``space.trials`` configurations; dim and representation come from ``base``."""
    rng = np.random.default_rng(space.seed)
    configs = []
    for index in range(space.trials):
        configs.append(TrainConfig(
            dim=base.dim,
            representation=base.representation,
            bpr_variant=base.bpr_variant,
            max_sampled=base.max_sampled,
            learning_rate=_log_uniform(rng, space.learning_rate),
            l2=_log_uniform(rng, space.l2),
            minibatch_size=int(rng.choice(space.minibatch_size)),
            epochs=int(rng.choice(space.epochs)),
            loss=str(rng.choice(space.loss)),
            seed=space.seed + index,
        ))
    return configs


def best_trial(trials: Sequence[TrialRecord]) -> Optional[TrialRecord]:
    """Highest-MRR successful trial; ties go to the earliest index."""
    succeeded = [t for t in trials if t.status == "ok" and t.mrr is not None]
    if not succeeded:
        return None
    return max(succeeded, key=lambda t: (t.mrr, -t.index))


def run_trial(index: int, config: TrainConfig, train: InteractionSet, test: InteractionSet) -> TrialRecord:
    """Fit and score one configuration; failures are recorded, not raised."""
    record = TrialRecord(index=index, config=config.to_dict())
    try:
        positives = positive_sets(train)
        model, _ = fit(train, positives, config)
        record.mrr = mrr(model, test, positives).mrr
    except Exception as e:  # any failure ends this trial only
        record.status = "failed"
        record.error = f"{type(e).__name__}: {e}"
        logger.warning(f"Trial {index} failed: {record.error}")
    return record


def random_search(
    train: InteractionSet,
    test: InteractionSet,
    space: SearchSpace,
    base: TrainConfig,
    workers: int = 1,
) -> SearchResult:
    """
    Run ``space.trials`` trials and return the best by test MRR.

    Raises:
        SearchFailedError: Every trial failed
    """
    configs = sample_configs(space, base)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_trial, i, c, train, test) for i, c in enumerate(configs)]
            trials = [f.result() for f in futures]
    else:
        trials = [run_trial(i, c, train, test) for i, c in enumerate(configs)]

    for trial in trials:
        logger.info(f"Trial {trial.index}: status={trial.status} mrr={trial.mrr} config={trial.config}")
    best = best_trial(trials)
    if best is None:
        raise SearchFailedError(f"all {len(trials)} search trials failed")
    logger.info(f"Best trial {best.index} with MRR {best.mrr:.4f}")
    return SearchResult(best=best, trials=trials)
