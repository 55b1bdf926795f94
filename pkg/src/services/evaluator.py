"""
Ranking-quality evaluation: reciprocal rank and MRR over a held-out set.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Union

import numpy as np

from ..data.dataset import InteractionSet, PositiveSets
from ..kernels.scoring import new_score_buffer, score_all
from ..models.model import DenseModel, PackedModel
from ..utils.exceptions import EmptyDatasetError

logger = logging.getLogger(__name__)

EXCLUDE_TRAIN_POSITIVES = "exclude-train-positives"


@dataclass
class EvalReport:
    """Mean reciprocal rank over ``num_evaluated`` held-out interactions."""

    mrr: float
    num_evaluated: int
    excluded_policy: str = EXCLUDE_TRAIN_POSITIVES
    dim: Optional[int] = None
    representation: Optional[str] = None

    def to_record(self) -> Dict[str, object]:
        return {
            "type": "eval",
            "dim": self.dim,
            "representation": self.representation,
            "mrr": float(self.mrr),
            "num_evaluated": int(self.num_evaluated),
            "excluded_policy": self.excluded_policy,
        }


def reciprocal_rank(scores: np.ndarray, target: int, excluded: Iterable[int] = ()) -> float:
    """
    1 / rank of ``target`` among the non-excluded items.

    Items scoring at least as high as the target rank ahead of it.

    Raises:
        ValueError: ``target`` is excluded
    """
    excluded = np.fromiter(excluded, dtype=np.int64)
    if np.any(excluded == target):
        raise ValueError(f"target item {target} is in the excluded set")
    ahead = scores >= scores[target]
    ahead[target] = False
    if len(excluded):
        ahead[excluded] = False
    return 1.0 / (1 + int(np.count_nonzero(ahead)))


def _model_kind(model: Union[DenseModel, PackedModel]) -> str:
    if isinstance(model, PackedModel):
        return "binary"
    return model.mode


def mrr(
    model: Union[DenseModel, PackedModel],
    eval_set: InteractionSet,
    train_positives: PositiveSets,
) -> EvalReport:
    """
    Rank every eval interaction against the full catalog for its user.

    The user's training positives are excluded from the ranking; the eval
    item itself is always kept.

    Raises:
        EmptyDatasetError: ``eval_set`` is empty
        ValueError: Id spaces of model, eval set and positives disagree
    """
    if len(eval_set) == 0:
        raise EmptyDatasetError("cannot evaluate an empty interaction set")
    if (model.num_users, model.num_items) != (eval_set.num_users, eval_set.num_items):
        raise ValueError(
            f"model covers {model.num_users}x{model.num_items}, "
            f"eval set {eval_set.num_users}x{eval_set.num_items}"
        )
    if train_positives.num_items != eval_set.num_items:
        raise ValueError("training positives use a different item space")

    order = np.argsort(eval_set.user_ids, kind="stable")
    users = eval_set.user_ids[order]
    targets = eval_set.item_ids[order]
    boundaries = np.flatnonzero(np.diff(users)) + 1
    scores = new_score_buffer(model.num_items)

    total = 0.0
    for group in np.split(np.arange(len(users)), boundaries):
        u = int(users[group[0]])
        score_all(model, u, scores)
        seen = train_positives.items_of(u) if u < train_positives.num_users else np.empty(0, np.int32)
        for target in targets[group]:
            excluded = seen[seen != target]
            total += reciprocal_rank(scores, int(target), excluded)

    report = EvalReport(
        mrr=total / len(users),
        num_evaluated=len(users),
        dim=model.dim,
        representation=_model_kind(model),
    )
    logger.info(f"MRR {report.mrr:.4f} over {report.num_evaluated} interactions")
    return report
