"""
Training for dense and binary learning-to-rank factorization models.

Triplets (u, i, j) pair an observed interaction with a sampled negative item.
The binary forward rule scales the sign dot product by the L1 means of the
live real-valued rows; gradients pass through sign() with the
straight-through mask 1{|w| <= 1} and through the scales with d mean|w| / dw_m
= sign(w_m) / n.
"""
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..data.dataset import InteractionSet, PositiveSets
from ..models.model import DenseModel, validate_dim
from ..utils.config import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    BPR_VARIANTS,
    DEFAULT_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_L2,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_SAMPLED,
    DEFAULT_MINIBATCH_SIZE,
    DEFAULT_SEED,
    LOSSES,
    NEGATIVE_REJECTION_ATTEMPTS,
    REPRESENTATIONS,
)
from ..utils.exceptions import (
    ConfigError,
    EmptyDatasetError,
    NonFiniteGradientError,
    SamplingExhausted,
)

logger = logging.getLogger(__name__)

ProgressSink = Callable[[int, float, float], None]
PARAMETER_NAMES = ("user_factors", "item_factors", "user_bias", "item_bias")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    dim: int = DEFAULT_DIM
    representation: str = "dense"
    loss: str = "bpr"
    bpr_variant: str = "sigmoid"
    learning_rate: float = DEFAULT_LEARNING_RATE
    l2: float = DEFAULT_L2
    minibatch_size: int = DEFAULT_MINIBATCH_SIZE
    epochs: int = DEFAULT_EPOCHS
    max_sampled: int = DEFAULT_MAX_SAMPLED
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        validate_dim(self.dim)
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(f"representation must be one of {REPRESENTATIONS}, got {self.representation!r}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.bpr_variant not in BPR_VARIANTS:
            raise ConfigError(f"bpr_variant must be one of {BPR_VARIANTS}, got {self.bpr_variant!r}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not self.l2 >= 0:
            raise ConfigError(f"l2 must be non-negative, got {self.l2}")
        if self.minibatch_size < 1 or self.epochs < 1 or self.max_sampled < 1:
            raise ConfigError("minibatch_size, epochs and max_sampled must be at least 1")

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "TrainConfig":
        """Rebuild a configuration saved with :meth:`to_dict`; unknown keys are rejected."""
        unknown = sorted(set(data) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError(f"unknown training options: {', '.join(unknown)}")
        return cls(**data)


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter array."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON

    @classmethod
    def zeros_like(cls, params: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(params), v=np.zeros_like(params))


@dataclass
class TripletGradients:
    """Gradients of one triplet objective (loss plus L2 on the touched entities)."""

    loss: float
    user: np.ndarray
    pos_item: np.ndarray
    neg_item: np.ndarray
    user_bias: float
    pos_bias: float
    neg_bias: float


@dataclass
class TrainReport:
    epoch_losses: List[float] = field(default_factory=list)
    epoch_durations: List[float] = field(default_factory=list)
    skipped_pairs: int = 0
    model: Optional[DenseModel] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "epoch_losses": [float(x) for x in self.epoch_losses],
            "epoch_durations": [float(x) for x in self.epoch_durations],
            "skipped_pairs": int(self.skipped_pairs),
        }


# --- Losses ---

def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


def bpr_loss(r_ui, r_uj, variant: str = "sigmoid"):
    """1 - sigmoid(r_ui - r_uj); ``log_sigmoid`` gives -log sigmoid(r_ui - r_uj)."""
    diff = np.asarray(r_ui, dtype=np.float64) - np.asarray(r_uj, dtype=np.float64)
    if variant == "log_sigmoid":
        value = np.logaddexp(0.0, -diff)
    else:
        value = _sigmoid(-diff)
    return float(value) if np.ndim(value) == 0 else value


def hinge_loss(r_ui, r_uj):
    """max(0, 1 - r_ui + r_uj)."""
    value = np.maximum(0.0, 1.0 - np.asarray(r_ui, dtype=np.float64) + np.asarray(r_uj, dtype=np.float64))
    return float(value) if np.ndim(value) == 0 else value


def triplet_loss(r_ui, r_uj, loss: str, bpr_variant: str = "sigmoid"):
    if loss == "adaptive_hinge":
        return hinge_loss(r_ui, r_uj)
    return bpr_loss(r_ui, r_uj, bpr_variant)


def _loss_slope(diff: np.ndarray, loss: str, bpr_variant: str) -> np.ndarray:
    """d loss / d (r_ui - r_uj)."""
    if loss == "adaptive_hinge":
        return np.where(1.0 - diff > 0.0, -1.0, 0.0)
    if bpr_variant == "log_sigmoid":
        return -_sigmoid(-diff)
    return -_sigmoid(diff) * _sigmoid(-diff)


def ste_grad(w):
    """Straight-through derivative of sign: 1 where |w| <= 1, else 0."""
    value = (np.abs(np.asarray(w)) <= 1.0).astype(np.float64)
    return float(value) if np.ndim(value) == 0 else value


# --- Optimizer ---

def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float,
    rows: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, AdamState]:
    """
    One bias-corrected Adam update, in place.

    Args:
        params: Parameter array
        grads: Gradient, shaped like ``params`` or like ``params[rows]``
        state: Moment accumulators shaped like ``params``
        lr: Step size
        rows: When given, only these rows (and their moments) are updated

    Raises:
        NonFiniteGradientError: ``grads`` contains NaN or inf
    """
    grads = np.asarray(grads)
    if not np.isfinite(grads).all():
        raise NonFiniteGradientError(
            f"non-finite gradient at Adam step {state.t + 1} (shape {grads.shape})"
        )
    state.t += 1
    bias_correction1 = 1.0 - state.beta1 ** state.t
    bias_correction2 = 1.0 - state.beta2 ** state.t

    index = slice(None) if rows is None else rows
    m = state.beta1 * state.m[index] + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v[index] + (1.0 - state.beta2) * (grads * grads)
    step = lr * (m / bias_correction1) / (np.sqrt(v / bias_correction2) + state.epsilon)

    state.m[index] = m
    state.v[index] = v
    params[index] -= step.astype(params.dtype, copy=False)
    return params, state


# --- Forward / backward ---

def _sign(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1.0, -1.0)


def batch_scores(model: DenseModel, users: np.ndarray, items: np.ndarray, mode: str) -> np.ndarray:
    """Training-time forward for parallel (user, item) arrays (any broadcastable shape)."""
    user_rows = model.user_factors[users]
    item_rows = model.item_factors[items]
    biases = model.user_bias[users] + model.item_bias[items]
    if mode == "binary":
        n = model.dim
        beta = np.abs(user_rows).sum(axis=-1) / n
        alpha = np.abs(item_rows).sum(axis=-1) / n
        dot = (_sign(user_rows) * _sign(item_rows)).sum(axis=-1)
        return beta * alpha * dot + biases
    return (user_rows * item_rows).sum(axis=-1) + biases


def _score_partials(user_rows: np.ndarray, item_rows: np.ndarray, mode: str):
    """Score and its partials w.r.t. the user row and the item row."""
    if mode != "binary":
        return (user_rows * item_rows).sum(axis=-1), item_rows, user_rows
    n = user_rows.shape[-1]
    user_signs = _sign(user_rows)
    item_signs = _sign(item_rows)
    beta = np.abs(user_rows).sum(axis=-1, keepdims=True) / n
    alpha = np.abs(item_rows).sum(axis=-1, keepdims=True) / n
    dot = (user_signs * item_signs).sum(axis=-1, keepdims=True)
    d_user = alpha * dot * user_signs / n + beta * alpha * item_signs * ste_grad(user_rows)
    d_item = beta * dot * item_signs / n + beta * alpha * user_signs * ste_grad(item_rows)
    return (beta * alpha * dot)[..., 0], d_user, d_item


def _loss_gradients(model, users, pos, neg, mode, loss, bpr_variant):
    """Per-triplet losses and loss-only gradients (no L2)."""
    user_rows = model.user_factors[users]
    pos_dot, d_user_pos, d_pos = _score_partials(user_rows, model.item_factors[pos], mode)
    neg_dot, d_user_neg, d_neg = _score_partials(user_rows, model.item_factors[neg], mode)
    r_ui = pos_dot + model.item_bias[pos]
    r_uj = neg_dot + model.item_bias[neg]
    diff = r_ui.astype(np.float64) - r_uj.astype(np.float64)

    losses = triplet_loss(r_ui, r_uj, loss, bpr_variant)
    slope = _loss_slope(diff, loss, bpr_variant)
    column = slope[:, None]
    return (
        np.atleast_1d(losses),
        column * (d_user_pos - d_user_neg),
        column * d_pos,
        -column * d_neg,
        slope,
        -slope,
    )


def grad_triplet(
    model: DenseModel,
    mode: str,
    loss: str,
    u: int,
    i: int,
    j: int,
    l2: float = 0.0,
    bpr_variant: str = "sigmoid",
) -> TripletGradients:
    """
    Analytic gradients of ``loss(r_ui, r_uj) + l2/2 * |theta|^2`` for one triplet,
    where theta covers u_u, i_i, i_j, b_u, b_i, b_j.
    """
    users, pos, neg = np.array([u]), np.array([i]), np.array([j])
    losses, g_user, g_pos, g_neg, g_pos_bias, g_neg_bias = _loss_gradients(
        model, users, pos, neg, mode, loss, bpr_variant
    )
    return TripletGradients(
        loss=float(losses[0]),
        user=g_user[0] + l2 * model.user_factors[u],
        pos_item=g_pos[0] + l2 * model.item_factors[i],
        neg_item=g_neg[0] + l2 * model.item_factors[j],
        user_bias=float(l2 * model.user_bias[u]),
        pos_bias=float(g_pos_bias[0] + l2 * model.item_bias[i]),
        neg_bias=float(g_neg_bias[0] + l2 * model.item_bias[j]),
    )


def triplet_objective(
    model: DenseModel,
    mode: str,
    loss: str,
    u: int,
    i: int,
    j: int,
    l2: float = 0.0,
    bpr_variant: str = "sigmoid",
) -> float:
    """The scalar that :func:`grad_triplet` differentiates."""
    users = np.array([u, u])
    items = np.array([i, j])
    r_ui, r_uj = batch_scores(model, users, items, mode)
    penalty = (
        np.sum(np.square(model.user_factors[u], dtype=np.float64))
        + np.sum(np.square(model.item_factors[i], dtype=np.float64))
        + np.sum(np.square(model.item_factors[j], dtype=np.float64))
        + float(model.user_bias[u]) ** 2
        + float(model.item_bias[i]) ** 2
        + float(model.item_bias[j]) ** 2
    )
    return float(triplet_loss(r_ui, r_uj, loss, bpr_variant)) + 0.5 * l2 * penalty


# --- Negative sampling ---

def _draw_non_positive(u: int, positives: PositiveSets, rng: np.random.Generator, max_rejections: int):
    for _ in range(max_rejections):
        j = int(rng.integers(positives.num_items))
        if not positives.contains(u, j):
            return j
    return None


def sample_negative(
    u: int,
    positives: PositiveSets,
    scorer: Callable[[int, int], float],
    r_ui: float,
    k: int,
    rng: np.random.Generator,
    loss: str = "adaptive_hinge",
    max_rejections: int = NEGATIVE_REJECTION_ATTEMPTS,
) -> Optional[int]:
    """
    Draw a negative item for user ``u``.

    Items are drawn uniformly and redrawn while they are positives of ``u``.
    For ``bpr`` the first accepted item is returned. For ``adaptive_hinge``,
    up to ``k`` accepted items are tried and the first one that violates the
    margin is returned, otherwise the last one tried.

    Returns:
        Item index, or None when no non-positive item could be drawn
    """
    if positives.count(u) >= positives.num_items:
        return None
    attempts = 1 if loss == "bpr" else k
    last = None
    for _ in range(attempts):
        j = _draw_non_positive(u, positives, rng, max_rejections)
        if j is None:
            break
        last = j
        if loss == "bpr" or hinge_loss(r_ui, scorer(u, j)) > 0.0:
            return j
    return last


def sample_negatives(
    model: DenseModel,
    users: np.ndarray,
    pos_scores: np.ndarray,
    positives: PositiveSets,
    config: TrainConfig,
    rng: np.random.Generator,
    max_rejections: int = NEGATIVE_REJECTION_ATTEMPTS,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minibatch form of :func:`sample_negative`.

    Returns:
        (negatives, valid): one candidate per user and a mask of the users
        for whom a non-positive item was found
    """
    attempts = 1 if config.loss == "bpr" else config.max_sampled
    shape = (len(users), attempts)
    candidates = rng.integers(positives.num_items, size=shape)
    rejected = positives.contains_many(users[:, None], candidates)
    for _ in range(max_rejections - 1):
        if not rejected.any():
            break
        redraw = rng.integers(positives.num_items, size=int(rejected.sum()))
        candidates[rejected] = redraw
        rejected[rejected] = positives.contains_many(
            np.broadcast_to(users[:, None], shape)[rejected], redraw
        )
    accepted = ~rejected
    valid = accepted.any(axis=1)

    if attempts == 1:
        return candidates[:, 0], valid

    neg_scores = batch_scores(model, np.broadcast_to(users[:, None], shape), candidates, config.representation)
    violated = accepted & (hinge_loss(pos_scores[:, None], neg_scores) > 0.0)
    rows = np.arange(len(users))
    first_violation = np.argmax(violated, axis=1)
    last_accepted = attempts - 1 - np.argmax(accepted[:, ::-1], axis=1)
    column = np.where(violated.any(axis=1), first_violation, last_accepted)
    return candidates[rows, column], valid


# --- Fitting ---

def _scatter_rows(index: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    rows, inverse = np.unique(index, return_inverse=True)
    summed = np.zeros((len(rows),) + values.shape[1:], dtype=np.float64)
    np.add.at(summed, inverse, values)
    return rows, summed


def _apply_minibatch(
    model: DenseModel,
    states: Dict[str, AdamState],
    users: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    config: TrainConfig,
) -> np.ndarray:
    losses, g_user, g_pos, g_neg, g_pos_bias, g_neg_bias = _loss_gradients(
        model, users, pos, neg, config.representation, config.loss, config.bpr_variant
    )
    scale = 1.0 / len(users)
    items = np.concatenate([pos, neg])

    user_rows, user_grads = _scatter_rows(users, g_user * scale)
    item_rows, item_grads = _scatter_rows(items, np.concatenate([g_pos, g_neg]) * scale)
    _, item_bias_grads = _scatter_rows(items, np.concatenate([g_pos_bias, g_neg_bias]) * scale)

    l2 = config.l2
    updates = (
        ("user_factors", user_rows, user_grads + l2 * model.user_factors[user_rows]),
        ("item_factors", item_rows, item_grads + l2 * model.item_factors[item_rows]),
        ("user_bias", user_rows, l2 * model.user_bias[user_rows].astype(np.float64)),
        ("item_bias", item_rows, item_bias_grads + l2 * model.item_bias[item_rows]),
    )
    for name, rows, grads in updates:
        adam_step(getattr(model, name), grads, states[name], config.learning_rate, rows=rows)
    return losses


def fit(
    train: InteractionSet,
    positives: PositiveSets,
    config: TrainConfig,
    progress: Optional[ProgressSink] = None,
) -> Tuple[DenseModel, TrainReport]:
    """
    Fit a model by minibatch Adam over shuffled training interactions.

    Args:
        train: Training interactions
        positives: Positive sets used to reject sampled negatives
        config: Hyperparameters; ``representation`` selects the forward rule
        progress: Called with (epoch, mean loss, seconds) after every epoch

    Returns:
        (model, report); the run is a pure function of (train, config)

    Raises:
        EmptyDatasetError: ``train`` has no interactions
        NonFiniteGradientError: Training diverged
        SamplingExhausted: No training pair has a negative item to sample
    """
    if len(train) == 0:
        raise EmptyDatasetError("cannot fit on an empty training set")

    rng = np.random.default_rng(config.seed)
    model = DenseModel.initialize(
        train.num_users, train.num_items, config.dim, rng, mode=config.representation
    )
    states = {name: AdamState.zeros_like(getattr(model, name)) for name in PARAMETER_NAMES}
    report = TrainReport(model=model)
    batch_size = config.minibatch_size
    logger.info(f"Fitting {config.representation} model: {config.to_dict()}")

    for epoch in range(config.epochs):
        started = time.perf_counter()
        order = rng.permutation(len(train))
        loss_sum = 0.0
        loss_count = 0
        for lo in range(0, len(order), batch_size):
            batch = order[lo:lo + batch_size]
            users = train.user_ids[batch].astype(np.int64)
            pos = train.item_ids[batch].astype(np.int64)
            pos_scores = batch_scores(model, users, pos, config.representation)
            neg, valid = sample_negatives(model, users, pos_scores, positives, config, rng)
            if not valid.all():
                report.skipped_pairs += int((~valid).sum())
                users, pos, neg = users[valid], pos[valid], neg[valid]
            if len(users) == 0:
                continue
            losses = _apply_minibatch(model, states, users, pos, neg, config)
            loss_sum += float(losses.sum())
            loss_count += len(losses)

        if loss_count == 0:
            raise SamplingExhausted("every training user has interacted with the whole catalog")
        mean_loss = loss_sum / loss_count
        if not np.isfinite(mean_loss):
            raise NonFiniteGradientError(f"epoch {epoch} produced a non-finite loss")
        duration = time.perf_counter() - started
        report.epoch_losses.append(mean_loss)
        report.epoch_durations.append(duration)
        if progress is not None:
            progress(epoch, mean_loss, duration)

    if report.skipped_pairs:
        logger.warning(f"Skipped {report.skipped_pairs} pairs whose users have no negatives")
    return model, report
