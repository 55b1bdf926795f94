"""
Model parameters and prediction rules.

DenseModel holds real-valued embeddings and biases and is what training
updates. PackedModel is the post-training binary form: sign bits packed into
32-bit words plus one L1-mean scale per vector.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..kernels.bitops import pack_rows, score_dense_range
from ..utils.config import ERROR_MESSAGES, REPRESENTATIONS, WORD_BITS
from ..utils.exceptions import ConfigError

logger = logging.getLogger(__name__)


def validate_dim(dim: int) -> int:
    if not isinstance(dim, (int, np.integer)) or dim <= 0 or dim % WORD_BITS:
        raise ConfigError(ERROR_MESSAGES['dim'].format(dim=dim))
    return int(dim)


def check_index(index: int, bound: int, name: str) -> int:
    if not 0 <= index < bound:
        raise IndexError(f"{name} index {index} out of range [0, {bound})")
    return int(index)


@dataclass(eq=False)
class DenseModel:
    """Real-valued factors and biases.

    ``mode`` records the forward rule used in training: ``dense`` (plain dot
    product) or ``binary`` (scaled sign dot product on these parameters).
    """

    user_factors: np.ndarray
    item_factors: np.ndarray
    user_bias: np.ndarray
    item_bias: np.ndarray
    mode: str = "dense"

    def __post_init__(self):
        if self.mode not in REPRESENTATIONS:
            raise ConfigError(f"unknown model mode {self.mode!r}")
        if self.user_factors.ndim != 2 or self.item_factors.ndim != 2:
            raise ValueError("factor matrices must be 2-d")
        if self.user_factors.shape[1] != self.item_factors.shape[1]:
            raise ValueError("user and item factors disagree on dim")
        validate_dim(self.user_factors.shape[1])
        if self.user_bias.shape != (self.num_users,) or self.item_bias.shape != (self.num_items,):
            raise ValueError("bias vectors must match the factor rows")

    @property
    def dim(self) -> int:
        return self.user_factors.shape[1]

    @property
    def num_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def num_items(self) -> int:
        return self.item_factors.shape[0]

    def is_finite(self) -> bool:
        return all(
            bool(np.isfinite(a).all())
            for a in (self.user_factors, self.item_factors, self.user_bias, self.item_bias)
        )

    @classmethod
    def initialize(
        cls,
        num_users: int,
        num_items: int,
        dim: int,
        rng: Optional[np.random.Generator] = None,
        mode: str = "dense",
    ) -> "DenseModel":
        """Embeddings ~ Normal(0, 1/dim), zero biases, single precision."""
        dim = validate_dim(dim)
        rng = rng if rng is not None else np.random.default_rng()
        std = 1.0 / np.sqrt(dim)
        return cls(
            user_factors=rng.normal(0.0, std, size=(num_users, dim)).astype(np.float32),
            item_factors=rng.normal(0.0, std, size=(num_items, dim)).astype(np.float32),
            user_bias=np.zeros(num_users, dtype=np.float32),
            item_bias=np.zeros(num_items, dtype=np.float32),
            mode=mode,
        )


@dataclass(eq=False)
class PackedModel:
    """Packed sign bits, per-vector scales and single-precision biases."""

    dim: int
    user_bits: np.ndarray
    item_bits: np.ndarray
    user_scales: np.ndarray
    item_scales: np.ndarray
    user_bias: np.ndarray
    item_bias: np.ndarray

    def __post_init__(self):
        validate_dim(self.dim)
        words = self.words_per_vec
        if self.user_bits.shape != (self.num_users, words) or self.item_bits.shape[1:] != (words,):
            raise ValueError(f"bit matrices must have {words} words per row")
        if self.user_scales.shape != (self.num_users,) or self.item_scales.shape != (self.num_items,):
            raise ValueError("scale vectors must match the bit rows")
        if self.user_bias.shape != (self.num_users,) or self.item_bias.shape != (self.num_items,):
            raise ValueError("bias vectors must match the bit rows")
        if (self.user_scales < 0).any() or (self.item_scales < 0).any():
            raise ValueError("scales must be non-negative")

    @property
    def words_per_vec(self) -> int:
        return self.dim // WORD_BITS

    @property
    def num_users(self) -> int:
        return self.user_bits.shape[0]

    @property
    def num_items(self) -> int:
        return self.item_bits.shape[0]


def sign_vec(v: np.ndarray) -> np.ndarray:
    """Elementwise sign in {-1, +1} with sign(0) = +1."""
    return np.where(np.asarray(v) >= 0, 1, -1).astype(np.int8)


def scale_factor(v: np.ndarray) -> float:
    """Mean absolute value of ``v``; 0.0 for a zero vector."""
    return float(np.abs(np.asarray(v, dtype=np.float64)).mean())


def scale_factors(rows: np.ndarray) -> np.ndarray:
    """Row-wise :func:`scale_factor` as float32."""
    return np.abs(np.asarray(rows, dtype=np.float64)).mean(axis=1).astype(np.float32)


def predict_dense(model: DenseModel, u: int, i: int) -> float:
    """u_u . i_i + b_u + b_i, evaluated by the same loop as batch scoring."""
    u = check_index(u, model.num_users, "user")
    i = check_index(i, model.num_items, "item")
    out = np.empty(1, dtype=np.float32)
    score_dense_range(
        model.user_factors[u], model.user_bias[u], model.item_factors, model.item_bias, i, i + 1, out
    )
    return float(out[0])


def predict_binary_float(model: DenseModel, u: int, i: int) -> float:
    """beta_u * alpha_i * (sign(u_u) . sign(i_i)) + b_u + b_i in the real domain."""
    u = check_index(u, model.num_users, "user")
    i = check_index(i, model.num_items, "item")
    user_row = model.user_factors[u]
    item_row = model.item_factors[i]
    sign_dot = int(np.dot(sign_vec(user_row).astype(np.int64), sign_vec(item_row).astype(np.int64)))
    return (
        scale_factor(user_row) * scale_factor(item_row) * sign_dot
        + float(model.user_bias[u])
        + float(model.item_bias[i])
    )


def binarize(model: DenseModel) -> PackedModel:
    """Pack the sign of every row and keep its L1-mean scale; biases are copied."""
    packed = PackedModel(
        dim=model.dim,
        user_bits=pack_rows(model.user_factors >= 0),
        item_bits=pack_rows(model.item_factors >= 0),
        user_scales=scale_factors(model.user_factors),
        item_scales=scale_factors(model.item_factors),
        user_bias=np.array(model.user_bias, dtype=np.float32),
        item_bias=np.array(model.item_bias, dtype=np.float32),
    )
    logger.info(
        f"Binarized {model.num_users} users and {model.num_items} items at dim {model.dim}"
    )
    return packed
