"""
Public scoring API: packed sign vectors, XOR/popcount dot products and
full-catalog scoring into preallocated buffers for both model kinds.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .bitops import (
    pack_rows,
    packed_dot_words,
    score_dense_range,
    score_packed_range,
    score_sign_range,
    unpack_rows,
)
from ..models.model import DenseModel, PackedModel, check_index
from ..utils.config import WORD_BITS

Model = Union[DenseModel, PackedModel]


@dataclass(frozen=True, eq=False)
class PackedVector:
    """Sign vector of length 32 * len(words) packed into uint32 words."""

    words: np.ndarray

    def __post_init__(self):
        words = np.ascontiguousarray(self.words, dtype=np.uint32)
        if words.ndim != 1 or len(words) < 1:
            raise ValueError("a packed vector needs at least one word")
        object.__setattr__(self, "words", words)

    @property
    def n(self) -> int:
        return len(self.words) * WORD_BITS

    def signs(self) -> np.ndarray:
        return unpack_rows(self.words)


def new_score_buffer(size: int) -> np.ndarray:
    """Contiguous float32 buffer for :func:`score_all`."""
    return np.empty(size, dtype=np.float32)


def pack_bits(signs: Sequence[int]) -> PackedVector:
    """Pack a {-1, +1} vector whose length is a multiple of 32."""
    signs = np.asarray(signs)
    if signs.ndim != 1 or len(signs) == 0 or len(signs) % WORD_BITS:
        raise ValueError(f"sign vector length {signs.size} is not a positive multiple of {WORD_BITS}")
    return PackedVector(pack_rows(signs))


def packed_dot(a: PackedVector, b: PackedVector) -> int:
    """Integer dot product of the encoded sign vectors: n - 2 * popcount(a ^ b)."""
    if len(a.words) != len(b.words):
        raise ValueError(f"packed length mismatch: {a.n} vs {b.n}")
    return int(packed_dot_words(a.words, b.words))


def _score_range(model: Model, u: int, lo: int, hi: int, out: np.ndarray) -> None:
    if isinstance(model, PackedModel):
        score_packed_range(
            model.user_bits[u], model.user_scales[u], model.user_bias[u],
            model.item_bits, model.item_scales, model.item_bias, lo, hi, out,
        )
    elif model.mode == "binary":
        score_sign_range(
            model.user_factors[u], model.user_bias[u], model.item_factors, model.item_bias, lo, hi, out
        )
    else:
        score_dense_range(
            model.user_factors[u], model.user_bias[u], model.item_factors, model.item_bias, lo, hi, out
        )


def predict_packed(model: PackedModel, u: int, i: int) -> float:
    """beta_u * alpha_i * packed_dot(user_bits[u], item_bits[i]) + b_u + b_i."""
    u = check_index(u, model.num_users, "user")
    i = check_index(i, model.num_items, "item")
    out = new_score_buffer(1)
    _score_range(model, u, i, i + 1, out)
    return float(out[0])


def predict(model: Model, u: int, i: int) -> float:
    """Pointwise score with the rule :func:`score_all` applies to ``model``."""
    u = check_index(u, model.num_users, "user")
    i = check_index(i, model.num_items, "item")
    out = new_score_buffer(1)
    _score_range(model, u, i, i + 1, out)
    return float(out[0])


def score_all(
    model: Model,
    u: int,
    out: np.ndarray,
    item_range: Optional[Tuple[int, int]] = None,
) -> np.ndarray:
    """
    Score every item (or the items in ``item_range``) for user ``u`` into ``out``.

    Dense models use the plain dot product, or the scaled sign rule when trained
    in binary mode; packed models use XOR/popcount.

    Raises:
        ValueError: ``out`` is not a contiguous float32 buffer of the requested size
    """
    u = check_index(u, model.num_users, "user")
    lo, hi = item_range if item_range is not None else (0, model.num_items)
    if not 0 <= lo <= hi <= model.num_items:
        raise ValueError(f"item range [{lo}, {hi}) outside catalog of {model.num_items}")
    if out.dtype != np.float32 or not out.flags.c_contiguous or out.ndim != 1:
        raise ValueError("score buffer must be a contiguous 1-d float32 array")
    if len(out) != hi - lo:
        raise ValueError(f"score buffer holds {len(out)} entries, range needs {hi - lo}")
    _score_range(model, u, lo, hi, out)
    return out


def top_k(scores: np.ndarray, k: int, excluded: Optional[np.ndarray] = None) -> np.ndarray:
    """Indices of the ``k`` highest scores, best first; ties go to the lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    candidates = np.arange(len(scores))
    if excluded is not None and len(excluded):
        keep = np.ones(len(scores), dtype=bool)
        keep[np.asarray(excluded, dtype=np.int64)] = False
        candidates = candidates[keep]
    k = min(k, len(candidates))
    order = np.lexsort((candidates, -scores[candidates]))
    return candidates[order[:k]]
