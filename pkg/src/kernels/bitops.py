"""
Bit packing and compiled scoring loops.

Sign vectors are packed little-endian into 32-bit words: bit j of word w holds
element 32*w + j, and a set bit means +1. The dot product of two packed sign
vectors of length n is n - 2 * popcount(a XOR b).

The ``score_*_range`` loops write scores for items [lo, hi) into ``out`` and
never allocate; single-item predictions go through the same loops so batch and
pointwise results are bit-identical.
"""
import numpy as np
from numba import njit

from ..utils.config import WORD_BITS


def pack_rows(signs: np.ndarray) -> np.ndarray:
    """Pack a (..., n) array of signs into (..., n / 32) uint32 words; n % 32 == 0."""
    signs = np.asarray(signs)
    if signs.shape[-1] % WORD_BITS:
        raise ValueError(f"sign vector length {signs.shape[-1]} is not a multiple of {WORD_BITS}")
    packed = np.packbits(signs > 0, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u4").astype(np.uint32)


def unpack_rows(words: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_rows`, returning int8 values in {-1, +1}."""
    as_bytes = np.ascontiguousarray(np.asarray(words, dtype="<u4")).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return (bits.astype(np.int8) << 1) - 1


@njit("int64(int64)", cache=True, inline="always")
def popcount32(v):
    """Count set bits in the low 32 bits of ``v``."""
    v = v - ((v >> 1) & 0x55555555)
    v = (v & 0x33333333) + ((v >> 2) & 0x33333333)
    v = (v + (v >> 4)) & 0x0F0F0F0F
    return ((v * 0x01010101) & 0xFFFFFFFF) >> 24


@njit(cache=True)
def packed_dot_words(a, b):
    diff = 0
    for w in range(a.shape[0]):
        diff += popcount32(np.int64(a[w] ^ b[w]))
    return a.shape[0] * 32 - 2 * diff


@njit(cache=True)
def score_packed_range(user_words, user_scale, user_bias, item_words, item_scales, item_bias, lo, hi, out):
    words = user_words.shape[0]
    nbits = words * 32
    for i in range(lo, hi):
        diff = 0
        for w in range(words):
            diff += popcount32(np.int64(user_words[w] ^ item_words[i, w]))
        scale = user_scale * item_scales[i]
        out[i - lo] = scale * np.float32(nbits - 2 * diff) + (user_bias + item_bias[i])


@njit(cache=True, fastmath=True)
def score_dense_range(user_row, user_bias, item_rows, item_bias, lo, hi, out):
    # reduction order is fixed per compiled build, identical for any [lo, hi)
    n = user_row.shape[0]
    for i in range(lo, hi):
        acc = np.float32(0.0)
        for k in range(n):
            acc += user_row[k] * item_rows[i, k]
        out[i - lo] = acc + (user_bias + item_bias[i])


@njit(cache=True)
def score_sign_range(user_row, user_bias, item_rows, item_bias, lo, hi, out):
    """Binary prediction rule evaluated on real-valued rows (sign(0) = +1)."""
    n = user_row.shape[0]
    beta = 0.0
    for k in range(n):
        beta += abs(user_row[k])
    beta /= n
    for i in range(lo, hi):
        alpha = 0.0
        dot = 0
        for k in range(n):
            x = item_rows[i, k]
            alpha += abs(x)
            if (user_row[k] >= 0) == (x >= 0):
                dot += 1
            else:
                dot -= 1
        alpha /= n
        out[i - lo] = beta * alpha * dot + (user_bias + item_bias[i])
