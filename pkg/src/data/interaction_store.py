"""
Compact on-disk interaction format (BLRI) and the raw id-map sidecar.

Layout, little-endian: magic ``BLRI``, version u32, num_users u32,
num_items u32, num_pairs u64, then num_pairs x (u32 user, u32 item).
"""
import logging
import struct
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .dataset import InteractionSet
from ..utils.config import INTERACTION_FORMAT_VERSION, INTERACTION_MAGIC
from ..utils.exceptions import BadMagicError, TruncatedFileError, VersionMismatchError

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sIIIQ")
_PAIR_DTYPE = np.dtype("<u4")


def encode_interactions(interactions: InteractionSet) -> bytes:
    header = _HEADER.pack(
        INTERACTION_MAGIC,
        INTERACTION_FORMAT_VERSION,
        interactions.num_users,
        interactions.num_items,
        len(interactions),
    )
    return header + interactions.pairs.astype(_PAIR_DTYPE).tobytes()


def decode_interactions(
    payload: bytes, raw_ids: Optional[Tuple[np.ndarray, np.ndarray]] = None
) -> InteractionSet:
    """Decode a BLRI payload; raw ids default to the identity map."""
    if len(payload) < _HEADER.size:
        if payload[:4] != INTERACTION_MAGIC[:len(payload[:4])]:
            raise BadMagicError("not an interaction file (bad magic)")
        raise TruncatedFileError(f"interaction header needs {_HEADER.size} bytes, got {len(payload)}")
    magic, version, num_users, num_items, num_pairs = _HEADER.unpack_from(payload)
    if magic != INTERACTION_MAGIC:
        raise BadMagicError(f"not an interaction file (magic {magic!r})")
    if version != INTERACTION_FORMAT_VERSION:
        raise VersionMismatchError(
            f"interaction format version {version}, expected {INTERACTION_FORMAT_VERSION}"
        )
    expected = _HEADER.size + num_pairs * 2 * _PAIR_DTYPE.itemsize
    if len(payload) < expected:
        raise TruncatedFileError(f"interaction file has {len(payload)} bytes, header implies {expected}")

    pairs = np.frombuffer(payload, dtype=_PAIR_DTYPE, count=num_pairs * 2, offset=_HEADER.size)
    pairs = pairs.reshape(num_pairs, 2)
    if raw_ids is None:
        raw_users = np.arange(num_users, dtype=np.int64)
        raw_items = np.arange(num_items, dtype=np.int64)
    else:
        raw_users, raw_items = raw_ids
    return InteractionSet(
        user_ids=pairs[:, 0].astype(np.int32),
        item_ids=pairs[:, 1].astype(np.int32),
        num_users=num_users,
        num_items=num_items,
        raw_user_ids=raw_users,
        raw_item_ids=raw_items,
    )


def write_interactions(path: Path, interactions: InteractionSet) -> Path:
    path = Path(path)
    path.write_bytes(encode_interactions(interactions))
    logger.info(f"Wrote {len(interactions)} interactions to {path}")
    return path


def read_interactions(path: Path, id_maps_path: Optional[Path] = None) -> InteractionSet:
    """Read a BLRI file, attaching raw ids from ``id_maps_path`` when given."""
    raw_ids = load_id_maps(id_maps_path) if id_maps_path is not None else None
    return decode_interactions(Path(path).read_bytes(), raw_ids)


def save_id_maps(path: Path, interactions: InteractionSet) -> Path:
    path = Path(path)
    with open(path, "wb") as handle:
        np.savez(handle, users=interactions.raw_user_ids, items=interactions.raw_item_ids)
    return path


def load_id_maps(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    with np.load(path) as maps:
        return maps["users"].astype(np.int64), maps["items"].astype(np.int64)
