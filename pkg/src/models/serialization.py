"""
Model file format (BLRM), little-endian.

Header: magic ``BLRM``, version u32, kind u8, dim u32, num_users u32,
num_items u32. Kind 0 is a dense model, 1 a packed model and 2 a dense model
trained with the binary forward rule. Dense bodies hold user_factors,
item_factors, user_bias, item_bias as f32; packed bodies hold user_bits,
item_bits as u32 then user_scales, item_scales, user_bias, item_bias as f32.
"""
import io
import logging
import struct
from pathlib import Path
from typing import BinaryIO, List, Tuple, Union

import numpy as np

from .model import DenseModel, PackedModel, validate_dim
from ..utils.config import (
    MODEL_FORMAT_VERSION,
    MODEL_KIND_DENSE,
    MODEL_KIND_DENSE_BINARY,
    MODEL_KIND_PACKED,
    MODEL_MAGIC,
)
from ..utils.exceptions import (
    BadMagicError,
    ConfigError,
    ModelFormatError,
    TruncatedFileError,
    VersionMismatchError,
)

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sIBIII")
_F32 = np.dtype("<f4")
_U32 = np.dtype("<u4")

Model = Union[DenseModel, PackedModel]
Sink = Union[str, Path, BinaryIO]


def _dense_layout(dim: int, users: int, items: int) -> List[Tuple[str, np.dtype, tuple]]:
    return [
        ("user_factors", _F32, (users, dim)),
        ("item_factors", _F32, (items, dim)),
        ("user_bias", _F32, (users,)),
        ("item_bias", _F32, (items,)),
    ]


def _packed_layout(dim: int, users: int, items: int) -> List[Tuple[str, np.dtype, tuple]]:
    words = dim // 32
    return [
        ("user_bits", _U32, (users, words)),
        ("item_bits", _U32, (items, words)),
        ("user_scales", _F32, (users,)),
        ("item_scales", _F32, (items,)),
        ("user_bias", _F32, (users,)),
        ("item_bias", _F32, (items,)),
    ]


def encode_model(model: Model) -> bytes:
    if isinstance(model, PackedModel):
        kind = MODEL_KIND_PACKED
        layout = _packed_layout(model.dim, model.num_users, model.num_items)
    elif isinstance(model, DenseModel):
        kind = MODEL_KIND_DENSE if model.mode == "dense" else MODEL_KIND_DENSE_BINARY
        layout = _dense_layout(model.dim, model.num_users, model.num_items)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")

    buffer = io.BytesIO()
    buffer.write(
        _HEADER.pack(MODEL_MAGIC, MODEL_FORMAT_VERSION, kind, model.dim, model.num_users, model.num_items)
    )
    for name, dtype, _ in layout:
        buffer.write(np.ascontiguousarray(getattr(model, name), dtype=dtype).tobytes())
    return buffer.getvalue()


def decode_model(payload: bytes) -> Model:
    if len(payload) < 4 or payload[:4] != MODEL_MAGIC:
        raise BadMagicError(f"not a model file (magic {bytes(payload[:4])!r})")
    if len(payload) < _HEADER.size:
        raise TruncatedFileError(f"model header needs {_HEADER.size} bytes, got {len(payload)}")
    _, version, kind, dim, users, items = _HEADER.unpack_from(payload)
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, expected {MODEL_FORMAT_VERSION}")
    try:
        validate_dim(dim)
    except ConfigError as e:
        raise ModelFormatError(f"corrupt model header: {e}") from e

    if kind == MODEL_KIND_PACKED:
        layout = _packed_layout(dim, users, items)
    elif kind in (MODEL_KIND_DENSE, MODEL_KIND_DENSE_BINARY):
        layout = _dense_layout(dim, users, items)
    else:
        raise ModelFormatError(f"unknown model kind {kind}")

    expected = _HEADER.size + sum(int(np.prod(shape)) * dtype.itemsize for _, dtype, shape in layout)
    if len(payload) < expected:
        raise TruncatedFileError(f"model file has {len(payload)} bytes, header implies {expected}")

    arrays = {}
    offset = _HEADER.size
    for name, dtype, shape in layout:
        count = int(np.prod(shape))
        values = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
        arrays[name] = values.reshape(shape).astype(dtype.newbyteorder("="))
        offset += count * dtype.itemsize

    try:
        if kind == MODEL_KIND_PACKED:
            return PackedModel(dim=dim, **arrays)
        mode = "dense" if kind == MODEL_KIND_DENSE else "binary"
        return DenseModel(mode=mode, **arrays)
    except (ConfigError, ValueError) as e:
        raise ModelFormatError(f"inconsistent model file: {e}") from e


def save_model(model: Model, sink: Sink) -> None:
    """Write ``model`` to a path or a binary stream."""
    payload = encode_model(model)
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(payload)
        logger.info(f"Saved {type(model).__name__} ({len(payload)} bytes) to {sink}")
    else:
        sink.write(payload)


def load_model(source: Sink) -> Model:
    """Read a model from a path or a binary stream."""
    if isinstance(source, (str, Path)):
        payload = Path(source).read_bytes()
    else:
        payload = source.read()
    return decode_model(payload)
