"""
Implicit-feedback interaction data: MovieLens ingestion, dense id remapping,
random interaction-level splits and per-user positive sets.
"""
from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Dict, Optional, Set, Tuple, Union

import numpy as np
import pandas as pd

from ..utils.config import (
    DATA_FORMATS,
    DEFAULT_SEED,
    DEFAULT_SPLIT_FRACTIONS,
    SPLIT_FRACTION_TOLERANCE,
)
from ..utils.exceptions import ConfigError, DataFormatError, EmptyDatasetError, SplitError

logger = logging.getLogger(__name__)

_SEPARATORS = {"dat": "::", "csv": ","}
_FIELDS_PER_LINE = 4
_INTEGER_ID = re.compile(r"\s*\d+\s*")


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=dtype)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class InteractionSet:
    """Deduplicated (user, item) pairs over dense 0-based id spaces.

    ``raw_user_ids[u]`` is the original id of dense user ``u`` (same for items);
    parts produced by :func:`split` share these maps with their parent.
    """

    user_ids: np.ndarray
    item_ids: np.ndarray
    num_users: int
    num_items: int
    raw_user_ids: np.ndarray
    raw_item_ids: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "user_ids", _frozen(self.user_ids, np.int32))
        object.__setattr__(self, "item_ids", _frozen(self.item_ids, np.int32))
        object.__setattr__(self, "raw_user_ids", _frozen(self.raw_user_ids, np.int64))
        object.__setattr__(self, "raw_item_ids", _frozen(self.raw_item_ids, np.int64))
        if self.user_ids.shape != self.item_ids.shape or self.user_ids.ndim != 1:
            raise ValueError("user_ids and item_ids must be parallel 1-d arrays")
        if len(self.raw_user_ids) != self.num_users or len(self.raw_item_ids) != self.num_items:
            raise ValueError("raw id maps must cover every dense index")
        if len(self.user_ids):
            if self.user_ids.min() < 0 or self.user_ids.max() >= self.num_users:
                raise ValueError("user index out of range")
            if self.item_ids.min() < 0 or self.item_ids.max() >= self.num_items:
                raise ValueError("item index out of range")

    def __len__(self) -> int:
        return len(self.user_ids)

    @property
    def pairs(self) -> np.ndarray:
        """(len, 2) array of (user, item) rows."""
        return np.stack([self.user_ids, self.item_ids], axis=1)

    def subset(self, rows: np.ndarray) -> "InteractionSet":
        """Interactions at ``rows``, sharing this set's id spaces."""
        return InteractionSet(
            user_ids=self.user_ids[rows],
            item_ids=self.item_ids[rows],
            num_users=self.num_users,
            num_items=self.num_items,
            raw_user_ids=self.raw_user_ids,
            raw_item_ids=self.raw_item_ids,
        )

    @cached_property
    def _user_index(self) -> Dict[int, int]:
        return {int(raw): dense for dense, raw in enumerate(self.raw_user_ids)}

    @cached_property
    def _item_index(self) -> Dict[int, int]:
        return {int(raw): dense for dense, raw in enumerate(self.raw_item_ids)}

    def raw_user_id(self, user: int) -> int:
        return int(self.raw_user_ids[user])

    def raw_item_id(self, item: int) -> int:
        return int(self.raw_item_ids[item])

    def dense_user_id(self, raw: int) -> int:
        return self._user_index[int(raw)]

    def dense_item_id(self, raw: int) -> int:
        return self._item_index[int(raw)]


@dataclass(frozen=True)
class SplitSpec:
    """Train/test/validation proportions and the RNG seed of a random split."""

    train_fraction: float = DEFAULT_SPLIT_FRACTIONS[0]
    test_fraction: float = DEFAULT_SPLIT_FRACTIONS[1]
    validation_fraction: float = DEFAULT_SPLIT_FRACTIONS[2]
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        fractions = self.fractions
        if any(not np.isfinite(f) or f <= 0 for f in fractions):
            raise SplitError(f"split fractions must be positive, got {fractions}")
        if abs(sum(fractions) - 1.0) > SPLIT_FRACTION_TOLERANCE:
            raise SplitError(f"split fractions must sum to 1, got {sum(fractions)}")

    @property
    def fractions(self) -> Tuple[float, float, float]:
        return (self.train_fraction, self.test_fraction, self.validation_fraction)


@dataclass(frozen=True, eq=False)
class PositiveSets:
    """Per-user sorted item sets in CSR form.

    Items of user ``u`` are ``indices[indptr[u]:indptr[u + 1]]``, ascending.
    """

    indptr: np.ndarray
    indices: np.ndarray
    num_items: int
    _keys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "indptr", _frozen(self.indptr, np.int64))
        object.__setattr__(self, "indices", _frozen(self.indices, np.int32))
        users = np.repeat(np.arange(self.num_users, dtype=np.int64), np.diff(self.indptr))
        object.__setattr__(self, "_keys", _frozen(users * self.num_items + self.indices, np.int64))

    @property
    def num_users(self) -> int:
        return len(self.indptr) - 1

    def __len__(self) -> int:
        return len(self.indices)

    def items_of(self, user: int) -> np.ndarray:
        return self.indices[self.indptr[user]:self.indptr[user + 1]]

    def count(self, user: int) -> int:
        return int(self.indptr[user + 1] - self.indptr[user])

    def contains(self, user: int, item: int) -> bool:
        items = self.items_of(user)
        pos = np.searchsorted(items, item)
        return bool(pos < len(items) and items[pos] == item)

    def contains_many(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        """Vectorized membership test for parallel user/item arrays."""
        if len(self._keys) == 0:
            return np.zeros(np.broadcast(users, items).shape, dtype=bool)
        queries = np.asarray(users, dtype=np.int64) * self.num_items + np.asarray(items, dtype=np.int64)
        pos = np.searchsorted(self._keys, queries)
        pos = np.minimum(pos, len(self._keys) - 1)
        return self._keys[pos] == queries

    def to_dict(self) -> Dict[int, Set[int]]:
        return {u: set(self.items_of(u).tolist()) for u in range(self.num_users)}


def _split_lines(text: str, separator: str) -> Tuple[pd.Series, pd.DataFrame]:
    lines = pd.Series(text.splitlines(), dtype=object)
    fields = lines.str.split(separator, regex=False, expand=True)
    return lines, fields


def _first_bad_line(mask: pd.Series) -> Optional[int]:
    """1-based line number of the first True entry (index = 0-based line)."""
    bad = mask.index[mask.to_numpy(dtype=bool)]
    return int(bad[0]) + 1 if len(bad) else None


def parse_movielens(
    stream: Union[BinaryIO, bytes],
    format: str = "dat",
    min_rating: Optional[float] = None,
) -> InteractionSet:
    """
    Parse MovieLens ratings into implicit positive interactions.

    Args:
        stream: Binary stream (or bytes) of ``user::item::rating::timestamp`` lines
            for ``dat`` or ``user,item,rating,timestamp`` lines for ``csv``
        format: ``dat`` or ``csv``; a csv header is detected by a non-numeric first field
        min_rating: Keep only ratings at or above this value; all ratings count when None

    Returns:
        InteractionSet with ids remapped in first-appearance order and duplicates collapsed

    Raises:
        DataFormatError: A line does not have four well-formed fields
        EmptyDatasetError: No interactions remain
    """
    if format not in DATA_FORMATS:
        raise ConfigError(f"unknown ratings format {format!r}")
    raw = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    try:
        text = bytes(raw).decode("utf-8")
    except UnicodeDecodeError as e:
        prefix = bytes(raw)[:e.start]
        raise DataFormatError("invalid UTF-8", line_number=prefix.count(b"\n") + 1) from e

    separator = _SEPARATORS[format]
    lines, fields = _split_lines(text, separator)
    blank = lines.str.strip() == ""
    if blank.all():
        raise EmptyDatasetError("ratings input is empty")

    if format == "csv":
        first = int(np.flatnonzero(~blank.to_numpy())[0])
        if not _INTEGER_ID.fullmatch(str(fields.iat[first, 0])):
            blank.iat[first] = True
            logger.debug(f"Skipping csv header on line {first + 1}")
            if blank.all():
                raise EmptyDatasetError("ratings input has a header but no rating lines")

    field_counts = lines.str.count(re.escape(separator)) + 1
    line = _first_bad_line(~blank & (field_counts != _FIELDS_PER_LINE))
    if line is not None:
        raise DataFormatError(
            f"expected {_FIELDS_PER_LINE} fields separated by {separator!r}", line_number=line
        )

    records = fields.loc[~blank, list(range(_FIELDS_PER_LINE))].copy()
    records.columns = ["user", "item", "rating", "timestamp"]
    for column in ("user", "item"):
        ok = records[column].str.fullmatch(_INTEGER_ID.pattern).fillna(False).astype(bool)
        line = _first_bad_line(~ok)
        if line is not None:
            raise DataFormatError(
                f"{column} id is not an integer",
                line_number=line,
            )
    for column in ("rating", "timestamp"):
        values = pd.to_numeric(records[column].str.strip(), errors="coerce")
        line = _first_bad_line(values.isna())
        if line is not None:
            raise DataFormatError(
                f"{column} is not numeric",
                line_number=line,
            )
        records[column] = values

    if min_rating is not None:
        records = records[records["rating"] >= min_rating]
        if records.empty:
            raise EmptyDatasetError(f"no ratings at or above {min_rating}")

    raw_users = records["user"].astype(np.int64)
    raw_items = records["item"].astype(np.int64)
    pairs = pd.DataFrame({"user": raw_users.to_numpy(), "item": raw_items.to_numpy()})
    pairs = pairs.drop_duplicates(keep="first")

    user_codes, user_uniques = pd.factorize(pairs["user"], sort=False)
    item_codes, item_uniques = pd.factorize(pairs["item"], sort=False)

    interactions = InteractionSet(
        user_ids=user_codes,
        item_ids=item_codes,
        num_users=len(user_uniques),
        num_items=len(item_uniques),
        raw_user_ids=np.asarray(user_uniques, dtype=np.int64),
        raw_item_ids=np.asarray(item_uniques, dtype=np.int64),
    )
    logger.info(
        f"Parsed {len(records)} ratings into {len(interactions)} interactions "
        f"({interactions.num_users} users, {interactions.num_items} items)"
    )
    return interactions


def parse_movielens_file(path, format: str = "dat", min_rating: Optional[float] = None) -> InteractionSet:
    """Convenience wrapper reading ``path`` from disk."""
    with open(path, "rb") as handle:
        return parse_movielens(io.BytesIO(handle.read()), format=format, min_rating=min_rating)


def split_sizes(total: int, spec: SplitSpec) -> Tuple[int, int, int]:
    train = int(round(total * spec.train_fraction))
    test = int(round(total * spec.test_fraction))
    validation = total - train - test
    return train, test, validation


def split(
    interactions: InteractionSet, spec: SplitSpec
) -> Tuple[InteractionSet, InteractionSet, InteractionSet]:
    """
    Randomly partition interactions into train, test and validation parts.

    The partition is interaction-level, deterministic for a given seed, and
    every part keeps the parent's id maps and entity counts.

    Raises:
        EmptyDatasetError: ``interactions`` is empty
        SplitError: A fraction rounds to an empty part
    """
    total = len(interactions)
    if total == 0:
        raise EmptyDatasetError("cannot split an empty interaction set")
    sizes = split_sizes(total, spec)
    if min(sizes) <= 0:
        raise SplitError(f"fractions {spec.fractions} leave an empty part for {total} interactions: {sizes}")

    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(total)
    bounds = np.cumsum(sizes)[:-1]
    parts = tuple(interactions.subset(np.sort(rows)) for rows in np.split(order, bounds))
    logger.info(f"Split {total} interactions into {sizes} with seed {spec.seed}")
    return parts


def positive_sets(interactions: InteractionSet) -> PositiveSets:
    """Group interactions into per-user sorted item sets."""
    order = np.lexsort((interactions.item_ids, interactions.user_ids))
    counts = np.bincount(interactions.user_ids, minlength=interactions.num_users)
    indptr = np.zeros(interactions.num_users + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return PositiveSets(
        indptr=indptr,
        indices=interactions.item_ids[order],
        num_items=interactions.num_items,
    )
