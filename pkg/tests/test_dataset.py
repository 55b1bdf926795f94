"""
Unit tests for ratings parsing, splitting, positive sets and the BLRI file format.
"""
import io
import os
import struct
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.data.dataset import SplitSpec, parse_movielens, positive_sets, split, split_sizes
from src.data.interaction_store import (
    decode_interactions,
    encode_interactions,
    load_id_maps,
    read_interactions,
    save_id_maps,
    write_interactions,
)
from src.utils.exceptions import (
    BadMagicError,
    DataFormatError,
    EmptyDatasetError,
    SplitError,
    TruncatedFileError,
    VersionMismatchError,
)
from tests.fixtures import make_interactions, ratings_text


class TestParseMovielens(unittest.TestCase):
    """Test cases for parse_movielens."""

    def test_parses_dat_lines(self):
        """Ratings become implicit interactions with first-appearance ids."""
        data = b"7::10::5::0\n7::20::3::0\n3::10::4::0\n"
        interactions = parse_movielens(io.BytesIO(data))

        self.assertEqual(len(interactions), 3)
        self.assertEqual(interactions.num_users, 2)
        self.assertEqual(interactions.num_items, 2)
        self.assertEqual(interactions.raw_user_id(0), 7)
        self.assertEqual(interactions.raw_user_id(1), 3)
        self.assertEqual(interactions.dense_item_id(20), 1)
        np.testing.assert_array_equal(interactions.user_ids, [0, 0, 1])
        np.testing.assert_array_equal(interactions.item_ids, [0, 1, 0])

    def test_duplicates_collapse(self):
        data = b"1::1::5::0\n1::1::2::9\n2::1::5::0\n"
        interactions = parse_movielens(data)
        self.assertEqual(len(interactions), 2)

    def test_wrong_field_count_reports_line(self):
        """A short line is reported with its 1-based line number."""
        data = b"1::10::5::0\n1::20::5\n"
        with self.assertRaises(DataFormatError) as ctx:
            parse_movielens(data)
        self.assertEqual(ctx.exception.line_number, 2)
        self.assertIn("line 2", str(ctx.exception))

    def test_non_integer_id_counts_blank_lines(self):
        data = b"1::1::5::0\n\n1::x::5::0\n"
        with self.assertRaises(DataFormatError) as ctx:
            parse_movielens(data)
        self.assertEqual(ctx.exception.line_number, 3)

    def test_non_numeric_rating(self):
        data = b"1::1::5::0\n2::1::good::0\n"
        with self.assertRaises(DataFormatError) as ctx:
            parse_movielens(data)
        self.assertEqual(ctx.exception.line_number, 2)

    def test_invalid_utf8(self):
        with self.assertRaises(DataFormatError) as ctx:
            parse_movielens(b"1::1::5::0\n\xff::1::5::0\n")
        self.assertEqual(ctx.exception.line_number, 2)

    def test_csv_header_is_skipped(self):
        data = b"userId,movieId,rating,timestamp\n1,2,3.5,100\n1,3,4.0,101\n"
        interactions = parse_movielens(data, format="csv")
        self.assertEqual(len(interactions), 2)
        self.assertEqual(interactions.raw_item_id(1), 3)

    def test_empty_input(self):
        with self.assertRaises(EmptyDatasetError):
            parse_movielens(b"\n\n")

    def test_csv_header_without_ratings(self):
        with self.assertRaises(EmptyDatasetError):
            parse_movielens(b"userId,movieId,rating,timestamp\n", format="csv")
        with self.assertRaises(EmptyDatasetError):
            parse_movielens(b"\nuserId,movieId,rating,timestamp\n\n", format="csv")

    def test_min_rating_filters(self):
        data = b"1::1::5::0\n1::2::2::0\n2::3::4::0\n"
        interactions = parse_movielens(data, min_rating=4)
        self.assertEqual(len(interactions), 2)
        self.assertEqual(interactions.num_items, 2)

    def test_arrays_are_read_only(self):
        interactions = parse_movielens(b"1::1::5::0\n")
        with self.assertRaises(ValueError):
            interactions.user_ids[0] = 3


class TestSplit(unittest.TestCase):
    """Test cases for split and SplitSpec."""

    def setUp(self):
        """Set up test fixtures."""
        self.interactions = parse_movielens(ratings_text().encode())

    def test_parts_partition_the_input(self):
        train, test, validation = split(self.interactions, SplitSpec(seed=1))
        total = len(self.interactions)

        self.assertEqual(len(train) + len(test) + len(validation), total)
        self.assertEqual((len(train), len(test), len(validation)), split_sizes(total, SplitSpec()))
        keys = set()
        for part in (train, test, validation):
            self.assertEqual(part.num_items, self.interactions.num_items)
            keys.update(map(tuple, part.pairs.tolist()))
        self.assertEqual(keys, set(map(tuple, self.interactions.pairs.tolist())))

    def test_thousand_random_interactions_partition_exactly(self):
        rng = np.random.default_rng(5)
        flat = rng.choice(80 * 60, size=1000, replace=False)
        interactions = make_interactions(np.stack([flat // 60, flat % 60], axis=1), 80, 60)
        parts = split(interactions, SplitSpec(seed=13))

        self.assertEqual([len(p) for p in parts], [800, 100, 100])
        keys = [set(map(tuple, p.pairs.tolist())) for p in parts]
        self.assertFalse(keys[0] & keys[1] or keys[0] & keys[2] or keys[1] & keys[2])
        self.assertEqual(keys[0] | keys[1] | keys[2], set(map(tuple, interactions.pairs.tolist())))

    def test_same_seed_same_split(self):
        first = split(self.interactions, SplitSpec(seed=7))
        second = split(self.interactions, SplitSpec(seed=7))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.pairs, b.pairs)

    def test_zero_fraction_rejected(self):
        with self.assertRaises(SplitError):
            SplitSpec(0.5, 0.5, 0.0)

    def test_fractions_must_sum_to_one(self):
        with self.assertRaises(SplitError):
            SplitSpec(0.5, 0.3, 0.1)

    def test_rounding_to_empty_part(self):
        tiny = make_interactions([(0, 0), (0, 1), (1, 0)])
        with self.assertRaises(SplitError):
            split(tiny, SplitSpec())


class TestPositiveSets(unittest.TestCase):
    """Test cases for positive_sets."""

    def setUp(self):
        """Set up test fixtures."""
        self.positives = positive_sets(make_interactions([(0, 3), (0, 1), (2, 0)], 3, 4))

    def test_items_are_sorted_per_user(self):
        np.testing.assert_array_equal(self.positives.items_of(0), [1, 3])
        self.assertEqual(self.positives.count(1), 0)
        self.assertEqual(self.positives.to_dict(), {0: {1, 3}, 1: set(), 2: {0}})

    def test_membership(self):
        self.assertTrue(self.positives.contains(0, 3))
        self.assertFalse(self.positives.contains(1, 3))
        np.testing.assert_array_equal(
            self.positives.contains_many(np.array([0, 0, 2, 2]), np.array([1, 2, 0, 3])),
            [True, False, True, False],
        )

    def test_matches_group_by_on_random_pairs(self):
        rng = np.random.default_rng(3)
        flat = rng.choice(40 * 70, size=500, replace=False)
        pairs = np.stack([flat // 70, flat % 70], axis=1)
        positives = positive_sets(make_interactions(pairs, 40, 70))

        grouped = {u: set() for u in range(40)}
        for u, i in pairs.tolist():
            grouped[u].add(i)
        self.assertEqual(positives.to_dict(), grouped)
        self.assertEqual(len(positives), 500)
        for u in range(40):
            np.testing.assert_array_equal(positives.items_of(u), sorted(grouped[u]))

        users = rng.integers(40, size=2000)
        items = rng.integers(70, size=2000)
        expected = [i in grouped[u] for u, i in zip(users.tolist(), items.tolist())]
        np.testing.assert_array_equal(positives.contains_many(users, items), expected)


class TestInteractionStore(unittest.TestCase):
    """Test cases for the BLRI file format."""

    def setUp(self):
        """Set up test fixtures."""
        self.interactions = make_interactions([(0, 1), (1, 0), (1, 2)], 2, 3)

    def test_header_layout(self):
        payload = encode_interactions(self.interactions)
        magic, version, users, items, pairs = struct.unpack_from("<4sIIIQ", payload)
        self.assertEqual((magic, version, users, items, pairs), (b"BLRI", 1, 2, 3, 3))
        self.assertEqual(len(payload), 24 + 3 * 8)

    def test_decode_restores_pairs(self):
        decoded = decode_interactions(encode_interactions(self.interactions))
        np.testing.assert_array_equal(decoded.pairs, self.interactions.pairs)
        self.assertEqual(decoded.num_items, 3)

    def test_bad_magic(self):
        payload = b"XXXX" + encode_interactions(self.interactions)[4:]
        with self.assertRaises(BadMagicError):
            decode_interactions(payload)

    def test_truncated(self):
        with self.assertRaises(TruncatedFileError):
            decode_interactions(encode_interactions(self.interactions)[:-1])

    def test_version_mismatch(self):
        payload = bytearray(encode_interactions(self.interactions))
        payload[4:8] = struct.pack("<I", 2)
        with self.assertRaises(VersionMismatchError):
            decode_interactions(bytes(payload))

    def test_id_maps_sidecar(self):
        interactions = parse_movielens(b"7::10::5::0\n3::20::5::0\n")
        with tempfile.TemporaryDirectory() as tmp:
            data_path = write_interactions(Path(tmp) / "train.blri", interactions)
            maps_path = save_id_maps(Path(tmp) / "id_maps.npz", interactions)
            users, items = load_id_maps(maps_path)
            restored = read_interactions(data_path, maps_path)

        np.testing.assert_array_equal(users, [7, 3])
        np.testing.assert_array_equal(items, [10, 20])
        self.assertEqual(restored.raw_item_id(1), 20)


if __name__ == '__main__':
    unittest.main()
