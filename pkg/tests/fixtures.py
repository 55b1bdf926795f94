"""
Shared builders for test data.
"""
import numpy as np

from src.data.dataset import InteractionSet
from src.models.model import DenseModel


def make_interactions(pairs, num_users=None, num_items=None):
    """InteractionSet over identity id maps from a list of (user, item) pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    num_users = num_users if num_users is not None else int(pairs[:, 0].max()) + 1
    num_items = num_items if num_items is not None else int(pairs[:, 1].max()) + 1
    return InteractionSet(
        user_ids=pairs[:, 0],
        item_ids=pairs[:, 1],
        num_users=num_users,
        num_items=num_items,
        raw_user_ids=np.arange(num_users),
        raw_item_ids=np.arange(num_items),
    )


def block_diagonal_interactions():
    """Users 0-1 like items 0-1, users 2-3 like items 2-3."""
    return make_interactions([
        (0, 0), (0, 1), (1, 0), (1, 1),
        (2, 2), (2, 3), (3, 2), (3, 3),
    ])


def random_model(num_users, num_items, dim, rng, dtype=np.float32, mode="dense", scale=1.0):
    return DenseModel(
        user_factors=(scale * rng.standard_normal((num_users, dim))).astype(dtype),
        item_factors=(scale * rng.standard_normal((num_items, dim))).astype(dtype),
        user_bias=rng.standard_normal(num_users).astype(dtype),
        item_bias=rng.standard_normal(num_items).astype(dtype),
        mode=mode,
    )


def ratings_text(num_users=8, num_items=10, separator="::"):
    """MovieLens-style ratings where every user rated every other item."""
    lines = []
    for user in range(1, num_users + 1):
        for item in range(1, num_items + 1):
            if (user + item) % 2 == 0:
                lines.append(separator.join([str(user), str(100 + item), "4", "978300760"]))
    return "\n".join(lines) + "\n"
