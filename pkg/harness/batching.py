"""
Seeded mini-batching.
"""

import logging
from typing import List, Sequence, TypeVar

import numpy as np

from numcore.errors import ContractError

logger = logging.getLogger(__name__)

T = TypeVar("T")


def make_batches(items: Sequence[T], batch_size: int, seed: int, drop_short: bool = False) -> List[List[T]]:
    """Shuffle ``items`` with ``seed`` and cut contiguous slices of ``batch_size``.

    With ``drop_short`` a trailing batch of fewer than two items is dropped
    (image stages rank against in-batch negatives).
    """
    if not items:
        raise ContractError("cannot batch an empty dataset")
    if batch_size < 1:
        raise ContractError(f"batch_size must be >= 1, got {batch_size}")
    if drop_short and batch_size < 2:
        raise ContractError("image stages need batch_size >= 2")
    order = np.random.default_rng(seed).permutation(len(items))
    batches = [[items[i] for i in order[start:start + batch_size]]
               for start in range(0, len(items), batch_size)]
    if drop_short and len(batches[-1]) < 2:
        logger.warning(f"Dropped trailing batch of {len(batches[-1])} item(s)")
        batches.pop()
    if not batches:
        raise ContractError("no batch of at least two items could be formed")
    return batches
