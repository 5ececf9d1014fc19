"""Keyed random streams and label-set sampling.

Reproducibility contract: every random draw in the package flows through
a StreamKey of (master_seed, task_index, replication_index, purpose).
The key fields are hashed into generator state via numpy's SeedSequence
spawn-key mechanism, so changing any one field yields a statistically
independent stream and the same key always replays the same draw,
regardless of process, thread count, or call order.

Simple random sampling without replacement is a partial Fisher-Yates
pass: n exact-uniform integer draws, n swaps, take the prefix. Every
size-n subset is equally likely.
"""
from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .errors import BadKError, SizeOutOfRangeError, TooSmallError

__all__ = [
    "Purpose",
    "StreamKey",
    "srs_without_replacement",
    "split_two_folds",
    "kfold_assignments",
]


class Purpose(enum.IntEnum):
    """What a stream is consumed for; part of the key."""

    LABEL_DRAW = 0
    FOLD_SPLIT = 1
    KFOLD = 2
    GAMMA_JITTER = 3


@dataclasses.dataclass(frozen=True)
class StreamKey:
    master_seed: int
    task_index: int
    replication_index: int
    purpose: int = Purpose.LABEL_DRAW

    def stream(self) -> np.random.Generator:
        """Fresh generator determined entirely by the key fields."""
        fields = (self.master_seed, self.task_index, self.replication_index, int(self.purpose))
        if any(f < 0 for f in fields):
            raise SizeOutOfRangeError(f"stream key fields must be non-negative: {fields}")
        seq = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.task_index, self.replication_index, int(self.purpose)),
        )
        return np.random.Generator(np.random.PCG64(seq))

    def replace(self, **changes) -> "StreamKey":
        return dataclasses.replace(self, **changes)


def srs_without_replacement(key: StreamKey, population_size: int, sample_size: int) -> np.ndarray:
    """Boolean mask of an exact-uniform size-n subset of {0..N-1}."""
    n, size = int(population_size), int(sample_size)
    if n < 0 or not 0 <= size <= n:
        raise SizeOutOfRangeError(f"sample size {size} not in [0, {n}]")
    mask = np.zeros(n, dtype=bool)
    if size == 0:
        return mask
    gen = key.stream()
    return _srs_mask(gen, n, size)


def _srs_mask(gen: np.random.Generator, population_size: int, sample_size: int) -> np.ndarray:
    idx = np.arange(population_size)
    # j_i ~ Uniform{i, .., N-1}; the bounds do not depend on earlier draws,
    # so all of them can be drawn up front.
    js = gen.integers(np.arange(sample_size), population_size)
    for i in range(sample_size):
        j = js[i]
        idx[i], idx[j] = idx[j], idx[i]
    mask = np.zeros(population_size, dtype=bool)
    mask[idx[:sample_size]] = True
    return mask


def split_two_folds(key: StreamKey, indices) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle ``indices`` and halve them; odd leftover goes to fold A."""
    return _split_two_folds(key.replace(purpose=Purpose.FOLD_SPLIT).stream(), indices)


def _split_two_folds(gen: np.random.Generator, indices) -> tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(indices)
    n = idx.shape[0]
    if n < 2:
        raise TooSmallError(f"two-fold split needs at least 2 indices, got {n}")
    shuffled = idx[gen.permutation(n)]
    half = (n + 1) // 2
    return shuffled[:half].copy(), shuffled[half:].copy()


def kfold_assignments(key: StreamKey, n_items: int, k: int) -> np.ndarray:
    """Random balanced fold labels in {0..k-1}, sizes differing by <= 1."""
    return _kfold_assignments(key.replace(purpose=Purpose.KFOLD).stream(), n_items, k)


def _kfold_assignments(gen: np.random.Generator, n_items: int, k: int) -> np.ndarray:
    n_items, k = int(n_items), int(k)
    if not 2 <= k <= n_items:
        raise BadKError(f"k={k} not in [2, {n_items}]")
    perm = gen.permutation(n_items)
    fold = np.empty(n_items, dtype=np.int64)
    fold[perm] = np.arange(n_items) % k
    return fold
