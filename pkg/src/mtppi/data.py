"""Task data model and finite-population moment primitives.

Everything downstream operates on one shape of data: per task, a cheap
surrogate score for every one of its N items, ground truth for a subset,
and a boolean mask saying which items are labeled. Absent labels are
None at the API boundary; internally they are NaN slots that no code
path ever averages over, because every consumer goes through the mask.

Divisor conventions are fixed here once: population variance and
covariance divide by N, the descriptive sample variance divides by
N - 1. The two are tied by var_sample * (N - 1) == var_n * N.
"""
from __future__ import annotations

import dataclasses
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    LengthMismatchError,
    MissingLabelError,
    NonFiniteValueError,
    TooSmallError,
)

__all__ = [
    "TaskDataset",
    "MultiTaskStudy",
    "PopulationMoments",
    "make_task_dataset",
    "validate_task_dataset",
    "population_moments",
    "finite_pop_cov",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True)
class TaskDataset:
    """One task: surrogate scores for all N items, labels for a subset.

    ``y`` is a float vector with NaN at unlabeled positions. Use
    :func:`make_task_dataset` to build one from optional labels and
    :func:`validate_task_dataset` before handing it to an estimator.
    """

    task_id: str
    y_hat: np.ndarray
    y: np.ndarray
    labeled: np.ndarray

    @property
    def n_items(self) -> int:
        return int(self.y_hat.shape[0])

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labeled))

    @property
    def labeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labeled)

    @property
    def y_labeled(self) -> np.ndarray:
        return self.y[self.labeled]

    @property
    def y_hat_labeled(self) -> np.ndarray:
        return self.y_hat[self.labeled]

    @property
    def present(self) -> np.ndarray:
        """Mask of items whose ground truth is known at all."""
        return ~np.isnan(self.y)

    @property
    def has_full_ground_truth(self) -> bool:
        return bool(self.present.all())

    def with_labeled(self, mask: np.ndarray) -> "TaskDataset":
        """Same items, different labeled mask (must stay within present)."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.y_hat.shape:
            raise LengthMismatchError(
                f"task {self.task_id}: mask length {mask.shape} != {self.y_hat.shape}"
            )
        if np.any(mask & ~self.present):
            raise MissingLabelError(
                f"task {self.task_id}: mask selects items without ground truth"
            )
        return TaskDataset(self.task_id, self.y_hat, self.y, _freeze(mask))


def make_task_dataset(
    task_id: str,
    y_hat: Sequence[float],
    y: Iterable[Optional[float]],
    labeled: Optional[Sequence[bool]] = None,
) -> TaskDataset:
    """Build and validate a TaskDataset from optional labels.

    ``y`` entries may be None (unknown ground truth). When ``labeled``
    is omitted, every item with a known label is marked labeled.
    """
    y_hat_arr = np.array(y_hat, dtype=float)
    y_arr = np.array([np.nan if v is None else float(v) for v in y], dtype=float)
    if labeled is None:
        labeled_arr = ~np.isnan(y_arr)
    else:
        labeled_arr = np.array(labeled, dtype=bool)
    task = TaskDataset(str(task_id), y_hat_arr, y_arr, labeled_arr)
    return validate_task_dataset(task)


def validate_task_dataset(task: TaskDataset) -> TaskDataset:
    """Check the dataset invariants; freeze the arrays and return it.

    Raises LengthMismatchError, TooSmallError, NonFiniteValueError or
    MissingLabelError as appropriate.
    """
    y_hat, y, labeled = task.y_hat, task.y, task.labeled
    if y_hat.ndim != 1 or y.ndim != 1 or labeled.ndim != 1:
        raise LengthMismatchError(f"task {task.task_id}: fields must be 1-D vectors")
    if not (y_hat.shape == y.shape == labeled.shape):
        raise LengthMismatchError(
            f"task {task.task_id}: y_hat/y/labeled lengths differ "
            f"({y_hat.shape[0]}, {y.shape[0]}, {labeled.shape[0]})"
        )
    if labeled.dtype != np.bool_:
        raise LengthMismatchError(f"task {task.task_id}: labeled mask must be boolean")
    if y_hat.shape[0] < 2:
        raise TooSmallError(f"task {task.task_id}: needs at least 2 items")
    if not np.isfinite(y_hat).all():
        raise NonFiniteValueError(f"task {task.task_id}: non-finite surrogate score")
    if np.isinf(y).any():
        raise NonFiniteValueError(f"task {task.task_id}: infinite label value")
    if np.any(labeled & np.isnan(y)):
        raise MissingLabelError(
            f"task {task.task_id}: labeled index without a ground-truth value"
        )
    for arr in (y_hat, y, labeled):
        _freeze(arr)
    return task


@dataclasses.dataclass(frozen=True)
class MultiTaskStudy:
    """An ordered collection of tasks sharing a surrogate scale."""

    tasks: tuple[TaskDataset, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if len(self.tasks) < 1:
            raise TooSmallError("a study needs at least one task")
        ids = [t.task_id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise LengthMismatchError("duplicate task_id in study")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def index_of(self, task_id: str) -> int:
        for i, t in enumerate(self.tasks):
            if t.task_id == task_id:
                return i
        raise KeyError(task_id)

    @property
    def has_full_ground_truth(self) -> bool:
        return all(t.has_full_ground_truth for t in self.tasks)


@dataclasses.dataclass(frozen=True)
class PopulationMoments:
    mean: float
    var_n: float
    var_sample: float
    n_points: int


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise LengthMismatchError(f"{name} must be a 1-D vector")
    if not np.isfinite(arr).all():
        raise NonFiniteValueError(f"{name} contains a non-finite value")
    return arr


def population_moments(values) -> PopulationMoments:
    """Two-pass mean and variance under both divisor conventions.

    var_n uses divisor N (the finite-population convention), var_sample
    uses N - 1. Requires at least two finite points.
    """
    v = _as_vector(values, "values")
    n = v.shape[0]
    if n < 2:
        raise TooSmallError("population_moments needs at least 2 points")
    mean = float(np.mean(v))
    dev = v - mean
    var_n = float(np.sum(dev * dev)) / n
    var_sample = var_n * n / (n - 1)
    return PopulationMoments(mean=mean, var_n=var_n, var_sample=var_sample, n_points=n)


def finite_pop_cov(u, v) -> float:
    """Population covariance (divisor N) of two equal-length vectors."""
    u_arr = _as_vector(u, "u")
    v_arr = _as_vector(v, "v")
    if u_arr.shape != v_arr.shape:
        raise LengthMismatchError(
            f"covariance inputs differ in length ({u_arr.shape[0]} vs {v_arr.shape[0]})"
        )
    n = u_arr.shape[0]
    if n < 2:
        raise TooSmallError("finite_pop_cov needs at least 2 points")
    du = u_arr - float(np.mean(u_arr))
    dv = v_arr - float(np.mean(v_arr))
    return float(np.sum(du * dv)) / n
