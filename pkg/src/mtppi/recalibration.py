"""Surrogate recalibration: isotonic fits, conditional means, mixtures.

A recalibrator maps a raw surrogate score z to a better proxy for the
outcome. The workhorse is weighted isotonic regression via pool adjacent
violators; prediction linearly interpolates between the fitted knots and
clamps to the boundary values outside the training support, so a fit is
usable on scores it never saw.

Pooling labeled pairs from several tasks must not depend on the order the
tasks arrive in, so pava_fit canonicalizes its input by sorting on
(x, y, w) before doing anything else; permuting the input leaves the fit
bit-identical.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .errors import (
    EmptyFitError,
    LengthMismatchError,
    NoAuxiliaryLabelsError,
    NonFiniteValueError,
    NonPositiveWeightError,
    TooSmallError,
)
from .data import MultiTaskStudy

__all__ = [
    "IsotonicFit",
    "ConditionalMeanFit",
    "MixtureRecalibrator",
    "pava_fit",
    "isotonic_predict",
    "affine_recalibrate",
    "conditional_mean_fit",
    "conditional_mean_values",
    "fit_global_recalibrator",
]


@dataclasses.dataclass(frozen=True)
class IsotonicFit:
    """Monotone step-data fit: strictly increasing knots, non-decreasing values."""

    knots_x: np.ndarray
    knots_y: np.ndarray

    def __post_init__(self) -> None:
        if self.knots_x.shape != self.knots_y.shape or self.knots_x.ndim != 1:
            raise LengthMismatchError("knots_x and knots_y must be 1-D and equal length")
        if self.knots_x.shape[0] == 0:
            raise EmptyFitError("isotonic fit needs at least one knot")
        if self.knots_x.shape[0] > 1:
            if not np.all(np.diff(self.knots_x) > 0):
                raise LengthMismatchError("knots_x must be strictly increasing")
            if not np.all(np.diff(self.knots_y) >= 0):
                raise LengthMismatchError("knots_y must be non-decreasing")
        self.knots_x.setflags(write=False)
        self.knots_y.setflags(write=False)

    @property
    def x_min(self) -> float:
        return float(self.knots_x[0])

    @property
    def x_max(self) -> float:
        return float(self.knots_x[-1])

    def predict_many(self, z) -> np.ndarray:
        """Interpolate between knots; clamp to end values outside support."""
        return np.interp(np.asarray(z, dtype=float), self.knots_x, self.knots_y)

    def predict(self, z: float) -> float:
        return float(np.interp(float(z), self.knots_x, self.knots_y))


def _pool_adjacent(y: list, w: list) -> tuple[list, list]:
    """Stack-based PAVA over pre-grouped values; returns block means and sizes."""
    n = len(y)
    mean = [0.0] * n
    weight = [0.0] * n
    size = [0] * n
    top = -1
    for i in range(n):
        top += 1
        mean[top] = y[i]
        weight[top] = w[i]
        size[top] = 1
        while top > 0 and mean[top - 1] > mean[top]:
            wsum = weight[top - 1] + weight[top]
            mean[top - 1] = (weight[top - 1] * mean[top - 1] + weight[top] * mean[top]) / wsum
            weight[top - 1] = wsum
            size[top - 1] += size[top]
            top -= 1
    return mean[: top + 1], size[: top + 1]


def pava_fit(x, y, weights=None) -> IsotonicFit:
    """Weighted least-squares monotone (non-decreasing) regression.

    Exact ties in x are pre-averaged into a single knot carrying the
    summed weight; the fitted value at each surviving knot is its PAVA
    block mean. Input order never matters.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.shape != y_arr.shape or x_arr.ndim != 1:
        raise LengthMismatchError("pava_fit: x and y must be 1-D and equal length")
    if x_arr.size == 0:
        raise TooSmallError("pava_fit needs at least one point")
    if weights is None:
        w_arr = np.ones_like(x_arr)
    else:
        w_arr = np.asarray(weights, dtype=float)
        if w_arr.shape != x_arr.shape:
            raise LengthMismatchError("pava_fit: weights length mismatch")
        if np.any(w_arr <= 0) or not np.isfinite(w_arr).all():
            raise NonPositiveWeightError("pava_fit: weights must be positive and finite")
    if not (np.isfinite(x_arr).all() and np.isfinite(y_arr).all()):
        raise NonFiniteValueError("pava_fit: non-finite input")

    order = np.lexsort((w_arr, y_arr, x_arr))
    xs, ys, ws = x_arr[order], y_arr[order], w_arr[order]

    if xs.size > 1 and np.any(xs[1:] == xs[:-1]):
        starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
        gx = xs[starts]
        gw = np.add.reduceat(ws, starts)
        gy = np.add.reduceat(ws * ys, starts) / gw
    else:
        gx, gy, gw = xs, ys, ws

    means, sizes = _pool_adjacent(gy.tolist(), gw.tolist())
    fitted = np.repeat(np.asarray(means, dtype=float), np.asarray(sizes, dtype=np.intp))
    return IsotonicFit(knots_x=gx.copy(), knots_y=fitted)


def isotonic_predict(fit: IsotonicFit, z: float) -> float:
    """Evaluate an isotonic fit at one point (interpolated, clamped)."""
    return fit.predict(z)


def affine_recalibrate(a: float, b: float, z) -> np.ndarray:
    """a * z + b; the trivial recalibrator family."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise NonFiniteValueError("affine_recalibrate: coefficients must be finite")
    return a * np.asarray(z, dtype=float) + b


@dataclasses.dataclass(frozen=True)
class ConditionalMeanFit:
    """Exact lookup table: mean outcome among items sharing a score value."""

    support: np.ndarray
    means: np.ndarray
    counts: np.ndarray


def _group_means(y_hat, y):
    y_hat_arr = np.asarray(y_hat, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if y_hat_arr.shape != y_arr.shape or y_hat_arr.ndim != 1:
        raise LengthMismatchError("conditional mean: y_hat and y must match")
    if y_hat_arr.size == 0:
        raise TooSmallError("conditional mean needs at least one point")
    if not (np.isfinite(y_hat_arr).all() and np.isfinite(y_arr).all()):
        raise NonFiniteValueError("conditional mean: non-finite input")
    support, inverse, counts = np.unique(y_hat_arr, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=y_arr, minlength=support.shape[0])
    return support, inverse, counts, sums / counts


def conditional_mean_fit(y_hat, y) -> ConditionalMeanFit:
    """Group outcomes by exact score equality and average within groups."""
    support, _, counts, means = _group_means(y_hat, y)
    return ConditionalMeanFit(support=support, means=means, counts=counts)


def conditional_mean_values(y_hat, y) -> np.ndarray:
    """m(y_hat_i) for every i: each item's group mean, aligned to input."""
    _, inverse, _, means = _group_means(y_hat, y)
    return means[inverse]


@dataclasses.dataclass(frozen=True)
class MixtureRecalibrator:
    """Convex blend of a task-local fit and a cross-task global fit."""

    gamma: float
    local_fit: IsotonicFit
    global_fit: IsotonicFit

    def predict_many(self, z) -> np.ndarray:
        g = self.gamma
        return g * self.local_fit.predict_many(z) + (1.0 - g) * self.global_fit.predict_many(z)


def fit_global_recalibrator(study: MultiTaskStudy, exclude_task_id: str) -> IsotonicFit:
    """Isotonic fit pooled over every labeled pair outside one task."""
    xs, ys = [], []
    for task in study.tasks:
        if task.task_id == exclude_task_id:
            continue
        if task.n_labeled:
            xs.append(task.y_hat_labeled)
            ys.append(task.y_labeled)
    if not xs:
        raise NoAuxiliaryLabelsError(
            f"no labeled pairs outside task {exclude_task_id!r}"
        )
    return pava_fit(np.concatenate(xs), np.concatenate(ys))
