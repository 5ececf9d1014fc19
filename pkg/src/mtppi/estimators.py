"""Point estimators for a finite-population mean from surrogates + labels.

All methods share one template. With labeled set L of size n drawn
uniformly without replacement and a surrogate vector s over all N items,

    theta_hat = mean_L(Y) + lambda * (mean_N(s) - mean_L(s)).

The second term rectifies the surrogate's bias; at any fixed lambda the
estimate is exactly unbiased. Methods differ in the surrogate they feed
in and how lambda is chosen:

  classical  no surrogate (lambda = 0)
  ppi        raw scores, lambda = 1
  ppi_pp     raw scores, lambda estimated from the labeled set
  reppi2     task-local recalibration, cross-fitted on two folds
  greppi     global recalibration pooled from the other tasks' labels
  areppi     adaptive blend of the global fit with a task-local fit,
             with the blend weight chosen to maximize correlation on
             held-out points

The power-tuned coefficient is the labeled-set least-squares slope
cov_L(Y, s) / var_L(s) (divisor n-1), clipped to [0, 1] when clip=True.
"""
from __future__ import annotations

import dataclasses
import enum
from typing import Optional

import numpy as np

from .data import MultiTaskStudy, TaskDataset
from .errors import (
    BadKError,
    EmptyLabeledSetError,
    TooFewLabelsError,
    TooSmallError,
)
from .recalibration import (
    IsotonicFit,
    MixtureRecalibrator,
    fit_global_recalibrator,
    pava_fit,
)
from .sampling import Purpose, StreamKey, _kfold_assignments, _split_two_folds

__all__ = [
    "Method",
    "EstimateResult",
    "MIN_LABELED",
    "rectified_estimate",
    "plug_in_lambda",
    "classical_estimate",
    "ppi_estimate",
    "ppipp_estimate",
    "reppi_two_fold_estimate",
    "greppi_estimate",
    "areppi_estimate",
    "default_power_tune",
]

GAMMA_GRID = np.linspace(0.0, 1.0, 101)


class Method(str, enum.Enum):
    CLASSICAL = "classical"
    PPI = "ppi"
    PPI_PP = "ppi_pp"
    REPPI2 = "reppi2"
    GREPPI = "greppi"
    AREPPI = "areppi"


#: smallest labeled set each method accepts
MIN_LABELED = {
    Method.CLASSICAL: 2,
    Method.PPI: 2,
    Method.PPI_PP: 2,
    Method.GREPPI: 2,
    Method.REPPI2: 4,
    Method.AREPPI: 4,
}


@dataclasses.dataclass(frozen=True)
class EstimateResult:
    method: Method
    theta_hat: float
    lambda_used: float
    residuals: np.ndarray
    s_values_full: Optional[np.ndarray]
    n_labeled: int
    power_tuned: bool


def rectified_estimate(y_labeled, s_labeled, s_full_mean: float, lam: float) -> float:
    """mean(y_labeled) + lam * (s_full_mean - mean(s_labeled))."""
    y_l = np.asarray(y_labeled, dtype=float)
    s_l = np.asarray(s_labeled, dtype=float)
    if y_l.size == 0 or s_l.size == 0:
        raise EmptyLabeledSetError("rectified_estimate needs labeled points")
    return float(np.mean(y_l) + lam * (float(s_full_mean) - np.mean(s_l)))


def plug_in_lambda(y_labeled, s_labeled, clip: bool = True) -> float:
    """Labeled-set slope cov(Y, s)/var(s), divisor n-1; 0 if s is constant."""
    y_l = np.asarray(y_labeled, dtype=float)
    s_l = np.asarray(s_labeled, dtype=float)
    n = y_l.shape[0]
    if n < 2 or s_l.shape[0] != n:
        raise TooSmallError("plug_in_lambda needs two equal-length labeled vectors")
    ds = s_l - float(np.mean(s_l))
    var_s = float(np.sum(ds * ds)) / (n - 1)
    if var_s == 0.0:
        return 0.0
    dy = y_l - float(np.mean(y_l))
    lam = (float(np.sum(dy * ds)) / (n - 1)) / var_s
    if clip:
        lam = min(max(lam, 0.0), 1.0)
    return lam


def default_power_tune(method: Method, n_labeled: int) -> bool:
    """Default tuning policy: the recalibrated methods keep lambda = 1 at
    small n, where a plug-in coefficient costs more than it saves."""
    if method in (Method.GREPPI, Method.AREPPI):
        return n_labeled > 40
    return method in (Method.PPI_PP, Method.REPPI2)


def _labeled_view(task: TaskDataset, method: Method):
    n = task.n_labeled
    if n < MIN_LABELED[method]:
        raise TooFewLabelsError(
            f"{method.value} needs >= {MIN_LABELED[method]} labels, task "
            f"{task.task_id} has {n}"
        )
    return task.y_labeled, task.y_hat_labeled, task.labeled_indices


def classical_estimate(task: TaskDataset) -> EstimateResult:
    """Labeled-set sample mean; ignores the surrogate entirely."""
    y_l, _, _ = _labeled_view(task, Method.CLASSICAL)
    return EstimateResult(
        method=Method.CLASSICAL,
        theta_hat=float(np.mean(y_l)),
        lambda_used=0.0,
        residuals=y_l.copy(),
        s_values_full=None,
        n_labeled=y_l.shape[0],
        power_tuned=False,
    )


def ppi_estimate(task: TaskDataset) -> EstimateResult:
    """Raw-score rectified estimate at lambda = 1."""
    y_l, s_l, _ = _labeled_view(task, Method.PPI)
    theta = rectified_estimate(y_l, s_l, float(np.mean(task.y_hat)), 1.0)
    return EstimateResult(
        method=Method.PPI,
        theta_hat=theta,
        lambda_used=1.0,
        residuals=y_l - s_l,
        s_values_full=task.y_hat,
        n_labeled=y_l.shape[0],
        power_tuned=False,
    )


def ppipp_estimate(task: TaskDataset, clip: bool = True) -> EstimateResult:
    """Raw-score rectified estimate with the power-tuned coefficient."""
    y_l, s_l, _ = _labeled_view(task, Method.PPI_PP)
    lam = plug_in_lambda(y_l, s_l, clip=clip)
    theta = rectified_estimate(y_l, s_l, float(np.mean(task.y_hat)), lam)
    return EstimateResult(
        method=Method.PPI_PP,
        theta_hat=theta,
        lambda_used=lam,
        residuals=y_l - lam * s_l,
        s_values_full=task.y_hat,
        n_labeled=y_l.shape[0],
        power_tuned=True,
    )


def _finish(
    method: Method,
    task: TaskDataset,
    s_full: np.ndarray,
    power_tune: bool,
    clip: bool,
) -> EstimateResult:
    """Shared tail: pick lambda, rectify, record residuals."""
    y_l = task.y_labeled
    s_l = s_full[task.labeled]
    lam = plug_in_lambda(y_l, s_l, clip=clip) if power_tune else 1.0
    theta = rectified_estimate(y_l, s_l, float(np.mean(s_full)), lam)
    return EstimateResult(
        method=method,
        theta_hat=theta,
        lambda_used=lam,
        residuals=y_l - lam * s_l,
        s_values_full=s_full,
        n_labeled=y_l.shape[0],
        power_tuned=power_tune,
    )


def greppi_estimate(
    task: TaskDataset,
    study: MultiTaskStudy,
    power_tune: Optional[bool] = None,
    clip: bool = True,
    global_fit: Optional[IsotonicFit] = None,
) -> EstimateResult:
    """Rectified estimate through a recalibrator pooled from other tasks.

    The isotonic recalibrator is fit on every labeled (score, outcome)
    pair outside the target task, so it is independent of the target's
    labeled draw. ``global_fit`` lets a caller reuse a fit it already
    computed for this task; it must be exactly that.
    """
    _labeled_view(task, Method.GREPPI)
    if power_tune is None:
        power_tune = default_power_tune(Method.GREPPI, task.n_labeled)
    fit = global_fit if global_fit is not None else fit_global_recalibrator(study, task.task_id)
    s_full = fit.predict_many(task.y_hat)
    return _finish(Method.GREPPI, task, s_full, power_tune, clip)


def reppi_two_fold_estimate(
    task: TaskDataset,
    key: StreamKey,
    clip: bool = True,
    power_tune: bool = True,
) -> EstimateResult:
    """Task-local recalibration with two-fold cross-fitting.

    The labeled set is split in half; each half is scored by the
    isotonic fit trained on the other half, so no point is scored by a
    fit that saw it. Unlabeled items get the average of the two fits.
    """
    y_l, _, labeled_idx = _labeled_view(task, Method.REPPI2)
    gen = key.replace(purpose=Purpose.FOLD_SPLIT).stream()
    idx_a, idx_b = _split_two_folds(gen, labeled_idx)
    fit_a = pava_fit(task.y_hat[idx_a], task.y[idx_a])
    fit_b = pava_fit(task.y_hat[idx_b], task.y[idx_b])
    s_full = 0.5 * (fit_a.predict_many(task.y_hat) + fit_b.predict_many(task.y_hat))
    s_full[idx_a] = fit_b.predict_many(task.y_hat[idx_a])
    s_full[idx_b] = fit_a.predict_many(task.y_hat[idx_b])
    return _finish(Method.REPPI2, task, s_full, power_tune, clip)


def _best_gamma(oof: np.ndarray, glob: np.ndarray, y: np.ndarray) -> float:
    """Blend weight maximizing squared correlation with y on held-out
    predictions; ties and degenerate correlations resolve to smaller gamma."""
    dy = y - y.mean()
    var_y = float(np.sum(dy * dy))
    if var_y == 0.0:
        return 0.0
    mix = GAMMA_GRID[:, None] * oof[None, :] + (1.0 - GAMMA_GRID)[:, None] * glob[None, :]
    mix = mix - mix.mean(axis=1, keepdims=True)
    var_mix = np.sum(mix * mix, axis=1)
    cov = mix @ dy
    rho_sq = np.zeros(GAMMA_GRID.shape[0])
    ok = var_mix > 0.0
    rho_sq[ok] = (cov[ok] * cov[ok]) / (var_mix[ok] * var_y)
    return float(GAMMA_GRID[int(np.argmax(rho_sq))])


def areppi_estimate(
    task: TaskDataset,
    study: MultiTaskStudy,
    k_folds: int = 5,
    power_tune: Optional[bool] = None,
    clip: bool = True,
    key: StreamKey = None,
    global_fit: Optional[IsotonicFit] = None,
) -> EstimateResult:
    """Adaptive recalibration: per fold, blend the cross-task global fit
    with a task-local fit, weighting by held-out predictive correlation.

    The labeled set is split into folds A and B. Within each fold,
    K-fold out-of-fold predictions estimate how well a local fit would
    generalize; the blend weight gamma maximizes squared correlation
    with the outcomes, the local fit is then refit on the whole fold,
    and each fold is scored by the other fold's blended recalibrator.
    With untrustworthy neighbors gamma goes to 1 and this collapses to
    the two-fold local method; with a strong global fit gamma goes to 0.
    """
    if key is None:
        raise TooSmallError("areppi_estimate requires a StreamKey")
    y_l, _, labeled_idx = _labeled_view(task, Method.AREPPI)
    if power_tune is None:
        power_tune = default_power_tune(Method.AREPPI, task.n_labeled)
    if k_folds < 2:
        raise BadKError(f"k_folds={k_folds} must be >= 2")
    glob = global_fit if global_fit is not None else fit_global_recalibrator(study, task.task_id)

    gen_split = key.replace(purpose=Purpose.FOLD_SPLIT).stream()
    idx_a, idx_b = _split_two_folds(gen_split, labeled_idx)
    gen_kfold = key.replace(purpose=Purpose.KFOLD).stream()

    adapted = []
    for fold_idx in (idx_a, idx_b):
        x_f = task.y_hat[fold_idx]
        y_f = task.y[fold_idx]
        k_eff = min(int(k_folds), fold_idx.shape[0])
        assign = _kfold_assignments(gen_kfold, fold_idx.shape[0], k_eff)
        oof = np.empty(fold_idx.shape[0])
        for j in range(k_eff):
            held = assign == j
            fit_j = pava_fit(x_f[~held], y_f[~held])
            oof[held] = fit_j.predict_many(x_f[held])
        gamma = _best_gamma(oof, glob.predict_many(x_f), y_f)
        adapted.append(MixtureRecalibrator(gamma, pava_fit(x_f, y_f), glob))
    ada_a, ada_b = adapted

    s_full = 0.5 * (ada_a.predict_many(task.y_hat) + ada_b.predict_many(task.y_hat))
    s_full[idx_a] = ada_b.predict_many(task.y_hat[idx_a])
    s_full[idx_b] = ada_a.predict_many(task.y_hat[idx_b])
    return _finish(Method.AREPPI, task, s_full, power_tune, clip)
