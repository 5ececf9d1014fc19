"""Exact finite-population variance theory for rectified mean estimators.

Setting: a population of N items with outcomes Y and a deterministic
surrogate score s per item; a label set of size n drawn by simple random
sampling without replacement; the estimator

    theta_hat(lambda) = mean_L(Y) + lambda * (mean_N(s) - mean_L(s)).

Under that design the estimator is unbiased for the population mean at
every fixed lambda, and its exact variance is

    V(s, lambda) = (1/n) * (1 - (n-1)/(N-1))
                   * (var_N(Y) - 2*lambda*cov_N(Y, s) + lambda^2*var_N(s)),

minimized at lambda* = cov_N(Y, s) / var_N(s) with minimum

    V*(s) = (1/n) * (1 - n/N) * S_Y^2 * (1 - rho_N^2(Y, s)),

where S_Y^2 is the divisor-(N-1) variance and rho_N^2 the squared
population correlation. The two finite-population-correction forms are
the same number; variance_functional computes the first, oracle_variance
the second, and the test suite pins their agreement.

brute_force_estimator_law needs no theory at all: it enumerates every
size-n subset and averages, which is what makes it an oracle.
"""
from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from .data import finite_pop_cov, population_moments
from .errors import (
    BadSampleSizeError,
    DegenerateOutcomeError,
    DegenerateSurrogateError,
    LengthMismatchError,
    TooLargeToEnumerateError,
    TooSmallError,
)
from .recalibration import conditional_mean_values

__all__ = [
    "VarianceReport",
    "variance_functional",
    "lambda_star",
    "oracle_variance",
    "max_gain",
    "superpop_lambda_star",
    "superpop_variance",
    "brute_force_estimator_law",
    "ENUMERATION_GUARD",
]

ENUMERATION_GUARD = 1_000_000


@dataclasses.dataclass(frozen=True)
class VarianceReport:
    """Variance at the optimal coefficient, both ways, plus ingredients."""

    v_of_lambda: float
    lambda_star: float
    v_star: float
    fpc: float
    rho_sq: float


def _paired(y, s):
    y_arr = np.asarray(y, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    if y_arr.shape != s_arr.shape or y_arr.ndim != 1:
        raise LengthMismatchError("y and s must be 1-D vectors of equal length")
    if y_arr.shape[0] < 2:
        raise TooSmallError("population must contain at least 2 items")
    return y_arr, s_arr


def _check_n(n: int, big_n: int) -> int:
    n = int(n)
    if not 1 <= n <= big_n:
        raise BadSampleSizeError(f"n={n} not in [1, {big_n}]")
    return n


def variance_functional(y, s, n: int, lam: float) -> float:
    """Exact design variance V(s, lambda) at any real lambda."""
    y_arr, s_arr = _paired(y, s)
    big_n = y_arr.shape[0]
    n = _check_n(n, big_n)
    var_y = population_moments(y_arr).var_n
    var_s = population_moments(s_arr).var_n
    cov_ys = finite_pop_cov(y_arr, s_arr)
    factor = (1.0 / n) * (1.0 - (n - 1.0) / (big_n - 1.0))
    return factor * (var_y - 2.0 * lam * cov_ys + lam * lam * var_s)


def lambda_star(y, s) -> float:
    """Variance-minimizing coefficient cov_N(Y,s) / var_N(s); unclipped."""
    y_arr, s_arr = _paired(y, s)
    var_s = population_moments(s_arr).var_n
    if var_s == 0.0:
        raise DegenerateSurrogateError("surrogate is constant; lambda* undefined")
    return finite_pop_cov(y_arr, s_arr) / var_s


def oracle_variance(y, s, n: int) -> VarianceReport:
    """V at the optimal lambda, via the correlation form, plus ingredients.

    A constant surrogate degrades gracefully: rho^2 = 0, lambda* = 0,
    and V* is the classical sample-mean variance.
    """
    y_arr, s_arr = _paired(y, s)
    big_n = y_arr.shape[0]
    n = _check_n(n, big_n)
    mom_y = population_moments(y_arr)
    if mom_y.var_n == 0.0:
        raise DegenerateOutcomeError("outcome is constant; correlation undefined")
    var_s = population_moments(s_arr).var_n
    fpc = (1.0 / n) * (1.0 - n / big_n)
    if var_s == 0.0:
        rho_sq = 0.0
        lam = 0.0
    else:
        cov_ys = finite_pop_cov(y_arr, s_arr)
        rho_sq = (cov_ys * cov_ys) / (mom_y.var_n * var_s)
        lam = cov_ys / var_s
    v_star = fpc * mom_y.var_sample * (1.0 - rho_sq)
    v_at_lam = variance_functional(y_arr, s_arr, n, lam)
    return VarianceReport(
        v_of_lambda=v_at_lam, lambda_star=lam, v_star=v_star, fpc=fpc, rho_sq=rho_sq
    )


def max_gain(y, y_hat, n: int) -> float:
    """Variance headroom left in the surrogate: V*(raw) - V*(ideal).

    The ideal recalibration replaces each score by the mean outcome of
    the items sharing that exact score. The gain is zero precisely when
    that map is already affine on the observed support.
    """
    y_arr, s_arr = _paired(y, y_hat)
    big_n = y_arr.shape[0]
    n = _check_n(n, big_n)
    mom_y = population_moments(y_arr)
    if mom_y.var_n == 0.0:
        raise DegenerateOutcomeError("outcome is constant; gain undefined")
    m_vals = conditional_mean_values(s_arr, y_arr)
    r_sq = population_moments(m_vals).var_n / mom_y.var_n if big_n else 0.0
    var_s = population_moments(s_arr).var_n
    if var_s == 0.0:
        rho_sq = 0.0
    else:
        cov = finite_pop_cov(y_arr, s_arr)
        rho_sq = cov * cov / (mom_y.var_n * var_s)
    fpc = (1.0 / n) * (1.0 - n / big_n)
    gain = fpc * mom_y.var_sample * (r_sq - rho_sq)
    # provably non-negative; clamp rounding noise
    return gain if gain > 0.0 else 0.0


def superpop_lambda_star(cov_ys: float, var_s: float, n: int, n_unlabeled: int) -> float:
    """Optimal coefficient when items are iid draws: shrinks toward zero
    as the unlabeled pool shrinks, approaches cov/var as it grows."""
    if var_s <= 0.0:
        raise DegenerateSurrogateError("var_s must be positive")
    n = int(n)
    big_n = int(n_unlabeled)
    if n < 1 or big_n < 1:
        raise BadSampleSizeError("sample sizes must be >= 1")
    return (big_n / (n + big_n)) * (cov_ys / var_s)


def superpop_variance(
    var_y: float, cov_ys: float, var_s: float, n: int, n_unlabeled: int, lam: float
) -> float:
    """Estimator variance under iid sampling with an independent unlabeled pool."""
    if var_y < 0.0 or var_s < 0.0:
        raise DegenerateSurrogateError("variances must be non-negative")
    n = int(n)
    big_n = int(n_unlabeled)
    if n < 1 or big_n < 1:
        raise BadSampleSizeError("sample sizes must be >= 1")
    return var_y / n - 2.0 * lam * cov_ys / n + lam * lam * (1.0 / n + 1.0 / big_n) * var_s


def brute_force_estimator_law(y, s, n: int, lam: float) -> tuple[float, float]:
    """Exact mean and variance of theta_hat(lambda) over all size-n subsets.

    Enumerates every one of the C(N, n) equally likely label sets; no
    variance formula involved. Guarded to N <= 16 and C(N, n) <= 1e6.
    """
    y_arr, s_arr = _paired(y, s)
    big_n = y_arr.shape[0]
    n = _check_n(n, big_n)
    if big_n > 16 or math.comb(big_n, n) > ENUMERATION_GUARD:
        raise TooLargeToEnumerateError(
            f"C({big_n}, {n}) subsets exceed the enumeration guard"
        )
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(big_n), n)),
        dtype=np.intp,
    ).reshape(-1, n)
    y_bar = y_arr[combos].mean(axis=1)
    s_bar = s_arr[combos].mean(axis=1)
    theta = y_bar + lam * (float(np.mean(s_arr)) - s_bar)
    mean = float(np.mean(theta))
    dev = theta - mean
    variance = float(np.sum(dev * dev)) / theta.shape[0]
    return mean, variance
