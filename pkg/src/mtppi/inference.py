"""Wald intervals with finite-population correction and a Student-t
quantile built from scratch.

The interval recipe is the same for every estimator: take the method's
labeled-set residuals r_i, form the divisor-(n-1) variance S_r^2, set

    se = sqrt((1/n) * (1 - n/N) * S_r^2),

and use the t quantile with n - 1 degrees of freedom. What changes
between methods is only what the residuals are; residuals_for_method
re-derives them from an estimate and audits the stored vector.

The t quantile inverts the regularized incomplete beta function: for
t >= 0, the two-sided tail mass is I_x(nu/2, 1/2) at x = nu/(nu + t^2).
The incomplete beta uses a continued fraction (modified Lentz); the
inversion is Newton in x with a bisection bracket, so it cannot escape
(0, 1) and converges for dof from 1 to 1e7 and beyond.
"""
from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np

from .errors import (
    BadAlphaError,
    BadDofError,
    BadProbabilityError,
    BadSampleSizeError,
    LengthMismatchError,
    MtppiError,
    ResidualMismatchError,
    TooFewResidualsError,
)

__all__ = [
    "ConfidenceInterval",
    "student_t_quantile",
    "wald_ci",
    "residuals_for_method",
]


@dataclasses.dataclass(frozen=True)
class ConfidenceInterval:
    level: float
    lower: float
    upper: float
    se: float
    dof: int

    @property
    def width(self) -> float:
        return self.upper - self.lower


_CF_MAX_ITER = 20_000
_CF_EPS = 3e-16
_CF_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise MtppiError("incomplete beta continued fraction failed to converge")


def _lgamma_diff(a: float, b: float) -> float:
    """lgamma(a + b) - lgamma(b), stable when b is huge.

    The naive difference of two lgamma calls loses eight digits around
    b = 1e7 (each term is ~1e8 with ulp-level relative error). For large
    b the Stirling expansions of the two terms are regrouped so nothing
    big is ever subtracted.
    """
    if b < 1e4:
        return math.lgamma(a + b) - math.lgamma(b)
    c = a + b
    corr12 = -a / (12.0 * b * c)
    corr360 = a * (3.0 * b * b + 3.0 * a * b + a * a) / (360.0 * b**3 * c**3)
    return (b - 0.5) * math.log1p(a / b) + a * math.log(c) - a + corr12 + corr360


def _ln_beta(a: float, b: float) -> float:
    """log B(a, b), via the stable lgamma difference."""
    if a <= b:
        return math.lgamma(a) - _lgamma_diff(a, b)
    return math.lgamma(b) - _lgamma_diff(b, a)


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = a * math.log(x) + b * math.log1p(-x) - _ln_beta(a, b)
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _inv_regularized_incomplete_beta(a: float, b: float, target: float) -> float:
    """Solve I_x(a, b) = target for x; Newton inside a shrinking bracket."""
    lo, hi = 0.0, 1.0
    x = 0.5
    ln_beta = _ln_beta(a, b)
    for _ in range(200):
        f = regularized_incomplete_beta(a, b, x) - target
        if f == 0.0:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        x_new = None
        if 0.0 < x < 1.0:
            ln_pdf = (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - ln_beta
            if ln_pdf < 700.0:
                pdf = math.exp(ln_pdf)
                if pdf > 0.0 and math.isfinite(pdf):
                    x_new = x - f / pdf
        if x_new is None or not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-16 * max(abs(x), 1e-12):
            return x_new
        x = x_new
    return x


@functools.lru_cache(maxsize=4096)
def _t_quantile_cached(p: float, dof: int) -> float:
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -_t_quantile_cached(1.0 - p, dof)
    tail = 2.0 * (1.0 - p)
    half_dof = 0.5 * dof
    # Solve in whichever orientation puts the root at or below 1/2: near
    # the other endpoint a double cannot even represent the root closely
    # enough for 1e-9 relative accuracy in t.
    if regularized_incomplete_beta(half_dof, 0.5, 0.5) >= tail:
        x = _inv_regularized_incomplete_beta(half_dof, 0.5, tail)
        return math.sqrt(dof * (1.0 - x) / x)
    u = _inv_regularized_incomplete_beta(0.5, half_dof, 1.0 - tail)
    return math.sqrt(dof * u / (1.0 - u))


def student_t_quantile(p: float, dof: int) -> float:
    """Quantile of Student's t with ``dof`` degrees of freedom.

    Symmetric around zero; approaches the normal quantile as dof grows.
    """
    p = float(p)
    if not 0.0 < p < 1.0 or not math.isfinite(p):
        raise BadProbabilityError(f"p={p} not in (0, 1)")
    if int(dof) != dof or dof < 1:
        raise BadDofError(f"dof={dof} must be a positive integer")
    return _t_quantile_cached(p, int(dof))


def wald_ci(theta_hat: float, residuals, n: int, big_n: int, alpha: float = 0.05) -> ConfidenceInterval:
    """Two-sided (1 - alpha) interval from a method's labeled residuals."""
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 1:
        raise TooFewResidualsError("residuals must be a 1-D vector")
    n = int(n)
    big_n = int(big_n)
    if r.shape[0] != n:
        raise LengthMismatchError(f"{r.shape[0]} residuals but n={n}")
    if n < 2:
        raise TooFewResidualsError("interval needs at least 2 residuals")
    if not 2 <= n <= big_n:
        raise BadSampleSizeError(f"n={n} not in [2, N={big_n}]")
    if not 0.0 < alpha < 1.0:
        raise BadAlphaError(f"alpha={alpha} not in (0, 1)")
    mean_r = float(np.mean(r))
    dev = r - mean_r
    s_sq = float(np.sum(dev * dev)) / (n - 1)
    se = math.sqrt((1.0 / n) * (1.0 - n / big_n) * s_sq)
    dof = n - 1
    t = student_t_quantile(1.0 - alpha / 2.0, dof)
    half = t * se
    return ConfidenceInterval(
        level=1.0 - alpha,
        lower=float(theta_hat) - half,
        upper=float(theta_hat) + half,
        se=se,
        dof=dof,
    )


def residuals_for_method(result, task) -> np.ndarray:
    """Re-derive a method's residuals from its estimate and audit them.

    Every rectified method has residual r_i = Y_i - lambda * s_i on the
    labeled set, with s the (re)calibrated surrogate it actually used;
    the classical method has r_i = Y_i. Raises ResidualMismatchError if
    the stored vector disagrees.
    """
    y_l = task.y_labeled
    if result.method.value == "classical":
        expected = y_l.copy()
    else:
        if result.s_values_full is None:
            raise ResidualMismatchError(
                f"{result.method.value} result lacks s_values_full; cannot audit"
            )
        s_l = np.asarray(result.s_values_full, dtype=float)[task.labeled]
        expected = y_l - result.lambda_used * s_l
    stored = np.asarray(result.residuals, dtype=float)
    if stored.shape != expected.shape or not np.allclose(
        stored, expected, rtol=0.0, atol=1e-12
    ):
        raise ResidualMismatchError(
            f"stored residuals disagree with the {result.method.value} definition"
        )
    return expected
