"""Self-contained verification of the variance theory against oracles.

Each check pits a closed-form claim against an independent computation
that does not share code with it: subset enumeration for the estimator
law, random lookup tables for the orthogonality and dominance claims,
exhaustive search over monotone block partitions for the isotonic fit.
The CLI's verify subcommand runs all of them and fails loudly if any
deviation exceeds its tolerance.

The module-level _lambda_star indirection exists so a test can inject a
corrupted coefficient and confirm the suite actually catches it.
"""
from __future__ import annotations

import dataclasses
import itertools

import numpy as np

from . import variance
from .data import finite_pop_cov, population_moments
from .inference import student_t_quantile
from .recalibration import conditional_mean_values, pava_fit
from .variance import (
    brute_force_estimator_law,
    max_gain,
    oracle_variance,
    variance_functional,
)

__all__ = ["PropertyResult", "run_all", "ALL_CHECKS"]

# test seam: checks route lambda* through this name
_lambda_star = variance.lambda_star


@dataclasses.dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""


def _random_population(rng: np.random.Generator, discrete: bool = False):
    big_n = int(rng.integers(4, 11))
    if discrete:
        support = np.sort(rng.uniform(0.0, 1.0, size=3))
        y_hat = support[rng.integers(0, 3, size=big_n)]
        while np.unique(y_hat).shape[0] < 2:
            y_hat = support[rng.integers(0, 3, size=big_n)]
    else:
        y_hat = rng.uniform(0.0, 1.0, size=big_n)
    y = rng.normal(0.0, 1.0, size=big_n) + 2.0 * y_hat
    return y, y_hat


def check_estimator_law(seed: int = 0, n_populations: int = 60) -> PropertyResult:
    """Enumerated subset mean/variance vs unbiasedness + closed form."""
    rng = np.random.default_rng(seed)
    tol = 1e-10
    worst = 0.0
    for _ in range(n_populations):
        y, s = _random_population(rng)
        big_n = y.shape[0]
        theta = float(np.mean(y))
        for n in range(1, big_n + 1):
            for lam in (-1.0, 0.0, 0.5, 1.0, 2.0):
                mean, var = brute_force_estimator_law(y, s, n, lam)
                worst = max(worst, abs(mean - theta))
                worst = max(worst, abs(var - variance_functional(y, s, n, lam)))
    return PropertyResult("estimator_law_vs_enumeration", worst <= tol, worst, tol)


def check_optimal_lambda(seed: int = 1, n_populations: int = 60) -> PropertyResult:
    """lambda* beats a grid of other coefficients; both FPC forms agree."""
    rng = np.random.default_rng(seed)
    tol = 1e-10
    worst = 0.0
    for _ in range(n_populations):
        y, s = _random_population(rng)
        big_n = y.shape[0]
        n = int(rng.integers(1, big_n + 1))
        lam_opt = _lambda_star(y, s)
        report = oracle_variance(y, s, n)
        worst = max(worst, abs(report.lambda_star - lam_opt))
        worst = max(worst, abs(report.v_of_lambda - report.v_star))
        v_min = variance_functional(y, s, n, lam_opt)
        for lam in np.linspace(lam_opt - 2.0, lam_opt + 2.0, 9):
            gap = v_min - variance_functional(y, s, n, float(lam))
            worst = max(worst, max(gap, 0.0))
    return PropertyResult("optimal_lambda_minimizes", worst <= tol, worst, tol)


def check_affine_invariance(seed: int = 2, n_populations: int = 60) -> PropertyResult:
    """Rescaling the surrogate changes lambda*, never the optimal variance."""
    rng = np.random.default_rng(seed)
    tol = 1e-10
    worst = 0.0
    for _ in range(n_populations):
        y, s = _random_population(rng)
        big_n = y.shape[0]
        n = int(rng.integers(1, big_n + 1))
        a = float(rng.uniform(0.2, 3.0)) * (1.0 if rng.random() < 0.5 else -1.0)
        b = float(rng.normal(0.0, 2.0))
        base = oracle_variance(y, s, n)
        scaled = oracle_variance(y, a * s + b, n)
        worst = max(worst, abs(scaled.v_star - base.v_star))
        worst = max(worst, abs(_lambda_star(y, a * s + b) - _lambda_star(y, s) / a))
    return PropertyResult("affine_invariance", worst <= tol, worst, tol)


def check_residual_orthogonality(seed: int = 3, n_populations: int = 20) -> PropertyResult:
    """Y - m(Yhat) is uncorrelated with every function of Yhat."""
    rng = np.random.default_rng(seed)
    tol = 1e-10
    worst = 0.0
    for _ in range(n_populations):
        y, y_hat = _random_population(rng, discrete=True)
        resid = y - conditional_mean_values(y_hat, y)
        support = np.unique(y_hat)
        for _ in range(100):
            table = rng.normal(0.0, 1.0, size=support.shape[0])
            phi = table[np.searchsorted(support, y_hat)]
            worst = max(worst, abs(finite_pop_cov(resid, phi)))
    return PropertyResult("residual_orthogonality", worst <= tol, worst, tol)


def check_correlation_dominance(seed: int = 4, n_populations: int = 20) -> PropertyResult:
    """No recalibration beats the conditional mean; max_gain matches the
    V*(raw) - V*(ideal) difference and vanishes for affine relations."""
    rng = np.random.default_rng(seed)
    tol = 1e-10
    worst = 0.0
    for _ in range(n_populations):
        y, y_hat = _random_population(rng, discrete=True)
        mom_y = population_moments(y)
        m_vals = conditional_mean_values(y_hat, y)
        r_sq = population_moments(m_vals).var_n / mom_y.var_n
        support = np.unique(y_hat)
        for _ in range(100):
            table = rng.normal(0.0, 1.0, size=support.shape[0])
            phi = table[np.searchsorted(support, y_hat)]
            var_phi = population_moments(phi).var_n
            if var_phi == 0.0:
                continue
            cov = finite_pop_cov(y, phi)
            rho_sq = cov * cov / (mom_y.var_n * var_phi)
            worst = max(worst, max(rho_sq - r_sq, 0.0))
        n = int(rng.integers(1, y.shape[0] + 1))
        gain = max_gain(y, y_hat, n)
        v_raw = oracle_variance(y, y_hat, n).v_star
        v_ideal = oracle_variance(y, m_vals, n).v_star
        worst = max(worst, abs(gain - (v_raw - v_ideal)))
        # affine case: zero headroom
        affine = max_gain(3.0 * y_hat - 1.0, y_hat, n)
        worst = max(worst, abs(affine))
    return PropertyResult("correlation_dominance", worst <= tol, worst, tol)


def exhaustive_monotone_sse(y: np.ndarray) -> float:
    """Minimum squared error over all monotone step fits, by enumerating
    contiguous block partitions with non-decreasing block means."""
    n = y.shape[0]
    best = np.inf
    for cuts in range(1 << (n - 1)):
        starts = [0] + [i + 1 for i in range(n - 1) if cuts >> i & 1]
        ends = starts[1:] + [n]
        means = [float(np.mean(y[a:b])) for a, b in zip(starts, ends)]
        if any(means[i] > means[i + 1] for i in range(len(means) - 1)):
            continue
        sse = sum(
            float(np.sum((y[a:b] - m) ** 2)) for a, b, m in zip(starts, ends, means)
        )
        best = min(best, sse)
    return best


def check_pava_optimality(seed: int = 5, n_instances: int = 300) -> PropertyResult:
    """PAVA's squared error equals the exhaustive monotone minimum."""
    rng = np.random.default_rng(seed)
    tol = 1e-9
    worst = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(1, 9))
        y = rng.integers(0, 4, size=n).astype(float)
        x = np.arange(n, dtype=float)
        fit = pava_fit(x, y)
        fitted = fit.predict_many(x)
        sse = float(np.sum((y - fitted) ** 2))
        worst = max(worst, abs(sse - exhaustive_monotone_sse(y)))
    return PropertyResult("pava_vs_exhaustive", worst <= tol, worst, tol)


def check_t_quantile() -> PropertyResult:
    """Pinned textbook values plus symmetry and the normal limit."""
    tol = 1e-4
    worst = max(
        abs(student_t_quantile(0.975, 1) - 12.70620473617471),
        abs(student_t_quantile(0.975, 9) - 2.2621571627409915) * 10.0,
        abs(student_t_quantile(0.025, 9) + student_t_quantile(0.975, 9)),
        abs(student_t_quantile(0.975, 10_000_000) - 1.959964),
    )
    return PropertyResult("t_quantile_reference", worst <= tol, worst, tol)


ALL_CHECKS = (
    check_estimator_law,
    check_optimal_lambda,
    check_affine_invariance,
    check_residual_orthogonality,
    check_correlation_dominance,
    check_pava_optimality,
    check_t_quantile,
)


def run_all(seed: int = 0) -> list[PropertyResult]:
    """Run every property check, offsetting the seed per check."""
    results = []
    for i, check in enumerate(ALL_CHECKS):
        if check is check_t_quantile:
            results.append(check())
        else:
            results.append(check(seed + i))
    return results
