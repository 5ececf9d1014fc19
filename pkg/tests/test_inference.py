import dataclasses
import math

import numpy as np
import pytest
import scipy.stats

from mtppi.data import make_task_dataset
from mtppi.errors import (
    BadAlphaError,
    BadDofError,
    BadProbabilityError,
    BadSampleSizeError,
    LengthMismatchError,
    ResidualMismatchError,
    TooFewResidualsError,
)
from mtppi.estimators import classical_estimate, ppi_estimate, ppipp_estimate
from mtppi.inference import (
    regularized_incomplete_beta,
    residuals_for_method,
    student_t_quantile,
    wald_ci,
)


def test_incomplete_beta_against_scipy():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a = float(rng.uniform(0.3, 50.0))
        b = float(rng.uniform(0.3, 50.0))
        x = float(rng.uniform(0.0, 1.0))
        ours = regularized_incomplete_beta(a, b, x)
        ref = scipy.stats.beta.cdf(x, a, b)
        assert abs(ours - ref) < 1e-12 * max(1.0, abs(ref)) + 1e-14


def test_incomplete_beta_edges():
    assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
    assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


def test_t_quantile_against_scipy():
    ps = [0.005, 0.025, 0.1, 0.25, 0.5, 0.6, 0.75, 0.9, 0.95, 0.975, 0.995, 0.9999]
    for dof in (1, 2, 3, 5, 9, 10, 30, 100, 1000, 10**7):
        for p in ps:
            ours = student_t_quantile(p, dof)
            ref = float(scipy.stats.t.ppf(p, dof))
            assert abs(ours - ref) <= 1e-9 * max(1.0, abs(ref)), (p, dof, ours, ref)


def test_t_quantile_frozen_references():
    # dof=1 is the Cauchy quantile tan(pi * 0.475)
    assert abs(student_t_quantile(0.975, 1) - 12.70620473617471) < 1e-8
    assert abs(student_t_quantile(0.975, 9) - 2.2621571627409915) < 1e-10
    assert abs(student_t_quantile(0.975, 10**7) - 1.959964) < 1e-4


def test_t_quantile_symmetry_and_center():
    for dof in (1, 4, 17):
        assert student_t_quantile(0.5, dof) == 0.0
        q = student_t_quantile(0.975, dof)
        assert abs(student_t_quantile(0.025, dof) + q) < 1e-12 * max(1.0, abs(q))


def test_t_quantile_monotone_in_p():
    ps = np.linspace(0.05, 0.95, 19)
    for dof in (2, 8):
        qs = [student_t_quantile(float(p), dof) for p in ps]
        assert all(q1 < q2 for q1, q2 in zip(qs, qs[1:]))


def test_t_quantile_decreases_with_dof():
    qs = [student_t_quantile(0.975, d) for d in (1, 2, 5, 20, 200)]
    assert all(q1 > q2 for q1, q2 in zip(qs, qs[1:]))


def test_t_quantile_validation():
    with pytest.raises(BadProbabilityError):
        student_t_quantile(0.0, 5)
    with pytest.raises(BadProbabilityError):
        student_t_quantile(1.0, 5)
    with pytest.raises(BadDofError):
        student_t_quantile(0.5, 0)


def test_wald_ci_hand_case():
    # residuals [1,2,3,4], n=4 of N=8: se = sqrt((1/4)(1/2)(5/3)) = sqrt(5/24)
    ci = wald_ci(0.0, [1.0, 2.0, 3.0, 4.0], n=4, big_n=8)
    se_expected = math.sqrt(5.0 / 24.0)
    assert abs(ci.se - se_expected) < 1e-12
    assert ci.dof == 3
    assert ci.level == 0.95
    half = student_t_quantile(0.975, 3) * se_expected
    assert abs(ci.upper - half) < 1e-12
    assert abs(ci.lower + half) < 1e-12
    assert abs(ci.width - 2 * half) < 1e-12
    assert abs(half - 1.4525813578773825) < 1e-9


def test_wald_ci_centered_on_estimate():
    ci = wald_ci(10.0, [1.0, 2.0, 3.0, 4.0], n=4, big_n=8)
    assert abs((ci.upper + ci.lower) / 2 - 10.0) < 1e-12


def test_wald_ci_census_collapses():
    ci = wald_ci(2.5, [1.0, 2.0, 3.0, 4.0], n=4, big_n=4)
    assert ci.se == 0.0
    assert ci.lower == ci.upper == 2.5


def test_wald_ci_constant_residuals():
    ci = wald_ci(1.0, [2.0, 2.0, 2.0], n=3, big_n=9)
    assert ci.se == 0.0
    assert ci.width == 0.0


def test_wald_ci_alpha_changes_width():
    r = [1.0, 2.0, 3.0, 4.0, 2.0]
    narrow = wald_ci(0.0, r, 5, 50, alpha=0.1)
    wide = wald_ci(0.0, r, 5, 50, alpha=0.01)
    assert wide.width > narrow.width
    assert narrow.level == 0.9


def test_wald_ci_validation():
    r = [1.0, 2.0, 3.0]
    with pytest.raises(LengthMismatchError):
        wald_ci(0.0, r, n=4, big_n=8)
    with pytest.raises(TooFewResidualsError):
        wald_ci(0.0, [1.0], n=1, big_n=8)
    with pytest.raises(BadSampleSizeError):
        wald_ci(0.0, r, n=3, big_n=2)
    with pytest.raises(BadAlphaError):
        wald_ci(0.0, r, n=3, big_n=8, alpha=0.0)
    with pytest.raises(BadAlphaError):
        wald_ci(0.0, r, n=3, big_n=8, alpha=1.0)


def _toy_task():
    rng = np.random.default_rng(2)
    y_hat = rng.uniform(size=12)
    y = y_hat**2 + rng.normal(scale=0.05, size=12)
    labeled = np.zeros(12, dtype=bool)
    labeled[:6] = True
    return make_task_dataset("t", y_hat, y, labeled=labeled)


def test_residual_audit_passes_for_real_estimates():
    task = _toy_task()
    for result in (classical_estimate(task), ppi_estimate(task), ppipp_estimate(task)):
        r = residuals_for_method(result, task)
        assert np.array_equal(r, result.residuals)


def test_residual_audit_catches_corruption():
    task = _toy_task()
    result = ppi_estimate(task)
    bad = dataclasses.replace(result, residuals=result.residuals + 1e-6)
    with pytest.raises(ResidualMismatchError):
        residuals_for_method(bad, task)
