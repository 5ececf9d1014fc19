import numpy as np
import pytest

from mtppi.data import MultiTaskStudy, make_task_dataset
from mtppi.errors import BadKError, EmptyLabeledSetError, TooFewLabelsError, TooSmallError
from mtppi.estimators import (
    MIN_LABELED,
    Method,
    _best_gamma,
    areppi_estimate,
    classical_estimate,
    default_power_tune,
    greppi_estimate,
    plug_in_lambda,
    ppi_estimate,
    ppipp_estimate,
    rectified_estimate,
    reppi_two_fold_estimate,
)
from mtppi.recalibration import fit_global_recalibrator
from mtppi.sampling import Purpose, StreamKey, srs_without_replacement


def task_with_mask(y_hat, y, mask, task_id="t"):
    return make_task_dataset(task_id, y_hat, y, labeled=mask)


def synthetic_task(rng, big_n=40, n=10, curve=2.0, noise=0.05, task_id="t"):
    x = rng.uniform(size=big_n)
    y = x**curve + rng.normal(scale=noise, size=big_n)
    mask = np.zeros(big_n, dtype=bool)
    mask[rng.choice(big_n, size=n, replace=False)] = True
    return task_with_mask(x, y, mask, task_id)


def test_rectified_estimate_hand_case():
    theta = rectified_estimate([1.0, 2.0], [0.5, 1.5], s_full_mean=2.0, lam=1.0)
    assert theta == 2.5
    assert rectified_estimate([1.0, 2.0], [0.5, 1.5], 2.0, 0.0) == 1.5
    with pytest.raises(EmptyLabeledSetError):
        rectified_estimate([], [], 0.0, 1.0)


def test_plug_in_lambda_hand_cases():
    y = np.array([0.0, 1.0, 2.0, 3.0])
    assert abs(plug_in_lambda(y, 2.0 * y) - 0.5) < 1e-15
    # unclipped slope of 2 gets clipped to 1
    assert plug_in_lambda(y, 0.5 * y) == 1.0
    assert abs(plug_in_lambda(y, 0.5 * y, clip=False) - 2.0) < 1e-12
    # anti-correlated surrogate clips to 0
    assert plug_in_lambda(y, -y) == 0.0
    # constant surrogate is harmless
    assert plug_in_lambda(y, np.ones(4)) == 0.0
    with pytest.raises(TooSmallError):
        plug_in_lambda([1.0], [1.0])


def test_default_power_tune_policy():
    assert not default_power_tune(Method.CLASSICAL, 100)
    assert not default_power_tune(Method.PPI, 100)
    assert default_power_tune(Method.PPI_PP, 2)
    assert default_power_tune(Method.REPPI2, 4)
    assert not default_power_tune(Method.GREPPI, 40)
    assert default_power_tune(Method.GREPPI, 41)
    assert not default_power_tune(Method.AREPPI, 40)
    assert default_power_tune(Method.AREPPI, 41)


def test_classical_estimate():
    task = task_with_mask([0.0, 0.0, 0.0], [1.0, 2.0, 5.0], [True, True, False])
    res = classical_estimate(task)
    assert res.theta_hat == 1.5
    assert res.lambda_used == 0.0
    assert res.s_values_full is None
    assert not res.power_tuned
    assert np.array_equal(res.residuals, [1.0, 2.0])


def test_ppi_estimate_hand_case():
    # labeled mean 1, score means: labeled 2, full 2.5 -> theta = 1 + 0.5
    task = task_with_mask([1.0, 3.0, 2.0, 4.0], [0.0, 2.0, None, None],
                          [True, True, False, False])
    res = ppi_estimate(task)
    assert abs(res.theta_hat - 1.5) < 1e-15
    assert res.lambda_used == 1.0
    assert np.array_equal(res.residuals, [-1.0, -1.0])


def test_ppi_perfect_scores_zero_residuals():
    y = np.array([0.3, 0.9, 0.1, 0.7])
    task = task_with_mask(y, y, [True, False, True, False])
    res = ppi_estimate(task)
    assert np.all(res.residuals == 0.0)
    assert abs(res.theta_hat - y.mean()) < 1e-15


def test_ppipp_lambda_zero_collapses_to_classical():
    # anti-correlated scores: clipped lambda 0 reproduces the labeled mean
    task = task_with_mask([3.0, 2.0, 1.0, 0.0], [0.0, 1.0, 2.0, None],
                          [True, True, True, False])
    res = ppipp_estimate(task)
    assert res.lambda_used == 0.0
    assert res.theta_hat == classical_estimate(task).theta_hat
    assert np.array_equal(res.residuals, task.y_labeled)


def test_ppipp_affine_invariance_unclipped():
    rng = np.random.default_rng(31)
    task = synthetic_task(rng)
    base = ppipp_estimate(task, clip=False)
    for a, b in ((2.0, -1.0), (-0.7, 3.0), (0.01, 100.0)):
        moved = task_with_mask(a * task.y_hat + b, task.y, task.labeled)
        res = ppipp_estimate(moved, clip=False)
        assert abs(res.theta_hat - base.theta_hat) < 1e-10 * max(1.0, abs(base.theta_hat))
        assert abs(res.lambda_used - base.lambda_used / a) < 1e-10


def test_census_is_exact_for_every_method():
    rng = np.random.default_rng(37)
    x = rng.uniform(size=12)
    y = x**2 + rng.normal(scale=0.1, size=12)
    target = task_with_mask(x, y, np.ones(12, dtype=bool), task_id="t0")
    aux = task_with_mask(x, y + 0.05, np.ones(12, dtype=bool), task_id="t1")
    study = MultiTaskStudy((target, aux))
    key = StreamKey(123, 0, 0)
    theta_true = float(np.mean(y))
    results = [
        classical_estimate(target),
        ppi_estimate(target),
        ppipp_estimate(target),
        greppi_estimate(target, study),
        reppi_two_fold_estimate(target, key),
        areppi_estimate(target, study, key=key),
    ]
    for res in results:
        assert res.theta_hat == theta_true, res.method


def test_fixed_lambda_unbiasedness_mc():
    """Classical, ppi, and greppi-with-frozen-recalibrator at lambda=1 are
    finite-sample unbiased; 10,000 label redraws should land within 4 SEs."""
    rng = np.random.default_rng(41)
    big_n, n, reps = 40, 8, 10_000
    x = rng.uniform(size=big_n)
    y = x**2 + rng.normal(scale=0.1, size=big_n)
    theta_true = float(np.mean(y))
    aux_x = rng.uniform(size=60)
    aux_y = aux_x**2 + rng.normal(scale=0.1, size=60)
    aux = task_with_mask(aux_x, aux_y, np.ones(60, dtype=bool), task_id="aux")

    sums = {"classical": 0.0, "ppi": 0.0, "greppi": 0.0}
    sq = {k: 0.0 for k in sums}
    for b in range(reps):
        mask = srs_without_replacement(StreamKey(99, 0, b), big_n, n)
        target = task_with_mask(x, y, mask, task_id="t")
        study = MultiTaskStudy((target, aux))
        for name, res in (
            ("classical", classical_estimate(target)),
            ("ppi", ppi_estimate(target)),
            ("greppi", greppi_estimate(target, study, power_tune=False)),
        ):
            sums[name] += res.theta_hat
            sq[name] += res.theta_hat**2
    for name in sums:
        mean = sums[name] / reps
        var = max(sq[name] / reps - mean**2, 0.0)
        se = np.sqrt(var / reps)
        assert abs(mean - theta_true) < 4 * se, (name, mean, theta_true, se)


def test_greppi_identity_recalibrator_matches_ppi():
    # aux labels lie on the y = y_hat diagonal spanning the target's scores,
    # so the fitted recalibrator is the identity on that range
    rng = np.random.default_rng(43)
    x = rng.uniform(0.1, 0.9, size=20)
    y = x + rng.normal(scale=0.02, size=20)
    mask = np.zeros(20, dtype=bool)
    mask[:6] = True
    target = task_with_mask(x, y, mask, task_id="t0")
    diag = np.linspace(0.0, 1.0, 15)
    aux = task_with_mask(diag, diag, np.ones(15, dtype=bool), task_id="t1")
    study = MultiTaskStudy((target, aux))
    res = greppi_estimate(target, study, power_tune=False)
    ref = ppi_estimate(target)
    assert abs(res.theta_hat - ref.theta_hat) < 1e-12
    assert res.lambda_used == ref.lambda_used == 1.0


def test_greppi_task_order_does_not_matter():
    rng = np.random.default_rng(47)
    tasks = [synthetic_task(rng, task_id=f"t{i}") for i in range(4)]
    study_a = MultiTaskStudy(tuple(tasks))
    study_b = MultiTaskStudy((tasks[0], tasks[3], tasks[1], tasks[2]))
    res_a = greppi_estimate(tasks[0], study_a)
    res_b = greppi_estimate(tasks[0], study_b)
    assert res_a.theta_hat == res_b.theta_hat
    assert np.array_equal(res_a.s_values_full, res_b.s_values_full)


def test_greppi_accepts_precomputed_fit():
    rng = np.random.default_rng(53)
    tasks = [synthetic_task(rng, task_id=f"t{i}") for i in range(3)]
    study = MultiTaskStudy(tuple(tasks))
    fit = fit_global_recalibrator(study, "t0")
    a = greppi_estimate(tasks[0], study)
    b = greppi_estimate(tasks[0], study, global_fit=fit)
    assert a.theta_hat == b.theta_hat


def test_reppi2_deterministic_per_key():
    rng = np.random.default_rng(59)
    task = synthetic_task(rng, n=12)
    key = StreamKey(5, 0, 0)
    a = reppi_two_fold_estimate(task, key)
    b = reppi_two_fold_estimate(task, key)
    assert a.theta_hat == b.theta_hat
    assert np.array_equal(a.s_values_full, b.s_values_full)
    c = reppi_two_fold_estimate(task, StreamKey(5, 0, 1))
    assert c.theta_hat != a.theta_hat


def test_reppi2_purpose_field_is_ignored():
    # the estimator always derives its own fold-split stream from the key
    rng = np.random.default_rng(61)
    task = synthetic_task(rng, n=12)
    a = reppi_two_fold_estimate(task, StreamKey(5, 0, 0, Purpose.LABEL_DRAW))
    b = reppi_two_fold_estimate(task, StreamKey(5, 0, 0, Purpose.KFOLD))
    assert a.theta_hat == b.theta_hat


def test_reppi2_minimum_labeled_set():
    rng = np.random.default_rng(67)
    task = synthetic_task(rng, big_n=20, n=4)
    res = reppi_two_fold_estimate(task, StreamKey(1, 0, 0))
    assert np.isfinite(res.theta_hat)
    small = synthetic_task(rng, big_n=20, n=3)
    with pytest.raises(TooFewLabelsError):
        reppi_two_fold_estimate(small, StreamKey(1, 0, 0))


def test_best_gamma_prefers_informative_side():
    y = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    noise = np.array([0.5, -0.5, 0.5, -0.5, 0.5, -0.5])
    assert _best_gamma(y.copy(), noise, y) == 1.0
    assert _best_gamma(noise, 2.0 * y + 3.0, y) == 0.0


def test_best_gamma_tie_breaks_low():
    y = np.array([0.0, 1.0, 2.0, 3.0])
    same = np.array([0.0, 2.0, 2.0, 4.0])
    # identical candidates: every blend ties, so the smallest gamma wins
    assert _best_gamma(same, same.copy(), y) == 0.0
    # degenerate outcome
    assert _best_gamma(same, same + 1.0, np.ones(4)) == 0.0
    # both candidates constant: no blend has variance
    assert _best_gamma(np.ones(4), np.full(4, 2.0), y) == 0.0


def test_areppi_requires_key_and_valid_k():
    rng = np.random.default_rng(71)
    tasks = [synthetic_task(rng, task_id=f"t{i}") for i in range(2)]
    study = MultiTaskStudy(tuple(tasks))
    with pytest.raises(TooSmallError):
        areppi_estimate(tasks[0], study)
    with pytest.raises(BadKError):
        areppi_estimate(tasks[0], study, k_folds=1, key=StreamKey(1, 0, 0))


def test_areppi_deterministic_and_key_sensitive():
    rng = np.random.default_rng(73)
    tasks = [synthetic_task(rng, n=12, task_id=f"t{i}") for i in range(3)]
    study = MultiTaskStudy(tuple(tasks))
    key = StreamKey(6, 0, 0)
    a = areppi_estimate(tasks[0], study, key=key)
    b = areppi_estimate(tasks[0], study, key=key)
    assert a.theta_hat == b.theta_hat
    assert np.array_equal(a.s_values_full, b.s_values_full)
    c = areppi_estimate(tasks[0], study, key=StreamKey(6, 0, 9))
    assert c.theta_hat != a.theta_hat


def test_areppi_shares_fold_split_with_reppi2():
    """With a useless global fit the blend collapses toward the local fits,
    and since both methods derive their folds from the same key stream the
    adaptive estimate should sit near the two-fold one, far from greppi."""
    rng = np.random.default_rng(79)
    big_n, n = 60, 16
    x = rng.uniform(size=big_n)
    y = x + rng.normal(scale=0.01, size=big_n)  # local signal is excellent
    mask = np.zeros(big_n, dtype=bool)
    mask[rng.choice(big_n, size=n, replace=False)] = True
    target = task_with_mask(x, y, mask, task_id="t0")
    # aux task actively misleads: outcomes shuffled against scores
    aux_y = rng.permutation(y)
    aux = task_with_mask(x, aux_y, np.ones(big_n, dtype=bool), task_id="t1")
    study = MultiTaskStudy((target, aux))
    key = StreamKey(17, 0, 0)
    ada = areppi_estimate(target, study, key=key, power_tune=False)
    local = reppi_two_fold_estimate(target, key, power_tune=False)
    glob = greppi_estimate(target, study, power_tune=False)
    assert abs(ada.theta_hat - local.theta_hat) < abs(ada.theta_hat - glob.theta_hat)


def test_areppi_small_fold_clamps_k():
    rng = np.random.default_rng(83)
    tasks = [synthetic_task(rng, big_n=20, n=4, task_id=f"t{i}") for i in range(2)]
    study = MultiTaskStudy(tuple(tasks))
    res = areppi_estimate(tasks[0], study, k_folds=5, key=StreamKey(2, 0, 0))
    assert np.isfinite(res.theta_hat)
    assert res.n_labeled == 4


def test_power_tuned_lambda_stays_clipped():
    rng = np.random.default_rng(89)
    for b in range(20):
        task = synthetic_task(rng, n=12)
        aux = synthetic_task(rng, task_id="aux")
        study = MultiTaskStudy((task, aux))
        for res in (
            ppipp_estimate(task),
            reppi_two_fold_estimate(task, StreamKey(3, 0, b)),
            greppi_estimate(task, study, power_tune=True),
            areppi_estimate(task, study, power_tune=True, key=StreamKey(3, 0, b)),
        ):
            assert 0.0 <= res.lambda_used <= 1.0
            assert res.power_tuned


def test_result_shapes_and_flags():
    rng = np.random.default_rng(97)
    task = synthetic_task(rng, big_n=30, n=10)
    aux = synthetic_task(rng, big_n=30, task_id="aux")
    study = MultiTaskStudy((task, aux))
    res = greppi_estimate(task, study)
    assert res.method is Method.GREPPI
    assert res.residuals.shape == (10,)
    assert res.s_values_full.shape == (30,)
    assert res.n_labeled == 10
    assert not res.power_tuned  # n = 10 is below the tuning threshold
    assert res.lambda_used == 1.0


def test_min_labeled_table():
    assert MIN_LABELED[Method.CLASSICAL] == 2
    assert MIN_LABELED[Method.REPPI2] == 4
    assert MIN_LABELED[Method.AREPPI] == 4
    rng = np.random.default_rng(101)
    lone = synthetic_task(rng, big_n=10, n=1)
    with pytest.raises(TooFewLabelsError):
        classical_estimate(lone)
