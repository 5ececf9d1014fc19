"""All six estimators on one labeled draw of one synthetic task, with the
interval each of them would report.

The study has five tasks whose outcomes are different monotone bends
(x^p) of the same kind of score, so the cross-task recalibrators have
something real to borrow.
"""

import numpy as np

from mtppi.data import MultiTaskStudy
from mtppi.estimators import (
    areppi_estimate,
    classical_estimate,
    greppi_estimate,
    ppi_estimate,
    ppipp_estimate,
    reppi_two_fold_estimate,
)
from mtppi.experiments import SyntheticSpec, generate_synthetic_study
from mtppi.inference import wald_ci
from mtppi.sampling import Purpose, StreamKey, srs_without_replacement

N = 200
BUDGET = 24

study = generate_synthetic_study(
    SyntheticSpec(n_tasks=5, items_per_task=N, p_min=1.5, p_max=3.5, noise_sd=0.1, seed=2)
)

# Label BUDGET items in every task; the target task is task 0 and the
# other four supply the cross-task recalibrators.
tasks = []
for idx, task in enumerate(study.tasks):
    mask = srs_without_replacement(StreamKey(100, idx, 0, Purpose.LABEL_DRAW), N, BUDGET)
    tasks.append(task.with_labeled(mask))
study = MultiTaskStudy(tuple(tasks))

target = study.tasks[0]
theta_star = float(np.mean(target.y))
key = StreamKey(100, 0, 0, Purpose.FOLD_SPLIT)

results = {
    "classical": classical_estimate(target),
    "ppi": ppi_estimate(target),
    "ppi_pp": ppipp_estimate(target),
    "reppi2": reppi_two_fold_estimate(target, key),
    "greppi": greppi_estimate(target, study),
    "areppi": areppi_estimate(target, study, key=key),
}

print(f"target task: N={N}, n={BUDGET}, theta* = {theta_star:.4f}")
print()
print(f"{'method':<10} {'estimate':>9} {'lambda':>7} {'tuned':>6} {'95% interval':>22} {'width':>7}")
for name, res in results.items():
    ci = wald_ci(res.theta_hat, res.residuals, BUDGET, N)
    hit = "*" if ci.lower <= theta_star <= ci.upper else " "
    print(
        f"{name:<10} {res.theta_hat:9.4f} {res.lambda_used:7.3f} "
        f"{str(res.power_tuned):>6} [{ci.lower:8.4f}, {ci.upper:8.4f}]{hit} {ci.width:7.4f}"
    )
print()
print("* = interval covers theta*. The recalibrated methods shrink the")
print("residuals (and so the interval) whenever the outcome is a bent,")
print("not straight, function of the score.")
