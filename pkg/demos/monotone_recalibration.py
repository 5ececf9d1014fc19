"""Monotone recalibration from first principles: pool-adjacent-violators on
noisy scores, the exact conditional mean on a discrete support, and what
the adaptive blend does with each.
"""

import numpy as np

from mtppi.recalibration import (
    MixtureRecalibrator,
    conditional_mean_fit,
    conditional_mean_values,
    pava_fit,
)

rng = np.random.default_rng(21)

# Outcomes rise with the score, but not linearly and not cleanly.
x = np.sort(rng.uniform(0.0, 1.0, size=30))
y = x**3 + rng.normal(0.0, 0.05, size=30)

fit = pava_fit(x, y)
n_blocks = np.unique(fit.knots_y).size
print(f"30 noisy points pooled into {n_blocks} monotone level sets")
print("fitted values are nondecreasing:", bool(np.all(np.diff(fit.predict_many(x)) >= 0)))

# Refitting the fitted values changes nothing.
refit = pava_fit(x, fit.predict_many(x))
print("idempotent:", bool(np.allclose(refit.predict_many(x), fit.predict_many(x), atol=0)))

# Prediction interpolates between knots and clamps beyond them.
grid = np.array([-1.0, 0.2, 0.5, 0.9, 2.0])
print("predictions on [-1, 2]:", np.round(fit.predict_many(grid), 4))
print()

# On a discrete score support the ideal recalibrator is just the mean of
# y at each score value.
scores = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 2.0])
labels = np.array([1.0, 3.0, 4.0, 5.0, 6.0, 9.0])
cm = conditional_mean_fit(scores, labels)
print("support:", cm.support)
print("conditional means:", cm.means)

# The residual y - m(score) averages to zero within every score group,
# so it cannot correlate with any function of the score.
resid = labels - conditional_mean_values(scores, labels)
for v in np.unique(scores):
    print(f"  mean residual at score {v}: {resid[scores == v].mean():+.2e}")
print()

# A mixture recalibrator blends two fits pointwise; gamma=0 is all
# global, gamma=1 all local.
local = pava_fit(x[:15], y[:15])
for gamma in (0.0, 0.5, 1.0):
    mix = MixtureRecalibrator(gamma=gamma, local_fit=local, global_fit=fit)
    print(f"gamma={gamma}: mix(0.5) = {mix.predict_many(np.array([0.5]))[0]:.4f}")
