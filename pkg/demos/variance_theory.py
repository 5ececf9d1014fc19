"""Tour of the finite-population variance machinery on populations small
enough to enumerate every labeled subset by hand.
"""

import numpy as np

from mtppi.variance import (
    brute_force_estimator_law,
    lambda_star,
    max_gain,
    oracle_variance,
    variance_functional,
)

# A ten-item population. y is the expensive label, s the cheap score we
# would rectify against.
rng = np.random.default_rng(7)
y = np.round(rng.normal(2.0, 1.0, size=10), 2)
s = np.round(0.8 * y + rng.normal(0.0, 0.4, size=10), 2)
n = 4

print("population y:", y)
print("population s:", s)
print("labeled budget n =", n, "of N =", y.size)
print()

# The closed form and the exhaustive enumeration over all C(10,4) = 210
# subsets agree to machine precision, at any lambda.
for lam in (0.0, 0.5, 1.0):
    mean_bf, var_bf = brute_force_estimator_law(y, s, n, lam)
    var_cf = variance_functional(y, s, n, lam)
    print(f"lambda={lam:4.1f}  enumerated var={var_bf:.10f}  closed form={var_cf:.10f}"
          f"  mean={mean_bf:.10f} (theta* = {np.mean(y):.10f})")
print()

# The variance is a parabola in lambda; lambda_star sits at its bottom.
lam_opt = lambda_star(y, s)
report = oracle_variance(y, s, n)
print(f"lambda* = {lam_opt:.6f}")
print(f"V(lambda*) = {variance_functional(y, s, n, lam_opt):.10f}")
print(f"v_star from the report = {report.v_star:.10f}  (rho^2 = {report.rho_sq:.4f})")
print()

# Affine maps of the score change lambda* but not the attainable variance.
report_mapped = oracle_variance(y, -3.0 * s + 11.0, n)
print("v_star under s -> -3s + 11:", report_mapped.v_star)
print("identical to the raw score:", np.isclose(report.v_star, report_mapped.v_star, atol=1e-14))
print()

# A score that bends away from the outcome leaves room on the table;
# max_gain is exactly the variance a perfect monotone recalibration of
# the score would recover.
z = np.tile(np.arange(4.0), 3)
bent = max_gain(z * z, z, 4)
straight = max_gain(2.0 * z - 1.0, z, 4)
print(f"max_gain, outcome quadratic in score: {bent:.6f}")
print(f"max_gain, outcome affine in score:    {straight:.6f}")
print()

# The textbook cell: four labels, a useless constant score, two of four
# labeled. Both routes give 5/12 exactly.
mean_bf, var_bf = brute_force_estimator_law([1.0, 2.0, 3.0, 4.0], [0.0] * 4, 2, 1.0)
print("y=[1,2,3,4], s=0, n=2 ->", var_bf, "= 5/12")
