# # Density ratio from kernel density estimates
#
# p(x|+) is estimated on the labelled positives and p(x) on every training
# sample (labelled and pool). Bandwidths come from leave-one-out likelihood.

import numpy as np

from pu_active import fit_kde_cv, likelihood_ratio, loo_log_likelihood

rng = np.random.default_rng(0)
pos = rng.normal(size=(40, 2))
everything = np.vstack([pos, rng.normal(loc=(3, 0), size=(120, 2))])

for h in (0.1, 0.3, 0.6, 1.2):
    print(f"h={h:<4}  leave-one-out log-likelihood {loo_log_likelihood(pos, h):9.2f}")

p_pos = fit_kde_cv(pos)
p_all = fit_kde_cv(everything)
print(f"\nselected bandwidths: p(x|+) {p_pos.h:.3f}, p(x) {p_all.h:.3f}")

# The ratio is large near the positives and near zero where only outliers
# live.

probe = np.array([[0.0, 0.0], [1.5, 0.0], [3.0, 0.0], [6.0, 0.0]])
for x, r in zip(probe, likelihood_ratio(p_pos, p_all, probe)):
    print(f"x={x}  a={r:.3f}")
