# # A support vector data description with and without negatives
#
# The SVDD encloses the positives in the smallest kernel-space sphere. Known
# outliers push the boundary away from themselves.

import numpy as np

from pu_active import KernelSpec, train_svdd

rng = np.random.default_rng(1)
P = rng.normal(size=(30, 2))
N = np.array([[1.2, 0.0], [1.4, 0.3], [1.3, -0.4]])
kernel = KernelSpec("rbf", gamma=0.5)

plain = train_svdd(P, None, kernel, C_pos=0.1)
with_neg = train_svdd(P, N, kernel, C_pos=0.1, C_neg=0.1)

for name, m in (("positives only", plain), ("with negatives", with_neg)):
    n_sv = int(np.sum(m.alphas > 1e-8))
    print(f"{name:15s} R={m.R:.4f}  support vectors={n_sv}  iterations={m.n_iter}")

# Score is R minus the distance to the center, so >= 0 means "target".

probe = np.array([[0.0, 0.0], [1.3, 0.0], [3.0, 3.0]])
print("\nscores (plain, with negatives)")
for x in probe:
    print(x, f"{plain.score(x[None])[0]:+.4f}", f"{with_neg.score(x[None])[0]:+.4f}")

# A coarse text picture of the accepted region.

xs = np.linspace(-3, 3, 41)
ys = np.linspace(-2.5, 2.5, 17)
grid = np.array([[x, y] for y in ys[::-1] for x in xs])
acc = with_neg.predict(grid).reshape(len(ys), len(xs)) > 0
print("\n" + "\n".join("".join("#" if v else "." for v in row) for row in acc))
