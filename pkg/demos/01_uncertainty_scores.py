# # Uncertainty scores without a class prior
#
# Both PU query rules reduce a candidate to one number, the likelihood ratio
# a = p(x|+) / p(x). The unknown prior p(+) is treated as uniform on [0, 1]
# and integrated out. Here we compare the closed forms with numerical
# integration.

import numpy as np
from scipy import integrate

from pu_active import exact_expected_margin, expected_entropy_score, expected_margin_score

# With prior P the posterior is p(+|x) = a P, so the binary margin is
# |1 - 2 a P| and the binary entropy is H(a P).

def margin_by_quadrature(a):
    pts = [1 / (2 * a)] if a > 0.5 else None
    return integrate.quad(lambda P: abs(1 - 2 * a * P), 0, 1, points=pts)[0]


def entropy_by_quadrature(a):
    def h(P):
        q = a * P
        return -sum(v * np.log(v) for v in (q, 1 - q) if v > 0)
    return integrate.quad(h, 0, 1)[0]


a = np.array([0.1, 0.3, 0.5, 0.8, 1.0])
print("a      entropy   quad")
for v, s in zip(a, expected_entropy_score(a)):
    print(f"{v:.2f}  {s:.6f}  {entropy_by_quadrature(v):.6f}")

# The margin closed form only integrates correctly while a <= 1/2. Beyond
# that the integrand changes sign inside [0, 1] and the exact value picks up
# a 1/(2a) term.

a = np.array([0.25, 0.5, 0.75, 1.5, 3.0])
print("\na      margin    exact     quad")
for v, s, e in zip(a, expected_margin_score(a), exact_expected_margin(a)):
    print(f"{v:.2f}  {s:+.5f}  {e:.5f}  {margin_by_quadrature(v):.5f}")

# Both margin variants order candidates the same way below 1/2, where most
# pool samples sit once p(x|+) is estimated from few positives.
