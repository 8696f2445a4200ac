"""How rich is the class of all admissible layer kernels?

The empirical Rademacher complexity of norm-B classifiers under the *best*
admissible kernel mixture is estimated by Monte-Carlo: per sign vector the
supremum over the kernel polytope is attained at a vertex, so each draw
costs a handful of quadratic forms.  The closed-form ceiling
sqrt(2 e B^2 ln(n) / m) only grows logarithmically with dimension.
"""

import math

import numpy as np

from cubekern import learners
from cubekern.kernels import HypercubePoint

B, trials = 1.0, 300
means = {}
print(f"{'n':>4} {'m':>6} {'estimate':>10} {'2*stderr':>9} {'bound':>8} {'ratio':>6}")
for n in (8, 16):
    for m in (50, 100, 200, 400):
        rng = np.random.default_rng(n * 1000 + m)
        pts = [HypercubePoint(n, int(rng.integers(0, 1 << n))) for _ in range(m)]
        est = learners.rademacher_estimate(pts, B=B, trials=trials, seed=0)
        means[(n, m)] = est.mean
        print(f"{n:>4} {m:>6} {est.mean:>10.4f} {2 * est.stderr:>9.4f} "
              f"{est.bound:>8.4f} {est.mean / est.bound:>6.2f}")

ratio = means[(8, 50)] / means[(8, 200)]
print(f"\n1/sqrt(m) decay check: est(m=50)/est(m=200) = {ratio:.2f} (expect about {math.sqrt(4):.0f})")

print("\nper-layer contributions for one configuration (n=8, m=200):")
rng = np.random.default_rng(8200)
pts = [HypercubePoint(8, int(rng.integers(0, 256))) for _ in range(200)]
est = learners.rademacher_estimate(pts, B=B, trials=trials, seed=0)
for w, share in sorted(est.layer_share.items()):
    print(f"  weight {w}: mean sup quadratic form = {share:8.2f}")
print("estimate", round(est.mean, 4), "vs bound", round(est.bound, 4))
