"""From the unit cube to the hypercube and back.

Real-valued inputs in [0,1]^n are digitized by a randomized two-role bit
embedding that preserves every pairwise inner product to within eps after
scaling.  A Lipschitz kernel profile g then lifts to embedded points as
g(<u, v>/t), so hypercube machinery trains on real data.
"""

import numpy as np

from cubekern import embedding
from cubekern.learners import HINGE

rng = np.random.default_rng(42)
n, eps = 4, 0.1

pair = embedding.build_pair(n, eps, seed=0)
print(f"embedder: {n} coordinates x {pair.t} bits = {pair.width} bits total, "
      f"grid step {pair.grid[1]:.5f}")

devs = []
for _ in range(2000):
    x, y = rng.random(n), rng.random(n)
    devs.append(abs(float(x @ y) - pair.table_inner(x, y) / pair.t))
devs = np.array(devs)
print(f"inner-product deviation over 2000 pairs: mean {devs.mean():.4f}, "
      f"max {devs.max():.4f} (certified <= {eps})")

# normalized quadratic profile ((a/n)+1)^2 / 4, Lipschitz 1/n on [0, n]
g = embedding.poly_g([0.25, 0.5 / n, 0.25 / n**2], lipschitz=1.0 / n, domain_max=float(n))
lifted = embedding.lift_kernel(g, pair)
lift_devs = []
for _ in range(500):
    x, y = rng.random(n), rng.random(n)
    u, v = embedding.embed(pair, 1, x), embedding.embed(pair, 2, y)
    lift_devs.append(abs(lifted.evaluate(u, v) - float(g(np.array(x @ y)))))
print(f"lifted-kernel deviation: max {max(lift_devs):.5f} "
      f"(guarantee 2 L eps = {2 * g.lipschitz * eps:.5f})")

# end-to-end: fit a margined linear rule through the lifted kernel
xs, ys = [], []
while len(xs) < 80:
    x = rng.random(n)
    margin = x.sum() / n - 0.5
    if abs(margin) >= 0.2:
        xs.append(x)
        ys.append(1.0 if margin > 0 else -1.0)
xs, ys = np.array(xs), np.array(ys)
profile = embedding.poly_g([0.5, 0.5 / n], lipschitz=0.5 / n, domain_max=float(n))
model = embedding.train_on_cube(
    xs, ys, profile, B=4.0, epsilon=eps, seed=1, loss=HINGE, epochs=400, lam_override=2e-3
)
preds = model.predict_many(xs)
print(f"\ntraining on {len(xs)} margined points: "
      f"hinge {np.maximum(0, 1 - ys * preds).mean():.4f}, "
      f"0-1 {np.mean((preds >= 0) != (ys > 0)):.4f}")

fresh_x, fresh_y = [], []
while len(fresh_x) < 80:
    x = rng.random(n)
    margin = x.sum() / n - 0.5
    if abs(margin) >= 0.2:
        fresh_x.append(x)
        fresh_y.append(1.0 if margin > 0 else -1.0)
fp = model.predict_many(np.array(fresh_x))
print(f"fresh sample: 0-1 {np.mean((fp >= 0) != (np.array(fresh_y) > 0)):.4f}")
