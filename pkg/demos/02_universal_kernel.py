"""One kernel to host them all.

Every admissible layer kernel is a sub-convex combination of the p+1
vertex kernels, so the uniform vertex average ("universal" kernel) can
represent any bounded-norm classifier from any admissible kernel at the
cost of a (p+1) factor in norm.  This script demonstrates the two numeric
facts behind that containment on random instances:

  * mixture identity:  sum_t lam_t a'K_t a = a'K_beta a
  * norm bound:        sum_t ((p+1) lam_t)^2 a'K_t a <= (p+1)^2 a'K_beta a
"""

import numpy as np

from cubekern import kernels, scheme
from cubekern.kernels import HypercubePoint
from cubekern.scheme import LayerParams

rng = np.random.default_rng(0)
n, p, m = 8, 3, 12
layer = LayerParams(n, p)

rows = scheme.enumerate_layer(layer)
pts = [HypercubePoint.from_array(rows[i]) for i in rng.integers(0, rows.shape[0], size=m)]

# a random admissible kernel = random point of the vertex polytope
lam = rng.random(p + 1)
lam /= lam.sum()
mixed = kernels.mix_vertices(layer, lam)
print("mixture weights:", np.round(lam, 4))

verts = scheme.vertex_betas(layer)
vertex_kernels = [kernels.make_layer_kernel(layer, row) for row in verts]
spec_of = lambda lk: kernels.KernelSpec(n, "direct_sum", {p: lk})

alpha = rng.normal(size=m)
quads = np.array(
    [float(alpha @ kernels.gram(spec_of(vk), pts) @ alpha) for vk in vertex_kernels]
)
k_beta = kernels.gram(spec_of(mixed), pts)
direct = float(alpha @ k_beta @ alpha)

print(f"\nsquared norm under the mixture kernel:    {direct:.10f}")
print(f"lambda-weighted sum of vertex norms:      {float(lam @ quads):.10f}")

norm_in_universal = float(((p + 1) * lam) ** 2 @ quads)
print(f"\nsame classifier, universal-space norm^2:  {norm_in_universal:.10f}")
print(f"guaranteed ceiling (p+1)^2 * original:     {(p + 1) ** 2 * direct:.10f}")
print("inflation actually used:", round(norm_in_universal / max(direct, 1e-30), 3),
      f"(worst case {(p + 1) ** 2})")

# predictions transfer exactly: evaluating through the mixture kernel equals
# the lambda-combination of per-vertex predictions
query = [HypercubePoint.from_array(rows[i]) for i in rng.integers(0, rows.shape[0], size=5)]
f_mixed = alpha @ kernels.cross_gram(spec_of(mixed), pts, query)
f_split = sum(
    l * (alpha @ kernels.cross_gram(spec_of(vk), pts, query))
    for l, vk in zip(lam, vertex_kernels)
)
print("\nprediction transfer max error:", float(np.abs(f_mixed - f_split).max()))

u = kernels.universal_kernel(n)
x = pts[0]
print("\nuniversal kernel diagonal at a sample point:", u.evaluate(x, x))
print("cross-layer value (weights differ):",
      u.evaluate(x, HypercubePoint.from_indices(n, range(p + 1))))
