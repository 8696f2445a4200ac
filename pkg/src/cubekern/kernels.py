"""Full-hypercube kernels assembled from admissible layer kernels.

A :class:`KernelSpec` stores one layer kernel per occupied Hamming weight
and evaluates as a direct sum: points of different weight have kernel value
0, and layers with weight above ``n/2`` are handled by complementing both
inputs (which maps the layer onto its mirror below ``n/2``, where the
spectral machinery of :mod:`cubekern.scheme` applies).

Included constructions:

* :func:`universal_kernel` -- per layer, the uniform average of the polytope
  vertices; its RKHS contains every bounded-norm classifier realizable by
  any admissible layer kernel, at the cost of a factor ``p + 1`` in norm.
* :func:`mix_vertices` -- an arbitrary sub-convex combination of vertices.
* :func:`conjunction_kernel` -- truncated binomial-basis sum
  ``(1/N) * sum_{t<=T} C(<x,y>, t)`` used to fit Boolean conjunctions.
* :func:`sparse_conjunction_kernel` -- the single basis kernel
  ``C(<x,y>, l) / C(s, l)`` whose RKHS represents any l-literal conjunction
  over weight-s points exactly, with squared norm ``C(s, l)``
  (see :func:`analytic_weights`).

The ``sparse_conjunction`` kind is evaluated on the raw inner product with
no weight gating: its feature map (scaled degree-l monomials) is defined on
the whole cube, and the exact-representation identity needs kernel values
between the weight-l indicator and weight-s data points.

Kernel specs and models are immutable and thread-safe; Gram construction is
deterministic given identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scheme import (
    BetaCoeffs,
    LayerParams,
    binomial,
    is_admissible,
    vertex_betas,
    DEFAULT_PSD_TOL,
)

__all__ = [
    "HypercubePoint",
    "LayerKernel",
    "KernelSpec",
    "TrainedModel",
    "make_layer_kernel",
    "complement_layer_kernel",
    "mix_vertices",
    "universal_kernel",
    "conjunction_kernel",
    "sparse_conjunction_kernel",
    "analytic_weights",
    "gram",
    "cross_gram",
    "points_to_bits",
]


@dataclass(frozen=True)
class HypercubePoint:
    """A point of {0,1}^n held as a bit mask (coordinate i at bit i)."""

    n: int
    bits: int
    weight: int = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError("bit mask out of range for dimension")
        object.__setattr__(self, "weight", self.bits.bit_count())

    @classmethod
    def from_string(cls, s: str) -> "HypercubePoint":
        """Parse a bitstring; character i is coordinate i."""
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {s!r}")
        mask = 0
        for i, ch in enumerate(s):
            if ch == "1":
                mask |= 1 << i
        return cls(len(s), mask)

    @classmethod
    def from_indices(cls, n: int, indices) -> "HypercubePoint":
        mask = 0
        for i in indices:
            if not 0 <= i < n:
                raise ValueError(f"index {i} out of range for n={n}")
            mask |= 1 << i
        return cls(n, mask)

    @classmethod
    def from_array(cls, arr) -> "HypercubePoint":
        a = np.asarray(arr)
        return cls.from_indices(a.shape[0], np.nonzero(a)[0].tolist())

    def to_string(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.n))

    def inner(self, other: "HypercubePoint") -> int:
        if self.n != other.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
        return (self.bits & other.bits).bit_count()

    def complement(self) -> "HypercubePoint":
        return HypercubePoint(self.n, ~self.bits & ((1 << self.n) - 1))


@dataclass(frozen=True)
class LayerKernel:
    """An admissible kernel on one layer with its value table.

    ``g_table[k]`` is the kernel value at inner product ``k``; it covers
    ``k = 0..p`` (and ``k = 0..n`` for the weight-free sparse-conjunction
    kind, whose values are needed off the layer).
    """

    layer: LayerParams
    beta: np.ndarray
    g_table: np.ndarray

    def __post_init__(self):
        b = np.array(self.beta, dtype=float)
        g = np.array(self.g_table, dtype=float)
        b.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "g_table", g)


def _g_table(beta: np.ndarray, upto: int) -> np.ndarray:
    """Values g(k) = sum_l beta_l * C(k, l) for k = 0..upto."""
    return np.array(
        [sum(beta[ell] * binomial(k, ell) for ell in range(len(beta))) for k in range(upto + 1)]
    )


def make_layer_kernel(layer: LayerParams, beta, tol: float = DEFAULT_PSD_TOL) -> LayerKernel:
    """Validated layer kernel; rejects inadmissible coefficients by name."""
    coeffs = BetaCoeffs(layer, np.asarray(beta, dtype=float))
    report = is_admissible(coeffs, tol=tol)
    if not report:
        raise ValueError(
            f"inadmissible kernel on (n={layer.n}, p={layer.p}): {report.violation}"
        )
    return LayerKernel(layer, coeffs.beta, _g_table(coeffs.beta, layer.p))


def complement_layer_kernel(kernel: LayerKernel) -> LayerKernel:
    """The same kernel function expressed on the complementary layer.

    Complementing both arguments maps inner products by
    ``k -> n - 2p + k``, so the table of the mirrored kernel is a shifted
    slice of the original; its coefficients are recovered by the Newton
    forward-difference formula (exact since any table of length p'+1 has a
    unique binomial-basis interpolant).
    """
    layer = kernel.layer
    comp = layer.complement()
    shift = layer.n - 2 * comp.p  # inner products on `layer` minus those on `comp`
    if shift < 0:
        raise ValueError("complement_layer_kernel expects p >= n/2 to mirror downward")
    g = _g_table(kernel.beta, layer.p) if len(kernel.g_table) <= layer.p else kernel.g_table
    mirrored = np.array([g[j + shift] for j in range(comp.p + 1)])
    beta = np.array(
        [
            sum((-1) ** (ell - i) * math.comb(ell, i) * mirrored[i] for i in range(ell + 1))
            for ell in range(comp.p + 1)
        ]
    )
    return make_layer_kernel(comp, beta)


def mix_vertices(layer: LayerParams, lambdas, tol: float = 1e-12) -> LayerKernel:
    """Sub-convex combination of the vertex kernels: beta = sum_i lambda_i beta^(i)."""
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (layer.p + 1,):
        raise ValueError(f"expected {layer.p + 1} mixture weights, got {lam.shape}")
    if lam.min(initial=0.0) < -tol:
        raise ValueError("negative mixture weight")
    if lam.sum() > 1.0 + tol:
        raise ValueError(f"mixture weights sum to {lam.sum():.6g} > 1")
    beta = np.clip(lam, 0.0, None) @ vertex_betas(layer)
    return make_layer_kernel(layer, beta)


@dataclass(frozen=True)
class KernelSpec:
    """A full hypercube kernel: one layer kernel per occupied weight.

    Layers stored under a weight above ``n/2`` hold the kernel of the
    mirrored layer and are evaluated on complemented inputs.  Absent layers
    evaluate to 0.  ``kind`` is one of ``direct_sum``, ``universal``,
    ``conjunction``, ``sparse_conjunction``.
    """

    n: int
    kind: str
    per_layer: dict[int, LayerKernel]

    def __post_init__(self):
        for w, lk in self.per_layer.items():
            if not 0 <= w <= self.n:
                raise ValueError(f"layer weight {w} outside [0, {self.n}]")
            expected = min(w, self.n - w) if self.kind != "sparse_conjunction" else w
            if lk.layer.n != self.n or lk.layer.p != expected:
                raise ValueError(
                    f"layer {w}: stored kernel is for (n={lk.layer.n}, p={lk.layer.p}), "
                    f"expected (n={self.n}, p={expected})"
                )

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, x: HypercubePoint, y: HypercubePoint) -> float:
        if x.n != self.n or y.n != self.n:
            raise ValueError(f"point dimension mismatch with kernel (n={self.n})")
        if self.kind == "sparse_conjunction":
            (lk,) = self.per_layer.values()
            return float(lk.g_table[x.inner(y)])
        if x.weight != y.weight:
            return 0.0
        lk = self.per_layer.get(x.weight)
        if lk is None:
            return 0.0
        if 2 * x.weight > self.n:
            k = x.complement().inner(y.complement())
        else:
            k = x.inner(y)
        return float(lk.g_table[k])

    def gram(self, points) -> np.ndarray:
        return gram(self, points)

    def cross_gram(self, rows, cols) -> np.ndarray:
        return cross_gram(self, rows, cols)

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "kind": self.kind,
            "layers": [
                {"p": w, "beta": [float(b) for b in lk.beta]}
                for w, lk in sorted(self.per_layer.items())
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "KernelSpec":
        n = int(obj["n"])
        kind = str(obj["kind"])
        per_layer: dict[int, LayerKernel] = {}
        for entry in obj["layers"]:
            w = int(entry["p"])
            beta = np.asarray(entry["beta"], dtype=float)
            if kind == "sparse_conjunction":
                lk = LayerKernel(LayerParams(n, w), beta, _g_table(beta, n))
            else:
                lk = make_layer_kernel(LayerParams(n, min(w, n - w)), beta)
            per_layer[w] = lk
        return cls(n, kind, per_layer)


def points_to_bits(points) -> np.ndarray:
    """Stack hypercube points into an (m, n) uint8 matrix."""
    return np.array([[(pt.bits >> i) & 1 for i in range(pt.n)] for pt in points], dtype=np.uint8)


def gram(spec: KernelSpec, points, max_points: int = 20000) -> np.ndarray:
    """Dense symmetric kernel matrix over a point list."""
    m = len(points)
    if m > max_points:
        raise ValueError(f"refusing to build a {m}x{m} Gram matrix (cap {max_points})")
    return cross_gram(spec, points, points)


def cross_gram(spec: KernelSpec, rows, cols) -> np.ndarray:
    """Kernel values between two point lists, vectorized by weight group."""
    rows, cols = list(rows), list(cols)
    for pt in rows + cols:
        if pt.n != spec.n:
            raise ValueError(f"point dimension mismatch with kernel (n={spec.n})")
    if not rows or not cols:
        return np.zeros((len(rows), len(cols)))
    xr = points_to_bits(rows).astype(np.int64)
    xc = points_to_bits(cols).astype(np.int64)
    out = np.zeros((len(rows), len(cols)))
    if spec.kind == "sparse_conjunction":
        (lk,) = spec.per_layer.values()
        out[:] = lk.g_table[xr @ xc.T]
        return out
    wr = xr.sum(axis=1)
    wc = xc.sum(axis=1)
    for w, lk in spec.per_layer.items():
        ri = np.nonzero(wr == w)[0]
        ci = np.nonzero(wc == w)[0]
        if ri.size == 0 or ci.size == 0:
            continue
        a, b = xr[ri], xc[ci]
        if 2 * w > spec.n:
            a, b = 1 - a, 1 - b
        out[np.ix_(ri, ci)] = lk.g_table[a @ b.T]
    return out


def universal_kernel(n: int) -> KernelSpec:
    """The layer-wise uniform vertex mixture, one kernel per layer.

    For each weight the canonical form p' = min(p, n-p) is used, so mirrored
    layers share their table.  Every admissible layer kernel is a sub-convex
    vertex combination, so a classifier of norm B under any such kernel
    lives in this kernel's RKHS with norm at most (p'+1) B.  Preprocessing
    is O(p'^3) per layer; evaluation is a table lookup.

    The two single-point layers (weights 0 and n) carry the constant-1
    kernel, which keeps k(x, x) = 1 and complement consistency exact on the
    whole cube.
    """
    if not 1 <= n <= 64:
        raise ValueError(f"n={n} outside supported range [1, 64]")
    cache: dict[int, LayerKernel] = {}
    per_layer: dict[int, LayerKernel] = {}
    for p in range(0, n + 1):
        cp = min(p, n - p)
        if cp not in cache:
            layer = LayerParams(n, cp)
            uniform = np.full(cp + 1, 1.0 / (cp + 1))
            cache[cp] = mix_vertices(layer, uniform)
        per_layer[p] = cache[cp]
    return KernelSpec(n, "universal", per_layer)


def conjunction_kernel(n: int, p: int, epsilon: float, t_scale: float = 1.0) -> KernelSpec:
    """Truncated binomial-basis kernel for conjunction fitting on layer p.

    Uses T = ceil(t_scale * sqrt(n) * ln(1/epsilon)) basis terms (clamped to
    p) and normalizes by N = sum_{t<=T} C(p, t) so the diagonal is exactly 1.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if not 0 <= p <= n:
        raise ValueError(f"layer weight p={p} outside [0, {n}]")
    depth = min(p, math.ceil(t_scale * math.sqrt(n) * math.log(1.0 / epsilon)))
    norm = sum(math.comb(p, t) for t in range(depth + 1))
    beta = np.zeros(p + 1)
    beta[: depth + 1] = 1.0 / norm
    if 2 * p > n:
        lk = complement_layer_kernel(LayerKernel(LayerParams(n, p), beta, _g_table(beta, p)))
    else:
        lk = make_layer_kernel(LayerParams(n, p), beta)
    return KernelSpec(n, "conjunction", {p: lk})


def sparse_conjunction_kernel(n: int, s: int, ell: int) -> KernelSpec:
    """Single-basis kernel C(<x,y>, ell) / C(s, ell), weight-free evaluation."""
    if not 0 <= ell <= s:
        raise ValueError(f"literal count ell={ell} outside [0, s={s}]")
    if s > n:
        raise ValueError(f"sparsity s={s} exceeds dimension n={n}")
    beta = np.zeros(s + 1)
    beta[ell] = 1.0 / math.comb(s, ell)
    if 2 * s <= n:
        # sanity: certified admissible on its home layer when checkable
        make_layer_kernel(LayerParams(n, s), beta)
    lk = LayerKernel(LayerParams(n, s), beta, _g_table(beta, n))
    return KernelSpec(n, "sparse_conjunction", {s: lk})


@dataclass(frozen=True)
class TrainedModel:
    """A classifier in representer form: f(x) = sum_i alpha_i k(x_i, x).

    ``spec`` is usually a :class:`KernelSpec` but may be any object with
    ``gram`` / ``cross_gram`` methods (e.g. a lifted kernel on embedded
    points).
    """

    spec: object
    support: tuple
    alphas: np.ndarray
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.alphas, dtype=float)
        a.flags.writeable = False
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "support", tuple(self.support))
        if len(self.support) != self.alphas.shape[0]:
            raise ValueError("support and alphas length mismatch")

    def predict(self, x: HypercubePoint) -> float:
        return float(self.predict_many([x])[0])

    def predict_many(self, points) -> np.ndarray:
        return self.alphas @ self.spec.cross_gram(list(self.support), list(points))

    def norm_sq(self) -> float:
        """||w||^2 = alpha^T K alpha over the support points."""
        k = self.spec.gram(list(self.support))
        return float(self.alphas @ k @ self.alphas)


def analytic_weights(n: int, s: int, literals) -> TrainedModel:
    """Closed-form conjunction model: alpha = C(s, l) at the literal indicator.

    Under :func:`sparse_conjunction_kernel` the prediction is
    ``C(<c, x>, l)``, exactly the {0,1} value of the conjunction on weight-s
    data, and the squared model norm is ``C(s, l)``.
    """
    literals = sorted(set(int(i) for i in literals))
    ell = len(literals)
    spec = sparse_conjunction_kernel(n, s, ell)
    indicator = HypercubePoint.from_indices(n, literals)
    alpha = np.array([float(math.comb(s, ell))])
    return TrainedModel(
        spec,
        (indicator,),
        alpha,
        report={"kind": "sparse_conjunction_analytic", "s": s, "literals": literals},
    )
