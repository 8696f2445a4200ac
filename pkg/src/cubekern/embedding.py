"""Randomized bit embeddings of [0,1]^n that preserve inner products.

The construction embeds each coordinate separately: values are rounded
down to a grid of step ``eps_int / 3`` (with 1.0 appended so the right
endpoint is exact), and every grid value ``v`` is assigned one fixed random
row of ``t`` Bernoulli(v) bits per role.  For grid values ``u, v`` the dot
product of a role-1 and a role-2 row concentrates around ``t u v``, so with
``t = ceil(c_t * ln(1/eps_int) / eps_int^2)`` the scaled inner product of
two embedded coordinates tracks the real product within ``eps_int``.

A cube embedder uses per-coordinate accuracy ``eps / n`` and concatenates
the coordinate embeddings; summing the per-coordinate errors gives
``|<x, y> - <Psi_1(x), Psi_2(y)> / t| <= eps``.

Instead of trusting the concentration argument, every interval embedder is
*certified at build time*: the full grid-pair inner-product table is
computed (packed bits + popcount) and the build is retried with a fresh
substream until the worst grid-pair deviation is within ``eps_int``, up to
a bounded number of retries.  The certified table is kept for fast exact
inner products in tests and lifted-kernel evaluation.

Kernel lifting: a scalar kernel ``g`` on inner products (L-Lipschitz on
``[0, n]``) lifts to embedded points as ``g(<u, v> / t)``; the lifted value
differs from ``g(<x, y>)`` by at most ``L * eps`` for certified pairs.

Two maps (role 1 and role 2) are needed because same-role inner products
are biased whenever both arguments hit the same grid cell (a row dotted
with itself counts ones, not squared ones); all guarantees are for
role-1-vs-role-2 products.

Builds are single-threaded (one PRNG substream per coordinate and
attempt); once built, pairs are immutable and embedding/lifting are pure
and thread-safe.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .kernels import HypercubePoint

__all__ = [
    "IntervalEmbedderPair",
    "CubeEmbedderPair",
    "StronglyEuclideanG",
    "poly_g",
    "table_g",
    "LiftedKernel",
    "build_pair",
    "embed",
    "lift_kernel",
    "EmbeddedModel",
    "train_on_cube",
    "save_pair",
    "load_pair",
    "required_bits",
]

DEFAULT_CT = 8.0
WIDTH_CAP = 10**7
BUILD_RETRIES = 10


def required_bits(epsilon: float, c_t: float = DEFAULT_CT) -> int:
    """Bits per coordinate for one interval embedder of accuracy epsilon."""
    return math.ceil(c_t * math.log(1.0 / epsilon) / epsilon**2)


def _interval_grid(eps_int: float) -> np.ndarray:
    """Multiples of eps_int/3 covering [0,1], extended to include 1.0 exactly."""
    step = eps_int / 3.0
    count = int(math.floor(1.0 / step + 1e-9))
    grid = step * np.arange(count + 1)
    if grid[-1] >= 1.0:
        grid[-1] = 1.0
    else:
        grid = np.append(grid, 1.0)
    return grid


def _packed_view64(packed: np.ndarray) -> np.ndarray:
    rows, nb = packed.shape
    pad = (-nb) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros((rows, pad), dtype=np.uint8)], axis=1)
    return packed.view(np.uint64)


@dataclass
class IntervalEmbedderPair:
    """Certified pair of random maps from a grid on [0,1] to {0,1}^t."""

    epsilon: float
    t: int
    grid: np.ndarray
    packed: tuple[np.ndarray, np.ndarray]  # per role: (len(grid), ceil(t/8)) uint8
    seed: int
    attempt: int
    pair_inner: np.ndarray = field(default=None, repr=False)  # (K, K) int64, role1 x role2

    def ensure_pair_inner(self) -> np.ndarray:
        if self.pair_inner is None:
            a = _packed_view64(self.packed[0])
            b = _packed_view64(self.packed[1])
            k = a.shape[0]
            out = np.empty((k, k), dtype=np.int64)
            for i in range(k):
                out[i] = np.bitwise_count(a[i] & b).sum(axis=1).astype(np.int64)
            self.pair_inner = out
        return self.pair_inner

    def max_deviation(self) -> float:
        """Worst |u*v - <psi_1(u), psi_2(v)>/t| over all ordered grid pairs."""
        ip = self.ensure_pair_inner()
        target = np.outer(self.grid, self.grid)
        return float(np.abs(target - ip / self.t).max())

    def row_int(self, role: int, idx: int) -> int:
        return int.from_bytes(self.packed[role - 1][idx].tobytes(), "little")


def _sample_interval_tables(grid: np.ndarray, t: int, rng: np.random.Generator):
    nb = (t + 7) // 8
    tables = []
    for _role in (1, 2):
        rows = np.empty((grid.shape[0], nb), dtype=np.uint8)
        for i, v in enumerate(grid):
            rows[i] = np.packbits(rng.random(t) < v, bitorder="little")
        tables.append(rows)
    return tables[0], tables[1]


def _build_interval_pair(
    eps_int: float, seed: int, coord: int, c_t: float, retries: int
) -> IntervalEmbedderPair:
    t = required_bits(eps_int, c_t)
    grid = _interval_grid(eps_int)
    last_dev = math.inf
    for attempt in range(retries):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(coord, attempt))
        rng = np.random.default_rng(ss)
        packed = _sample_interval_tables(grid, t, rng)
        pair = IntervalEmbedderPair(eps_int, t, grid, packed, seed, attempt)
        last_dev = pair.max_deviation()
        if last_dev <= eps_int:
            return pair
    raise RuntimeError(
        f"interval embedder failed its self-check {retries} times "
        f"(coord {coord}, accuracy {eps_int:.3g}, worst deviation {last_dev:.3g})"
    )


@dataclass
class CubeEmbedderPair:
    """Coordinate-wise concatenation of certified interval embedders."""

    n: int
    epsilon: float
    t: int
    c_t: float
    seed: int
    coords: list[IntervalEmbedderPair]

    @property
    def width(self) -> int:
        return self.n * self.t

    @property
    def grid(self) -> np.ndarray:
        return self.coords[0].grid

    def grid_indices(self, x) -> np.ndarray:
        """Round every coordinate down to its grid cell; reject out-of-range input."""
        v = np.asarray(x, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"expected a length-{self.n} vector, got shape {v.shape}")
        if np.any(v < -1e-12) or np.any(v > 1.0 + 1e-12):
            raise ValueError("coordinates must lie in [0, 1]")
        v = np.clip(v, 0.0, 1.0)
        return np.searchsorted(self.grid, v, side="right") - 1

    def table_inner(self, x, y) -> int:
        """Exact <Psi_1(x), Psi_2(y)> via the certified per-coordinate tables."""
        ix = self.grid_indices(x)
        iy = self.grid_indices(y)
        return int(sum(int(c.ensure_pair_inner()[a, b]) for c, a, b in zip(self.coords, ix, iy)))


def build_pair(
    n: int,
    epsilon: float,
    seed: int = 0,
    c_t: float = DEFAULT_CT,
    retries: int = BUILD_RETRIES,
    width_cap: int = WIDTH_CAP,
) -> CubeEmbedderPair:
    """Build a certified cube embedder with per-coordinate accuracy epsilon/n."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    eps_int = epsilon / n
    t = required_bits(eps_int, c_t)
    if n * t > width_cap:
        feasible = _smallest_feasible_eps(n, c_t, width_cap)
        raise ValueError(
            f"embedded width n*t = {n * t} exceeds the cap {width_cap}; "
            f"smallest feasible epsilon for n={n} is about {feasible:.4g}"
        )
    coords = [_build_interval_pair(eps_int, seed, c, c_t, retries) for c in range(n)]
    return CubeEmbedderPair(n, epsilon, t, c_t, seed, coords)


def _smallest_feasible_eps(n: int, c_t: float, width_cap: int) -> float:
    lo, hi = 1e-6, 1.0 - 1e-9
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if n * required_bits(mid / n, c_t) > width_cap:
            lo = mid
        else:
            hi = mid
    return hi


def embed(pair: CubeEmbedderPair, role: int, x) -> HypercubePoint:
    """Embed a real vector: per coordinate, look up the fixed bit row."""
    if role not in (1, 2):
        raise ValueError("role must be 1 or 2")
    idx = pair.grid_indices(x)
    bits = 0
    for c, a in enumerate(idx):
        bits |= pair.coords[c].row_int(role, int(a)) << (c * pair.t)
    return HypercubePoint(pair.width, bits)


# ---------------------------------------------------------------------------
# Scalar kernels of the inner product and their lift


@dataclass(frozen=True)
class StronglyEuclideanG:
    """A scalar kernel profile g on [0, domain_max], with a declared Lipschitz bound.

    Represented either as polynomial coefficients in the inner product
    (ascending order) or as a knot table with linear interpolation.  The
    declared constant is verified on the representation's grid at
    construction.
    """

    kind: str
    domain_max: float
    lipschitz: float
    coeffs: tuple = ()
    knots_x: tuple = ()
    knots_y: tuple = ()

    def __call__(self, a):
        a = np.clip(np.asarray(a, dtype=float), 0.0, self.domain_max)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(a, np.asarray(self.coeffs))
        return np.interp(a, np.asarray(self.knots_x), np.asarray(self.knots_y))


def poly_g(coeffs, lipschitz: float, domain_max: float) -> StronglyEuclideanG:
    """Polynomial profile; verifies max |g'| on a dense grid of [0, domain_max]."""
    c = np.asarray(coeffs, dtype=float)
    if c.size >= 2:
        deriv = np.polynomial.polynomial.polyder(c)
        grid = np.linspace(0.0, domain_max, 4097)
        slope = float(np.abs(np.polynomial.polynomial.polyval(grid, deriv)).max())
    else:
        slope = 0.0
    if slope > lipschitz * (1.0 + 1e-6):
        raise ValueError(
            f"declared Lipschitz constant {lipschitz:.6g} violated: observed slope {slope:.6g}"
        )
    return StronglyEuclideanG("poly", domain_max, lipschitz, coeffs=tuple(float(v) for v in c))


def table_g(knots_x, knots_y, lipschitz: float) -> StronglyEuclideanG:
    """Lookup-table profile with linear interpolation; slopes checked between knots."""
    xs = np.asarray(knots_x, dtype=float)
    ys = np.asarray(knots_y, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need matching 1-d knot arrays with at least two knots")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("knots must be strictly increasing")
    slope = float(np.abs(np.diff(ys) / np.diff(xs)).max())
    if slope > lipschitz * (1.0 + 1e-6):
        raise ValueError(
            f"declared Lipschitz constant {lipschitz:.6g} violated: observed slope {slope:.6g}"
        )
    return StronglyEuclideanG(
        "table", float(xs[-1]), lipschitz, knots_x=tuple(xs), knots_y=tuple(ys)
    )


@dataclass(frozen=True)
class LiftedKernel:
    """g evaluated on scaled bit inner products: k(u, v) = g(<u, v> / t)."""

    g: StronglyEuclideanG
    t: int
    n: int
    kind: str = "lifted"

    def evaluate(self, u: HypercubePoint, v: HypercubePoint) -> float:
        return float(self.g(min(max(u.inner(v) / self.t, 0.0), self.n)))

    def cross_gram(self, rows, cols) -> np.ndarray:
        ip = np.array([[r.inner(c) for c in cols] for r in rows], dtype=float)
        return np.asarray(self.g(np.clip(ip / self.t, 0.0, self.n)), dtype=float)

    def gram(self, points) -> np.ndarray:
        return self.cross_gram(points, points)


def lift_kernel(g: StronglyEuclideanG, pair: CubeEmbedderPair) -> LiftedKernel:
    return LiftedKernel(g, pair.t, pair.n)


# ---------------------------------------------------------------------------
# End-to-end training on real inputs


@dataclass
class EmbeddedModel:
    """Classifier over embedded inputs.

    Queries are embedded with role 2; the stored support points are role-1
    embeddings of the training sample, so predictions use certified
    two-role inner products.
    """

    pair: CubeEmbedderPair
    kernel: object
    support: tuple
    alphas: np.ndarray
    report: dict

    def predict_many(self, xs) -> np.ndarray:
        queries = [embed(self.pair, 2, x) for x in xs]
        return self.alphas @ self.kernel.cross_gram(list(self.support), queries)

    def predict(self, x) -> float:
        return float(self.predict_many([x])[0])


def train_on_cube(
    points,
    labels,
    g: StronglyEuclideanG,
    B: float,
    epsilon: float,
    seed: int = 0,
    loss=None,
    epochs: int = 200,
    use_mkl: bool = False,
    lam_override: float | None = None,
) -> EmbeddedModel:
    """Embed a real-valued sample and train with the lifted kernel.

    Default path: role-2 embed the sample, train kernelized SGD with
    ``g(<u, v>/t)``, keep role-1 embeddings of the sample as the support.
    With ``use_mkl`` the layer-wise MKL program runs directly on the
    embedded cube instead (only practical when n*t stays at most 64, the
    cap of the layer machinery); that path both trains and predicts on
    role-2 embeddings.
    """
    from .learners import HINGE, mkl_train, pegasos_train

    loss = HINGE if loss is None else loss
    xs = np.asarray(points, dtype=float)
    if xs.ndim != 2:
        raise ValueError("points must be an (m, n) array")
    m, n = xs.shape
    pair = build_pair(n, epsilon, seed=seed)
    lam = epsilon / (n * B * B) if lam_override is None else lam_override
    embedded2 = [embed(pair, 2, x) for x in xs]
    if use_mkl:
        result = mkl_train(embedded2, labels, B, epsilon, loss=loss, lam_override=lam_override)
        report = dict(result.report)
        report["path"] = "mkl_on_embedded_cube"
        return EmbeddedModel(pair, result.model.spec, tuple(embedded2), result.model.alphas, report)
    kernel = lift_kernel(g, pair)
    model = pegasos_train(kernel, embedded2, labels, lam, epochs=epochs, seed=seed, loss=loss)
    support1 = tuple(embed(pair, 1, x) for x in xs)
    report = dict(model.report)
    report["path"] = "lifted_kernel"
    return EmbeddedModel(pair, kernel, support1, model.alphas, report)


# ---------------------------------------------------------------------------
# Binary pair format

_MAGIC = b"JKEM"
_HEADER = struct.Struct("<4sIIIdQII")  # magic, version, n, t, eps, seed, K, nb


def save_pair(pair: CubeEmbedderPair, path: str) -> None:
    """Write header {magic, version, n, t, eps, seed} plus row-major bit tables.

    Layout after the header (which also records the grid size K and packed
    row width nb): for each coordinate, the role-1 table then the role-2
    table, each K rows of nb bytes, bits in little-endian order within a row.
    """
    k = pair.grid.shape[0]
    nb = (pair.t + 7) // 8
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, pair.n, pair.t, pair.epsilon, pair.seed, k, nb))
        for coord in pair.coords:
            for role in (0, 1):
                fh.write(coord.packed[role].tobytes())


def load_pair(path: str) -> CubeEmbedderPair:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        magic, version, n, t, eps, seed, k, nb = _HEADER.unpack(header)
        if magic != _MAGIC or version != 1:
            raise ValueError(f"not a version-1 embedder file: {path}")
        grid = _interval_grid(eps / n)
        if grid.shape[0] != k:
            raise ValueError("grid size in file does not match its parameters")
        coords = []
        for c in range(n):
            tables = []
            for _role in (1, 2):
                raw = fh.read(k * nb)
                if len(raw) != k * nb:
                    raise ValueError("truncated embedder file")
                tables.append(np.frombuffer(raw, dtype=np.uint8).reshape(k, nb).copy())
            coords.append(IntervalEmbedderPair(eps / n, t, grid, (tables[0], tables[1]), seed, -1))
    return CubeEmbedderPair(n, eps, t, DEFAULT_CT, seed, coords)
