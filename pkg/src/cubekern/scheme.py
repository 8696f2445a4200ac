"""Exact combinatorics and spectral algebra of set-symmetric kernels on a
hypercube layer, plus brute-force oracles for small instances.

A *layer* ``S_{p,n}`` is the set of 0/1 vectors of length ``n`` with exactly
``p`` ones.  A kernel on a layer whose value depends only on the inner
product of its arguments corresponds to a *set-symmetric* matrix; the space
of such matrices is the classical Johnson association scheme, a commutative
algebra with completely known spectra.

Everything here is written in the binomial basis

    b_l(x, y) = C(<x, y>, l),        l = 0, ..., p

(each ``b_l`` is PSD: it is the Gram of the degree-``l`` monomial feature
map).  A coefficient vector ``beta`` of length ``p + 1`` describes the
kernel ``k = sum_l beta_l * b_l``.

Spectral facts used throughout (valid for ``p <= n/2``):

* every set-symmetric matrix on ``S_{p,n}`` has the same eigenspaces
  ``V_0, ..., V_p`` with ``dim V_j = C(n, j) - C(n, j - 1)``;
* the eigenvalue of ``b_l`` on ``V_j`` is
  ``C(n - l - j, p - l) * C(p - j, l - j)`` for ``j <= l`` and 0 otherwise.

Those eigenvalues form the upper-triangular matrix returned by
:func:`delta_matrix`, so a kernel with coefficients ``beta`` is PSD iff
``delta @ beta >= 0`` entrywise, and its diagonal value is
``<eta, beta>`` with ``eta_l = C(p, l)``.  Admissible kernels (PSD with
diagonal at most 1) therefore form a polytope with ``p + 1`` vertices,
computed by :func:`vertex_betas`.

The oracle functions at the bottom (:func:`oracle_gram`,
:func:`oracle_eigenvalues`) build the explicit ``C(n,p) x C(n,p)`` matrices
and eigendecompose them densely; they exist so that every formula above can
be cross-checked on small instances, and they are deliberately independent
of the formula-based code paths.

Index convention: all coefficient vectors are 0-based, so index ``l``
multiplies ``C(<x,y>, l)``; the constant kernel is ``beta = e_0``.

Every type here is immutable after construction and every operation is a
pure function, so everything can be shared freely across threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "LayerParams",
    "BetaCoeffs",
    "ExplicitGram",
    "AdmissibilityReport",
    "binomial",
    "delta_matrix",
    "eta_vector",
    "eigen_multiplicities",
    "eigen_profile",
    "is_admissible",
    "vertex_betas",
    "p_from_d",
    "d_from_p",
    "enumerate_layer",
    "oracle_gram",
    "oracle_eigenvalues",
]

#: largest dimension supported by the bit-vector point type in `kernels`
MAX_N = 64

#: largest dimension for which explicit-Gram oracles are allowed
MAX_ORACLE_N = 12

#: relative PSD tolerance used by admissibility checks
DEFAULT_PSD_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LayerParams:
    """A hypercube layer: dimension ``n`` and Hamming weight ``p``."""

    n: int
    p: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"dimension n={self.n} outside supported range [1, {MAX_N}]")
        if not 0 <= self.p <= self.n:
            raise ValueError(f"layer weight p={self.p} outside [0, {self.n}]")

    @property
    def is_canonical(self) -> bool:
        """True when ``p <= n/2``, the form required by all spectral operations."""
        return 2 * self.p <= self.n

    def complement(self) -> "LayerParams":
        return LayerParams(self.n, self.n - self.p)

    def size(self) -> int:
        return math.comb(self.n, self.p)


@dataclass(frozen=True)
class BetaCoeffs:
    """Coordinates of a layer kernel in the binomial basis ``b_l``."""

    layer: LayerParams
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", _frozen(self.beta))
        if self.beta.shape != (self.layer.p + 1,):
            raise ValueError(
                f"beta has length {self.beta.shape[0]}, expected p+1={self.layer.p + 1}"
            )


@dataclass(frozen=True)
class ExplicitGram:
    """Dense kernel matrix over an explicitly enumerated layer (oracle side)."""

    layer: LayerParams
    points: np.ndarray  # (C(n,p), n) uint8, rows in lexicographic bit order
    matrix: np.ndarray  # (C(n,p), C(n,p)) float


@dataclass(frozen=True)
class AdmissibilityReport:
    """PSD-plus-diagonal certificate for a candidate beta."""

    ok: bool
    profile: np.ndarray  # the p+1 eigenvalues delta @ beta
    diagonal: float  # <eta, beta> = k(x, x)
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def binomial(r: int, k: int) -> float:
    """Binomial coefficient C(r, k) as a float, with C(r, k) = 0 for k < 0 or k > r.

    Exact wide-integer arithmetic is used for r <= 62; beyond that the value
    is computed in the log domain (relative error below 1e-12).
    """
    if k < 0 or k > r:
        return 0.0
    if r <= 62:
        return float(math.comb(r, k))
    return math.exp(math.lgamma(r + 1) - math.lgamma(k + 1) - math.lgamma(r - k + 1))


def _require_canonical(layer: LayerParams, op: str) -> None:
    if not layer.is_canonical:
        raise ValueError(
            f"{op} requires the canonical form p <= n/2, got (n={layer.n}, p={layer.p}); "
            "complement the layer first"
        )


def delta_matrix(layer: LayerParams) -> np.ndarray:
    """Upper-triangular (p+1)x(p+1) matrix mapping beta to the layer eigenvalues.

    Entry (j, l) is the eigenvalue of the basis kernel ``b_l`` on the j-th
    common eigenspace: ``C(n-l-j, p-l) * C(p-j, l-j)`` for ``j <= l``.
    """
    _require_canonical(layer, "delta_matrix")
    n, p = layer.n, layer.p
    delta = np.zeros((p + 1, p + 1))
    for ell in range(p + 1):
        for j in range(ell + 1):
            delta[j, ell] = binomial(n - ell - j, p - ell) * binomial(p - j, ell - j)
    return delta


def eta_vector(layer: LayerParams) -> np.ndarray:
    """Linear functional giving the kernel diagonal: eta_l = C(p, l)."""
    p = layer.p
    return np.array([binomial(p, ell) for ell in range(p + 1)])


def eigen_multiplicities(layer: LayerParams) -> np.ndarray:
    """Dimensions of the common eigenspaces: C(n,j) - C(n,j-1), j = 0..p.

    Exact integers; they sum to C(n, p).
    """
    n, p = layer.n, layer.p
    dims = [math.comb(n, j) - (math.comb(n, j - 1) if j >= 1 else 0) for j in range(p + 1)]
    return np.array(dims, dtype=np.int64)


def eigen_profile(beta: BetaCoeffs) -> np.ndarray:
    """The p+1 distinct eigenvalues of the kernel with coefficients ``beta``."""
    _require_canonical(beta.layer, "eigen_profile")
    return delta_matrix(beta.layer) @ beta.beta


def is_admissible(beta: BetaCoeffs, tol: float = DEFAULT_PSD_TOL) -> AdmissibilityReport:
    """Check PSD-ness and the unit diagonal bound of a candidate kernel.

    Admissible iff every entry of ``delta @ beta`` is at least
    ``-tol * max(1, ||delta @ beta||_inf)`` and ``<eta, beta> <= 1 + tol``.
    """
    profile = eigen_profile(beta)
    diagonal = float(eta_vector(beta.layer) @ beta.beta)
    floor = -tol * max(1.0, float(np.abs(profile).max(initial=0.0)))
    bad = np.nonzero(profile < floor)[0]
    if bad.size:
        j = int(bad[0])
        return AdmissibilityReport(
            False, profile, diagonal, violation=f"negative eigenvalue at index {j}"
        )
    if diagonal > 1.0 + tol:
        return AdmissibilityReport(
            False, profile, diagonal, violation=f"diagonal bound: k(x,x)={diagonal:.6g} > 1"
        )
    return AdmissibilityReport(True, profile, diagonal)


def vertex_betas(layer: LayerParams) -> np.ndarray:
    """The p+1 extreme points of the admissible-kernel polytope, one per row.

    Row i solves ``delta @ raw = e_i`` by back-substitution and is then
    scaled by ``1 / <eta, raw>`` so that its diagonal is exactly 1.  Vertex i
    has a single nonzero eigenvalue, on eigenspace ``V_i``.
    """
    _require_canonical(layer, "vertex_betas")
    p = layer.p
    delta = delta_matrix(layer)
    eta = eta_vector(layer)
    scale = float(np.abs(delta).max())
    out = np.zeros((p + 1, p + 1))
    for i in range(p + 1):
        e = np.zeros(p + 1)
        e[i] = 1.0
        raw = solve_triangular(delta, e, lower=False)
        residual = float(np.abs(delta @ raw - e).max())
        if residual > 1e-9 * scale:
            raise ArithmeticError(
                f"triangular solve residual {residual:.3g} exceeds 1e-9*||delta|| "
                f"for (n={layer.n}, p={p}, i={i})"
            )
        xi = float(eta @ raw)
        if xi <= 0.0:
            raise ArithmeticError(
                f"nonpositive vertex normalizer xi={xi:.3g} for (n={layer.n}, p={p}, i={i})"
            )
        out[i] = raw / xi
    return out


def d_from_p(p_coeffs) -> np.ndarray:
    """Rewrite binomial-basis coefficients in the intersection-indicator basis.

    With ``D_l`` the 0/1 matrix of pairs with intersection exactly ``l``,
    ``b_r = sum_{l >= r} C(l, r) D_l``, so the D-coefficient at ``l`` is
    ``sum_{r <= l} C(l, r) c_r``.  Exact for integer-valued inputs.
    """
    c = np.asarray(p_coeffs, dtype=float)
    size = c.shape[0]
    out = np.zeros(size)
    for ell in range(size):
        out[ell] = sum(math.comb(ell, r) * c[r] for r in range(ell + 1))
    return out


def p_from_d(d_coeffs) -> np.ndarray:
    """Inverse of :func:`d_from_p`: c_r = sum_{l <= r} (-1)^(r-l) C(r, l) d_l."""
    d = np.asarray(d_coeffs, dtype=float)
    size = d.shape[0]
    out = np.zeros(size)
    for r in range(size):
        out[r] = sum((-1) ** (r - ell) * math.comb(r, ell) * d[ell] for ell in range(r + 1))
    return out


def enumerate_layer(layer: LayerParams) -> np.ndarray:
    """All weight-p bit vectors of length n, lexicographic, as a uint8 matrix."""
    n, p = layer.n, layer.p
    if n > MAX_ORACLE_N:
        raise ValueError(f"explicit enumeration refused for n={n} > {MAX_ORACLE_N}")
    rows = [bits for bits in itertools.product((0, 1), repeat=n) if sum(bits) == p]
    return np.array(rows, dtype=np.uint8)


def oracle_gram(beta: BetaCoeffs) -> ExplicitGram:
    """Explicit dense kernel matrix: entry (i, j) = sum_l beta_l * C(<x_i, x_j>, l).

    Brute-force ground truth for n <= 12; independent of the spectral code.
    """
    layer = beta.layer
    points = enumerate_layer(layer)
    ip = (points.astype(np.int64) @ points.T.astype(np.int64)).astype(np.intp)
    # value table over every possible inner product 0..p
    table = np.array(
        [sum(beta.beta[ell] * binomial(k, ell) for ell in range(layer.p + 1)) for k in range(layer.p + 1)]
    )
    return ExplicitGram(layer, points, table[ip])


def oracle_eigenvalues(gram: ExplicitGram | np.ndarray) -> list[tuple[float, int]]:
    """Dense symmetric eigendecomposition, clustered into (value, multiplicity).

    Values are sorted descending; eigenvalues closer than 1e-8 times the
    spectral norm are merged into one cluster.
    """
    matrix = gram.matrix if isinstance(gram, ExplicitGram) else np.asarray(gram, dtype=float)
    w = np.linalg.eigvalsh(matrix)[::-1]
    scale = float(np.abs(w).max(initial=0.0))
    tol = 1e-8 * max(scale, 1e-300)
    clusters: list[tuple[float, int]] = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[start] - w[i] > tol:
            block = w[start:i]
            clusters.append((float(block.mean()), len(block)))
            start = i
    return clusters
