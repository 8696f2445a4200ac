"""Convex-loss training over layer kernels.

Three solvers live here:

* :func:`pegasos_train` -- kernelized stochastic subgradient descent on the
  regularized objective ``lam/2 ||w||^2 + mean_i loss(<w, phi(x_i)>, y_i)``
  with step ``1/(lam t)`` and iterate averaging, in representer form.
* :func:`mkl_layer_solve` -- the layer-wise multiple-kernel program
  ``inf_{beta in simplex} sup_alpha G(alpha, beta)`` where the kernel is a
  sub-convex combination ``K_beta = sum_t beta_t K_t`` of the vertex Grams.
  The outer loop is projected subgradient descent on the capped simplex
  ``{beta >= 0, sum beta <= 1}``; the inner loop is projected gradient
  ascent over the box carved out by the loss conjugate.
* :func:`rademacher_estimate` -- Monte-Carlo empirical Rademacher
  complexity of the class of bounded-norm classifiers under *any*
  admissible layer kernel, together with the closed-form bound
  ``sqrt(2 e B^2 ln(n) / m)``.

Duality convention.  For fixed ``beta`` the dual of the primal program is

    sup_alpha  -(lam/2) alpha' K_beta alpha
               - (1/m) sum_i conj(-lam m alpha_i, y_i)

where ``conj`` is the Fenchel conjugate of the loss in its first argument.
With this scaling the primal optimizer is literally ``w = sum_i alpha_i
phi(x_i)``, so a single coefficient vector serves both the dual objective
and the representer-form predictions, and the duality gap
|primal - dual| -> 0 certifies the saddle.  For the two stock losses the
conjugate is linear (``conj(a, y) = a y``) on a box:

    hinge     loss(z,y) = max(0, 1 - y z),  y in {-1,+1}:  a y in [-1, 0]
    absolute  loss(z,y) = |z - y|:                         |a| <= 1

Solvers are single-threaded state machines per problem instance; distinct
layer problems share only immutable Grams and may run concurrently.
Returned models are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import KernelSpec, TrainedModel, mix_vertices, points_to_bits
from .scheme import LayerParams, vertex_betas, binomial

__all__ = [
    "LossSpec",
    "HINGE",
    "ABSOLUTE",
    "get_loss",
    "pegasos_train",
    "MklLayerProblem",
    "MklSolution",
    "MklTrainResult",
    "mkl_layer_solve",
    "mkl_train",
    "duality_gap",
    "layer_dual_objective",
    "RademacherEstimate",
    "rademacher_estimate",
    "project_capped_simplex",
    "layer_vertex_grams",
]


@dataclass(frozen=True)
class LossSpec:
    """A 1-Lipschitz convex loss with an explicit conjugate on a box domain."""

    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    subgradient: Callable[[np.ndarray, np.ndarray], np.ndarray]
    conjugate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    conjugate_domain: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


HINGE = LossSpec(
    name="hinge",
    value=lambda z, y: np.maximum(0.0, 1.0 - y * z),
    subgradient=lambda z, y: np.where(y * z < 1.0, -y, 0.0),
    conjugate=lambda a, y: a * y,
    conjugate_domain=lambda y: (np.minimum(-y, 0.0), np.maximum(-y, 0.0)),
)

ABSOLUTE = LossSpec(
    name="absolute",
    value=lambda z, y: np.abs(z - y),
    subgradient=lambda z, y: np.sign(z - y),
    conjugate=lambda a, y: a * y,
    conjugate_domain=lambda y: (-np.ones_like(y), np.ones_like(y)),
)

_LOSSES = {"hinge": HINGE, "absolute": ABSOLUTE, "abs": ABSOLUTE}


def get_loss(name: str) -> LossSpec:
    try:
        return _LOSSES[name]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; choose from hinge, absolute") from None


# ---------------------------------------------------------------------------
# Pegasos


def pegasos_train(
    spec,
    points,
    labels,
    lam: float,
    epochs: int = 100,
    seed: int = 0,
    loss: LossSpec = HINGE,
) -> TrainedModel:
    """Kernelized SGD with step 1/(lam t); returns the averaged iterate.

    ``spec`` may be any object with a ``gram(points)`` method.  Runs
    ``epochs * m`` steps; the sampled index stream is drawn from
    ``default_rng(seed)``, so identical seeds give identical models.
    """
    m = len(points)
    if m == 0:
        raise ValueError("empty dataset")
    if lam <= 0:
        raise ValueError("lam must be positive")
    k = np.asarray(spec.gram(points), dtype=float)
    y = np.asarray(labels, dtype=float)
    rng = np.random.default_rng(seed)
    steps = epochs * m
    picks = rng.integers(0, m, size=steps)
    a = np.zeros(m)
    a_bar = np.zeros(m)
    for t in range(1, steps + 1):
        i = picks[t - 1]
        z = float(k[i] @ a)
        g = float(loss.subgradient(np.array(z), np.array(y[i])))
        a *= 1.0 - 1.0 / t
        if g != 0.0:
            a[i] -= g / (lam * t)
        a_bar += (a - a_bar) / t
    z = k @ a_bar
    objective = 0.5 * lam * float(a_bar @ z) + float(np.mean(loss.value(z, y)))
    report = {
        "algo": "pegasos",
        "loss": loss.name,
        "lambda": lam,
        "objective": objective,
        "iters": steps,
        "seed": seed,
        "gap": None,
    }
    return TrainedModel(spec, tuple(points), a_bar, report)


# ---------------------------------------------------------------------------
# MKL over one layer


@dataclass
class MklLayerProblem:
    """Fixed data for the per-layer saddle program."""

    vertex_grams: list
    labels: np.ndarray
    lam: float
    loss: LossSpec = HINGE

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float)
        self.vertex_grams = [np.asarray(g, dtype=float) for g in self.vertex_grams]
        m = self.labels.shape[0]
        if m == 0:
            raise ValueError("at least one sample required")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        for t, g in enumerate(self.vertex_grams):
            if g.shape != (m, m):
                raise ValueError(f"vertex Gram {t} has shape {g.shape}, expected {(m, m)}")
            if np.abs(g - g.T).max() > 1e-9:
                raise ValueError(f"vertex Gram {t} is not symmetric")
            if np.diag(g).max() > 1.0 + 1e-9:
                raise ValueError(f"vertex Gram {t} has diagonal above 1")

    @property
    def m(self) -> int:
        return self.labels.shape[0]

    def combine(self, beta: np.ndarray) -> np.ndarray:
        out = np.zeros((self.m, self.m))
        for b, g in zip(beta, self.vertex_grams):
            if b != 0.0:
                out += b * g
        return out


@dataclass
class MklSolution:
    beta: np.ndarray  # point of {beta >= 0, sum beta <= 1}
    alphas: np.ndarray
    objective: float  # primal value at (beta, alphas)
    gap: float  # |primal - dual| at the returned point
    trace: np.ndarray  # best-so-far outer objective, one entry per iteration
    inner_converged: bool
    outer_iters: int


def project_capped_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x <= 1}."""
    w = np.maximum(v, 0.0)
    if w.sum() <= 1.0:
        return w
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _alpha_box(problem: MklLayerProblem) -> tuple[np.ndarray, np.ndarray]:
    lo_a, hi_a = problem.loss.conjugate_domain(problem.labels)
    c = problem.lam * problem.m
    return -hi_a / c, -lo_a / c


def _spectral_norm(mat: np.ndarray, iters: int = 60) -> float:
    """Power-iteration estimate of the top eigenvalue of a PSD matrix."""
    m = mat.shape[0]
    v = 1.0 + np.arange(m) / max(m, 1)
    v /= np.linalg.norm(v)
    top = 0.0
    for _ in range(iters):
        w = mat @ v
        top = float(np.linalg.norm(w))
        if top <= 1e-300:
            return 0.0
        v = w / top
    return top


def _dual_value(problem: MklLayerProblem, kb: np.ndarray, alpha: np.ndarray) -> float:
    lam, m, y = problem.lam, problem.m, problem.labels
    conj = problem.loss.conjugate(-lam * m * alpha, y)
    return -0.5 * lam * float(alpha @ kb @ alpha) - float(np.mean(conj))


def _primal_value(problem: MklLayerProblem, kb: np.ndarray, alpha: np.ndarray) -> float:
    lam, y = problem.lam, problem.labels
    z = kb @ alpha
    return 0.5 * lam * float(alpha @ z) + float(np.mean(problem.loss.value(z, y)))


def _inner_max(
    problem: MklLayerProblem,
    kb: np.ndarray,
    alpha0: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, bool, int]:
    """Projected gradient ascent for sup_alpha G(alpha, beta) at fixed beta.

    Step size 1/(lam * ||K_beta||) with the norm estimated by power
    iteration; stops when the projected-gradient norm falls below ``tol``.
    """
    lam, y = problem.lam, problem.labels
    lo, hi = _alpha_box(problem)
    alpha = np.clip(alpha0, lo, hi)
    top = _spectral_norm(kb)
    if top <= 0.0:
        # kernel is zero: the dual is linear in alpha, optimum at a box corner
        alpha = np.clip(np.where(y > 0, hi, np.where(y < 0, lo, 0.0)), lo, hi)
        return alpha, True, 0
    step = 1.0 / (lam * top * 1.02)
    prev_val = _dual_value(problem, kb, alpha)
    for it in range(1, max_iter + 1):
        grad = lam * (y - kb @ alpha)
        nxt = np.clip(alpha + step * grad, lo, hi)
        pg = float(np.linalg.norm((alpha - nxt) / step))
        alpha = nxt
        if pg <= tol:
            return alpha, True, it
        if it % 64 == 0:
            # power iteration can underestimate the norm; back off on ascent failure
            val = _dual_value(problem, kb, alpha)
            if val < prev_val - 1e-12 * (1.0 + abs(prev_val)):
                step *= 0.5
            prev_val = val
    return alpha, False, max_iter


def mkl_layer_solve(
    problem: MklLayerProblem,
    outer_iters: int = 500,
    inner_tol: float = 1e-8,
    inner_max_iter: int = 100_000,
) -> MklSolution:
    """Saddle solve of the layer MKL program with a best-so-far certificate.

    Outer: projected subgradient descent on the capped simplex with step
    ``1/sqrt(k)``; the subgradient at the inner optimizer has components
    ``-(lam/2) alpha' K_t alpha``.  Inner: :func:`_inner_max`, warm-started
    across outer iterations.  The returned solution is the best beta seen,
    with its alpha re-polished and the duality gap computed there.
    """
    q = len(problem.vertex_grams)
    beta = np.full(q, 1.0 / q)
    alpha = np.zeros(problem.m)
    best = (math.inf, beta.copy(), alpha.copy())
    trace = np.empty(outer_iters)
    inner_ok = True
    loop_cap = min(inner_max_iter, 5000)  # full budget is spent on the final polish
    for k in range(1, outer_iters + 1):
        kb = problem.combine(beta)
        alpha, ok, _ = _inner_max(problem, kb, alpha, inner_tol, loop_cap)
        inner_ok = inner_ok and ok
        val = _dual_value(problem, kb, alpha)
        if val < best[0]:
            best = (val, beta.copy(), alpha.copy())
        trace[k - 1] = best[0]
        subg = np.array([-0.5 * problem.lam * float(alpha @ g @ alpha) for g in problem.vertex_grams])
        beta = project_capped_simplex(beta - subg / math.sqrt(k))
    _, beta_star, alpha_star = best
    kb = problem.combine(beta_star)
    alpha_star, ok, _ = _inner_max(problem, kb, alpha_star, inner_tol, inner_max_iter)
    inner_ok = inner_ok and ok
    primal = _primal_value(problem, kb, alpha_star)
    dual = _dual_value(problem, kb, alpha_star)
    return MklSolution(
        beta=beta_star,
        alphas=alpha_star,
        objective=primal,
        gap=abs(primal - dual),
        trace=trace,
        inner_converged=inner_ok,
        outer_iters=outer_iters,
    )


def layer_dual_objective(
    problem: MklLayerProblem,
    beta,
    inner_tol: float = 1e-10,
    inner_max_iter: int = 200_000,
) -> float:
    """The outer objective G(beta) = sup_alpha G(alpha, beta) at a fixed beta."""
    beta = np.asarray(beta, dtype=float)
    kb = problem.combine(beta)
    alpha, _, _ = _inner_max(problem, kb, np.zeros(problem.m), inner_tol, inner_max_iter)
    return _dual_value(problem, kb, alpha)


def duality_gap(problem: MklLayerProblem, beta, alphas) -> float:
    """|primal - dual| at a candidate (beta, alpha); +inf if alpha infeasible.

    The primal is evaluated at ``w = sum_i alpha_i phi(x_i)``; the dual uses
    the conjugate at ``-lam m alpha`` (see the module docstring).
    """
    beta = np.asarray(beta, dtype=float)
    alpha = np.asarray(alphas, dtype=float)
    lo, hi = _alpha_box(problem)
    slack = 1e-9 * (1.0 + float(np.abs(hi - lo).max()))
    if np.any(alpha < lo - slack) or np.any(alpha > hi + slack):
        return math.inf
    kb = problem.combine(beta)
    return abs(_primal_value(problem, kb, alpha) - _dual_value(problem, kb, alpha))


# ---------------------------------------------------------------------------
# MKL over the whole cube


def layer_vertex_grams(points, weight: int) -> list[np.ndarray]:
    """Vertex-kernel Gram matrices for a list of points of one weight.

    Weights above n/2 are complemented first, so the Grams always come from
    the canonical mirrored layer.
    """
    n = points[0].n
    bits = points_to_bits(points).astype(np.int64)
    if np.any(bits.sum(axis=1) != weight):
        raise ValueError("all points must share the stated weight")
    if 2 * weight > n:
        bits = 1 - bits
    cp = min(weight, n - weight)
    ip = bits @ bits.T
    verts = vertex_betas(LayerParams(n, cp))
    grams = []
    for t in range(cp + 1):
        table = np.array(
            [sum(verts[t, ell] * binomial(k, ell) for ell in range(cp + 1)) for k in range(cp + 1)]
        )
        grams.append(table[ip])
    return grams


@dataclass
class MklTrainResult:
    lam: float
    per_layer: dict  # weight -> MklSolution
    model: TrainedModel
    objective: float  # sum of layer objectives
    report: dict = field(default_factory=dict)


def mkl_train(
    points,
    labels,
    B: float,
    epsilon: float,
    loss: LossSpec = HINGE,
    outer_iters: int = 500,
    inner_tol: float = 1e-8,
    lam_override: float | None = None,
) -> MklTrainResult:
    """Layer-decomposed MKL: partition by weight, solve each layer alone.

    The regularization weight is ``lam = epsilon / (n B^2)`` unless
    overridden.  The combined model stores, per occupied weight, the vertex
    mixture selected by that layer's solution; cross-layer kernel values are
    zero so the combined predictions coincide with the per-layer ones.
    """
    if B <= 0:
        raise ValueError("B must be positive")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    m = len(points)
    if m == 0:
        raise ValueError("empty dataset")
    n = points[0].n
    lam = epsilon / (n * B * B) if lam_override is None else lam_override
    y = np.asarray(labels, dtype=float)
    weights = np.array([pt.weight for pt in points])
    per_layer: dict[int, MklSolution] = {}
    spec_layers = {}
    alphas = np.zeros(m)
    total = 0.0
    for w in sorted(set(weights.tolist())):
        idx = np.nonzero(weights == w)[0]
        group = [points[i] for i in idx]
        problem = MklLayerProblem(layer_vertex_grams(group, w), y[idx], lam, loss)
        sol = mkl_layer_solve(problem, outer_iters=outer_iters, inner_tol=inner_tol)
        per_layer[w] = sol
        alphas[idx] = sol.alphas
        total += sol.objective
        spec_layers[w] = mix_vertices(LayerParams(n, min(w, n - w)), sol.beta)
    spec = KernelSpec(n, "direct_sum", spec_layers)
    model = TrainedModel(
        spec,
        tuple(points),
        alphas,
        report={
            "algo": "mkl",
            "loss": loss.name,
            "lambda": lam,
            "objective": total,
            "seed": None,
            "gap": max(sol.gap for sol in per_layer.values()),
            "iters": outer_iters,
        },
    )
    return MklTrainResult(lam, per_layer, model, total, report=dict(model.report))


# ---------------------------------------------------------------------------
# Rademacher complexity


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    stderr: float
    trials: int
    bound: float  # sqrt(2 e B^2 ln(n) / m)
    layer_share: dict  # weight -> mean of the per-layer sup quadratic form


def rademacher_estimate(points, B: float, trials: int = 200, seed: int = 0) -> RademacherEstimate:
    """Monte-Carlo Rademacher complexity of norm-B classifiers, any layer kernel.

    Per sign draw the supremum over the kernel polytope of
    ``sigma' K sigma`` is attained at a vertex, so the estimate is
    ``(B/m) sqrt(sum_layers max_t sigma' K_t sigma)``; ties in the max go to
    the lowest vertex index (the value is unaffected).  Also reports the
    closed-form bound ``sqrt(2 e B^2 ln(n) / m)``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    m = len(points)
    n = points[0].n
    weights = np.array([pt.weight for pt in points])
    layer_data = []
    for w in sorted(set(weights.tolist())):
        idx = np.nonzero(weights == w)[0]
        group = [points[i] for i in idx]
        layer_data.append((w, idx, layer_vertex_grams(group, w)))
    rng = np.random.default_rng(seed)
    vals = np.empty(trials)
    share = {w: 0.0 for w, _, _ in layer_data}
    for trial in range(trials):
        sigma = rng.integers(0, 2, size=m) * 2.0 - 1.0
        total = 0.0
        for w, idx, grams in layer_data:
            s = sigma[idx]
            q = max(max(float(s @ g @ s), 0.0) for g in grams)
            share[w] += q / trials
            total += q
        vals[trial] = (B / m) * math.sqrt(total)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    bound = math.sqrt(2.0 * math.e * B * B * math.log(n) / m)
    return RademacherEstimate(mean, stderr, trials, bound, share)
