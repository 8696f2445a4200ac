"""Dataset generation, file round-trips, the oracle verification suite and
benchmark orchestration.

File formats
------------

Datasets are JSON Lines with one object per example, either
``{"x": "BITSTRING", "y": 1.0}`` (hypercube points; character i of the
bitstring is coordinate i) or ``{"x": [0.25, 0.5], "y": -1.0}`` (real
vectors).  Floats are serialized with ``repr``, the shortest decimal that
round-trips exactly (at most 17 significant digits), so save -> load is
bit-exact.  Dataset metadata is not stored in the file; run reports record
the generator name, seed and parameters needed to regenerate a dataset
exactly.

Models are a single JSON object
``{"spec": ..., "support": [bitstrings], "alphas": [...], "report": ...}``.

Randomness
----------

Every operation takes one integer seed.  Derived streams are produced with
``numpy.random.SeedSequence(seed, spawn_key=(stream_id,))``; the stream ids
are 0 = literal choice, 1 = training data, 2 = holdout data, 3 = trainer.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels, learners, scheme
from .kernels import HypercubePoint, KernelSpec, TrainedModel

__all__ = [
    "Dataset",
    "ConjunctionTask",
    "RunReport",
    "gen_conjunction_dataset",
    "save_dataset",
    "load_dataset",
    "save_model",
    "load_model",
    "verify_suite",
    "FAULT_TAGS",
    "bench_conjunction",
    "evaluate_losses",
    "stream_seed",
]


def stream_seed(seed: int, stream: int) -> int:
    """Derive a child seed for one of the documented streams."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Datasets


@dataclass
class Dataset:
    n: int
    points: tuple
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float)
        self.points = tuple(self.points)
        if len(self.points) != self.labels.shape[0]:
            raise ValueError("points and labels length mismatch")
        if not np.all(np.isfinite(self.labels)):
            raise ValueError("labels must be finite")


@dataclass(frozen=True)
class ConjunctionTask:
    literals: tuple
    n: int
    weight: int  # sparsity s or layer p, depending on mode
    mode: str


def gen_conjunction_dataset(
    n: int,
    literals,
    mode: str,
    weight: int,
    m: int,
    noise_rate: float,
    seed: int,
) -> Dataset:
    """Uniform points on one layer, labeled by a conjunction, with label noise.

    ``mode`` is "uniform_layer" (weight names a layer p) or "sparse" (weight
    names the sparsity s); both draw uniformly from that layer.  Labels are
    the {0,1} conjunction value, each flipped independently with probability
    ``noise_rate``.  When the layer weight is below the literal count the
    conjunction can never fire; that is allowed but warned about.
    """
    if mode not in ("uniform_layer", "sparse"):
        raise ValueError(f"unknown mode {mode!r}")
    lits = tuple(sorted(set(int(i) for i in literals)))
    if any(i < 0 or i >= n for i in lits):
        raise ValueError("literal index out of range")
    if not 0 <= weight <= n:
        raise ValueError(f"layer weight {weight} outside [0, {n}]")
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError("noise_rate must be in [0, 1]")
    if weight < len(lits):
        warnings.warn(
            f"layer weight {weight} below literal count {len(lits)}: all clean labels are 0",
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    mask = HypercubePoint.from_indices(n, lits).bits if lits else 0
    points = []
    base = np.empty(m)
    for i in range(m):
        pt = HypercubePoint.from_indices(n, rng.choice(n, size=weight, replace=False))
        points.append(pt)
        base[i] = 1.0 if (pt.bits & mask) == mask else 0.0
    flips = rng.random(m) < noise_rate
    labels = np.where(flips, 1.0 - base, base)
    meta = {
        "generator": "conjunction",
        "seed": int(seed),
        "parameters": {
            "n": n,
            "literals": list(lits),
            "mode": mode,
            "weight": weight,
            "m": m,
            "noise_rate": noise_rate,
        },
    }
    return Dataset(n, points, labels, meta)


def regenerate(meta: dict) -> Dataset:
    """Rebuild a dataset from the (generator, seed, parameters) record."""
    if meta.get("generator") != "conjunction":
        raise ValueError(f"unknown generator {meta.get('generator')!r}")
    p = meta["parameters"]
    return gen_conjunction_dataset(
        p["n"], p["literals"], p["mode"], p["weight"], p["m"], p["noise_rate"], meta["seed"]
    )


def _jfloat(v: float) -> str:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError("cannot serialize non-finite float")
    return repr(v)


def save_dataset(dataset: Dataset, path: str) -> None:
    with open(path, "w") as fh:
        for pt, y in zip(dataset.points, dataset.labels):
            if isinstance(pt, HypercubePoint):
                xs = json.dumps(pt.to_string())
            else:
                xs = "[" + ", ".join(_jfloat(v) for v in np.asarray(pt, dtype=float)) + "]"
            fh.write(f'{{"x": {xs}, "y": {_jfloat(y)}}}\n')


def load_dataset(path: str) -> Dataset:
    points = []
    labels = []
    n = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            x = obj["x"]
            if isinstance(x, str):
                pt = HypercubePoint.from_string(x)
                dim = pt.n
            else:
                pt = np.asarray(x, dtype=float)
                dim = pt.shape[0]
            if n is None:
                n = dim
            elif n != dim:
                raise ValueError("inconsistent point dimensions in dataset file")
            points.append(pt)
            labels.append(float(obj["y"]))
    if n is None:
        raise ValueError(f"empty dataset file: {path}")
    return Dataset(n, points, np.array(labels), meta={})


def save_model(model: TrainedModel, path: str) -> None:
    obj = {
        "spec": model.spec.to_json_dict(),
        "support": [pt.to_string() for pt in model.support],
        "alphas": [float(a) for a in model.alphas],
        "report": _clean_report(model.report),
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load_model(path: str) -> TrainedModel:
    with open(path) as fh:
        obj = json.load(fh)
    spec = KernelSpec.from_json_dict(obj["spec"])
    support = tuple(HypercubePoint.from_string(s) for s in obj["support"])
    return TrainedModel(spec, support, np.asarray(obj["alphas"], dtype=float), obj.get("report", {}))


def _clean_report(report: dict) -> dict:
    """JSON-safe copy of a report, volatile timing removed."""
    out = {}
    for key, val in report.items():
        if key == "wall_seconds":
            continue
        if isinstance(val, np.ndarray):
            out[key] = [float(v) for v in val]
        elif isinstance(val, (np.floating, np.integer)):
            out[key] = val.item()
        elif isinstance(val, dict):
            out[key] = _clean_report(val)
        else:
            out[key] = val
    return out


# ---------------------------------------------------------------------------
# Verification suite

FAULT_TAGS = ("delta_sign", "vertex_norm", "conjunction_alpha")


def _check(module: str, name: str, passed: bool, params: dict, detail: str = "") -> dict:
    return {
        "module": module,
        "check": name,
        "passed": bool(passed),
        "params": params,
        "detail": detail,
    }


def _merged_prediction(delta: np.ndarray, dims: np.ndarray, ell: int, tol: float):
    """Formula eigenvalues of basis kernel ell with multiplicities, merged clusters."""
    pairs = sorted(zip(delta[:, ell], dims), key=lambda z: -z[0])
    merged: list[list[float]] = []
    for val, dim in pairs:
        if merged and merged[-1][0] - val <= tol:
            merged[-1][1] += int(dim)
        else:
            merged.append([float(val), int(dim)])
    return [(v, d) for v, d in merged]


def _check_spectral(max_n: int, fault: str | None) -> dict:
    for n in range(1, max_n + 1):
        for p in range(0, n // 2 + 1):
            layer = scheme.LayerParams(n, p)
            delta = scheme.delta_matrix(layer)
            if fault == "delta_sign" and p >= 1:
                delta = delta.copy()
                delta[0, 1] = -delta[0, 1]
            dims = scheme.eigen_multiplicities(layer)
            for ell in range(p + 1):
                beta = np.zeros(p + 1)
                beta[ell] = 1.0
                gram = scheme.oracle_gram(scheme.BetaCoeffs(layer, beta))
                observed = scheme.oracle_eigenvalues(gram)
                scale = max(1.0, max(abs(v) for v, _ in observed))
                tol = 1e-8 * scale
                predicted = _merged_prediction(delta, dims, ell, tol)
                if len(predicted) != len(observed) or any(
                    abs(pv - ov) > tol or pd != od
                    for (pv, pd), (ov, od) in zip(predicted, observed)
                ):
                    # name the smallest eigenspace index whose formula value is
                    # missing from the oracle spectrum (or 0 on a pure
                    # multiplicity mismatch)
                    bad_j = 0
                    for j in range(p + 1):
                        if not any(abs(ov - delta[j, ell]) <= tol for ov, _ in observed):
                            bad_j = j
                            break
                    return _check(
                        "johnson_scheme",
                        "spectral_correctness",
                        False,
                        {"n": n, "p": p, "ell": ell, "j": bad_j},
                        f"formula spectrum {predicted} != oracle {observed}",
                    )
    return _check("johnson_scheme", "spectral_correctness", True, {"max_n": max_n})


def _check_characterization(max_n: int, trials: int, rng: np.random.Generator) -> dict:
    for n in range(1, max_n + 1):
        for p in range(0, n // 2 + 1):
            layer = scheme.LayerParams(n, p)
            verts = scheme.vertex_betas(layer)
            for trial in range(trials):
                if trial % 2 == 0:
                    beta = rng.normal(size=p + 1)
                else:
                    lam = rng.random(p + 1)
                    lam = lam / lam.sum() * rng.uniform(0.0, 1.3)
                    beta = lam @ verts
                coeffs = scheme.BetaCoeffs(layer, beta)
                fast = bool(scheme.is_admissible(coeffs, tol=1e-8))
                gram = scheme.oracle_gram(coeffs)
                eigs = np.linalg.eigvalsh(gram.matrix)
                scale = max(1.0, float(np.abs(eigs).max()))
                slow = bool(eigs.min() >= -1e-8 * scale and gram.matrix[0, 0] <= 1.0 + 1e-8)
                if fast != slow:
                    return _check(
                        "johnson_scheme",
                        "characterization_equivalence",
                        False,
                        {"n": n, "p": p, "trial": trial},
                        f"is_admissible={fast} but oracle={slow} for beta={beta.tolist()}",
                    )
    return _check(
        "johnson_scheme",
        "characterization_equivalence",
        True,
        {"max_n": max_n, "trials_per_layer": trials},
    )


def _check_vertices(max_n: int, fault: str | None) -> dict:
    for n in range(1, max_n + 1):
        for p in range(0, n // 2 + 1):
            layer = scheme.LayerParams(n, p)
            verts = scheme.vertex_betas(layer)
            if fault == "vertex_norm":
                verts = verts * 1.01
            for i in range(p + 1):
                beta = scheme.BetaCoeffs(layer, verts[i])
                diag = float(scheme.eta_vector(layer) @ verts[i])
                profile = scheme.eigen_profile(beta)
                off = np.delete(profile, i)
                peak = max(1.0, abs(profile[i]))
                if abs(diag - 1.0) > 1e-12 or np.abs(off).max(initial=0.0) > 1e-9 * peak:
                    return _check(
                        "johnson_scheme",
                        "vertex_validity",
                        False,
                        {"n": n, "p": p, "i": i},
                        f"diagonal {diag!r}, profile {profile.tolist()}",
                    )
    return _check("johnson_scheme", "vertex_validity", True, {"max_n": max_n})


def _check_complement(max_n: int) -> dict:
    for n in range(2, max_n + 1):
        spec = kernels.universal_kernel(n)
        for w in range(n // 2 + 1, n + 1):
            pts = [
                HypercubePoint.from_array(row)
                for row in scheme.enumerate_layer(scheme.LayerParams(n, w))
            ]
            comp = [pt.complement() for pt in pts]
            upper = kernels.gram(spec, pts)
            lower = kernels.gram(spec, comp)
            if not np.array_equal(upper, lower):
                return _check(
                    "kernels",
                    "complement_consistency",
                    False,
                    {"n": n, "p": w},
                    "gram on layer p differs from gram on complemented layer n-p",
                )
    return _check("kernels", "complement_consistency", True, {"max_n": max_n})


def _check_containment(rng: np.random.Generator, triples: int = 40) -> dict:
    for n, p in ((6, 2), (6, 3), (8, 3)):
        layer = scheme.LayerParams(n, p)
        rows = scheme.enumerate_layer(layer)
        verts = scheme.vertex_betas(layer)
        for trial in range(triples):
            m = int(rng.integers(2, 13))
            idx = rng.integers(0, rows.shape[0], size=m)
            bits = rows[idx].astype(np.int64)
            ip = bits @ bits.T
            grams = []
            for t in range(p + 1):
                table = np.array(
                    [
                        sum(verts[t, ell] * scheme.binomial(k, ell) for ell in range(p + 1))
                        for k in range(p + 1)
                    ]
                )
                grams.append(table[ip])
            lam = rng.random(p + 1)
            lam /= lam.sum()
            alpha = rng.normal(size=m)
            quads = np.array([float(alpha @ g @ alpha) for g in grams])
            mixed = float(lam @ quads)
            direct = float(alpha @ sum(l * g for l, g in zip(lam, grams)) @ alpha)
            scale = max(1.0, abs(mixed), abs(direct))
            if abs(mixed - direct) > 1e-10 * scale:
                return _check(
                    "kernels",
                    "universal_containment",
                    False,
                    {"n": n, "p": p, "trial": trial},
                    f"mixture identity violated: {mixed} vs {direct}",
                )
            lhs = float(((p + 1) * lam) ** 2 @ quads)
            rhs = (p + 1) ** 2 * direct
            if lhs > rhs + 1e-10 * max(1.0, abs(rhs)):
                return _check(
                    "kernels",
                    "universal_containment",
                    False,
                    {"n": n, "p": p, "trial": trial},
                    f"norm bound violated: {lhs} > {rhs}",
                )
    return _check("kernels", "universal_containment", True, {"triples": triples})


def _check_conjunction(rng: np.random.Generator, fault: str | None) -> dict:
    n, s = 12, 4
    for ell in range(0, s + 1):
        literals = sorted(rng.choice(n, size=ell, replace=False).tolist())
        model = kernels.analytic_weights(n, s, literals)
        if fault == "conjunction_alpha":
            model = TrainedModel(
                model.spec, model.support, model.alphas + 1e-3, dict(model.report)
            )
        data = gen_conjunction_dataset(n, literals, "sparse", s, 60, 0.0, seed=int(rng.integers(2**31)))
        preds = model.predict_many(data.points)
        if np.abs(preds - data.labels).max() > 1e-9:
            return _check(
                "kernels",
                "conjunction_exactness",
                False,
                {"n": n, "s": s, "ell": ell},
                f"max prediction error {np.abs(preds - data.labels).max():.3g}",
            )
    return _check("kernels", "conjunction_exactness", True, {"n": n, "s": s})


def _check_fenchel(max_err: float = 1e-6) -> dict:
    zs = np.linspace(-3.0, 3.0, 121)
    for loss in (learners.HINGE, learners.ABSOLUTE):
        for y in (-1.0, 1.0):
            ya = np.array(y)
            lo, hi = loss.conjugate_domain(np.array([y]))
            grid = np.linspace(float(lo[0]), float(hi[0]), 2001)
            for z in zs:
                direct = float(loss.value(np.array(z), ya))
                via_conj = float(np.max(grid * z - loss.conjugate(grid, y)))
                if abs(direct - via_conj) > max_err:
                    return _check(
                        "learners",
                        "fenchel_young",
                        False,
                        {"loss": loss.name, "y": y, "z": float(z)},
                        f"{direct} vs sup {via_conj}",
                    )
    return _check("learners", "fenchel_young", True, {"grid": "z in [-3,3], 121 points"})


def _check_mkl_gap(rng: np.random.Generator) -> dict:
    for loss in (learners.HINGE, learners.ABSOLUTE):
        n, p, m = 6, 2, 10
        rows = scheme.enumerate_layer(scheme.LayerParams(n, p))
        idx = rng.integers(0, rows.shape[0], size=m)
        pts = [HypercubePoint.from_array(rows[i]) for i in idx]
        if loss.name == "hinge":
            labels = rng.integers(0, 2, size=m) * 2.0 - 1.0
        else:
            labels = rng.uniform(-1.0, 1.0, size=m)
        problem = learners.MklLayerProblem(
            learners.layer_vertex_grams(pts, p), labels, lam=0.1, loss=loss
        )
        sol = learners.mkl_layer_solve(problem, outer_iters=150)
        if not np.all(np.diff(sol.trace) <= 1e-12):
            return _check(
                "learners",
                "mkl_saddle",
                False,
                {"loss": loss.name},
                "best-so-far trace increased",
            )
        if sol.gap > 1e-4 * (1.0 + abs(sol.objective)):
            return _check(
                "learners",
                "mkl_saddle",
                False,
                {"loss": loss.name},
                f"duality gap {sol.gap:.3g} too large for objective {sol.objective:.3g}",
            )
    return _check("learners", "mkl_saddle", True, {"instances": 2})


def verify_suite(
    max_n: int = 8, trials: int = 200, seed: int = 0, fault: str | None = None
) -> dict:
    """Run every oracle-backed invariant; returns a machine-readable verdict.

    ``fault`` injects one of three documented bugs into a check's inputs
    (see :data:`FAULT_TAGS`) so the suite's failure reporting can itself be
    tested; the library under test is never modified.
    """
    if fault is not None and fault not in FAULT_TAGS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULT_TAGS}")
    rng = np.random.default_rng(seed)
    oracle_cap = min(max_n, scheme.MAX_ORACLE_N)
    checks = [
        _check_spectral(oracle_cap, fault),
        _check_characterization(oracle_cap, trials, rng),
        _check_vertices(oracle_cap, fault),
        _check_complement(oracle_cap),
        _check_containment(rng),
        _check_conjunction(rng, fault),
        _check_fenchel(),
        _check_mkl_gap(rng),
    ]
    passed = all(c["passed"] for c in checks)
    return {
        "passed": passed,
        "max_n": max_n,
        "seed": seed,
        "fault": fault,
        "checks": checks,
        "failures": [
            {"module": c["module"], "check": c["check"], "params": c["params"]}
            for c in checks
            if not c["passed"]
        ],
    }


# ---------------------------------------------------------------------------
# Benchmarks


@dataclass
class RunReport:
    config: dict
    lam: float | None
    objective: float | None
    gap: float | None
    per_layer: dict
    train_losses: dict
    test_losses: dict
    wall_seconds: float
    seed: int
    train_meta: dict
    test_meta: dict

    def to_json_dict(self, include_timing: bool = False) -> dict:
        out = {
            "config": self.config,
            "lambda": self.lam,
            "objective": self.objective,
            "gap": self.gap,
            "per_layer": self.per_layer,
            "train_losses": self.train_losses,
            "test_losses": self.test_losses,
            "seed": self.seed,
            "train_meta": self.train_meta,
            "test_meta": self.test_meta,
        }
        if include_timing:
            out["wall_seconds"] = self.wall_seconds
        return out


def evaluate_losses(preds: np.ndarray, labels01: np.ndarray, convention: str) -> dict:
    """Hinge, 0-1 and absolute losses of real-valued predictions.

    ``convention`` is "pm1" (predictions target labels mapped to +-1,
    threshold at 0) or "zero_one" (predictions target {0,1}, threshold at
    1/2).  All three losses are reported in the model's native convention.
    """
    y01 = np.asarray(labels01, dtype=float)
    ypm = 2.0 * y01 - 1.0
    preds = np.asarray(preds, dtype=float)
    if convention == "pm1":
        hinge = float(np.mean(np.maximum(0.0, 1.0 - ypm * preds)))
        zero_one = float(np.mean((preds >= 0.0) != (y01 >= 0.5)))
        absolute = float(np.mean(np.abs(preds - ypm)))
    elif convention == "zero_one":
        hinge = float(np.mean(np.maximum(0.0, 1.0 - ypm * (2.0 * preds - 1.0))))
        zero_one = float(np.mean((preds >= 0.5) != (y01 >= 0.5)))
        absolute = float(np.mean(np.abs(preds - y01)))
    else:
        raise ValueError(f"unknown label convention {convention!r}")
    return {"hinge": hinge, "zero_one": zero_one, "absolute": absolute}


BENCH_ALGOS = ("universal", "conjunction", "sparse-analytic", "mkl")


def bench_conjunction(
    n: int,
    s: int,
    literals_size: int,
    m: int,
    algo: str,
    B: float,
    eps: float,
    seed: int,
    noise_rate: float = 0.0,
    epochs: int = 300,
    outer_iters: int = 300,
    t_scale: float = 1.0,
) -> RunReport:
    """Generate a conjunction task, train with the chosen kernel, report losses.

    The holdout is a fresh sample of the same size from an advanced seed
    stream.  Hinge-trained algorithms map {0,1} labels to {-1,+1}
    internally; the convention is recorded in the report.
    """
    if algo not in BENCH_ALGOS:
        raise ValueError(f"unknown algo {algo!r}; choose from {BENCH_ALGOS}")
    t0 = time.perf_counter()
    lit_rng = np.random.default_rng(stream_seed(seed, 0))
    literals = sorted(lit_rng.choice(n, size=literals_size, replace=False).tolist())
    train = gen_conjunction_dataset(n, literals, "sparse", s, m, noise_rate, stream_seed(seed, 1))
    test = gen_conjunction_dataset(n, literals, "sparse", s, m, noise_rate, stream_seed(seed, 2))
    trainer_seed = stream_seed(seed, 3)
    lam = eps / (n * B * B)
    per_layer: dict = {}
    gap = None
    objective = None
    if algo == "sparse-analytic":
        convention = "zero_one"
        model = kernels.analytic_weights(n, s, literals)
    elif algo == "mkl":
        convention = "pm1"
        labels_pm = 2.0 * train.labels - 1.0
        result = learners.mkl_train(
            list(train.points), labels_pm, B, eps, outer_iters=outer_iters
        )
        model = result.model
        objective = result.objective
        gap = max(sol.gap for sol in result.per_layer.values())
        per_layer = {
            str(w): {
                "beta": sol.beta.tolist(),
                "objective": sol.objective,
                "gap": sol.gap,
                "inner_converged": sol.inner_converged,
            }
            for w, sol in result.per_layer.items()
        }
    else:
        convention = "pm1"
        labels_pm = 2.0 * train.labels - 1.0
        spec = (
            kernels.universal_kernel(n)
            if algo == "universal"
            else kernels.conjunction_kernel(n, s, eps, t_scale=t_scale)
        )
        model = learners.pegasos_train(
            spec, list(train.points), labels_pm, lam, epochs=epochs, seed=trainer_seed
        )
        objective = model.report["objective"]
    train_losses = evaluate_losses(model.predict_many(train.points), train.labels, convention)
    test_losses = evaluate_losses(model.predict_many(test.points), test.labels, convention)
    wall = time.perf_counter() - t0
    config = {
        "n": n,
        "s": s,
        "literals_size": literals_size,
        "literals": literals,
        "m": m,
        "algo": algo,
        "B": B,
        "eps": eps,
        "seed": seed,
        "noise_rate": noise_rate,
        "epochs": epochs,
        "outer_iters": outer_iters,
        "t_scale": t_scale,
        "label_convention": convention,
    }
    return RunReport(
        config=config,
        lam=lam if algo != "sparse-analytic" else None,
        objective=objective,
        gap=gap,
        per_layer=per_layer,
        train_losses=train_losses,
        test_losses=test_losses,
        wall_seconds=wall,
        seed=seed,
        train_meta=train.meta,
        test_meta=test.meta,
    )
