import itertools
import math

import numpy as np
import pytest

from cubekern.scheme import LayerParams


def canonical_layers(max_n, min_n=1):
    """All (n, p) with p <= n/2 up to max_n."""
    out = []
    for n in range(min_n, max_n + 1):
        for p in range(n // 2 + 1):
            out.append(LayerParams(n, p))
    return out


def layer_points(n, p):
    """Weight-p bit tuples of length n, lexicographic (independent of library code)."""
    return [x for x in itertools.product((0, 1), repeat=n) if sum(x) == p]


def explicit_basis_matrices(n, p):
    """D and binomial-basis matrices built from scratch for oracle comparisons."""
    pts = layer_points(n, p)
    m = len(pts)
    ips = np.array([[sum(a * b for a, b in zip(x, y)) for y in pts] for x in pts])
    d_mats = [(ips == ell).astype(float) for ell in range(p + 1)]
    b_mats = [np.vectorize(lambda k, e=ell: float(math.comb(k, e)))(ips) for ell in range(p + 1)]
    return d_mats, b_mats


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
