"""Spectral anatomy of kernels on one hypercube layer.

Any kernel on the weight-p layer of {0,1}^n whose value depends only on
<x, y> is a linear combination of the binomial basis kernels
b_l(x, y) = C(<x, y>, l).  This script shows that the whole spectrum of
such a kernel is captured by a tiny (p+1)x(p+1) triangular matrix, and
checks everything against a dense eigendecomposition.
"""

import numpy as np

from cubekern import scheme
from cubekern.scheme import BetaCoeffs, LayerParams

n, p = 8, 3
layer = LayerParams(n, p)
print(f"layer: weight-{p} slice of the {n}-cube, {layer.size()} points")

delta = scheme.delta_matrix(layer)
eta = scheme.eta_vector(layer)
dims = scheme.eigen_multiplicities(layer)
print("\neigenvalue map (column l = spectrum of b_l):")
print(np.array2string(delta, precision=0))
print("eigenspace dimensions:", dims, " (sum =", dims.sum(), ")")
print("diagonal functional eta:", eta)

# pick a kernel, read off its spectrum, confirm against brute force
beta = np.array([0.05, 0.1, -0.02, 0.01])
coeffs = BetaCoeffs(layer, beta)
profile = scheme.eigen_profile(coeffs)
print("\nkernel beta:", beta)
print("predicted distinct eigenvalues:", np.round(profile, 6))

gram = scheme.oracle_gram(coeffs)
observed = scheme.oracle_eigenvalues(gram)
print(f"dense {gram.matrix.shape[0]}x{gram.matrix.shape[0]} eigendecomposition:")
for value, mult in observed:
    print(f"  eigenvalue {value:+.6f} with multiplicity {mult}")

report = scheme.is_admissible(coeffs)
print("\nadmissible (PSD, diagonal <= 1)?", report.ok, "- diagonal:", round(report.diagonal, 6))

# the admissible set is a polytope with p+1 vertices
verts = scheme.vertex_betas(layer)
print("\npolytope vertices (rows):")
print(np.array2string(verts, precision=4, suppress_small=True))
for i, row in enumerate(verts):
    prof = scheme.eigen_profile(BetaCoeffs(layer, row))
    print(f"  vertex {i}: diagonal = {float(eta @ row):.12f}, "
          f"spectrum concentrated on eigenspace {int(np.argmax(np.abs(prof)))}")
