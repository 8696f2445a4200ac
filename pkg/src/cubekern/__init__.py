"""cubekern: kernels, multiple-kernel learning and randomized embeddings on
Boolean hypercube layers.

Subpackages by role:

* :mod:`cubekern.scheme`    -- layer combinatorics, spectral algebra, oracles
* :mod:`cubekern.kernels`   -- hypercube points, layer kernels, the universal
  kernel, conjunction kernels
* :mod:`cubekern.learners`  -- kernelized SGD training, layer-wise
  multiple-kernel learning, duality gaps, Rademacher estimates
* :mod:`cubekern.embedding` -- randomized bit embeddings of [0,1]^n and
  kernel lifting
* :mod:`cubekern.harness`   -- dataset generation, verification suite,
  benchmarks, file I/O
"""

from . import scheme, kernels, learners, embedding, harness

__version__ = "0.1.0"

__all__ = ["scheme", "kernels", "learners", "embedding", "harness", "__version__"]
