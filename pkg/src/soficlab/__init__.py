"""soficlab: sofic entropy and model-measure diagnostics for finite-alphabet
shift processes over explicit sofic approximations.

Library layout:
  groups       group specs, elements, word-metric balls, coset keys
  randomness   seeded Philox streams and hand-rolled permutation draws
  sofic        sofic approximations sigma: G -> Sym(V), defects, spectra
  processes    shift-invariant processes via exact finite-window marginals
  models       pullback names, empirical distributions, good-model counting
  covering     Hamming metrics, covering/packing numbers, measure covers
  convergence  local weak*/quenched/doubly-quenched defects and dispersion
  entropy      entropy curves from counts and covering numbers
  experiments  the E1..E9 batch experiments behind the CLI
"""

from .groups import GroupSpec, Window, coind_group

__version__ = "0.1.0"

__all__ = ["GroupSpec", "Window", "coind_group", "__version__"]
