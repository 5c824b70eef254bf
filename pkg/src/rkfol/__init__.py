"""Transverse foliations of the rotating Kepler problem, numerically.

Modules: phase (flow and integrals), coords (Delaunay/Poincare maps), orbits
(circular orbits, tori), stack (model Hamiltonians), contact (Liouville fields,
Reeb flow), periodic (binding and torus orbits), cz (Conley-Zehnder indices),
leaves (holomorphic leaves), foliation (discs, return map, reports), verify
(acceptance suite), io and cli.
"""
__version__ = "0.1.0"
