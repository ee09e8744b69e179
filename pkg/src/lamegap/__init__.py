"""Numerical lab for the plane Lamé system with two nearly touching rigid inclusions.

Modules: ``elasticity`` (material law, rigid motions, closed-form
constants), ``geometry`` (gap profiles and presets), ``mesh`` (graded
triangulation of the gap domain), ``fem`` (P1/P2 solver), ``decomposition``
(basis fields, factor matrices, free constants), ``asymptotics`` (auxiliary
fields, neck integrals, starred matrices, expansions) and ``harness``
(config, sweeps, reports, CLI).
"""

__version__ = "0.1.0"
