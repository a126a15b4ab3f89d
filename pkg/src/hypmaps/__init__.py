"""Numerical companion for the stability of equivariant harmonic maps from the
hyperbolic plane under the Schroedinger maps and harmonic map heat flows.

Submodules: ``geometry`` (radial grids and operators), ``target`` (sphere and
hyperbolic targets, explicit harmonic maps), ``frame`` (Coulomb frame),
``linop`` (linearized operator and spectra), ``heat`` (heat semigroup and
Littlewood-Paley pieces), ``flows`` (nonlinear and linear evolutions),
``caloric`` (caloric gauge), ``norms`` (dispersive norms and inequalities),
``cli`` and ``acceptance``.
"""

__version__ = "0.1.0"
