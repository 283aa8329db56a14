"""Numerical laboratory for distorted Hankel integral operators.

Modules: ``grid`` (quadrature grids), ``symbol`` (symbol functions),
``besov`` (dyadic Fourier band norms), ``operator`` (Nystrom matrices),
``spectrum`` (singular values and Schatten norms), ``projection``
(averaging projections) and ``lab`` (experiments and CLI).
"""

__version__ = "0.1.0"
