"""
Hermitian Dirichlet Lab
=======================

Numerical laboratory for fully nonlinear elliptic equations F(𝔤[u]) = ψ
on Hermitian products X × S:

- ``symcone``    symmetric concave operators on Gårding cones
- ``arrowspec``  eigenvalue localization for arrow matrices
- ``prodgrid``   finite differences on the torus × cylinder grid
- ``dirichlet``  subsolutions, continuity path and degenerate limits
- ``harness``    estimate-ratio probes across grid ladders
"""

__version__ = "1.0.0"
