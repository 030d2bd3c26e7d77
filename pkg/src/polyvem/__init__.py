"""SUPG-stabilised conforming virtual elements for 2D advection-diffusion.

Submodules: quadrature, basis, mesh, dofs, projectors, forms, system, harness
and cli. Nothing heavy is imported here so that the command line can cap BLAS
threads before numpy loads.
"""

__version__ = "0.1.0"
