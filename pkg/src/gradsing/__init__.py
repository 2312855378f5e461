"""Numerical laboratory for radial heat flow with a persistent interior
gradient singularity: u_t = Laplace(u) + u * u_r^3 on a punctured ball.

Subpackages follow the pipeline order: special functions (`specfn`),
closed-form profiles and admissibility (`analytic`), initial data and the
regularized annulus problem (`initdata`), time integration and the
shrinking-annulus continuation (`solver`), property checks (`verify`),
and orchestration (`config`, `pipeline`, `cli`).
"""

__version__ = "0.1.0"
