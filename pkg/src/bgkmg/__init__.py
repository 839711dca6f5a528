"""Solvers for the linear BGK equation under the multiplicative split f = M*g.

Submodules:
    discretization   velocity quadrature, spatial grids, stencil matrices
    full_solver      full-grid time stepping (stable and naive variants)
    dlra             rank-adaptive low-rank integrator with conservative truncation
    diagnostics      norms, moments, stability checks
    presets, config, runner, output, checks, cli
                     experiment configuration, driver and persistence
"""

__version__ = "0.1.0"
