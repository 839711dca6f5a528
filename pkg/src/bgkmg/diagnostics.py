"""Norms, moments and numerical stability diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import Mesh, VelocityGrid
from .dlra import LowRankState
from .full_solver import (
    FullState,
    SchemeVariant,
    advance,
    reconstruct_f,
)


@dataclass(frozen=True)
class DiagRecord:
    """One row of the per-step diagnostics time series."""

    t: float
    rank: int
    h_norm_sq: float
    kappa_plus: float
    kappa_minus: float
    mass: float


def h_norm_sq(f: np.ndarray, vgrid: VelocityGrid) -> float:
    """Squared stability norm: prefactor * sum_jk f_jk^2 w_three_half_k.

    The prefactor (2 pi)^{dim/2} makes the norm of the unit-moment
    equilibrium state consistent across dimensions.
    """
    return float(vgrid.hnorm_prefactor * (f**2 @ vgrid.w_three_half).sum())


def h_norm_sq_factored(rho: np.ndarray, x_basis: np.ndarray, s_core: np.ndarray,
                       v_basis: np.ndarray, vgrid: VelocityGrid) -> float:
    """Squared stability norm of the reconstructed distribution, evaluated
    without forming it.

    With f = c rho_j g_jk e^{-|v|^2/2} the weights collapse to w_half and

        ||f||^2 = c * sum_j rho_j^2 * [X G X^T]_jj,
        G = (S V^T) diag(w_half) (S V^T)^T,  c = norm_const.
    """
    sv = s_core @ v_basis.T
    gram = (sv * vgrid.w_half[None, :]) @ sv.T
    quad = np.einsum("jp,pq,jq->j", x_basis, gram, x_basis)
    return float(vgrid.norm_const * (rho**2 * quad).sum())


def g_moment(g: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Discrete unit moment per cell: norm_const * sum_k g_jk w_half_k."""
    return g @ vgrid.z_vector


def g_moment_factored(x_basis: np.ndarray, s_core: np.ndarray, v_basis: np.ndarray,
                      vgrid: VelocityGrid) -> np.ndarray:
    return x_basis @ (s_core @ (v_basis.T @ vgrid.z_vector))


def kappa_bounds(g, vgrid: VelocityGrid) -> tuple[float, float]:
    """(max, min) over cells of the discrete g-moment; 1 for a conservative
    scheme.  Accepts a dense matrix or a LowRankState (factored evaluation)."""
    if isinstance(g, LowRankState):
        moments = g_moment_factored(g.x_basis, g.s_core, g.v_basis, vgrid)
    else:
        moments = g_moment(g, vgrid)
    return float(moments.max()), float(moments.min())


def cfl_dissipation_gap(f: np.ndarray, mesh: Mesh, vgrid: VelocityGrid, dt: float) -> float:
    """Explicit-update energy minus available dissipation; <= 0 under the CFL bound.

    Evaluates, with the stability norm,

        dt * || d_x f diag(v) - (dx/2) d_xx f diag(|v|) ||^2
        - dx * || d_plus f diag(|v|^{1/2}) ||^2

    summed over spatial axes.  Negativity for dt * v_cap <= dx is what makes
    the conservative scheme non-expansive.
    """
    total = 0.0
    for axis in range(mesh.ndim):
        va = vgrid.component(axis)
        dx = mesh.grids[axis].dx
        update = mesh.apply_dx(f, axis) * va[None, :] \
            - (dx / 2) * mesh.apply_dxx(f, axis) * np.abs(va)[None, :]
        dissip = mesh.apply_dplus(f, axis) * np.sqrt(np.abs(va))[None, :]
        total += dt * h_norm_sq(update, vgrid) - dx * h_norm_sq(dissip, vgrid)
    return float(total)


def instability_demo(n_x: int, n_v: int, steps: int, amplitude: float = 0.1,
                     mode: int | None = None, sigma: float = 0.0,
                     domain: tuple[float, float] = (-10.0, 10.0)
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Norm traces of the naive and stable schemes from identical perturbed data.

    The density starts at 1 + amplitude * cos of a grid-periodic mode (by
    default a quarter of the sampling rate, where the central-difference
    symbol is largest) with g constant; the step obeys dt * v_cap = 0.99 dx.
    Returns (naive_trace, stable_trace) of squared norms, length steps + 1.
    """
    from .discretization import cfl_timestep, gauss_hermite_rule

    if steps < 1:
        raise ValueError("steps must be >= 1")
    mesh = Mesh.line(domain[0], domain[1], n_x)
    vgrid = gauss_hermite_rule(n_v)
    dt = cfl_timestep(mesh.grids[0].dx, vgrid.v_cap, 0.99)
    m = n_x // 4 if mode is None else mode
    rho0 = 1.0 + amplitude * np.cos(2 * np.pi * m * np.arange(n_x) / n_x)
    g0 = np.ones((n_x, n_v))

    traces = []
    for variant in (SchemeVariant.NAIVE_ADVECTION, SchemeVariant.STABLE_CONSERVATIVE):
        state = FullState(rho=rho0.copy(), g=g0.copy(), t=0.0)
        trace = [h_norm_sq(reconstruct_f(state.rho, state.g, vgrid), vgrid)]
        for _ in range(steps):
            state = advance(state, mesh, vgrid, sigma, dt, variant)
            trace.append(h_norm_sq(reconstruct_f(state.rho, state.g, vgrid), vgrid))
        traces.append(np.array(trace))
    return traces[0], traces[1]


def transport_mode_growth(n_x: int, n_v: int, steps: int,
                          mode: int | None = None,
                          domain: tuple[float, float] = (-10.0, 10.0)) -> np.ndarray:
    """Norm trace of the bare central-difference transport recursion
    f' = f - dt * d_x f diag(v), the linear map the naive scheme realizes on
    constant-g data.  Every Fourier mode of it is amplified, so the trace
    grows strictly; this is the von Neumann instability witness.
    """
    from .discretization import cfl_timestep, gauss_hermite_rule

    mesh = Mesh.line(domain[0], domain[1], n_x)
    vgrid = gauss_hermite_rule(n_v)
    dt = cfl_timestep(mesh.grids[0].dx, vgrid.v_cap, 0.99)
    m = n_x // 4 if mode is None else mode
    rho0 = 1.0 + 0.1 * np.cos(2 * np.pi * m * np.arange(n_x) / n_x)
    f = reconstruct_f(rho0, np.ones((n_x, n_v)), vgrid)
    trace = [h_norm_sq(f, vgrid)]
    for _ in range(steps):
        f = f - dt * mesh.apply_dx(f) * vgrid.nodes[None, :]
        trace.append(h_norm_sq(f, vgrid))
    return np.array(trace)
