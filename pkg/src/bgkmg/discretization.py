"""Velocity quadrature, spatial grids, periodic stencil matrices and the CFL rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import eigh_tridiagonal

_SQRT_PI = math.sqrt(math.pi)


class QuadratureError(RuntimeError):
    """Quadrature node solver failed to converge."""


class StencilVariant(Enum):
    """How the difference matrices treat the domain ends.

    PERIODIC_CIRCULANT wraps the corner entries so all summation-by-parts
    identities hold exactly.  ZEROED_BOUNDARY_ROWS zeroes the first and last
    stencil rows instead; kept for comparison, the identities fail there.
    """

    PERIODIC_CIRCULANT = "periodic_circulant"
    ZEROED_BOUNDARY_ROWS = "zeroed_boundary_rows"


# ---------------------------------------------------------------------------
# velocity quadrature


@dataclass(frozen=True)
class VelocityGrid:
    """Gauss-Hermite quadrature data plus precomputed exponential weight vectors.

    ``nodes`` has shape (n_v,) in 1D and (n_v, 2) for flattened 2D tensor
    grids.  ``weights`` are the plain Gauss-Hermite weights for the weight
    function e^{-|v|^2}; the derived vectors are

        w_half       = weights * e^{|v|^2 / 2}
        w_full       = weights * e^{|v|^2}
        w_three_half = weights * e^{3 |v|^2 / 2}

    all evaluated in log space so they stay finite (or cleanly underflow to
    zero) even for several hundred nodes.  ``v_cap`` is the velocity bound
    used by the CFL rule: max |v_k| in 1D, max Euclidean norm in 2D.
    """

    nodes: np.ndarray
    weights: np.ndarray
    w_half: np.ndarray
    w_full: np.ndarray
    w_three_half: np.ndarray
    v_cap: float

    @property
    def n_v(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return 1 if self.nodes.ndim == 1 else self.nodes.shape[1]

    @property
    def norm_const(self) -> float:
        """Maxwellian normalization (2*pi)^(-dim/2)."""
        return (2.0 * math.pi) ** (-0.5 * self.dim)

    @property
    def hnorm_prefactor(self) -> float:
        """Prefactor (2*pi)^(dim/2) of the weighted stability norm."""
        return (2.0 * math.pi) ** (0.5 * self.dim)

    @property
    def speed_sq(self) -> np.ndarray:
        """|v_k|^2 per node."""
        if self.nodes.ndim == 1:
            return self.nodes**2
        return (self.nodes**2).sum(axis=1)

    def component(self, axis: int) -> np.ndarray:
        """Velocity component along one spatial axis, shape (n_v,)."""
        if self.nodes.ndim == 1:
            if axis != 0:
                raise IndexError(f"axis {axis} out of range for 1D grid")
            return self.nodes
        return self.nodes[:, axis]

    @property
    def z_vector(self) -> np.ndarray:
        """Moment vector Z_k = norm_const * w_half_k; g @ Z is the unit moment."""
        return self.norm_const * self.w_half


def _renormalize(mantissa: np.ndarray, exponent: np.ndarray):
    m, e = np.frexp(mantissa)
    return m, exponent + e


def _hermite_fn_pair(n: int, x: np.ndarray):
    """Scaled values of the orthonormal Hermite functions phi_{n-1}, phi_n at x.

    phi_j(x) = H_j(x) e^{-x^2/2} / sqrt(2^j j! sqrt(pi)).  Values are carried
    as (mantissa, base-2 exponent) pairs so the recurrence never over- or
    underflows; the upward recurrence follows the dominant solution and is
    stable at every x.
    """
    log2_phi0 = (-0.5 * x * x - 0.25 * math.log(math.pi)) / math.log(2.0)
    e0 = np.floor(log2_phi0).astype(np.int64)
    f_prev = np.exp2(log2_phi0 - e0)
    e_prev = e0
    f_cur, e_cur = _renormalize(math.sqrt(2.0) * x * f_prev, e_prev.copy())
    for j in range(1, n):
        shift = np.clip(e_prev - e_cur, -1100, 1100).astype(np.int32)
        aligned = np.ldexp(f_prev, shift)
        f_new = x * math.sqrt(2.0 / (j + 1)) * f_cur - math.sqrt(j / (j + 1.0)) * aligned
        f_prev, e_prev = f_cur, e_cur
        f_cur, e_cur = _renormalize(f_new, e_cur.copy())
    return (f_prev, e_prev), (f_cur, e_cur)


def _grid_from_log_weights(nodes: np.ndarray, log_w_full: np.ndarray, v_cap: float) -> VelocityGrid:
    speed_sq = nodes**2 if nodes.ndim == 1 else (nodes**2).sum(axis=1)
    w_full = np.exp(log_w_full)
    w_half = np.exp(log_w_full - 0.5 * speed_sq)
    w_three_half = np.exp(log_w_full + 0.5 * speed_sq)
    weights = np.exp(log_w_full - speed_sq)
    if not np.isfinite(w_three_half).all():
        raise QuadratureError("weight vector overflow; velocity grid too large")
    return VelocityGrid(
        nodes=nodes,
        weights=weights,
        w_half=w_half,
        w_full=w_full,
        w_three_half=w_three_half,
        v_cap=v_cap,
    )


def gauss_hermite_rule(n_v: int) -> VelocityGrid:
    """Gauss-Hermite rule with n_v nodes for the weight function e^{-v^2}.

    Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix of
    the Hermite recurrence, polished by Newton iteration on the scaled
    Hermite functions.  Weights use the derivative identity
    w_k e^{x_k^2} = 1 / (n phi_{n-1}(x_k)^2), which stays accurate at the
    extreme nodes where the eigenvector-based formula underflows.
    """
    if n_v < 1:
        raise ValueError(f"n_v must be >= 1, got {n_v}")
    if n_v == 1:
        return _grid_from_log_weights(np.zeros(1), np.array([math.log(_SQRT_PI)]), 1.0)

    off_diag = np.sqrt(np.arange(1, n_v) / 2.0)
    x = np.sort(eigh_tridiagonal(np.zeros(n_v), off_diag, eigvals_only=True))

    fn1 = en1 = None
    for _ in range(12):
        (fn1, en1), (fn, en) = _hermite_fn_pair(n_v, x)
        # phi_n'(x) = sqrt(2n) phi_{n-1}(x) - x phi_n(x); Newton step on phi_n
        shift = np.clip(en - en1, -1100, 1100).astype(np.int32)
        phi_n_rel = np.ldexp(fn, shift)  # phi_n / 2^{e_{n-1}}
        deriv_rel = math.sqrt(2.0 * n_v) * fn1 - x * phi_n_rel
        step = phi_n_rel / deriv_rel
        x = x - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(x))):
            break

    # residual check: phi_n should vanish at the polished nodes
    (fn1, en1), (fn, en) = _hermite_fn_pair(n_v, x)
    shift = np.clip(en - en1, -1100, 1100).astype(np.int32)
    residual = np.abs(np.ldexp(fn, shift)) / np.hypot(np.ldexp(fn, shift), fn1)
    worst = int(np.argmax(residual))
    if residual[worst] > 1e-8:
        raise QuadratureError(
            f"node solver did not converge at index {worst}: residual {residual[worst]:.3e}"
        )

    # enforce exact node symmetry about 0 (eigenvalues are symmetric to eps)
    x = 0.5 * (x - x[::-1])
    (fn1, en1), _ = _hermite_fn_pair(n_v, x)
    log_w_full = -(math.log(n_v) + 2.0 * (np.log(np.abs(fn1)) + en1 * math.log(2.0)))
    return _grid_from_log_weights(x, log_w_full, float(np.abs(x).max()))


def tensor_velocity_grid_2d(n_v1: int, n_v2: int) -> VelocityGrid:
    """Flattened tensor product of two 1D rules; weight function e^{-|v|^2}.

    Node k = (k1, k2) carries the pair (v1_{k1}, v2_{k2}) and the product
    weight; v_cap is the largest Euclidean node norm.
    """
    g1 = gauss_hermite_rule(n_v1)
    g2 = gauss_hermite_rule(n_v2)
    v1, v2 = np.meshgrid(g1.nodes, g2.nodes, indexing="ij")
    nodes = np.column_stack([v1.ravel(), v2.ravel()])
    log_w1 = np.log(g1.w_full) - g1.nodes**2
    log_w2 = np.log(g2.w_full) - g2.nodes**2
    log_w = (log_w1[:, None] + log_w2[None, :]).ravel()
    speed_sq = (nodes**2).sum(axis=1)
    v_cap = float(np.sqrt(speed_sq.max()))
    return _grid_from_log_weights(nodes, log_w + speed_sq, v_cap)


# ---------------------------------------------------------------------------
# spatial grid and stencils


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid x_j = a + j*dx, j = 0..n_x-1, with dx = (b-a)/n_x."""

    n_x: int
    a: float
    b: float

    def __post_init__(self):
        if self.n_x < 1 or self.b <= self.a:
            raise ValueError("need n_x >= 1 and b > a")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.n_x

    @property
    def points(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.n_x)


@dataclass(frozen=True)
class StencilSet:
    """Central difference matrix d_x, stabilization matrix d_xx, forward d_plus."""

    d_x: np.ndarray
    d_xx: np.ndarray
    d_plus: np.ndarray
    dx: float
    variant: StencilVariant


def build_stencils(grid: SpatialGrid, variant: StencilVariant = StencilVariant.PERIODIC_CIRCULANT) -> StencilSet:
    """Tridiagonal stencil matrices for one spatial axis.

    d_x carries +-1/(2 dx) on the first off-diagonals, d_xx the usual
    (1, -2, 1)/dx^2 row, d_plus the forward difference (-1, 1)/dx.  The
    circulant variant wraps the corners; the other zeroes rows 0 and n_x-1
    of d_x/d_xx and leaves d_plus without wrap.
    """
    if grid.n_x < 3:
        raise ValueError(f"stencils need n_x >= 3, got {grid.n_x}")
    n, dx = grid.n_x, grid.dx
    d_x = np.zeros((n, n))
    d_xx = np.zeros((n, n))
    d_plus = np.zeros((n, n))
    idx = np.arange(n)
    d_x[idx, (idx + 1) % n] = 1.0 / (2 * dx)
    d_x[idx, (idx - 1) % n] = -1.0 / (2 * dx)
    d_xx[idx, idx] = -2.0 / dx**2
    d_xx[idx, (idx + 1) % n] = 1.0 / dx**2
    d_xx[idx, (idx - 1) % n] = 1.0 / dx**2
    d_plus[idx, idx] = -1.0 / dx
    d_plus[idx, (idx + 1) % n] = 1.0 / dx
    if variant is StencilVariant.ZEROED_BOUNDARY_ROWS:
        for m in (d_x, d_xx):
            m[0, :] = 0.0
            m[-1, :] = 0.0
        d_plus[-1, :] = 0.0
        d_plus[-1, -1] = -1.0 / dx
    return StencilSet(d_x=d_x, d_xx=d_xx, d_plus=d_plus, dx=dx, variant=variant)


# ---------------------------------------------------------------------------
# mesh: one or two periodic axes with per-axis stencil application


@dataclass(frozen=True)
class Mesh:
    """Bundle of spatial axes; applies stencils along each axis of the
    row-major flattened spatial index."""

    grids: tuple[SpatialGrid, ...]
    stencils: tuple[StencilSet, ...]

    @classmethod
    def line(cls, a: float, b: float, n_x: int,
             variant: StencilVariant = StencilVariant.PERIODIC_CIRCULANT) -> "Mesh":
        grid = SpatialGrid(n_x=n_x, a=a, b=b)
        return cls(grids=(grid,), stencils=(build_stencils(grid, variant),))

    @classmethod
    def plane(cls, a1: float, b1: float, n_x1: int, a2: float, b2: float, n_x2: int,
              variant: StencilVariant = StencilVariant.PERIODIC_CIRCULANT) -> "Mesh":
        g1 = SpatialGrid(n_x=n_x1, a=a1, b=b1)
        g2 = SpatialGrid(n_x=n_x2, a=a2, b=b2)
        return cls(grids=(g1, g2), stencils=(build_stencils(g1, variant), build_stencils(g2, variant)))

    @property
    def ndim(self) -> int:
        return len(self.grids)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(g.n_x for g in self.grids)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod([g.dx for g in self.grids]))

    @property
    def points(self) -> np.ndarray:
        """Flattened cell coordinates, shape (n_cells,) in 1D, (n_cells, 2) in 2D."""
        if self.ndim == 1:
            return self.grids[0].points
        x1, x2 = np.meshgrid(self.grids[0].points, self.grids[1].points, indexing="ij")
        return np.column_stack([x1.ravel(), x2.ravel()])

    def _apply(self, which: str, values: np.ndarray, axis: int) -> np.ndarray:
        sten = self.stencils[axis]
        arr = values.reshape(self.shape + values.shape[1:])
        if sten.variant is StencilVariant.PERIODIC_CIRCULANT:
            up = np.roll(arr, -1, axis=axis)
            down = np.roll(arr, 1, axis=axis)
            if which == "d_x":
                out = (up - down) / (2 * sten.dx)
            elif which == "d_xx":
                out = (up - 2 * arr + down) / sten.dx**2
            else:
                out = (up - arr) / sten.dx
        else:
            mat = getattr(sten, which)
            out = np.moveaxis(np.tensordot(mat, arr, axes=(1, axis)), 0, axis)
        return out.reshape(values.shape)

    def apply_dx(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        return self._apply("d_x", values, axis)

    def apply_dxx(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        return self._apply("d_xx", values, axis)

    def apply_dplus(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        return self._apply("d_plus", values, axis)


# ---------------------------------------------------------------------------
# CFL rule


def cfl_timestep(dx: float, v_cap: float, cfl: float, round_up_vcap: bool = False) -> float:
    """Largest stable step dt = cfl * dx / V with V = ceil(v_cap) if rounding.

    Rejects cfl > 1: the schemes are proven stable only for
    v_cap * dt <= dx.  Use :func:`cfl_timestep_unchecked` to override.
    """
    if cfl > 1.0:
        raise ValueError(
            f"cfl = {cfl} exceeds the stability bound cfl <= 1 (v_cap * dt <= dx); "
            "use cfl_timestep_unchecked to force an unstable step"
        )
    return cfl_timestep_unchecked(dx, v_cap, cfl, round_up_vcap)


def cfl_timestep_unchecked(dx: float, v_cap: float, cfl: float, round_up_vcap: bool = False) -> float:
    if dx <= 0 or v_cap <= 0 or cfl <= 0:
        raise ValueError("dx, v_cap and cfl must be positive")
    divisor = math.ceil(v_cap) if round_up_vcap else v_cap
    return cfl * dx / divisor
