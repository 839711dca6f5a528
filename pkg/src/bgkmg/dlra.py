"""Rank-adaptive basis-update & Galerkin integrator for the deviation factor.

One step: density update in factored form, K and L substeps, basis
augmentation with the old bases (rank 2r, optionally 4r with density- and
weight-scaled copies), Galerkin core update, then a truncation that either
minimizes the Frobenius tail (standard) or additionally preserves the
discrete unit moment of g exactly (conservative split along the moment
vector).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .discretization import Mesh, VelocityGrid
from .full_solver import _check_positive


class AugmentationMode(Enum):
    REDUCED_2R = "2r"
    BASIS_AUG_4R = "4r"


@dataclass(frozen=True)
class TruncationPolicy:
    """Rank selection: keep the smallest rank whose discarded singular-value
    tail satisfies sqrt(sum sigma_j^2) <= theta_coeff * sigma_max, capped at
    r_max.  ``conservative`` switches on the moment-preserving split."""

    theta_coeff: float
    r_max: int
    conservative: bool = True

    def __post_init__(self):
        if self.theta_coeff < 0:
            raise ValueError("theta_coeff must be >= 0")
        if self.r_max < 2:
            raise ValueError("r_max must be >= 2")


@dataclass
class LowRankState:
    """Factored deviation g ~ x_basis @ s_core @ v_basis.T plus the density."""

    rho: np.ndarray
    x_basis: np.ndarray
    s_core: np.ndarray
    v_basis: np.ndarray
    t: float = 0.0

    @property
    def rank(self) -> int:
        return self.s_core.shape[0]

    def g_dense(self) -> np.ndarray:
        return self.x_basis @ self.s_core @ self.v_basis.T


# ---------------------------------------------------------------------------
# orthonormalization helpers


def orthonormalize(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Economic QR with deterministic column signs.

    Signs are fixed so the largest-magnitude entry of every basis column is
    positive, making runs reproducible across BLAS builds.  Rank-deficient
    input (the augmented blocks routinely are) needs no special casing:
    reflector-based Q is orthonormal to machine precision regardless, with
    a == q @ r up to roundoff and span(a) <= span(q).
    """
    q, r = np.linalg.qr(a)
    return _fix_signs(q, r)


def _sign_vector(q: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[idx, np.arange(q.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _fix_signs(q: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    signs = _sign_vector(q)
    return q * signs, r * signs[:, None]


def augment_2r(new: np.ndarray, old_basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of [new, old_basis] plus the projection of the old basis.

    Returns (q, proj) with span(q) containing span(new) + span(old_basis) and
    proj = q.T @ old_basis.
    """
    q, _ = orthonormalize(np.column_stack([new, old_basis]))
    return q, q.T @ old_basis


def augment_4r(xhat: np.ndarray, rho_next: np.ndarray,
               vhat: np.ndarray, vgrid: VelocityGrid) -> tuple[np.ndarray, np.ndarray]:
    """Second augmentation required by the stability proof.

    The spatial basis is extended with its rows scaled by rho_next^2, the
    velocity basis with its rows scaled by w_half, and both are
    re-orthonormalized.
    """
    xbig, _ = orthonormalize(np.column_stack([xhat, (rho_next**2)[:, None] * xhat]))
    vbig, _ = orthonormalize(np.column_stack([vhat, vgrid.w_half[:, None] * vhat]))
    return xbig, vbig


# ---------------------------------------------------------------------------
# substeps


def rho_update(rho: np.ndarray, x_basis: np.ndarray, s_core: np.ndarray,
               v_basis: np.ndarray, mesh: Mesh, vgrid: VelocityGrid, dt: float) -> np.ndarray:
    """Density update evaluated in factored form.

    Identical result to the full-grid density step on the reconstructed g;
    the velocity contractions touch only the r columns of the basis.
    """
    c = vgrid.norm_const
    out = rho.astype(float).copy()
    for axis in range(mesh.ndim):
        va = vgrid.component(axis)
        dx = mesh.grids[axis].dx
        flux = rho * (x_basis @ (s_core @ (v_basis.T @ (va * vgrid.w_half))))
        stab = rho * (x_basis @ (s_core @ (v_basis.T @ (np.abs(va) * vgrid.w_half))))
        out -= dt * c * mesh.apply_dx(flux, axis)
        out += dt * c * (dx / 2) * mesh.apply_dxx(stab, axis)
    _check_positive(out)
    return out


def k_step(rho: np.ndarray, rho_next: np.ndarray, k_mat: np.ndarray, v_basis: np.ndarray,
           mesh: Mesh, vgrid: VelocityGrid, sigma: float, dt: float) -> np.ndarray:
    """Spatial-coefficient update with the velocity basis frozen.

    K' = diag(rho/rho') K - dt diag(1/rho') d_x(diag(rho) K) A
         + dt (dx/2) diag(1/rho') d_xx(diag(rho) K) B + sigma dt 1 c^T

    per axis, with A = V^T diag(v) V, B = V^T diag(|v|) V, c = V^T 1.
    """
    scaled = rho[:, None] * k_mat
    inv_next = (1.0 / rho_next)[:, None]
    out = (rho / rho_next)[:, None] * k_mat
    for axis in range(mesh.ndim):
        va = vgrid.component(axis)
        dx = mesh.grids[axis].dx
        a_mat = v_basis.T @ (va[:, None] * v_basis)
        b_mat = v_basis.T @ (np.abs(va)[:, None] * v_basis)
        out -= dt * inv_next * (mesh.apply_dx(scaled, axis) @ a_mat)
        out += dt * (dx / 2) * inv_next * (mesh.apply_dxx(scaled, axis) @ b_mat)
    out += sigma * dt * v_basis.sum(axis=0)[None, :]
    return out


def l_step(rho: np.ndarray, rho_next: np.ndarray, x_basis: np.ndarray, l_mat: np.ndarray,
           mesh: Mesh, vgrid: VelocityGrid, sigma: float, dt: float) -> np.ndarray:
    """Velocity-coefficient update: Galerkin projection of the conservative
    right-hand side onto the frozen spatial basis.

    L' = L M1 - dt diag(v) L M2 + dt (dx/2) diag(|v|) L M3 + sigma dt 1 d^T

    with M1 = X^T diag(rho/rho') X, M2 = (d_x diag(rho) X)^T diag(1/rho') X,
    M3 the same with d_xx, and d = X^T 1.
    """
    scaled = rho[:, None] * x_basis
    x_over_next = x_basis / rho_next[:, None]
    out = l_mat @ (x_basis.T @ ((rho / rho_next)[:, None] * x_basis))
    for axis in range(mesh.ndim):
        va = vgrid.component(axis)
        dx = mesh.grids[axis].dx
        m2 = mesh.apply_dx(scaled, axis).T @ x_over_next
        m3 = mesh.apply_dxx(scaled, axis).T @ x_over_next
        out -= dt * va[:, None] * (l_mat @ m2)
        out += dt * (dx / 2) * np.abs(va)[:, None] * (l_mat @ m3)
    out += sigma * dt * x_basis.sum(axis=0)[None, :]
    return out


def s_step(rho: np.ndarray, rho_next: np.ndarray, xbig: np.ndarray, vbig: np.ndarray,
           s_tilde: np.ndarray, mesh: Mesh, vgrid: VelocityGrid,
           sigma: float, dt: float) -> np.ndarray:
    """Galerkin core update on the augmented bases, including the collision
    damping and its rank-one source.

    (1 + sigma dt) S' = G1 St - dt sum_axes G2 St A + dt (dx/2) sum_axes G3 St B
                        + sigma dt (X^T 1)(V^T 1)^T
    """
    scaled = rho[:, None] * xbig
    x_over_next = xbig / rho_next[:, None]
    out = (xbig.T @ ((rho / rho_next)[:, None] * xbig)) @ s_tilde
    for axis in range(mesh.ndim):
        va = vgrid.component(axis)
        dx = mesh.grids[axis].dx
        g2 = x_over_next.T @ mesh.apply_dx(scaled, axis)
        g3 = x_over_next.T @ mesh.apply_dxx(scaled, axis)
        a_mat = vbig.T @ (va[:, None] * vbig)
        b_mat = vbig.T @ (np.abs(va)[:, None] * vbig)
        out -= dt * (g2 @ s_tilde @ a_mat)
        out += dt * (dx / 2) * (g3 @ s_tilde @ b_mat)
    out += sigma * dt * np.outer(xbig.sum(axis=0), vbig.sum(axis=0))
    return out / (1.0 + sigma * dt)


# ---------------------------------------------------------------------------
# truncation


def _tail_rank(singular_values: np.ndarray, threshold: float) -> int:
    """Smallest kept rank whose discarded tail has Frobenius norm <= threshold."""
    sv = np.asarray(singular_values)
    tail_sq = np.concatenate([np.cumsum(sv[::-1] ** 2)[::-1], [0.0]])  # tail after keeping r
    candidates = np.nonzero(np.sqrt(tail_sq) <= threshold)[0]
    r = int(candidates[0]) if candidates.size else sv.size
    return max(r, 1)


def truncate_standard(xbig: np.ndarray, s_big: np.ndarray, vbig: np.ndarray,
                      policy: TruncationPolicy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD truncation of the core with the tail criterion, capped at r_max."""
    p, sv, qt = np.linalg.svd(s_big, full_matrices=False)
    threshold = policy.theta_coeff * (sv[0] if sv.size else 0.0)
    r1 = _tail_rank(sv, threshold)
    if policy.theta_coeff == 0.0 and sv.size and sv[0] > 0:
        # keep only numerically nonzero singular values
        nonzero = int((sv > sv[0] * max(s_big.shape) * np.finfo(float).eps).sum())
        r1 = max(min(r1, nonzero), 1)
    r1 = min(r1, policy.r_max)
    x_new = xbig @ p[:, :r1]
    v_new = vbig @ qt[:r1, :].T
    sx = _sign_vector(x_new)
    sv_signs = _sign_vector(v_new)
    return x_new * sx, np.diag(sv[:r1] * sx * sv_signs), v_new * sv_signs


def truncate_conservative(xbig: np.ndarray, s_big: np.ndarray, vbig: np.ndarray,
                          vgrid: VelocityGrid, policy: TruncationPolicy
                          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Moment-preserving truncation.

    The solution is split along the unit vector z of the moment weights
    Z_k = norm_const * w_half_k: the rank-one part X S V^T z z^T is kept
    exactly, the z-orthogonal remainder (which has zero Z-moment) is
    truncated by the standard criterion, and the parts are recombined by two
    QR factorizations with a block-diagonal core.  The final rank is the
    truncated remainder rank plus one.
    """
    z = vgrid.z_vector
    z = z / np.linalg.norm(z)
    # rank-one part: X (S V^T z) z^T
    u = s_big @ (vbig.T @ z)
    s1 = float(np.linalg.norm(u))
    x_h1 = u / s1 if s1 > 0 else np.eye(u.size)[:, 0]
    # z-orthogonal remainder in factored form: X S W^T with W = (I - z z^T) V
    w = vbig - np.outer(z, z @ vbig)
    q_w, r_w = orthonormalize(w)
    remainder_policy = TruncationPolicy(
        theta_coeff=policy.theta_coeff,
        r_max=max(policy.r_max - 1, 1) if policy.r_max > 1 else 1,
        conservative=False,
    )
    x_star, s_star, v_star = truncate_standard(xbig, s_big @ r_w.T, q_w, remainder_policy)
    # recombine: QR of the stacked spatial and velocity factors
    x_new, r1 = orthonormalize(np.column_stack([xbig @ x_h1, x_star]))
    v_new, r2 = orthonormalize(np.column_stack([z, v_star]))
    r_tilde = s_star.shape[0]
    core = np.zeros((1 + r_tilde, 1 + r_tilde))
    core[0, 0] = s1
    core[1:, 1:] = s_star
    s_new = r1 @ core @ r2.T
    return x_new, s_new, v_new


# ---------------------------------------------------------------------------
# full step


def dlra_step(state: LowRankState, mesh: Mesh, vgrid: VelocityGrid, sigma: float,
              dt: float, mode: AugmentationMode, policy: TruncationPolicy) -> LowRankState:
    """One rank-adaptive step: density, K/L substeps, augmentation, core
    update, truncation."""
    rho, x, s, v = state.rho, state.x_basis, state.s_core, state.v_basis

    rho_next = rho_update(rho, x, s, v, mesh, vgrid, dt)

    k_new = k_step(rho, rho_next, x @ s, v, mesh, vgrid, sigma, dt)
    l_new = l_step(rho, rho_next, x, v @ s.T, mesh, vgrid, sigma, dt)

    xhat, m_hat = augment_2r(k_new, x)
    vhat, n_hat = augment_2r(l_new, v)
    if mode is AugmentationMode.BASIS_AUG_4R:
        xhat, vhat = augment_4r(xhat, rho_next, vhat, vgrid)
        m_hat = xhat.T @ x
        n_hat = vhat.T @ v

    s_tilde = m_hat @ s @ n_hat.T
    s_hat = s_step(rho, rho_next, xhat, vhat, s_tilde, mesh, vgrid, sigma, dt)

    if policy.conservative:
        x1, s1, v1 = truncate_conservative(xhat, s_hat, vhat, vgrid, policy)
    else:
        x1, s1, v1 = truncate_standard(xhat, s_hat, vhat, policy)
    return LowRankState(rho=rho_next, x_basis=x1, s_core=s1, v_basis=v1, t=state.t + dt)


def lowrank_from_dense(rho: np.ndarray, g: np.ndarray, rank: int,
                       rng: np.random.Generator, t: float = 0.0) -> LowRankState:
    """Factor a dense g to the requested rank, padding the bases with seeded
    random orthonormal completions when g has lower rank.

    The reconstruction is exact whenever rank(g) <= rank: the completed bases
    contain g's row and column spaces, so the projected core reproduces g.
    """
    n_x, n_v = g.shape
    rank = min(rank, n_x, n_v)
    u, sv, vt = np.linalg.svd(g, full_matrices=False)
    cutoff = sv[0] * max(g.shape) * np.finfo(float).eps if sv.size and sv[0] > 0 else 0.0
    keep = min(rank, max(int((sv > cutoff).sum()), 1))
    x = _complete_basis(u[:, :keep], rank, rng)
    v = _complete_basis(vt.T[:, :keep], rank, rng)
    s = x.T @ g @ v
    return LowRankState(rho=rho, x_basis=x, s_core=s, v_basis=v, t=t)


def _complete_basis(q: np.ndarray, rank: int, rng: np.random.Generator) -> np.ndarray:
    if q.shape[1] >= rank:
        return q[:, :rank]
    extra = rng.standard_normal((q.shape[0], rank - q.shape[1]))
    extra -= q @ (q.T @ extra)
    q_extra, _ = orthonormalize(extra)
    out, _ = orthonormalize(np.column_stack([q, q_extra]))
    return out
