"""Experiment driver: build the problem, march in time, persist outputs."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import diagnostics as diag
from .config import RunConfig
from .discretization import (
    Mesh,
    VelocityGrid,
    cfl_timestep,
    cfl_timestep_unchecked,
    gauss_hermite_rule,
    tensor_velocity_grid_2d,
)
from .dlra import (
    AugmentationMode,
    LowRankState,
    TruncationPolicy,
    dlra_step,
    orthonormalize,
)
from .full_solver import FullState, PositivityError, SchemeVariant, advance, reconstruct_f
from .output import (
    write_diagnostics_csv,
    write_manifest,
    write_snapshot_f_1d,
    write_snapshot_rho_1d,
    write_snapshot_rho_2d,
)
from .presets import PRESETS, initial_density, initial_velocity_profile


@dataclass
class Problem:
    mesh: Mesh
    vgrid: VelocityGrid
    rho0: np.ndarray
    phi_v: np.ndarray       # separable initial deviation: g0(x, v) = phi_v(v)
    dt: float


def build_problem(config: RunConfig) -> Problem:
    preset = PRESETS[config.preset]
    if config.dim == 1:
        (a, b), = config.domain
        mesh = Mesh.line(a, b, config.n_x)
        vgrid = gauss_hermite_rule(config.n_v)
    else:
        (a1, b1), (a2, b2) = config.domain
        mesh = Mesh.plane(a1, b1, config.n_x, a2, b2, config.n_x)
        vgrid = tensor_velocity_grid_2d(config.n_v, config.n_v)
    rho0 = initial_density(preset, mesh.points)
    phi_v = initial_velocity_profile(preset, vgrid)
    dx = min(g.dx for g in mesh.grids)
    timestep = cfl_timestep_unchecked if config.cfl > 1.0 else cfl_timestep
    dt = timestep(dx, vgrid.v_cap, config.cfl, config.round_up_vcap)
    return Problem(mesh=mesh, vgrid=vgrid, rho0=rho0, phi_v=phi_v, dt=dt)


def initial_lowrank(rho0: np.ndarray, phi_v: np.ndarray, rank: int,
                    rng: np.random.Generator) -> LowRankState:
    """Rank-r0 factorization of the separable start g0 = 1_x phi^T.

    The leading pair of basis vectors represents g0 exactly; the remaining
    columns are seeded random orthonormal completions with zero coefficients.
    """
    n_cells, n_v = rho0.size, phi_v.size
    rank = min(rank, n_cells, n_v)
    x0 = np.full((n_cells, 1), 1.0 / np.sqrt(n_cells))
    v0 = (phi_v / np.linalg.norm(phi_v))[:, None]
    x_extra = rng.standard_normal((n_cells, rank - 1))
    v_extra = rng.standard_normal((n_v, rank - 1))
    x_basis, _ = orthonormalize(np.column_stack([x0, x_extra - x0 @ (x0.T @ x_extra)]))
    v_basis, _ = orthonormalize(np.column_stack([v0, v_extra - v0 @ (v0.T @ v_extra)]))
    # project g0 = 1_x phi^T onto the bases; exact since both spans contain it
    s_core = np.outer(x_basis.T @ np.ones(n_cells), v_basis.T @ phi_v)
    return LowRankState(rho=rho0, x_basis=x_basis, s_core=s_core, v_basis=v_basis, t=0.0)


def _record_full(state: FullState, vgrid: VelocityGrid, mesh: Mesh) -> diag.DiagRecord:
    f = reconstruct_f(state.rho, state.g, vgrid)
    kp, km = diag.kappa_bounds(state.g, vgrid)
    return diag.DiagRecord(
        t=state.t, rank=min(state.g.shape),
        h_norm_sq=diag.h_norm_sq(f, vgrid),
        kappa_plus=kp, kappa_minus=km,
        mass=float(state.rho.sum() * mesh.cell_volume),
    )


def _record_lowrank(state: LowRankState, vgrid: VelocityGrid, mesh: Mesh) -> diag.DiagRecord:
    kp, km = diag.kappa_bounds(state, vgrid)
    return diag.DiagRecord(
        t=state.t, rank=state.rank,
        h_norm_sq=diag.h_norm_sq_factored(state.rho, state.x_basis, state.s_core,
                                          state.v_basis, vgrid),
        kappa_plus=kp, kappa_minus=km,
        mass=float(state.rho.sum() * mesh.cell_volume),
    )


def _time_targets(t_end: float, snapshot_times: tuple[float, ...]) -> list[float]:
    targets = sorted({t for t in snapshot_times if 0.0 < t <= t_end} | {t_end})
    return targets


def run_experiment(config: RunConfig) -> int:
    """March the configured scheme to t_end, writing diagnostics.csv, snapshot
    files and a manifest into config.output_dir.  Returns a process exit
    status: 0 on success, 1 on an aborted run (partial outputs are flushed).

    BLAS parallelism is capped by BGK_THREADS (default 1: the factored
    substeps are small-matrix bound and thread spin-up dominates them).
    """
    threads = max(1, int(os.environ.get("BGK_THREADS", "1")))
    with threadpool_limits(limits=threads):
        return _run_experiment(config)


def _run_experiment(config: RunConfig) -> int:
    config.validate()
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config)
    mesh, vgrid = problem.mesh, problem.vgrid
    rng = np.random.default_rng(config.seed)

    scheme = config.scheme
    is_lowrank = scheme.startswith("dlra")
    if is_lowrank:
        state = initial_lowrank(problem.rho0, problem.phi_v,
                                min(config.r0, config.r_max), rng)
        mode = AugmentationMode.BASIS_AUG_4R if scheme == "dlra_4r" else AugmentationMode.REDUCED_2R
        policy = TruncationPolicy(theta_coeff=config.theta_coeff, r_max=config.r_max,
                                  conservative=True)
        record = lambda s: _record_lowrank(s, vgrid, mesh)
    else:
        g0 = np.broadcast_to(problem.phi_v, (mesh.n_cells, vgrid.n_v)).copy()
        state = FullState(rho=problem.rho0.copy(), g=g0, t=0.0)
        variant = (SchemeVariant.STABLE_CONSERVATIVE if scheme == "full_stable"
                   else SchemeVariant.NAIVE_ADVECTION)
        record = lambda s: _record_full(s, vgrid, mesh)

    records = [record(state)]
    snapshots_pending = sorted({t for t in config.snapshot_times})
    if snapshots_pending and snapshots_pending[0] == 0.0:
        _write_snapshot(outdir, state, mesh, vgrid, 0.0, is_lowrank)
        snapshots_pending.pop(0)

    status = "completed"
    error_detail = ""
    steps = 0
    wall_start = time.perf_counter()
    try:
        for target in _time_targets(config.t_end, config.snapshot_times):
            while state.t < target:
                dt = min(problem.dt, target - state.t)
                if is_lowrank:
                    state = dlra_step(state, mesh, vgrid, config.sigma, dt, mode, policy)
                else:
                    state = advance(state, mesh, vgrid, config.sigma, dt, variant)
                steps += 1
                if target - state.t <= 1e-12 * max(1.0, abs(target)):
                    state.t = target
                records.append(record(state))
            if snapshots_pending and snapshots_pending[0] == target:
                _write_snapshot(outdir, state, mesh, vgrid, target, is_lowrank)
                snapshots_pending.pop(0)
    except PositivityError as exc:
        status = "aborted"
        error_detail = str(exc)
    wall_clock = time.perf_counter() - wall_start

    write_diagnostics_csv(outdir / "diagnostics.csv", records)
    manifest = {
        "preset": config.preset, "scheme": config.scheme,
        "nx": config.n_x, "nv": config.n_v, "dim": config.dim,
        "domain": "x".join(f"[{a},{b}]" for a, b in config.domain),
        "sigma": config.sigma, "cfl": config.cfl,
        "round_up_vcap": config.round_up_vcap,
        "tend": config.t_end, "r0": config.r0,
        "theta": config.theta_coeff, "rmax": config.r_max,
        "snapshots": ",".join(str(t) for t in config.snapshot_times),
        "seed": config.seed, "v_cap": problem.vgrid.v_cap,
        "dt": problem.dt, "steps": steps,
        "final_rank": records[-1].rank,
        "wall_clock_seconds": f"{wall_clock:.6f}",
        "status": status,
    }
    if error_detail:
        manifest["error"] = error_detail
    write_manifest(outdir / "manifest.txt", manifest)
    return 0 if status == "completed" else 1


def _write_snapshot(outdir: Path, state, mesh: Mesh, vgrid: VelocityGrid,
                    t: float, is_lowrank: bool) -> None:
    rho = state.rho
    if mesh.ndim == 1:
        write_snapshot_rho_1d(outdir / f"rho_t{t:.6f}.csv", mesh.points, rho)
        g = state.g_dense() if is_lowrank else state.g
        f = reconstruct_f(rho, g, vgrid)
        write_snapshot_f_1d(outdir / f"f_t{t:.6f}.csv", f, vgrid.nodes)
    else:
        write_snapshot_rho_2d(outdir / f"rho_t{t:.6f}.csv", rho, mesh.shape,
                              [(g.a, g.b) for g in mesh.grids])
