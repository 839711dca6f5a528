"""Benchmark presets: domains, grids, physical parameters, initial data.

The three benchmark families are a 1D narrow-Gaussian pulse relaxing in a
strongly collisional medium, its 2D analogue, and a 2D velocity beam.  Each
ships in two sizes: the full scale used for reported results and a desk
scale (``*-small``) sized for CI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import VelocityGrid


@dataclass(frozen=True)
class Preset:
    name: str
    dim: int
    domain: tuple[tuple[float, float], ...]
    n_x: int                      # per axis
    n_v: int                      # per axis
    sigma: float
    cfl: float
    round_up_vcap: bool
    t_end: float
    r0: int
    theta_coeff: float
    r_max: int
    snapshot_times: tuple[float, ...]
    ic_sigma: float = 0.3         # width parameter of the initial density
    beam_velocity: tuple[float, float] | None = None


def _plane1d(name: str, n_x: int, n_v: int) -> Preset:
    return Preset(
        name=name, dim=1, domain=((-10.0, 10.0),), n_x=n_x, n_v=n_v,
        sigma=10.0, cfl=0.99, round_up_vcap=True, t_end=8.0, r0=20,
        theta_coeff=1e-5, r_max=200, snapshot_times=(0.0, 2.0, 4.0, 6.0),
    )


def _plane2d(name: str, n_x: int, n_v: int) -> Preset:
    return Preset(
        name=name, dim=2, domain=((-3.0, 3.0), (-3.0, 3.0)), n_x=n_x, n_v=n_v,
        sigma=100.0, cfl=0.7, round_up_vcap=True, t_end=3.0, r0=20,
        theta_coeff=1e-5, r_max=200, snapshot_times=(0.0, 1.0, 2.0, 3.0),
    )


def _beam2d(name: str, n_x: int, n_v: int, r_max: int) -> Preset:
    return Preset(
        name=name, dim=2, domain=((-5.0, 5.0), (-5.0, 5.0)), n_x=n_x, n_v=n_v,
        sigma=1.5, cfl=0.7, round_up_vcap=True, t_end=3.0, r0=20,
        theta_coeff=1e-4, r_max=r_max, snapshot_times=(0.0, 1.0, 2.0, 3.0),
        ic_sigma=0.01, beam_velocity=(-1.0, -1.0),
    )


PRESETS: dict[str, Preset] = {
    "plane1d": _plane1d("plane1d", 1000, 500),
    "plane1d-small": _plane1d("plane1d-small", 400, 128),
    "plane2d": _plane2d("plane2d", 128, 32),
    "plane2d-small": _plane2d("plane2d-small", 64, 16),
    "beam2d": _beam2d("beam2d", 128, 32, 200),
    "beam2d-small": _beam2d("beam2d-small", 64, 16, 100),
    "custom": Preset(
        name="custom", dim=1, domain=((-10.0, 10.0),), n_x=128, n_v=32,
        sigma=1.0, cfl=0.99, round_up_vcap=False, t_end=1.0, r0=10,
        theta_coeff=1e-5, r_max=64, snapshot_times=(),
    ),
}


def initial_density(preset: Preset, points: np.ndarray) -> np.ndarray:
    """Cutoff-Gaussian initial density on the flattened cell coordinates."""
    s2 = preset.ic_sigma**2
    if preset.dim == 1:
        peak = np.exp(-points**2 / (2 * s2)) / math.sqrt(2 * math.pi * s2)
        return np.maximum(1e-4, peak)
    r2 = (points**2).sum(axis=1)
    peak = (100.0 / (4 * math.pi * s2)) * np.exp(-r2 / (4 * s2))
    return np.maximum(1e-1, peak) / (4 * math.pi)


def initial_velocity_profile(preset: Preset, vgrid: VelocityGrid) -> np.ndarray:
    """Velocity profile phi with g0(x, v) = phi(v); normalized so the discrete
    moment norm_const * sum_k phi_k w_half_k equals 1 at every cell."""
    if preset.beam_velocity is None:
        return np.ones(vgrid.n_v)
    vb = np.asarray(preset.beam_velocity)
    s2 = preset.ic_sigma**2
    dist2 = ((vgrid.nodes - vb[None, :]) ** 2).sum(axis=1)
    raw = (100.0 / (4 * math.pi * s2)) * np.exp(-dist2 / (4 * s2))
    moment = float(raw @ vgrid.z_vector)
    if moment <= 0:
        raise ValueError("beam profile vanishes on the velocity grid")
    return raw / moment
