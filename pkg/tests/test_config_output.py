import math
from pathlib import Path

import numpy as np
import pytest

from bgkmg.config import ConfigError, load_config, read_config_file
from bgkmg.diagnostics import DiagRecord
from bgkmg.output import (
    read_diagnostics_csv,
    read_manifest,
    write_diagnostics_csv,
    write_manifest,
    write_snapshot_f_1d,
    write_snapshot_rho_1d,
    write_snapshot_rho_2d,
)
from bgkmg.presets import PRESETS, initial_density, initial_velocity_profile
from bgkmg.discretization import tensor_velocity_grid_2d


class TestConfig:
    def test_plane1d_defaults(self):
        cfg = load_config(preset="plane1d")
        assert cfg.n_x == 1000 and cfg.n_v == 500
        assert cfg.sigma == 10.0 and cfg.cfl == 0.99
        assert cfg.t_end == 8.0 and cfg.r0 == 20
        assert cfg.theta_coeff == 1e-5
        assert cfg.domain == ((-10.0, 10.0),)
        assert cfg.snapshot_times == (0.0, 2.0, 4.0, 6.0)

    def test_override_wins(self):
        cfg = load_config(preset="plane1d", nx=256)
        assert cfg.n_x == 256 and cfg.n_v == 500

    def test_plane2d_small(self):
        cfg = load_config(preset="plane2d-small")
        assert cfg.dim == 2 and cfg.n_x == 64 and cfg.n_v == 16
        assert cfg.sigma == 100.0 and cfg.cfl == 0.7

    def test_beam2d_small_rank_cap(self):
        cfg = load_config(preset="beam2d-small")
        assert cfg.r_max == 100 and cfg.sigma == 1.5

    def test_cfl_bound_rejected_for_stable(self):
        with pytest.raises(ConfigError, match="stability bound"):
            load_config(preset="plane1d", scheme="full_stable", cfl=1.5)

    def test_cfl_above_one_allowed_for_naive(self):
        cfg = load_config(preset="custom", scheme="full_naive", cfl=1.5)
        assert cfg.cfl == 1.5

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown configuration key"):
            load_config(preset="plane1d", bogus=3)

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            load_config(preset="nope")

    def test_snapshots_inside_horizon(self):
        with pytest.raises(ConfigError, match="snapshot"):
            load_config(preset="custom", tend=1.0, snapshots="0.5,2.0")

    def test_config_file_roundtrip(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment line\n"
            "preset = plane1d-small\n"
            "scheme = dlra_2r\n"
            "nx = 100\n"
            "snapshots = 0,1\n"
        )
        cfg = load_config(file=path)
        assert cfg.preset == "plane1d-small" and cfg.n_x == 100
        assert cfg.snapshot_times == (0.0, 1.0)

    def test_config_file_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("nonsense = 1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            read_config_file(path)

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("preset = plane1d-small\nnx = 100\n")
        cfg = load_config(file=path, nx=64)
        assert cfg.n_x == 64


class TestPresetInitialData:
    def test_plane1d_density_profile(self):
        import bgkmg.discretization as disc
        preset = PRESETS["plane1d-small"]
        mesh = disc.Mesh.line(-10.0, 10.0, 400)
        rho = initial_density(preset, mesh.points)
        s2 = 0.09
        assert rho.max() == pytest.approx(1 / math.sqrt(2 * math.pi * s2), rel=1e-12)
        assert rho.min() == pytest.approx(1e-4)
        assert (rho > 0).all()

    def test_plane_profile_is_uniform_ones(self):
        preset = PRESETS["plane1d-small"]
        vgrid = tensor_velocity_grid_2d(4, 4)
        assert (initial_velocity_profile(PRESETS["plane2d-small"], vgrid) == 1).all()

    def test_beam_profile_normalized(self):
        preset = PRESETS["beam2d-small"]
        vgrid = tensor_velocity_grid_2d(16, 16)
        phi = initial_velocity_profile(preset, vgrid)
        assert float(phi @ vgrid.z_vector) == pytest.approx(1.0, abs=1e-12)
        # mass concentrates near the beam velocity (-1, -1)
        peak = vgrid.nodes[np.argmax(phi)]
        assert np.linalg.norm(peak - np.array([-1.0, -1.0])) < 1.0


class TestOutputs:
    def test_diagnostics_roundtrip(self, tmp_path):
        records = [
            DiagRecord(t=0.0, rank=20, h_norm_sq=1.2345678901234567,
                       kappa_plus=1.0 + 1e-13, kappa_minus=1.0 - 1e-13, mass=math.pi),
            DiagRecord(t=0.1, rank=21, h_norm_sq=1.1,
                       kappa_plus=1.0, kappa_minus=0.999999999999, mass=math.pi),
        ]
        path = tmp_path / "diagnostics.csv"
        write_diagnostics_csv(path, records)
        back = read_diagnostics_csv(path)
        assert back == records  # bit-for-bit on formatted values

    def test_diagnostics_empty(self, tmp_path):
        path = tmp_path / "diagnostics.csv"
        write_diagnostics_csv(path, [])
        assert path.read_text().strip() == "t,rank,h_norm_sq,kappa_plus,kappa_minus,mass"
        assert read_diagnostics_csv(path) == []

    def test_rho_1d_snapshot(self, tmp_path):
        path = tmp_path / "rho.csv"
        x = np.linspace(0, 1, 5)
        rho = np.linspace(1, 2, 5)
        write_snapshot_rho_1d(path, x, rho)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,rho"
        got = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        assert got[:, 0] == pytest.approx(x)
        assert got[:, 1] == pytest.approx(rho)

    def test_rho_2d_snapshot_header(self, tmp_path):
        path = tmp_path / "rho2d.csv"
        rho = np.arange(12.0)
        write_snapshot_rho_2d(path, rho, (3, 4), [(-3.0, 3.0), (-3.0, 3.0)])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "# nx1=3 nx2=4 domain=[-3,3]x[-3,3]"
        grid = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        assert grid.shape == (3, 4)
        assert grid.ravel() == pytest.approx(rho)

    def test_f_snapshot_header(self, tmp_path):
        path = tmp_path / "f.csv"
        f = np.arange(6.0).reshape(2, 3)
        v = np.array([-1.0, 0.0, 1.0])
        write_snapshot_f_1d(path, f, v)
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("# v=")
        nodes = [float(s) for s in lines[0][4:].split(",")]
        assert nodes == pytest.approx(v)
        got = np.array([[float(s) for s in line.split(",")] for line in lines[1:]])
        assert got == pytest.approx(f)

    def test_manifest_roundtrip(self, tmp_path):
        path = tmp_path / "manifest.txt"
        write_manifest(path, {"scheme": "dlra_2r", "steps": 42})
        back = read_manifest(path)
        assert back["scheme"] == "dlra_2r"
        assert back["steps"] == "42"
