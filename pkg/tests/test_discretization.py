import math

import numpy as np
import pytest

from bgkmg.discretization import (
    Mesh,
    SpatialGrid,
    StencilVariant,
    build_stencils,
    cfl_timestep,
    cfl_timestep_unchecked,
    gauss_hermite_rule,
    tensor_velocity_grid_2d,
)

SQRT_PI = math.sqrt(math.pi)


class TestGaussHermite:
    def test_single_node(self):
        g = gauss_hermite_rule(1)
        assert g.nodes == pytest.approx([0.0])
        assert g.weights == pytest.approx([SQRT_PI])

    def test_two_nodes(self):
        g = gauss_hermite_rule(2)
        assert g.nodes == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)], abs=1e-14)
        assert g.weights == pytest.approx([SQRT_PI / 2, SQRT_PI / 2], abs=1e-14)

    @pytest.mark.parametrize("n_v", [3, 8, 16, 33, 64, 128])
    def test_node_symmetry(self, n_v):
        nodes = np.sort(gauss_hermite_rule(n_v).nodes)
        assert np.abs(nodes + nodes[::-1]).max() < 1e-12

    @pytest.mark.parametrize("n_v", [2, 4, 16, 64, 128, 500])
    def test_weight_sum(self, n_v):
        assert gauss_hermite_rule(n_v).weights.sum() == pytest.approx(SQRT_PI, abs=1e-12)

    @pytest.mark.parametrize("n_v", [4, 16, 64])
    def test_moment_exactness(self, n_v):
        # oracle: integral of v^{2m} e^{-v^2} dv = gamma(m + 1/2)
        g = gauss_hermite_rule(n_v)
        for m in range(n_v):
            exact = math.gamma(m + 0.5)
            assert float(g.weights @ g.nodes ** (2 * m)) == pytest.approx(exact, rel=1e-10)
            # odd moments vanish
            odd = float(g.weights @ g.nodes ** (2 * m + 1))
            assert abs(odd) < 1e-12 * exact * max(1.0, abs(g.nodes).max())

    @pytest.mark.parametrize("n_v", [32, 64, 128, 500])
    def test_discrete_unit_mass(self, n_v):
        g = gauss_hermite_rule(n_v)
        assert g.w_half.sum() / math.sqrt(2 * math.pi) == pytest.approx(1.0, abs=1e-10)

    def test_500_node_velocity_cap(self):
        g = gauss_hermite_rule(500)
        assert 31.0 < g.v_cap < 31.1
        assert np.isfinite(g.w_three_half).all()
        assert (g.w_full > 0).all()

    def test_derived_weight_consistency(self):
        g = gauss_hermite_rule(48)
        v2 = g.nodes**2
        assert g.w_half == pytest.approx(g.weights * np.exp(v2 / 2), rel=1e-12)
        assert g.w_full == pytest.approx(g.weights * np.exp(v2), rel=1e-12)
        assert g.w_three_half == pytest.approx(g.weights * np.exp(1.5 * v2), rel=1e-12)

    def test_rejects_bad_size(self):
        with pytest.raises(ValueError):
            gauss_hermite_rule(0)


class TestTensorGrid2D:
    def test_single_pair(self):
        g = tensor_velocity_grid_2d(1, 1)
        assert np.abs(g.nodes - np.zeros((1, 2))).max() < 1e-15
        assert g.weights == pytest.approx([math.pi])
        assert g.dim == 2

    def test_two_by_two(self):
        g = tensor_velocity_grid_2d(2, 2)
        r = 1 / math.sqrt(2)
        expected = {(-r, -r), (-r, r), (r, -r), (r, r)}
        got = {(round(a, 12), round(b, 12)) for a, b in g.nodes}
        assert got == {(round(a, 12), round(b, 12)) for a, b in expected}
        assert g.weights == pytest.approx(np.full(4, math.pi / 4))

    def test_benchmark_velocity_cap(self):
        g = tensor_velocity_grid_2d(32, 32)
        assert g.v_cap == pytest.approx(10.08, abs=0.01)

    def test_components_and_speed(self):
        g = tensor_velocity_grid_2d(3, 4)
        assert g.n_v == 12
        assert g.component(0).shape == (12,)
        assert g.speed_sq == pytest.approx(g.component(0) ** 2 + g.component(1) ** 2)
        # product weights match the 1D factors
        g1, g2 = gauss_hermite_rule(3), gauss_hermite_rule(4)
        outer = np.outer(g1.weights, g2.weights).ravel()
        assert g.weights == pytest.approx(outer, rel=1e-12)


class TestStencils:
    def test_interior_row(self):
        grid = SpatialGrid(n_x=4, a=0.0, b=2.0)  # dx = 0.5
        sten = build_stencils(grid)
        assert sten.d_x[1] == pytest.approx([-1.0, 0.0, 1.0, 0.0])

    def test_wrapped_row(self):
        grid = SpatialGrid(n_x=4, a=0.0, b=2.0)
        sten = build_stencils(grid)
        assert sten.d_x[0] == pytest.approx([0.0, 1.0, 0.0, -1.0])

    @pytest.mark.parametrize("n_x", [3, 8, 33, 128])
    def test_antisymmetry_exact(self, n_x):
        sten = build_stencils(SpatialGrid(n_x=n_x, a=-1.0, b=1.0))
        assert np.abs(sten.d_x + sten.d_x.T).max() == 0.0

    def test_dxx_symmetric_zero_row_sums(self):
        sten = build_stencils(SpatialGrid(n_x=16, a=0.0, b=1.0))
        assert np.abs(sten.d_xx - sten.d_xx.T).max() == 0.0
        assert np.abs(sten.d_xx.sum(axis=1)).max() < 1e-12 / sten.dx**2

    def test_dxx_factorization(self):
        sten = build_stencils(SpatialGrid(n_x=12, a=0.0, b=3.0))
        assert np.abs(sten.d_xx + sten.d_plus.T @ sten.d_plus).max() < 1e-12 / sten.dx**2

    def test_zeroed_rows_variant(self):
        sten = build_stencils(SpatialGrid(n_x=6, a=0.0, b=1.0),
                              StencilVariant.ZEROED_BOUNDARY_ROWS)
        assert np.all(sten.d_x[0] == 0) and np.all(sten.d_x[-1] == 0)
        assert np.all(sten.d_xx[0] == 0) and np.all(sten.d_xx[-1] == 0)
        # interior rows match the circulant ones
        circ = build_stencils(SpatialGrid(n_x=6, a=0.0, b=1.0))
        assert sten.d_x[2] == pytest.approx(circ.d_x[2])
        # no wrap in the forward difference
        assert sten.d_plus[-1, 0] == 0.0

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            build_stencils(SpatialGrid(n_x=2, a=0.0, b=1.0))


class TestSummationByParts:
    @pytest.mark.parametrize("n_x", [8, 33, 128])
    def test_identities_random_vectors(self, n_x):
        rng = np.random.default_rng(42)
        sten = build_stencils(SpatialGrid(n_x=n_x, a=-10.0, b=10.0))
        for _ in range(100):
            y = rng.standard_normal(n_x)
            z = rng.standard_normal(n_x)
            scale = np.linalg.norm(y) * np.linalg.norm(z) / sten.dx
            assert abs(y @ sten.d_x @ z + z @ sten.d_x @ y) <= 1e-12 * scale
            assert abs(z @ sten.d_x @ z) <= 1e-12 * (z @ z) / sten.dx
            scale_xx = np.linalg.norm(y) * np.linalg.norm(z) / sten.dx**2
            assert abs(y @ sten.d_xx @ z - z @ sten.d_xx @ y) <= 1e-12 * scale_xx
            lhs = z @ sten.d_xx @ z
            rhs = -np.linalg.norm(sten.d_plus @ z) ** 2
            assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), (z @ z) / sten.dx**2)


class TestFourierSymbols:
    @pytest.mark.parametrize("alpha", [1, 2, 5])
    def test_symbols_on_discrete_modes(self, alpha):
        # grid-periodic modes on [0, 2]: alpha * (b - a) is even
        mesh = Mesh.line(0.0, 2.0, 32)
        dx = mesh.grids[0].dx
        x = mesh.grids[0].points
        z = np.exp(1j * alpha * math.pi * x)
        nu = alpha * math.pi * dx
        got_dx = mesh.apply_dx(z)
        assert np.abs(got_dx - (1j * math.sin(nu) / dx) * z).max() < 1e-10 / dx
        got_dxx = mesh.apply_dxx(z)
        assert np.abs(got_dxx - (2 / dx**2) * (math.cos(nu) - 1) * z).max() < 1e-10 / dx**2
        got_dp = mesh.apply_dplus(z)
        sym = (math.cos(nu) - 1 + 1j * math.sin(nu)) / dx
        assert np.abs(got_dp - sym * z).max() < 1e-10 / dx


class TestMesh2D:
    def test_axis_application_matches_dense(self):
        rng = np.random.default_rng(7)
        mesh = Mesh.plane(0.0, 1.0, 5, -1.0, 1.0, 4)
        u = rng.standard_normal((mesh.n_cells, 3))
        d1 = mesh.stencils[0].d_x
        d2 = mesh.stencils[1].d_x
        big1 = np.kron(d1, np.eye(4))
        big2 = np.kron(np.eye(5), d2)
        assert mesh.apply_dx(u, axis=0) == pytest.approx(big1 @ u)
        assert mesh.apply_dx(u, axis=1) == pytest.approx(big2 @ u)

    def test_points_layout(self):
        mesh = Mesh.plane(0.0, 3.0, 3, 10.0, 13.0, 3)
        pts = mesh.points
        # row-major: x2 varies fastest
        expected = [[0.0, 10.0], [0.0, 11.0], [0.0, 12.0],
                    [1.0, 10.0], [1.0, 11.0], [1.0, 12.0],
                    [2.0, 10.0], [2.0, 11.0], [2.0, 12.0]]
        assert np.abs(pts - np.array(expected)).max() < 1e-14


class TestCflRule:
    def test_full_scale_1d_step(self):
        # dt = 0.99 * 0.02 / 32 once the 500-node cap rounds up to 32
        g = gauss_hermite_rule(500)
        dt = cfl_timestep(0.02, g.v_cap, 0.99, round_up_vcap=True)
        assert dt == pytest.approx(0.99 * 0.02 / 32, rel=1e-14)

    def test_full_scale_2d_divisor(self):
        g = tensor_velocity_grid_2d(32, 32)
        dt = cfl_timestep(0.5, g.v_cap, 0.7, round_up_vcap=True)
        assert dt == pytest.approx(0.7 * 0.5 / 11, rel=1e-14)

    def test_unit_case(self):
        assert cfl_timestep(1.0, 1.0, 1.0) == pytest.approx(1.0)

    def test_rejects_unstable_cfl(self):
        with pytest.raises(ValueError, match="stability"):
            cfl_timestep(1.0, 1.0, 1.5)

    def test_unchecked_allows_unstable(self):
        assert cfl_timestep_unchecked(1.0, 1.0, 3.0) == pytest.approx(3.0)
