import numpy as np
import pytest

from vqevolve.evolution import AxisBC, BoundarySpec, GridSpec, exact_heat
from vqevolve.navier_stokes import FlowState, cavity_grid
from vqevolve.operators import laplacian_1d_dense
from vqevolve.oracle import (
    StabilityError,
    classical_evolve,
    classical_projection_step,
    divergence_norm,
    flow_matrices,
    fully_implicit_linear_rd,
    heat_mode_decay,
    lu_solve,
    pressure_matrix,
    semi_implicit_rd,
    semidiscrete_heat,
)


class TestLU:
    def test_identity(self, rng):
        b = rng.normal(size=8)
        assert np.allclose(lu_solve(np.eye(8), b), b)

    def test_scaled(self, rng):
        b = rng.normal(size=8)
        assert np.allclose(lu_solve(2 * np.eye(8), b), b / 2)

    def test_residual(self, rng):
        A = np.eye(8) + laplacian_1d_dense(3, "D")
        b = rng.normal(size=8)
        x = lu_solve(A, b)
        assert np.linalg.norm(A @ x - b) / np.linalg.norm(b) < 1e-10

    def test_singular(self):
        with pytest.raises(np.linalg.LinAlgError):
            lu_solve(laplacian_1d_dense(2, "N"), np.ones(4))


def sine_setup(n_t, D=None, n=3):
    g = GridSpec.heat_1d(n, 1.0, 20)
    D = g.D if D is None else D
    return GridSpec.heat_1d_physical(n, D, n_t), BoundarySpec(AxisBC.dirichlet())


class TestHeat:
    def test_ie_no_diffusion(self):
        g = GridSpec.heat_1d(3, 0.0, 4)
        u0 = np.arange(8.0)
        run = classical_evolve("IE", g, BoundarySpec(), u0)
        assert all(np.array_equal(u, u0) for u in run.snapshots)

    def test_explicit_unstable_rejected(self):
        g = GridSpec.heat_1d(3, 1.0, 4)
        with pytest.raises(StabilityError):
            classical_evolve("explicit", g, BoundarySpec(), np.zeros(8))

    def test_unknown_scheme(self):
        g = GridSpec.heat_1d(3, 1.0, 4)
        with pytest.raises(ValueError):
            classical_evolve("BDF2", g, BoundarySpec(), np.zeros(8))

    def test_explicit_and_ie_agree_for_small_dt(self):
        g = GridSpec.heat_1d_physical(3, 0.1, 50, T=0.05)
        bc = BoundarySpec(AxisBC.dirichlet())
        u0 = np.sin(np.pi * g.x)
        a = classical_evolve("explicit", g, bc, u0).final
        b = classical_evolve("IE", g, bc, u0).final
        assert np.max(np.abs(a - b)) < 1e-3

    def test_mode_decay_is_eigenvalue(self):
        n, dx, D = 3, 1 / 9, 0.3
        v = np.sin(np.pi * (np.arange(8) + 1) * dx)
        lam = (D / dx**2 * laplacian_1d_dense(n, "D") @ v) / v
        assert np.allclose(lam, heat_mode_decay(n, D, dx))

    def test_semidiscrete_tends_to_pde(self):
        # the discrete rate approaches D pi^2 as the grid is refined
        for n, tol in [(3, 2e-2), (6, 3e-4)]:
            dx = 1 / (2**n + 1)
            assert abs(heat_mode_decay(n, 1.0, dx) / np.pi**2 - 1) < tol

    @pytest.mark.parametrize("scheme,order", [("IE", 1.0), ("CN", 2.0)])
    def test_temporal_order(self, scheme, order):
        errs = []
        for n_t in (10, 20, 40):
            g, bc = sine_setup(n_t)
            run = classical_evolve(scheme, g, bc, np.sin(np.pi * g.x))
            ref = semidiscrete_heat(g.x, 1.0, g.D, 3, g.dx)
            errs.append(np.linalg.norm(run.final - ref))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(rates - order) < 0.3)

    def test_cn_beats_ie_against_pde(self):
        g, bc = sine_setup(20)
        u0 = np.sin(np.pi * g.x)
        ref = exact_heat(g.x, 1.0, g.D)
        e_ie = np.linalg.norm(classical_evolve("IE", g, bc, u0).final - ref)
        e_cn = np.linalg.norm(classical_evolve("CN", g, bc, u0).final - ref)
        assert e_cn < e_ie

    def test_residuals_recorded(self):
        g, bc = sine_setup(5)
        run = classical_evolve("CN", g, bc, np.sin(np.pi * g.x))
        assert len(run.residuals) == 5 and max(run.residuals) < 1e-12


class TestReactionOracles:
    def test_semi_implicit_no_source_is_heat(self):
        L = laplacian_1d_dense(3, "D")
        u0 = np.sin(np.pi * np.arange(1, 9) / 9)
        out = semi_implicit_rd((u0, u0), (0.5, 0.0), (np.zeros(8), np.zeros(8)),
                               lambda a, b: (0 * a, 0 * b), 0.1, 3, (L, L))
        expected = u0
        for _ in range(3):
            expected = np.linalg.solve(np.eye(8) + 0.5 * L, expected)
        assert np.allclose(out[-1][0], expected) and np.array_equal(out[-1][1], u0)

    def test_semi_implicit_divergence(self):
        L = laplacian_1d_dense(2, "N")
        with pytest.raises(FloatingPointError):
            semi_implicit_rd((np.ones(4), np.ones(4)), (0, 0), (np.zeros(4), np.zeros(4)),
                             lambda a, b: (np.exp(1e3 * a), b), 0.1, 2, (L, L))

    def test_fully_implicit_decay(self):
        L = laplacian_1d_dense(2, "D")
        out = fully_implicit_linear_rd((np.ones(4), 2 * np.ones(4)), -np.eye(2), 0.0, 0.5, 2, L)
        assert np.allclose(out[-1], np.concatenate([np.ones(4), 2 * np.ones(4)]) / 1.5**2)


class TestProjection:
    def test_rest_is_rest(self):
        g = cavity_grid(2)
        s = FlowState.at_rest(g, 100.0, 0.0)
        new = classical_projection_step(s)
        assert not np.any(new.u) and not np.any(new.v) and not np.any(new.p)

    def test_divergence_reduced(self):
        g = cavity_grid(3)
        s = FlowState.at_rest(g, 100.0, 1.0)
        new, (us, vs) = classical_projection_step(s, return_intermediate=True)
        mats = flow_matrices(3, 3, g.dx, g.dy)
        assert divergence_norm(new.u, new.v, mats) < divergence_norm(us, vs, mats)

    def test_pressure_residual(self):
        g = cavity_grid(3)
        s = FlowState.at_rest(g, 100.0, 1.0)
        new, (us, vs) = classical_projection_step(s, return_intermediate=True)
        mats = flow_matrices(3, 3, g.dx, g.dy)
        A = pressure_matrix(mats, g.dt, g.dx, g.dy)
        b = -(mats["Bx_D"] @ us + mats["By_D"] @ vs)
        assert np.linalg.norm(A @ new.p - b) / np.linalg.norm(b) < 1e-10

    def test_pressure_corank(self):
        g = cavity_grid(3)
        mats = flow_matrices(3, 3, g.dx, g.dy)
        assert np.linalg.matrix_rank(pressure_matrix(mats, g.dt, g.dx, g.dy, regularize=False)) == 63
        assert np.linalg.matrix_rank(pressure_matrix(mats, g.dt, g.dx, g.dy)) == 64
