import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vqevolve.evolution import (
    AxisBC,
    BoundarySpec,
    DenseSolver,
    GridSpec,
    StateError,
    VariationalSolver,
    assemble_cn,
    assemble_ie,
    dense_laplacian,
    diffusion_operator,
    evolve,
    evolve_2d,
    exact_heat,
    make_solver,
    trace_error,
)
from vqevolve.operators import laplacian_1d_dense
from vqevolve.state import DegenerateInputError, StateVector


def hot_wall_setup():
    return GridSpec.heat_1d(3, 1.0, 20), BoundarySpec(AxisBC.dirichlet(1.0, 0.0))


class TestGrid:
    def test_heat_1d_derived_D(self):
        g = GridSpec.heat_1d(3, 1.0, 20)
        assert g.dx == 1 / 9 and g.dt == 0.05
        assert np.isclose(g.D * g.dt / g.dx**2, 1.0)

    def test_physical_roundtrip(self):
        g = GridSpec.heat_1d(3, 2.0, 10)
        h = GridSpec.heat_1d_physical(3, g.D, 10)
        assert np.isclose(h.delta_x, 2.0)

    def test_nodes_interior(self):
        g = GridSpec.heat_1d(2, 1.0, 4, L=2.0)
        assert np.allclose(g.x, [0.4, 0.8, 1.2, 1.6])

    def test_2d_shape(self):
        g = GridSpec.heat_2d(2, 3, 1.0, 1.0, 5)
        assert g.shape == (8, 4) and g.size == 32 and g.n_qubits == 5

    @pytest.mark.parametrize("kw", [
        dict(dims=3), dict(n_t=0), dict(dt=0.0), dict(delta_x=-1.0), dict(my=1),
    ])
    def test_validation(self, kw):
        base = dict(dims=1, mx=2, my=0, dx=0.2, dy=0.0, dt=0.1, n_t=3, D=1.0, delta_x=1.0)
        base.update(kw)
        with pytest.raises(ValueError):
            GridSpec(**base)


class TestBoundary:
    def test_callable_values(self):
        bc = AxisBC.dirichlet(lambda t: 2 * t, 1.0)
        assert bc.values(0.5) == (1.0, 1.0)

    def test_neumann_ignores_values(self):
        assert AxisBC.neumann().values(3.0) == (0.0, 0.0)

    def test_2d_vector(self):
        g = GridSpec.heat_2d(1, 1, 1.0, 1.0, 1)
        bc = BoundarySpec(AxisBC.dirichlet(1.0, 2.0), AxisBC.dirichlet(3.0, 0.0))
        assert np.allclose(bc.boundary_vector(g, 0, "x"), [1, 2, 1, 2])
        assert np.allclose(bc.boundary_vector(g, 0, "y"), [3, 3, 0, 0])

    def test_y_on_1d(self):
        g, bc = hot_wall_setup()
        with pytest.raises(ValueError):
            bc.boundary_vector(g, 0, "y")


class TestAssembly:
    def test_no_diffusion_ie(self):
        g = GridSpec.heat_1d(3, 0.0, 1)
        u = np.linspace(0, 1, 8)
        A, b = assemble_ie(g, BoundarySpec(), u, g.dt)
        assert np.array_equal(A.dense(), np.eye(8)) and np.array_equal(b, u)
        assert np.array_equal(DenseSolver().solve(A, b).solution, u)

    def test_hot_wall_first_rhs(self):
        g, bc = hot_wall_setup()
        _, b = assemble_ie(g, bc, np.zeros(8), g.dt)
        assert np.array_equal(b, np.eye(8)[0])

    def test_hand_rhs(self):
        g = GridSpec.heat_1d(2, 0.5, 4)
        bc = BoundarySpec(AxisBC.dirichlet(2.0, 3.0))
        A, b = assemble_ie(g, bc, np.ones(4), g.dt)
        assert np.allclose(b, [2.0, 1.0, 1.0, 2.5])
        assert np.allclose(A.dense(), np.eye(4) + 0.5 * laplacian_1d_dense(2, "D"))

    def test_source_term(self):
        g = GridSpec.heat_1d(2, 0.5, 4)
        _, b = assemble_ie(g, BoundarySpec(), np.zeros(4), g.dt, source=np.ones(4))
        assert np.allclose(b, g.dt)

    def test_wrong_length(self):
        g, bc = hot_wall_setup()
        with pytest.raises(ValueError):
            assemble_ie(g, bc, np.zeros(4), g.dt)

    def test_cn_no_diffusion_is_static(self):
        g = GridSpec.heat_1d(3, 0.0, 5)
        u0 = np.sin(np.pi * g.x)
        u, b = u0, None
        for k in range(g.n_t):
            A, b = assemble_cn(g, BoundarySpec(), u, b, g.times[k], g.times[k + 1])
            u = DenseSolver().solve(A, b).solution
        assert np.allclose(u, u0, atol=1e-14)

    @pytest.mark.parametrize("left", [0.0, lambda t: np.cos(3 * t)])
    def test_cn_recurrence_matches_direct(self, left):
        g = GridSpec.heat_1d(3, 1.0, 20)
        bc = BoundarySpec(AxisBC.dirichlet(left, 0.0))
        L = laplacian_1d_dense(3, "D")
        u, b = np.sin(np.pi * g.x), None
        for k in range(g.n_t):
            t0, t1 = g.times[k], g.times[k + 1]
            A, b = assemble_cn(g, bc, u, b, t0, t1)
            direct = (2 * np.eye(8) - L) @ u + bc.boundary_sum(g, t1) + bc.boundary_sum(g, t0)
            assert np.max(np.abs(b - direct)) < 1e-12
            u = np.linalg.solve(A.dense(), b)

    def test_cn_needs_history(self):
        g, bc = hot_wall_setup()
        with pytest.raises(StateError):
            assemble_cn(g, bc, np.zeros(8), None, g.times[3], g.times[4])

    def test_2d_operator_kron(self):
        g = GridSpec.heat_2d(2, 2, 0.7, 1.3, 4)
        bc = BoundarySpec(AxisBC.dirichlet(), AxisBC.neumann())
        L = 0.7 * np.kron(np.eye(4), laplacian_1d_dense(2, "D")) + 1.3 * np.kron(laplacian_1d_dense(2, "N"), np.eye(4))
        assert np.allclose(diffusion_operator(g, bc).dense(), L)
        assert np.allclose(dense_laplacian(g, bc), L)


class TestTraceError:
    def test_parallel(self):
        assert trace_error(np.array([1.0, 2.0]), [2.0, 4.0]) < 1e-15

    def test_orthogonal(self):
        assert trace_error(StateVector.zero(1), [0.0, 1.0]) == 1.0

    def test_pythagorean(self):
        assert abs(trace_error(np.array([0.6, 0.8]), [1.0, 0.0]) - 0.8) < 1e-15

    @given(st.lists(st.floats(-10, 10), min_size=4, max_size=4),
           st.lists(st.floats(-10, 10), min_size=4, max_size=4))
    def test_matches_overlap_formula(self, a, b):
        a, b = np.array(a), np.array(b)
        if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
            return
        ov = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
        assert abs(trace_error(a, b) - np.sqrt(max(0.0, 1 - ov**2))) < 1e-7
        assert 0 <= trace_error(a, b) <= 1

    def test_zero_reference(self):
        with pytest.raises(DegenerateInputError):
            trace_error(np.ones(2), np.zeros(2))


class TestExactHeat:
    def test_initial(self):
        x = np.linspace(0, 1, 7)
        assert np.allclose(exact_heat(x, 0.0, 0.3), np.sin(np.pi * x))

    def test_decay(self):
        assert abs(exact_heat(0.5, 1.0, 1 / np.pi**2) - np.exp(-1)) < 1e-15

    def test_walls(self):
        assert np.allclose(exact_heat(np.array([0.0, 1.0]), 2.0, 0.4), 0, atol=1e-15)


class TestSolvers:
    def test_make_solver(self):
        assert isinstance(make_solver("oracle", 2, 1), DenseSolver)
        assert isinstance(make_solver("quantum", 2, 1), VariationalSolver)
        with pytest.raises(ValueError):
            make_solver("classical", 2, 1)

    def test_zero_rhs(self):
        g, bc = hot_wall_setup()
        A, _ = assemble_ie(g, bc, np.zeros(8), g.dt)
        step = VariationalSolver(3, 3, seed=0).solve(A, np.zeros(8))
        assert not np.any(step.solution) and step.converged

    def test_scalar_operator_shortcut(self):
        g = GridSpec.heat_1d(3, 0.0, 1)
        A, b = assemble_ie(g, BoundarySpec(), np.arange(8.0), g.dt)
        step = VariationalSolver(3, 3, seed=0).solve(A, b)
        assert np.array_equal(step.solution, np.arange(8.0)) and step.n_function_evals == 0

    def test_bad_layers(self):
        with pytest.raises(ValueError):
            VariationalSolver(3, 0)

    def test_shallow_ansatz_warns(self, caplog):
        VariationalSolver(4, 3)
        assert "below the 2^n/n heuristic" in caplog.text
        caplog.clear()
        VariationalSolver(3, 3)
        assert not caplog.text


class TestEvolve:
    def test_hot_wall_quantum(self):
        g, bc = hot_wall_setup()
        ts = evolve(g, bc, np.zeros(8), "IE", layers=3, seed=0)
        assert ts.mean_trace_error <= 5e-3
        assert ts.flagged_steps == []
        assert len(ts.snapshots) == 21 and ts.n_params == 9

    def test_oracle_mode_reproduces_dense(self):
        g, bc = hot_wall_setup()
        ts = evolve(g, bc, np.zeros(8), "CN", mode="oracle")
        assert ts.mean_trace_error < 1e-12
        assert np.allclose(ts.final, ts.oracle_snapshots[-1], atol=1e-13)

    def test_steady_state_stays(self):
        g, bc = hot_wall_setup()
        A = np.eye(8) + laplacian_1d_dense(3, "D")
        steady = np.linalg.solve(A - np.eye(8), bc.boundary_sum(g, 0.0))
        ts = evolve(g, bc, steady, "IE", layers=3, seed=1)
        assert max(trace_error(u, steady) for u in ts.snapshots) < 1e-3

    def test_same_seed_same_result(self):
        g, bc = hot_wall_setup()
        a = evolve(g, bc, np.zeros(8), layers=3, seed=5)
        b = evolve(g, bc, np.zeros(8), layers=3, seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a.snapshots, b.snapshots))

    def test_unknown_scheme(self):
        g, bc = hot_wall_setup()
        with pytest.raises(ValueError):
            evolve(g, bc, np.zeros(8), "RK4", mode="oracle")

    def test_without_oracle(self):
        g, bc = hot_wall_setup()
        ts = evolve(g, bc, np.zeros(8), mode="oracle", with_oracle=False)
        assert ts.oracle_snapshots is None and np.isnan(ts.metrics[0].trace_error)

    def test_2d_static_without_diffusion(self):
        g = GridSpec.heat_2d(2, 2, 0.0, 0.0, 3)
        bc = BoundarySpec(AxisBC.dirichlet(), AxisBC.dirichlet(1.0, 0.0))
        u0 = np.linspace(0, 1, 16)
        ts = evolve_2d(g, bc, u0, layers=2, seed=0)
        assert all(np.array_equal(u, u0) for u in ts.snapshots)

    def test_2d_one_step_matches_lu(self):
        g = GridSpec.heat_2d(2, 2, 1.0, 1.0, 1)
        bc = BoundarySpec(AxisBC.dirichlet(), AxisBC.dirichlet(1.0, 0.0))
        ts = evolve_2d(g, bc, np.zeros(16), layers=8, seed=0)
        assert ts.metrics[0].local_trace_error < 1e-3

    def test_2d_requires_2d(self):
        g, bc = hot_wall_setup()
        with pytest.raises(ValueError):
            evolve_2d(g, bc, np.zeros(8))
