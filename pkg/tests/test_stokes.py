import unittest

import numpy as np
from numpy.testing import assert_allclose

from fsibeam.errors import DimensionError, DomainError, PreconditionError
from fsibeam.geometry import BeamProfile, profile_values
from fsibeam.mac import FluidGrid, FluidState, StaggeredOperators
from fsibeam.oracles import poiseuille_case, trig_stokes_case
from fsibeam.stokes import (apply_N0, assemble_Ns, cutoff_profile, decompose_pressure, dirichlet_lift_D,
                            harmonic_pressure_lift, leray_project, lift_divfree, mirror_doubled_grid,
                            steady_energy_balance, stokes_solve_steady, theta_field, unsteady_stokes_step)


def operators(n=16, mode='rect', amplitude=0.3):
    grid = FluidGrid(n, n)
    if mode == 'rect':
        return StaggeredOperators(grid, BeamProfile.flat(1.0, n + 1))
    eta0 = profile_values({'kind': 'bump', 'amplitude': amplitude}, 1.0, n + 1)
    return StaggeredOperators(grid, BeamProfile(eta0, 1.0, mode='graph'))


def top_data(grid, amplitude=0.1):
    return amplitude * np.sin(np.pi * grid.x_nodes / grid.length)**2


class TestSteadyStokes(unittest.TestCase):
    def test_poiseuille_second_order(self):
        case = poiseuille_case()
        errors = []
        for n in (16, 32):
            ops = operators(n)
            grid = ops.grid
            state = stokes_solve_steady(ops, case.nu, theta=case.theta(grid))
            errors.append(np.max(np.abs(state.velocity - case.velocity(grid))))
            assert_allclose(state.u2, 0.0, atol=1e-10)
        self.assertLess(errors[0], 0.05)
        self.assertGreater(errors[0] / errors[1], 3.5)

    def test_solution_is_divergence_free(self):
        case = trig_stokes_case()
        for mode in ('rect', 'graph'):
            ops = operators(mode=mode)
            grid = ops.grid
            state = stokes_solve_steady(ops, 1.0, case.forcing(grid), top_data(grid), case.theta(grid))
            assert_allclose(ops.divergence(state.velocity), 0.0, atol=1e-7)
            assert_allclose(state.velocity[grid.top_faces], ops.prolong @ top_data(grid), atol=1e-14)
            assert_allclose(state.velocity[grid.bottom_faces], 0.0)

    def test_energy_balance(self):
        case = trig_stokes_case()
        ops = operators()
        grid = ops.grid
        state = stokes_solve_steady(ops, case.nu, case.forcing(grid), None, case.theta(grid))
        balance = steady_energy_balance(ops, case.nu, state, case.forcing(grid), case.theta(grid))
        self.assertLess(abs(balance['residual']), 1e-8 * max(1.0, abs(balance['dissipation'])))

    def test_dirichlet_lift(self):
        ops = operators()
        state = dirichlet_lift_D(ops, 1.0, top_data(ops.grid))
        assert_allclose(ops.divergence(state.velocity), 0.0, atol=1e-7)

    def test_invalid_input(self):
        ops = operators()
        grid = ops.grid
        with self.assertRaises(DomainError):
            stokes_solve_steady(ops, 0.0)
        with self.assertRaises(DimensionError):
            stokes_solve_steady(ops, 1.0, f=np.zeros(3))
        bad = top_data(grid) + 0.1
        with self.assertRaises(PreconditionError):
            stokes_solve_steady(ops, 1.0, g=bad)


class TestUnsteadyStokes(unittest.TestCase):
    def test_rest_stays_at_rest(self):
        ops = operators()
        state = unsteady_stokes_step(ops, 1.0, FluidState.zeros(ops.grid), 0.1)
        assert_allclose(state.velocity, 0.0, atol=1e-14)
        self.assertAlmostEqual(state.t, 0.1)

    def test_approaches_steady_state(self):
        case = poiseuille_case()
        ops = operators()
        grid = ops.grid
        steady = stokes_solve_steady(ops, case.nu, theta=case.theta(grid))
        state = FluidState.zeros(grid)
        for _ in range(30):
            state = unsteady_stokes_step(ops, case.nu, state, 0.5, theta=case.theta(grid))
        assert_allclose(state.velocity, steady.velocity, atol=1e-6)

    def test_pressure_decomposition(self):
        case = trig_stokes_case()
        ops = operators(mode='graph')
        grid = ops.grid
        f = case.forcing(grid)
        theta = case.theta(grid)
        states = [FluidState.zeros(grid)]
        for _ in range(3):
            states.append(unsteady_stokes_step(ops, 1.0, states[-1], 0.05, f, None, theta))
        parts = decompose_pressure(ops, 1.0, states, 0.05, f, theta)
        self.assertEqual(len(parts), 3)
        scale = max(ops.cell_norm(s.p) for s in states[1:])
        for part in parts:
            self.assertLess(part.error, 1e-8 * scale)


class TestProjection(unittest.TestCase):
    def test_projector_properties(self):
        rng = np.random.default_rng(7)
        for mode in ('rect', 'graph'):
            ops = operators(mode=mode)
            grid = ops.grid
            u = rng.standard_normal(grid.nfaces)
            projected, p_u, q_u = leray_project(ops, u)
            assert_allclose(ops.divergence(projected), 0.0, atol=1e-8)
            assert_allclose(projected[~grid.free], 0.0)
            self.assertLess(abs(ops.inner(u - projected, projected)), 1e-8 * ops.inner(u, u))
            again = leray_project(ops, projected)[0]
            assert_allclose(again, projected, atol=1e-8)
            single = leray_project(ops, u, method='single')[0]
            assert_allclose(single, projected, atol=1e-8)

    def test_projector_is_self_adjoint(self):
        rng = np.random.default_rng(11)
        for mode in ('rect', 'graph'):
            ops = operators(mode=mode)
            grid = ops.grid
            u = rng.standard_normal(grid.nfaces)
            v = rng.standard_normal(grid.nfaces)
            lhs = ops.inner(leray_project(ops, u)[0], v)
            rhs = ops.inner(u, leray_project(ops, v)[0])
            self.assertLess(abs(lhs - rhs), 1e-9 * ops.norm(u) * ops.norm(v))

    def test_unknown_method(self):
        ops = operators()
        with self.assertRaises(DomainError):
            leray_project(ops, np.zeros(ops.grid.nfaces), method='chorin')


class TestLifting(unittest.TestCase):
    def test_cutoff_profile(self):
        s = np.linspace(0.0, 1.0, 11)
        S = cutoff_profile(s, 0.5)
        assert_allclose(S[:5], 0.0)
        self.assertAlmostEqual(S[-1], 1.0)

    def test_lift_traces(self):
        for mode in ('rect', 'graph'):
            ops = operators(mode=mode)
            grid = ops.grid
            g = top_data(grid)
            lift = lift_divfree(ops, g).velocity
            assert_allclose(ops.divergence(lift), 0.0, atol=1e-13)
            assert_allclose(lift[grid.top_faces], ops.prolong @ g, atol=1e-13)
            assert_allclose(lift[grid.bottom_faces], 0.0, atol=1e-14)

    def test_lift_rejects_corner_data(self):
        ops = operators()
        with self.assertRaises(PreconditionError):
            lift_divfree(ops, np.ones(ops.grid.nx + 1))
        with self.assertRaises(DomainError):
            lift_divfree(ops, top_data(ops.grid), cutoff=0.0)


class TestPressureOperators(unittest.TestCase):
    def test_added_mass_symmetric_positive(self):
        ops = operators(mode='graph')
        ns = assemble_Ns(ops)
        inner = ns[1:-1, 1:-1]
        assert_allclose(inner, inner.T, atol=1e-10 * np.max(np.abs(inner)))
        self.assertGreater(np.linalg.eigvalsh(0.5 * (inner + inner.T)).min(), 0.0)
        self.assertIs(assemble_Ns(ops), ns)

    def test_harmonic_lift_of_constant_data(self):
        ops = operators()
        grid = ops.grid
        lift = harmonic_pressure_lift(ops, theta_field(grid, 1.0, 0.0)).reshape(grid.shape_p)
        # linear from 1 at the inlet to 0 at the outlet
        assert_allclose(lift, 1.0 - grid.x_centers[:, None] + 0.0 * grid.s_centers, atol=1e-10)

    def test_neumann_trace_shape(self):
        ops = operators()
        trace = apply_N0(ops, np.ones(ops.grid.nx), np.zeros(ops.grid.nx))
        self.assertEqual(trace.shape, (ops.grid.nx + 1,))
        self.assertEqual(trace[0], 0.0)
        with self.assertRaises(DimensionError):
            apply_N0(ops, np.ones(3), np.zeros(3))

    def test_neumann_trace_of_separable_harmonic(self):
        # rho = sin(pi x) cosh(pi z): harmonic, zero on the inlet/outlet, flat bottom
        errors = []
        for n in (16, 32):
            ops = operators(n)
            grid = ops.grid
            top = np.pi * np.sinh(np.pi) * np.sin(np.pi * grid.x_centers)
            trace = apply_N0(ops, top, np.zeros(grid.nx))
            exact = np.sin(np.pi * grid.x_nodes) * np.cosh(np.pi)
            errors.append(np.max(np.abs(trace - exact)) / np.cosh(np.pi))
        self.assertLess(errors[0], 5e-2)
        self.assertLess(errors[1], 0.4 * errors[0])

    def test_neumann_trace_is_linear(self):
        rng = np.random.default_rng(9)
        ops = operators(mode='graph')
        nx = ops.grid.nx
        v1 = (rng.standard_normal(nx), rng.standard_normal(nx))
        v2 = (rng.standard_normal(nx), rng.standard_normal(nx))
        both = apply_N0(ops, v1[0] + v2[0], v1[1] + v2[1])
        parts = apply_N0(ops, *v1) + apply_N0(ops, *v2)
        assert_allclose(both, parts, atol=1e-10 * np.max(np.abs(parts)))
        assert_allclose(apply_N0(ops, np.zeros(nx), np.zeros(nx)), 0.0)

    def test_mirror_grid(self):
        grid = FluidGrid(8, 12, 1.5)
        big = mirror_doubled_grid(grid)
        self.assertEqual((big.nx, big.nz), (16, 12))
        self.assertAlmostEqual(big.length, 3.0)


if __name__ == '__main__':
    unittest.main()
