import os
import unittest

import numpy as np
from numpy.testing import assert_allclose

from fsibeam import fsi_vars
from fsibeam.beam import BeamParams, BeamState
from fsibeam.coupling import (CoupledState, CoupledSystem, PicardConfig, Trajectory, check_ball,
                              check_compatibility, collision_guard, continue_solution, energy_report,
                              enforce_compatibility, linear_coupled_solve, nonlinear_residual,
                              partitioned_step, picard_map, picard_solve, rebase, y_norm)
from fsibeam.errors import (BallError, CollisionError, CompatibilityError, DimensionError, DomainError,
                            PreconditionError)
from fsibeam.geometry import BeamProfile, profile_values
from fsibeam.mac import FluidGrid, FluidState, StaggeredOperators
from fsibeam.nonlinear import RhsBundle

SLOW = os.environ.get('FSI_SLOW')
N = 16


def bump(amplitude, n=N):
    return profile_values({'kind': 'bump', 'amplitude': amplitude}, 1.0, n + 1)


def make_system(mode='rect', amplitude=0.05, dt=0.01, nu=0.05, n=N):
    grid = FluidGrid(n, n)
    if mode == 'rect':
        profile = BeamProfile.flat(1.0, n + 1)
    else:
        profile = BeamProfile(bump(amplitude, n), 1.0, mode='graph')
    return CoupledSystem(StaggeredOperators(grid, profile), BeamParams(nodes=n + 1), nu, dt)


def initial_state(system, eta=None, eta_t=None):
    grid = system.grid
    eta = system.profile.eta.copy() if eta is None else eta
    eta_t = np.zeros(grid.nx + 1) if eta_t is None else eta_t
    velocity, _ = enforce_compatibility(system.ops, np.zeros(grid.nfaces), eta_t)
    return CoupledState(FluidState.from_vector(grid, velocity), BeamState(eta, eta_t))


class TestTrajectory(unittest.TestCase):
    def test_levels(self):
        grid = FluidGrid(8, 8)
        states = [CoupledState.zeros(grid, t) for t in (0.0, 0.1, 0.2)]
        traj = Trajectory(states, 0.1)
        self.assertEqual(traj.steps, 2)
        self.assertAlmostEqual(traj.horizon, 0.2)
        assert_allclose(traj.times, [0.0, 0.1, 0.2])
        self.assertEqual(traj.truncate(1).steps, 1)
        joined = traj.extend(Trajectory([CoupledState.zeros(grid, t) for t in (0.2, 0.3)], 0.1))
        self.assertEqual(joined.steps, 3)
        with self.assertRaises(DimensionError):
            traj.difference(joined)


class TestPicardConfig(unittest.TestCase):
    def test_validation(self):
        for kwargs in ({'kappa_target': 1.5}, {'dt': 0.0}, {'horizon': 0.105, 'dt': 0.01},
                       {'horizon_floor': 1.0}, {'radius': -1.0}, {'norm_weights': (1.0,)}):
            with self.assertRaises(DomainError):
                PicardConfig(**kwargs)

    def test_floor_and_steps(self):
        cfg = PicardConfig(horizon=0.16, dt=0.01)
        self.assertEqual(cfg.steps, 16)
        self.assertAlmostEqual(cfg.floor, 0.16 / 64)
        short = cfg.with_horizon(0.04)
        self.assertEqual(short.steps, 4)
        self.assertLess(short.floor, 0.04)


class TestCoupledSystem(unittest.TestCase):
    def test_rejects_mismatched_beam(self):
        grid = FluidGrid(N, N)
        ops = StaggeredOperators(grid, BeamProfile.flat(1.0, N + 1))
        with self.assertRaises(DimensionError):
            CoupledSystem(ops, BeamParams(nodes=N), 0.05, 0.01)
        with self.assertRaises(DomainError):
            CoupledSystem(ops, BeamParams(nodes=N + 1), 0.0, 0.01)

    def test_rest_stays_at_rest(self):
        system = make_system()
        state = system.step(CoupledState.zeros(system.grid))
        assert_allclose(state.fluid.velocity, 0.0, atol=1e-14)
        assert_allclose(state.beam.eta, 0.0, atol=1e-14)

    def test_step_satisfies_equations(self):
        for mode in ('rect', 'graph'):
            system = make_system(mode)
            x0 = initial_state(system, eta_t=bump(0.1))
            x1 = system.step(x0)
            self.assertLess(system.residual(x0, x1), 1e-9)
            check_compatibility(system.ops, x1, tol=1e-7)
            self.assertEqual(x1.beam.eta[0], 0.0)

    def test_energy_decays_without_data(self):
        system = make_system()
        x0 = initial_state(system, eta=bump(0.01))
        rhs = RhsBundle.zeros(system.grid, 20)
        traj = linear_coupled_solve(system, rhs, x0)
        energy = energy_report(system, traj)
        self.assertLess(energy['total'][-1], energy['total'][0])
        self.assertEqual(list(energy), fsi_vars.ENERGY_CSV_COLUMNS)

    def test_nonlinear_energy_does_not_increase(self):
        system = make_system()
        x0 = initial_state(system, eta=bump(0.01), eta_t=bump(0.1))
        traj, report = picard_solve(system, x0, PicardConfig(horizon=0.04, dt=0.01))
        self.assertEqual(report.status, 'converged')
        total = energy_report(system, traj)['total']
        self.assertEqual(total.size, 5)
        self.assertLessEqual(np.max(np.diff(total)), 1e-8)

    def test_incompatible_start(self):
        system = make_system()
        x0 = initial_state(system)
        x0.beam.eta_t[:] = bump(0.1)
        with self.assertRaises(CompatibilityError) as ctx:
            linear_coupled_solve(system, RhsBundle.zeros(system.grid, 1), x0)
        self.assertEqual(ctx.exception.condition, 'kinematic')


class TestCompatibility(unittest.TestCase):
    def setUp(self):
        self.system = make_system()
        self.ops = self.system.ops

    def test_conditions(self):
        grid = self.ops.grid
        state = initial_state(self.system, eta_t=bump(0.1))
        check_compatibility(self.ops, state)

        clamped = state.copy()
        clamped.beam.eta[0] = 0.1
        slip = state.copy()
        slip.fluid.u2[:, 0] = 0.1
        diverging = state.copy()
        diverging.fluid.u1[3, 3] += 0.1
        for bad, condition in ((clamped, 'clamped'), (slip, 'no-slip'), (diverging, 'divergence')):
            with self.assertRaises(CompatibilityError) as ctx:
                check_compatibility(self.ops, bad)
            self.assertEqual(ctx.exception.condition, condition)
        self.assertEqual(grid.nx, N)

    def test_enforce_is_a_no_op_on_compatible_data(self):
        state = initial_state(self.system, eta_t=bump(0.1))
        velocity, change = enforce_compatibility(self.ops, state.velocity, state.beam.eta_t)
        self.assertLess(change, 1e-9)
        assert_allclose(velocity, state.velocity, atol=1e-9)


class TestPartitioned(unittest.TestCase):
    def test_added_mass_matches_monolithic(self):
        system = make_system()
        x0 = initial_state(system, eta=bump(0.01), eta_t=bump(0.1))
        mono = system.step(x0)
        part, history = partitioned_step(system, x0, added_mass=True, tol=1e-12, max_iter=100)
        self.assertLess(history[-1], 1e-10)
        scale = np.max(np.abs(mono.beam.eta_t))
        assert_allclose(part.beam.eta_t, mono.beam.eta_t, atol=1e-5 * scale)
        assert_allclose(part.fluid.velocity, mono.fluid.velocity, atol=1e-5 * max(1.0, scale))

    def test_sub_iterations_without_added_mass(self):
        system = make_system()
        x0 = initial_state(system, eta=bump(0.01), eta_t=bump(0.1))
        _, with_mass = partitioned_step(system, x0, added_mass=True, tol=1e-10, max_iter=50)
        _, without = partitioned_step(system, x0, added_mass=False, tol=1e-10, max_iter=50)
        self.assertLessEqual(with_mass[-1], 1e-10)
        self.assertTrue(without[-1] > 1e-10 or len(without) > len(with_mass), (with_mass, without))

    @unittest.skipUnless(SLOW, "set FSI_SLOW=1 for long partitioned runs")
    def test_added_mass_tracks_monolithic(self):
        n = 32
        system = make_system(n=n)
        mono = initial_state(system, eta=bump(0.01, n), eta_t=bump(0.1, n))
        part = mono
        worst = 0.0
        for _ in range(50):
            mono = system.step(mono)
            part, history = partitioned_step(system, part, tol=1e-12, max_iter=100)
            self.assertLess(history[-1], 1e-10)
            worst = max(worst, float(np.max(np.abs(part.beam.eta_t - mono.beam.eta_t))),
                        float(np.max(np.abs(part.beam.eta - mono.beam.eta))),
                        float(np.max(np.abs(part.fluid.velocity - mono.fluid.velocity))))
        self.assertAlmostEqual(part.t, 0.5)
        self.assertLess(worst, 1e-6)

    def test_dirichlet_neumann_reports_history(self):
        system = make_system()
        x0 = initial_state(system, eta_t=bump(0.1))
        state, history = partitioned_step(system, x0, added_mass=False, max_iter=5)
        self.assertGreaterEqual(len(history), 1)
        self.assertAlmostEqual(state.t, system.dt)

    def test_crank_nicolson_beam(self):
        system = make_system()
        x0 = initial_state(system, eta_t=bump(0.1))
        state, _ = partitioned_step(system, x0, scheme='crank_nicolson')
        self.assertTrue(np.all(np.isfinite(state.beam.eta)))


class TestGuards(unittest.TestCase):
    def test_collision_guard(self):
        beam = BeamState(bump(-0.5), np.zeros(N + 1))
        self.assertAlmostEqual(collision_guard(beam, mu=1.0), 0.5)
        with self.assertRaises(CollisionError):
            collision_guard(BeamState(bump(-0.6), np.zeros(N + 1)), mu=1.0)

    def test_ball(self):
        system = make_system()
        x0 = initial_state(system, eta_t=bump(0.1))
        traj = linear_coupled_solve(system, RhsBundle.zeros(system.grid, 2), x0)
        weights = (1.0,) * 5
        norm = y_norm(system, traj, weights)
        self.assertGreater(norm, 0.0)
        margins = check_ball(system, traj, 2.0 * norm, 1.0, weights)
        self.assertEqual(len(margins), 3)
        with self.assertRaises(BallError) as ctx:
            check_ball(system, traj, 0.5 * norm, 1.0, weights)
        self.assertEqual(ctx.exception.bound, 'norm')
        with self.assertRaises(BallError) as ctx:
            check_ball(system, traj, 2.0 * norm, 0.4, weights)
        self.assertEqual(ctx.exception.bound, 'gap')

    def test_zero_norm(self):
        system = make_system()
        traj = Trajectory([CoupledState.zeros(system.grid, t) for t in (0.0, 0.01)], 0.01)
        self.assertEqual(y_norm(system, traj), 0.0)


class TestPicard(unittest.TestCase):
    def test_zero_data_converges_immediately(self):
        system = make_system()
        cfg = PicardConfig(horizon=0.04, dt=0.01)
        traj, report = picard_solve(system, CoupledState.zeros(system.grid), cfg)
        self.assertEqual(report.status, 'converged')
        self.assertEqual(report.iterations, 1)
        self.assertEqual(traj.steps, 4)

    def test_linear_map_is_constant(self):
        system = make_system()
        x0 = initial_state(system, eta_t=bump(0.1))
        cfg = PicardConfig(horizon=0.04, dt=0.01)
        _, report = picard_solve(system, x0, cfg, nonlinear=False)
        self.assertEqual(report.status, 'converged')
        self.assertLessEqual(report.iterations, 2)

    def test_small_data_contracts(self):
        system = make_system()
        x0 = initial_state(system, eta_t=bump(0.1))
        cfg = PicardConfig(horizon=0.04, dt=0.01)
        traj, report = picard_solve(system, x0, cfg)
        self.assertEqual(report.status, 'converged')
        self.assertTrue(all(k <= cfg.kappa_target for k in report.kappas))
        for residual in nonlinear_residual(system, traj):
            self.assertLess(residual, 1e-4)
        fixed = picard_map(system, traj)
        self.assertLess(y_norm(system, fixed.difference(traj)), 1e-6 * max(1.0, y_norm(system, traj)))

    def test_halving_down_to_the_floor(self):
        system = make_system()
        x0 = initial_state(system, eta_t=bump(0.1))
        cfg = PicardConfig(horizon=0.04, dt=0.01, radius=1e-12)
        traj, report = picard_solve(system, x0, cfg)
        self.assertEqual(report.status, 'halved-to-floor')
        self.assertEqual([h['reason'] for h in report.halvings], ['norm', 'norm'])
        self.assertAlmostEqual(report.halvings[0]['horizon_to'], 0.02)
        self.assertAlmostEqual(report.horizon, 0.01)

    def test_initial_gap_violation(self):
        system = make_system()
        x0 = CoupledState(FluidState.zeros(system.grid), BeamState(bump(-0.6), np.zeros(N + 1)))
        with self.assertRaises(PreconditionError):
            picard_solve(system, x0, PicardConfig(horizon=0.02, dt=0.01, mu=1.0))

    def test_dt_mismatch(self):
        system = make_system()
        with self.assertRaises(DomainError):
            picard_solve(system, CoupledState.zeros(system.grid), PicardConfig(horizon=0.04, dt=0.02))

    def test_report_dict(self):
        system = make_system()
        _, report = picard_solve(system, CoupledState.zeros(system.grid), PicardConfig(horizon=0.02, dt=0.01))
        data = report.to_dict()
        self.assertEqual(data['status'], 'converged')
        self.assertEqual(data['iterations'], report.iterations)


class TestContinuation(unittest.TestCase):
    def test_rect_slabs(self):
        system = make_system()
        x0 = initial_state(system, eta_t=bump(0.05))
        seen = []
        traj, reports = continue_solution(system, x0, PicardConfig(horizon=0.02, dt=0.01), 0.04,
                                          on_slab=lambda s, slab, report: seen.append(slab.steps))
        self.assertEqual([r.status for r in reports], ['converged', 'converged'])
        self.assertEqual(seen, [2, 2])
        self.assertEqual(traj.steps, 4)
        self.assertAlmostEqual(traj.final.t, 0.04)

    def test_graph_rebase(self):
        system = make_system('graph', amplitude=0.05)
        x0 = initial_state(system, eta_t=bump(0.02))
        slab, report = picard_solve(system, x0, PicardConfig(horizon=0.02, dt=0.01))
        self.assertEqual(report.status, 'converged')
        new_system, state = rebase(system, slab.final)
        assert_allclose(new_system.profile.eta, slab.final.beam.eta)
        check_compatibility(new_system.ops, state, tol=1e-7)
        same_system, same_state = rebase(make_system(), slab.final)
        self.assertIs(same_state, slab.final)

    @unittest.skipUnless(SLOW, "set FSI_SLOW=1 for long continuation runs")
    def test_graph_continuation(self):
        system = make_system('graph', amplitude=0.05)
        x0 = initial_state(system)
        traj, reports = continue_solution(system, x0, PicardConfig(horizon=0.04, dt=0.01), 0.16)
        self.assertTrue(all(r.status == 'converged' for r in reports))
        self.assertAlmostEqual(traj.final.t, 0.16)


if __name__ == '__main__':
    unittest.main()
