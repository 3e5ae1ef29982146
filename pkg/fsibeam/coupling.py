"""Coupled fluid/beam solvers and the Picard fixed-point driver.

The linear coupled problem on the reference domain

    u_t - nu LAP u + grad p = f,  div u = 0,
    u = eta_t e2 on the top, u = 0 on the bottom, u2 = 0 and p = theta on the inlet/outlet,
    eta_tt - beta eta_xx - gamma eta_txx + alpha eta_xxxx = p|top + h,

is advanced by implicit Euler, either monolithically (CoupledSystem) or by
the strongly coupled added-mass splitting (partitioned_step). picard_solve
iterates the map X -> linear solve with (F, Theta, H) evaluated on X over a
whole time slab and halves the slab on loss of contraction.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fsi_vars
from .beam import (BeamState, assemble_beam_matrices, beam_dissipation, beam_energy,
                   beam_step, sobolev_norm)
from .errors import (BallError, CollisionError, CompatibilityError, DimensionError,
                     DomainError, PreconditionError, SolverError)
from .geometry import BeamProfile, build_geometry
from .mac import FluidState, StaggeredOperators, krylov_solve
from .nonlinear import RhsBundle, eval_F, eval_H, eval_M, eval_Theta
from .stokes import (assemble_Ns, face_field, forcing_pressure, harmonic_pressure_lift,
                     leray_project, lift_divfree, unsteady_stokes_step, viscous_pressure)


@dataclass
class CoupledState:
    fluid: FluidState
    beam: BeamState

    @property
    def t(self):
        return self.fluid.t

    @property
    def velocity(self):
        return self.fluid.velocity

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(FluidState.zeros(grid, t), BeamState.zeros(grid.nx + 1, t))

    def copy(self):
        return CoupledState(self.fluid.copy(), self.beam.copy())

    def difference(self, other):
        fluid = FluidState(self.fluid.u1 - other.fluid.u1, self.fluid.u2 - other.fluid.u2,
                           self.fluid.p - other.fluid.p, self.t)
        beam = BeamState(self.beam.eta - other.beam.eta, self.beam.eta_t - other.beam.eta_t, self.t)
        return CoupledState(fluid, beam)


class Trajectory:
    """Time levels 0..steps of a slab with uniform step dt."""

    def __init__(self, states, dt):
        self.states = list(states)
        self.dt = float(dt)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, n):
        return self.states[n]

    @property
    def steps(self):
        return len(self.states) - 1

    @property
    def horizon(self):
        return self.steps * self.dt

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def initial(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]

    def truncate(self, steps):
        return Trajectory(self.states[:steps + 1], self.dt)

    def difference(self, other):
        if len(self) != len(other):
            raise DimensionError("trajectories have {} and {} levels".format(len(self), len(other)))
        return Trajectory([a.difference(b) for a, b in zip(self.states, other.states)], self.dt)

    def extend(self, other):
        """Concatenate a slab that starts where this one ends."""
        return Trajectory(self.states + other.states[1:], self.dt)


@dataclass
class PicardConfig:
    radius: float = None
    mu: float = None
    horizon: float = 0.16
    horizon_floor: float = None
    kappa_target: float = 0.5
    tol: float = 1e-8
    max_iter: int = 30
    dt: float = 1e-2
    solver_tol: float = 1e-10
    norm_weights: tuple = (1.0, 1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        violations = []
        if not 0.0 < self.kappa_target < 1.0:
            violations.append("kappa_target must lie in (0, 1)")
        if not self.dt > 0:
            violations.append("dt must be > 0")
        if not self.horizon > 0:
            violations.append("horizon must be > 0")
        elif self.dt > 0 and abs(round(self.horizon / self.dt) * self.dt - self.horizon) > 1e-9 * self.horizon:
            violations.append("dt must divide the horizon")
        if self.horizon_floor is not None and not 0 < self.horizon_floor < self.horizon:
            violations.append("horizon_floor must lie in (0, horizon)")
        if self.radius is not None and not self.radius > 0:
            violations.append("radius must be > 0")
        if self.mu is not None and not self.mu > 0:
            violations.append("mu must be > 0")
        if len(self.norm_weights) != 5:
            violations.append("norm_weights needs 5 entries")
        if violations:
            raise DomainError("; ".join(violations))

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    @property
    def floor(self):
        return self.horizon / 2**6 if self.horizon_floor is None else self.horizon_floor

    def with_horizon(self, horizon):
        floor = self.floor if self.floor < horizon else 0.5 * horizon
        return replace(self, horizon=horizon, horizon_floor=floor)


@dataclass
class FixedPointReport:
    residuals: list = field(default_factory=list)
    kappas: list = field(default_factory=list)
    halvings: list = field(default_factory=list)
    margins: list = field(default_factory=list)
    status: str = 'running'
    horizon: float = 0.0
    radius: float = 0.0
    mu: float = 0.0
    t0: float = 0.0

    @property
    def iterations(self):
        return len(self.residuals)

    @property
    def kappa(self):
        """Last measured contraction ratio (nan before the second iterate)."""
        return self.kappas[-1] if self.kappas else float('nan')

    def to_dict(self):
        out = asdict(self)
        out['iterations'] = self.iterations
        return out


# ----------------------------------------------------------------------
# monolithic step

class CoupledSystem:
    """Implicit Euler step of the linear coupled problem as one sparse system.

    Unknowns [u on the free faces, p, eta_t on the interior beam nodes]. The
    top velocity is P eta_t; the beam load is P^T of the pressure trace
    E p + (h_z/2) a (f2 + nu LAP u2 - u2_t) on the top faces, whose u2_t
    part is carried on the left-hand side. The matrix and its factorization
    are built once per (dt, nu).
    """

    def __init__(self, ops, params, nu, dt, tol=1e-10):
        grid = ops.grid
        if params.nodes != grid.nx + 1:
            raise DimensionError("beam has {} nodes, grid needs {}".format(params.nodes, grid.nx + 1))
        if abs(params.length - grid.length) > 1e-12 * grid.length:
            raise DimensionError("beam length {} != channel length {}".format(params.length, grid.length))
        if not nu > 0:
            raise DomainError("nu must be > 0")
        if not dt > 0:
            raise DomainError("dt must be > 0")
        self.ops = ops
        self.grid = grid
        self.profile = ops.profile
        self.params = params
        self.nu = float(nu)
        self.dt = float(dt)
        self.c = 1.0 / self.dt
        self.tol = tol
        self.nfree = int(np.count_nonzero(grid.free))
        self.nbeam = grid.nx - 1

    def __repr__(self):
        return "CoupledSystem({}, nu={}, dt={}, mode={})".format(self.grid, self.nu, self.dt, self.ops.mode)

    @cached_property
    def _blocks(self):
        ops, grid = self.ops, self.grid
        free, top = grid.free, grid.top_faces
        lap = ops.laplacian
        lap_free = lap[free]
        lap_top = lap[top]
        P = ops.prolong[:, 1:-1]
        half = sp.diags(0.5 * grid.hz * ops.a_centers)
        lap_beam, stiffness = assemble_beam_matrices(self.params)
        return {
            'lap_ff': lap_free[:, free],
            'lap_ft': lap_free[:, top],
            'lap_tf': lap_top[:, free],
            'lap_tt': lap_top[:, top],
            'lap_top': lap_top,
            'P': P,
            'half': half,
            'lap_beam': lap_beam,
            'stiffness': stiffness,
            'mass': (sp.identity(self.nbeam) + P.T @ half @ P).tocsr(),
        }

    @cached_property
    def matrix(self):
        b = self._blocks
        ops, nu, c = self.ops, self.nu, self.c
        P, half = b['P'], b['half']
        nf, nc = self.nfree, self.grid.ncells
        momentum = sp.hstack([c * sp.identity(nf) - nu * b['lap_ff'], ops.gradient, -nu * b['lap_ft'] @ P])
        constraint = sp.hstack([ops.divergence_free, sp.csr_matrix((nc, nc)), ops.divergence_top @ P])
        beam = sp.hstack([
            -nu * P.T @ half @ b['lap_tf'],
            -P.T @ ops.top_cell_selector,
            c * b['mass'] - nu * P.T @ half @ b['lap_tt'] @ P
            + self.params.gamma * b['lap_beam'] + self.dt * b['stiffness'],
        ])
        return sp.vstack([momentum, constraint, beam]).tocsc()

    @cached_property
    def _factor(self):
        logging.debug("factorizing coupled system ({} unknowns)".format(self.matrix.shape[0]))
        return spla.splu(self.matrix)

    def rhs(self, state, f=None, theta=None, h=None):
        b = self._blocks
        grid, ops = self.grid, self.ops
        f = face_field(grid, f)
        theta = np.zeros((2, grid.nz)) if theta is None else np.asarray(theta, dtype=float)
        h = np.zeros(grid.nx + 1) if h is None else np.asarray(h, dtype=float)
        theta_vec = ops.theta_vector(theta)
        u_n = state.fluid.velocity
        momentum = f[grid.free] - theta_vec[grid.free] + self.c * u_n[grid.free]
        constraint = np.zeros(grid.ncells)
        beam = (self.c * (b['mass'] @ state.beam.eta_t[1:-1]) - b['stiffness'] @ state.beam.eta[1:-1]
                + h[1:-1] + b['P'].T @ (b['half'] @ f[grid.top_faces]))
        return np.concatenate([momentum, constraint, beam])

    def unknowns(self, state):
        return np.concatenate([state.fluid.velocity[self.grid.free], state.fluid.p.ravel(),
                               state.beam.eta_t[1:-1]])

    def _solve(self, rhs):
        if self.grid.ncells <= fsi_vars.DIRECT_SOLVER_MAX_CELLS:
            x = self._factor.solve(rhs)
        else:
            x = krylov_solve(self.matrix, rhs, self.tol)
        residual = np.linalg.norm(self.matrix @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if not np.isfinite(residual) or residual > max(self.tol, 1e-8):
            raise SolverError("coupled solve failed, relative residual {:.3e}".format(residual), residual)
        return x, residual

    def step(self, state, f=None, theta=None, h=None):
        """Advance one step; data are taken at the new time level."""
        grid = self.grid
        x, residual = self._solve(self.rhs(state, f, theta, h))
        nf, nc = self.nfree, grid.ncells
        eta_t = np.zeros(grid.nx + 1)
        eta_t[1:-1] = x[nf + nc:]
        velocity = np.zeros(grid.nfaces)
        velocity[grid.free] = x[:nf]
        velocity[grid.top_faces] = self.ops.prolong @ eta_t
        t = state.t + self.dt
        eta = state.beam.eta + self.dt * eta_t
        eta[0] = eta[-1] = 0.0
        logging.debug("coupled step t={:.4f}: residual {:.2e}".format(t, residual))
        return CoupledState(FluidState.from_vector(grid, velocity, x[nf:nf + nc], t), BeamState(eta, eta_t, t))

    def residual(self, state, new_state, f=None, theta=None, h=None):
        """Relative residual of the step equations at a given new state."""
        rhs = self.rhs(state, f, theta, h)
        defect = self.matrix @ self.unknowns(new_state) - rhs
        return float(np.linalg.norm(defect) / max(np.linalg.norm(rhs), 1e-300))


# ----------------------------------------------------------------------
# initial data

def check_compatibility(ops, state, tol=1e-8):
    """Raise CompatibilityError naming the first condition x0 violates."""
    grid = ops.grid
    u = state.fluid.velocity
    eta, eta_t = state.beam.eta, state.beam.eta_t
    scale = max(1.0, float(np.max(np.abs(u))), float(np.max(np.abs(eta_t))))
    if max(abs(eta[0]), abs(eta[-1]), abs(eta_t[0]), abs(eta_t[-1])) > tol:
        raise CompatibilityError("beam data are not clamped", 'clamped')
    if np.max(np.abs(u[grid.bottom_faces])) > tol * scale:
        raise CompatibilityError("velocity does not vanish on the bottom", 'no-slip')
    kinematic = np.max(np.abs(u[grid.top_faces] - ops.prolong @ eta_t))
    if kinematic > tol * scale:
        raise CompatibilityError("top velocity differs from eta_t e2 by {:.3e}".format(kinematic), 'kinematic')
    divergence = np.max(np.abs(ops.divergence(u))) * min(grid.hx, grid.hz)
    if divergence > tol * scale:
        raise CompatibilityError("velocity is not divergence free ({:.3e})".format(divergence), 'divergence')


def enforce_compatibility(ops, velocity, eta_t, cutoff=0.5, tol=1e-10):
    """Closest compatible velocity: Pi(u - w) + w with w the lifting of eta_t.

    Returns
    -------
    tuple
        (velocity, weighted norm of the modification)
    """
    lift = lift_divfree(ops, eta_t, cutoff).velocity
    projected = leray_project(ops, np.asarray(velocity, dtype=float) - lift, tol=tol)[0]
    out = projected + lift
    change = ops.norm(out - velocity)
    if change > 1e-8:
        logging.warning("initial velocity modified by {:.3e} to satisfy the compatibility conditions".format(change))
    return out, change


def linear_coupled_solve(system, rhs, x0, check=True):
    """Monolithic implicit Euler over len(rhs) steps from x0.

    Raises
    ------
    CompatibilityError
        x0 violates a compatibility condition (only with check=True).
    """
    if check:
        check_compatibility(system.ops, x0)
    states = [x0]
    for n in range(len(rhs)):
        states.append(system.step(states[-1], *rhs.level(n)))
    return Trajectory(states, system.dt)


# ----------------------------------------------------------------------
# partitioned step

def partitioned_step(system, state, f=None, theta=None, h=None, added_mass=True,
                     tol=1e-10, max_iter=50, scheme='euler'):
    """One step by strongly coupled beam/fluid sub-iterations.

    With added_mass=True the beam carries the mass I + N_s and the load
    P^T[E(p_F + R theta + rho(u)) + (h_z/2) a (f2 + nu LAP u2)] + h, whose
    only lagged dependence is the viscous part. With added_mass=False the
    beam carries mass I and the full lagged pressure trace (plain
    Dirichlet-Neumann). The fluid is then advanced with the new eta_t as
    top data.

    Returns
    -------
    tuple
        (CoupledState, list of relative eta_t updates per sub-iteration)
    """
    ops, grid = system.ops, system.grid
    nu, dt = system.nu, system.dt
    f = face_field(grid, f)
    theta = np.zeros((2, grid.nz)) if theta is None else np.asarray(theta, dtype=float)
    h = np.zeros(grid.nx + 1) if h is None else np.asarray(h, dtype=float)
    top = grid.top_faces
    half = 0.5 * grid.hz * ops.a_centers
    lap_top = ops.laplacian[top]
    E = ops.top_cell_selector

    if added_mass:
        mass = np.identity(grid.nx - 1) + assemble_Ns(ops)[1:-1, 1:-1]
        fixed = forcing_pressure(ops, f, system.tol) + harmonic_pressure_lift(ops, theta, system.tol)
    else:
        mass = None

    u_k = state.fluid.velocity
    p_k = state.fluid.p.ravel()
    v_k = state.beam.eta_t
    history = []
    new_state = state
    for k in range(max_iter):
        if added_mass:
            pressure = fixed + viscous_pressure(ops, u_k, nu, system.tol)
            trace = E @ pressure + half * (f[top] + nu * (lap_top @ u_k))
        else:
            u_t = (ops.prolong @ (v_k - state.beam.eta_t)) / dt
            trace = E @ p_k + half * (f[top] + nu * (lap_top @ u_k) - u_t)
        beam = beam_step(system.params, state.beam, ops.to_nodes(trace) + h, dt, mass=mass, scheme=scheme)
        fluid = unsteady_stokes_step(ops, nu, state.fluid, dt, f, beam.eta_t, theta, system.tol)
        new_state = CoupledState(fluid, beam)

        delta = float(np.max(np.abs(beam.eta_t - v_k))) / max(1.0, float(np.max(np.abs(beam.eta_t))))
        history.append(delta)
        logging.debug("sub-iteration {}: eta_t update {:.3e}".format(k + 1, delta))
        u_k, p_k, v_k = fluid.velocity, fluid.p.ravel(), beam.eta_t
        if delta <= tol:
            break
        if not np.isfinite(delta) or delta > 1e12:
            logging.warning("sub-iterations diverged after {} iterations".format(k + 1))
            break
    return new_state, history


# ----------------------------------------------------------------------
# Picard iteration

def collision_guard(state, mu):
    """min(1 + eta); CollisionError when it drops below 1/(2 mu) (the bound itself is accepted)."""
    beam = getattr(state, 'beam', state)
    margin = float(np.min(1.0 + beam.eta))
    if margin < 0.5 / mu:
        raise CollisionError("gap 1 + eta = {:.4e} below 1/(2 mu) = {:.4e}".format(margin, 0.5 / mu),
                             margin=margin)
    return margin


def y_norm(system, trajectory, weights=(1.0, 1.0, 1.0, 1.0, 1.0)):
    """Discrete stand-in for the space-time norm of a slab.

    max over levels of (w0 |u|_H1 + w1 |eta|_H2 + w2 |eta_t|_L2)
    + (dt sum over steps of (w3 |u|_H2 + w4 |eta|_H4)^2)^(1/2).
    """
    ops, params = system.ops, system.params
    w = weights
    sup = 0.0
    l2 = 0.0
    for n, state in enumerate(trajectory):
        u = state.fluid.velocity
        mass = ops.inner(u, u)
        first = ops.gradient_energy(u)
        level = (w[0] * math.sqrt(mass + first) + w[1] * sobolev_norm(params, state.beam.eta, 2)
                 + w[2] * sobolev_norm(params, state.beam.eta_t, 0))
        sup = max(sup, level)
        if n > 0:
            h2 = math.sqrt(mass + first + ops.second_derivative_energy(u))
            l2 += trajectory.dt * (w[3] * h2 + w[4] * sobolev_norm(params, state.beam.eta, 4))**2
    return sup + math.sqrt(l2)


def nonlinear_rhs(system, trajectory):
    """(F, Theta, H) along a trajectory, one entry per step."""
    ops, profile = system.ops, system.profile
    nu, dt = system.nu, system.dt
    rhs = RhsBundle()
    first = trajectory[0]
    gm_prev = build_geometry(profile, first.beam.eta, first.beam.eta_t)
    for n in range(1, len(trajectory)):
        state, prev = trajectory[n], trajectory[n - 1]
        gm = build_geometry(profile, state.beam.eta, state.beam.eta_t)
        theta = eval_Theta(ops, state.velocity)
        F = eval_F(gm, gm_prev, ops, state.velocity, prev.velocity, state.fluid.p, theta, dt, nu)
        H = eval_H(gm, ops, state.velocity, nu)
        rhs.append(F, theta, H)
        gm_prev = gm
    return rhs


def check_ball(system, trajectory, radius, mu, weights):
    """Margins min(1 + eta) per level; BallError when the trajectory leaves the ball."""
    margins = [float(np.min(1.0 + s.beam.eta)) for s in trajectory]
    worst = min(margins)
    if worst <= 0.0:
        raise CollisionError("beam touches the bottom (1 + eta = {:.3e})".format(worst), margin=worst)
    if worst < 0.5 / mu:
        raise BallError("gap bound violated: min(1 + eta) = {:.4e} < 1/(2 mu)".format(worst), 'gap')
    norm = y_norm(system, trajectory, weights)
    if norm > radius:
        raise BallError("norm bound violated: {:.4e} > R = {:.4e}".format(norm, radius), 'norm')
    return margins


def picard_map(system, trajectory, forcing=None, nonlinear=True, ball=None):
    """Linear coupled solve with the nonlinear terms evaluated on `trajectory`.

    ball = (radius, mu, weights) checks the trajectory first. nonlinear=False
    replaces the nonlinear terms by zero, which makes the map constant.
    """
    if ball is not None:
        check_ball(system, trajectory, *ball)
    steps = trajectory.steps
    if nonlinear:
        rhs = nonlinear_rhs(system, trajectory)
    else:
        rhs = RhsBundle.zeros(system.grid, steps)
    if forcing is not None:
        rhs = rhs + forcing.truncate(steps)
    if not rhs.is_finite():
        raise SolverError("non-finite nonlinear terms")
    return linear_coupled_solve(system, rhs, trajectory[0], check=False)


def picard_solve(system, x0, cfg, forcing=None, nonlinear=True):
    """Fixed point of picard_map over one slab with horizon halving.

    The first iterate is the solution of the linear problem with zero
    nonlinear terms. Each iteration records the difference of successive
    iterates in y_norm, the ratio of successive differences and the gap
    margin. The slab is halved (and the iteration restarted) when the ratio
    exceeds cfg.kappa_target, the iterate leaves the ball, the beam collides
    or cfg.max_iter is reached.

    Returns
    -------
    tuple
        (Trajectory, FixedPointReport); report.status is 'converged',
        'halved-to-floor' or 'collision'.

    Raises
    ------
    PreconditionError
        x0 already violates the gap bound.
    """
    if abs(cfg.dt - system.dt) > 1e-12 * system.dt:
        raise DomainError("Picard dt {} differs from the system dt {}".format(cfg.dt, system.dt))
    profile = system.profile
    weights = cfg.norm_weights
    mu = cfg.mu if cfg.mu is not None else float(np.max(1.0 / profile.gap))
    try:
        collision_guard(x0, mu)
    except CollisionError as err:
        raise PreconditionError("initial state violates the gap bound: {}".format(err))

    steps = cfg.steps
    zero = RhsBundle.zeros(system.grid, steps)
    homogeneous = linear_coupled_solve(system, zero if forcing is None else forcing.truncate(steps), x0)
    radius = cfg.radius if cfg.radius is not None else 2.0 * y_norm(system, homogeneous, weights)
    report = FixedPointReport(radius=radius, mu=mu, t0=x0.t)
    logging.debug("Picard slab from t={:.4f}: R={:.4e}, mu={:.4f}".format(x0.t, radius, mu))

    while True:
        X = homogeneous.truncate(steps)
        previous = None
        reason = 'max_iter'
        for _ in range(cfg.max_iter):
            try:
                margins = check_ball(system, X, radius, mu, weights)
                Y = picard_map(system, X, forcing, nonlinear)
            except BallError as err:
                reason = err.bound
                break
            except CollisionError:
                reason = 'collision'
                break
            diff = y_norm(system, Y.difference(X), weights)
            report.residuals.append(diff)
            report.margins.append(min(margins))
            if previous is not None and previous > 0:
                report.kappas.append(diff / previous)
            logging.debug("Picard iteration {}: |X+ - X| = {:.3e}, kappa = {:.3f}".format(
                report.iterations, diff, report.kappa))
            X = Y
            if diff <= cfg.tol * max(1.0, y_norm(system, Y, weights)):
                report.status = 'converged'
                report.horizon = Y.horizon
                logging.info("slab [{:.4f}, {:.4f}] converged in {} iterations".format(
                    x0.t, x0.t + Y.horizon, report.iterations))
                return Y, report
            if previous is not None and diff > cfg.kappa_target * previous:
                reason = 'contraction'
                break
            previous = diff

        half = steps // 2
        if half < 1 or half * cfg.dt < cfg.floor * (1.0 - 1e-9):
            report.status = 'collision' if reason in ('collision', 'gap') else 'halved-to-floor'
            report.horizon = steps * cfg.dt
            logging.info("Picard failed at horizon {:.4e} ({})".format(steps * cfg.dt, reason))
            return X, report
        report.halvings.append({'iteration': report.iterations, 'horizon_from': steps * cfg.dt,
                                'horizon_to': half * cfg.dt, 'reason': reason})
        logging.info("halving horizon {:.4e} -> {:.4e} ({})".format(steps * cfg.dt, half * cfg.dt, reason))
        steps = half


def rebase(system, state, cutoff=0.5):
    """Reference configuration for the next slab.

    Graph mode: the new reference profile is eta(T*), the velocity becomes
    M(u-) of the old geometry (eta~ restarts from zero) made compatible on
    the new operators. Rect mode keeps the flat reference and the state.
    """
    if system.ops.mode == 'rect':
        return system, state
    ops = system.ops
    gm = build_geometry(system.profile, state.beam.eta, state.beam.eta_t)
    u_hat = eval_M(gm, ops, state.velocity)
    profile = BeamProfile(state.beam.eta, system.profile.length, mode='graph')
    new_ops = StaggeredOperators(system.grid, profile)
    new_system = CoupledSystem(new_ops, system.params, system.nu, system.dt, system.tol)
    velocity, change = enforce_compatibility(new_ops, u_hat, state.beam.eta_t, cutoff, system.tol)
    logging.debug("rebased reference at t={:.4f}, velocity correction {:.3e}".format(state.t, change))
    fluid = FluidState.from_vector(system.grid, velocity, state.fluid.p, state.t)
    return new_system, CoupledState(fluid, state.beam.copy())


def continue_solution(system, x0, cfg, total_horizon, nonlinear=True, cutoff=0.5, on_slab=None):
    """Chain Picard slabs from x0 until total_horizon or the first failed slab.

    Every slab starts with cfg.horizon (shortened to what is left). on_slab,
    when given, is called as on_slab(system, slab, report) after each slab,
    with the system the slab was solved on.

    Returns
    -------
    tuple
        (concatenated Trajectory, list of FixedPointReport)
    """
    t_end = x0.t + total_horizon
    trajectory = None
    reports = []
    state = x0
    while t_end - state.t > 0.5 * cfg.dt:
        remaining = int(round((t_end - state.t) / cfg.dt)) * cfg.dt
        slab, report = picard_solve(system, state, cfg.with_horizon(min(cfg.horizon, remaining)),
                                    nonlinear=nonlinear)
        reports.append(report)
        trajectory = slab if trajectory is None else trajectory.extend(slab)
        if on_slab is not None:
            on_slab(system, slab, report)
        if report.status != 'converged':
            break
        system, state = rebase(system, slab.final, cutoff)
    return trajectory, reports


def energy_report(system, trajectory, rhs=None):
    """Energy balance terms per time level.

    Keys follow fsi_vars.ENERGY_CSV_COLUMNS. The boundary power through the
    inlet/outlet uses rhs.theta when given and the Bernoulli data of the
    velocity otherwise.
    """
    ops, params, grid = system.ops, system.params, system.grid
    out = {key: [] for key in fsi_vars.ENERGY_CSV_COLUMNS}
    weight = ops.a_nodes[[0, -1]][:, None] * grid.hz
    for n, state in enumerate(trajectory):
        u = state.velocity
        kinetic, potential = beam_energy(params, state.beam)
        if rhs is not None and n > 0:
            theta = rhs.theta[n - 1]
        else:
            theta = eval_Theta(ops, u)
        u1 = state.fluid.u1
        power = float(np.sum(weight[0] * theta[0] * u1[0]) - np.sum(weight[1] * theta[1] * u1[-1]))
        row = {
            't': state.t,
            'kinetic_fluid': 0.5 * ops.inner(u, u),
            'kinetic_beam': kinetic,
            'potential_beam': potential,
            'dissipation': system.nu * ops.gradient_energy(u) + beam_dissipation(params, state.beam.eta_t),
            'boundary_power': power,
        }
        row['total'] = row['kinetic_fluid'] + kinetic + potential
        for key, value in row.items():
            out[key].append(value)
    return {key: np.array(values) for key, values in out.items()}


def nonlinear_residual(system, trajectory, forcing=None):
    """Relative residual of every step of the time-discrete nonlinear system."""
    rhs = nonlinear_rhs(system, trajectory)
    if forcing is not None:
        rhs = rhs + forcing.truncate(trajectory.steps)
    return [system.residual(trajectory[n], trajectory[n + 1], *rhs.level(n)) for n in range(trajectory.steps)]
