"""Stokes solves, Leray projection and pressure operators on the reference grid.

Boundary data conventions used throughout:

    f      body force, face vector (grid.nfaces) or None
    g      top Dirichlet data u = g e2, on the beam nodes (N_x + 1 values,
           zero at both corners); the top faces carry P g
    theta  pressure data on the inlet/outlet, array (2, N_z) or None

Every solve goes through StaggeredOperators, so factorizations are shared by
all calls on the same operators object.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, DomainError, PreconditionError
from .mac import FluidGrid, FluidState


def face_field(grid, f):
    if f is None:
        return np.zeros(grid.nfaces)
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.nfaces,):
        raise DimensionError("face field has shape {}, expected ({},)".format(f.shape, grid.nfaces))
    return f


def theta_field(grid, inlet=0.0, outlet=0.0):
    """Pressure data array (2, N_z) from scalars or column arrays."""
    theta = np.empty((2, grid.nz))
    theta[0] = inlet
    theta[1] = outlet
    return theta


def _theta(grid, theta):
    if theta is None:
        return np.zeros((2, grid.nz))
    return np.asarray(theta, dtype=float)


def _check_corners(g):
    scale = max(1.0, float(np.max(np.abs(g))))
    if abs(g[0]) > 1e-12 * scale or abs(g[-1]) > 1e-12 * scale:
        raise PreconditionError("top data must vanish at both corners, got {:.3e} / {:.3e}".format(g[0], g[-1]))


def top_values(ops, g):
    """Top-face values P g of nodal top data (zeros for None)."""
    grid = ops.grid
    if g is None:
        return np.zeros(grid.nx)
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.nx + 1,):
        raise DimensionError("top data has shape {}, expected ({},)".format(g.shape, grid.nx + 1))
    _check_corners(g)
    return ops.prolong @ g


# ----------------------------------------------------------------------
# stream-function lifting

def cutoff_profile(s, width):
    """Quintic step: 0 for s <= 1 - width, 1 at s = 1 with zero slope there."""
    t = np.clip((np.asarray(s, dtype=float) - (1.0 - width)) / width, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def lift_divfree(ops, g, cutoff=0.5):
    """Divergence-free velocity with top trace g e2, zero on the bottom.

    The stream function phi = G(x) S(s) lives on the cell corners, with
    G(x_i) = h_x * sum of the top-face values left of x_i and S the cutoff
    profile. Its discrete curl gives flat fluxes whose flat divergence
    cancels exactly, and the velocity is recovered through the flux map.

    Raises
    ------
    PreconditionError
        g does not vanish at the two top corners.
    """
    grid = ops.grid
    if not 0.0 < cutoff <= 1.0:
        raise DomainError("lift cutoff must lie in (0, 1], got {}".format(cutoff))
    faces = top_values(ops, g)
    G = np.concatenate([[0.0], grid.hx * np.cumsum(faces)])
    S = cutoff_profile(grid.s_nodes, cutoff)
    phi = np.outer(G, S)
    flux1 = -(phi[:, 1:] - phi[:, :-1]) / grid.hz
    flux2 = (phi[1:, :] - phi[:-1, :]) / grid.hx
    velocity = ops.flux_inverse(np.concatenate([flux1.ravel(), flux2.ravel()]))
    return FluidState.from_vector(grid, velocity)


# ----------------------------------------------------------------------
# saddle-point solves

def saddle_matrix(ops, c, nu):
    """[[c I - nu LAP, grad], [div, 0]] on the free faces and the cells."""
    def build():
        grid = ops.grid
        lap = ops.laplacian[grid.free][:, grid.free]
        n = lap.shape[0]
        momentum = sp.hstack([c * sp.identity(n) - nu * lap, ops.gradient])
        constraint = sp.hstack([ops.divergence_free, sp.csr_matrix((grid.ncells, grid.ncells))])
        return sp.vstack([momentum, constraint]).tocsc()
    return ops.cached_matrix('stokes:{!r}:{!r}'.format(float(c), float(nu)), build)


def _solve_stokes(ops, nu, c, previous, f, g, theta, tol):
    grid = ops.grid
    free = grid.free
    boundary = np.zeros(grid.nfaces)
    boundary[grid.top_faces] = top_values(ops, g)
    forcing = face_field(grid, f)
    theta_vec = ops.theta_vector(_theta(grid, theta))

    rhs_momentum = forcing[free] - theta_vec[free] + nu * (ops.laplacian @ boundary)[free]
    if c:
        rhs_momentum = rhs_momentum + c * previous[free]
    rhs_constraint = -(ops.divergence_matrix @ boundary)

    key = 'stokes:{!r}:{!r}'.format(float(c), float(nu))
    x = ops.solve_cached(key, saddle_matrix(ops, c, nu),
                         np.concatenate([rhs_momentum, rhs_constraint]), tol)
    nfree = int(np.count_nonzero(free))
    velocity = boundary
    velocity[free] = x[:nfree]
    return velocity, x[nfree:]


def stokes_solve_steady(ops, nu, f=None, g=None, theta=None, tol=1e-10):
    """Steady Stokes: -nu LAP u + grad p = f, div u = 0.

    u = g e2 on the top, u = 0 on the bottom, u2 = 0 and p = theta on the
    inlet/outlet.

    Returns
    -------
    FluidState
    """
    if not nu > 0:
        raise DomainError("nu must be > 0")
    velocity, p = _solve_stokes(ops, nu, 0.0, None, f, g, theta, tol)
    return FluidState.from_vector(ops.grid, velocity, p)


def unsteady_stokes_step(ops, nu, state, dt, f=None, g=None, theta=None, tol=1e-10):
    """One implicit Euler step of u_t - nu LAP u + grad p = f with the steady BCs.

    All data (f, g, theta) are taken at the new time level.
    """
    if not dt > 0:
        raise DomainError("dt must be > 0")
    if not nu > 0:
        raise DomainError("nu must be > 0")
    velocity, p = _solve_stokes(ops, nu, 1.0 / dt, state.velocity, f, g, theta, tol)
    return FluidState.from_vector(ops.grid, velocity, p, state.t + dt)


def dirichlet_lift_D(ops, nu, g, tol=1e-10):
    """The Stokes lifting D g: steady Stokes with f = 0, theta = 0 and top data g."""
    return stokes_solve_steady(ops, nu, g=g, tol=tol)


# ----------------------------------------------------------------------
# Leray projection

def leray_project(ops, u, method='split', tol=1e-10):
    """Orthogonal projection onto {div v = 0, v.n = 0 on the walls}.

    Parameters
    ----------
    ops : StaggeredOperators
    u : ndarray
        Face vector (wall rows are read as normal data).
    method : str, optional
        'split': p_u with Dirichlet data on the whole boundary, then the
        harmonic q_u with Neumann data (u - grad p_u).n on the walls.
        'single': one mixed solve, returned as p_u with q_u = 0.

    Returns
    -------
    tuple
        (Pi u, p_u, q_u); Pi u = u - grad p_u - grad q_u on the free faces
        and zero on the wall rows.
    """
    grid = ops.grid
    u = face_field(grid, u)
    free = grid.free
    wall = ~free
    out = np.zeros(grid.nfaces)
    if method == 'single':
        phi = ops.solve_poisson(ops.divergence_free @ u[free], 'mixed', tol)
        out[free] = u[free] - ops.gradient @ phi
        return out, phi, np.zeros(grid.ncells)
    if method != 'split':
        raise DomainError("unknown projection method '{}'".format(method))

    p_u = ops.solve_poisson(ops.divergence_matrix @ u, 'dirichlet', tol)
    w = u - ops.gradient_all @ p_u
    q_u = ops.solve_poisson(-(ops.divergence_matrix[:, wall] @ w[wall]), 'mixed', tol)
    out[free] = w[free] - ops.gradient @ q_u
    return out, p_u, q_u


# ----------------------------------------------------------------------
# pressure operators

def assemble_Ns(ops):
    """Added-mass matrix on the beam nodes (dense, ends zero).

    N_s = P^T [E S^-1 E^T / (h_x h_z^2) + (h_z/2) diag(a)] P. The first term
    is the top-cell trace of the harmonic pressure with unit Neumann flux
    through one top face, the second the half-cell correction of the
    pressure trace.
    """
    def build():
        grid = ops.grid
        E = ops.top_cell_selector
        columns = ops.poisson_inverse_columns(E.T.toarray(), 'mixed')
        top = (E @ columns) / (grid.hx * grid.hz**2)
        top = top + np.diag(0.5 * grid.hz * ops.a_centers)
        P = ops.prolong.toarray()
        ns = P.T @ top @ P
        ns[0, :] = ns[-1, :] = 0.0
        ns[:, 0] = ns[:, -1] = 0.0
        logging.debug("assembled N_s on {} beam nodes".format(grid.nx + 1))
        return ns
    return ops.cached_matrix('added_mass', build)


def apply_N0(ops, top, bottom, tol=1e-10):
    """Top trace (on the beam nodes) of the harmonic rho with d(rho)/dn given on the walls.

    top, bottom: outward normal derivative on the N_x top and bottom faces.
    rho = 0 on the inlet/outlet.
    """
    grid = ops.grid
    top = np.asarray(top, dtype=float)
    bottom = np.asarray(bottom, dtype=float)
    if top.shape != (grid.nx,) or bottom.shape != (grid.nx,):
        raise DimensionError("wall data must have {} entries".format(grid.nx))
    flux = np.zeros(grid.nfaces)
    flux[grid.top_faces] = top * np.sqrt(1.0 + ops.ax_centers**2)
    flux[grid.bottom_faces] = -bottom
    wall = ~grid.free
    rho = ops.solve_poisson(-(ops.divergence_matrix[:, wall] @ flux[wall]), 'mixed', tol)
    trace = ops.top_cell_selector @ rho + 0.5 * grid.hz * ops.a_centers * flux[grid.top_faces]
    return ops.to_nodes(trace)


def harmonic_pressure_lift(ops, theta, tol=1e-10):
    """R(theta): discrete harmonic with p = theta on the inlet/outlet, zero flux on the walls."""
    grid = ops.grid
    theta_vec = ops.theta_vector(_theta(grid, theta))
    return ops.solve_poisson(-(ops.divergence_free @ theta_vec[grid.free]), 'mixed', tol)


def viscous_pressure(ops, velocity, nu, tol=1e-10):
    """rho with div grad rho = nu div(LAP u) on the free faces."""
    grid = ops.grid
    lap = ops.laplacian @ face_field(grid, velocity)
    return ops.solve_poisson(nu * (ops.divergence_free @ lap[grid.free]), 'mixed', tol)


def forcing_pressure(ops, f, tol=1e-10):
    """p_F with grad p_F = (I - Pi) f."""
    grid = ops.grid
    return ops.solve_poisson(ops.divergence_free @ face_field(grid, f)[grid.free], 'mixed', tol)


def kinematic_pressure(ops, velocity, tol=1e-10):
    """q, harmonic with d(q)/dn = u.n on the top and q = 0 on the inlet/outlet."""
    grid = ops.grid
    velocity = face_field(grid, velocity)
    top = grid.top_faces
    return ops.solve_poisson(-(ops.divergence_matrix[:, top] @ velocity[top]), 'mixed', tol)


@dataclass
class PressureDecomposition:
    t: float
    rho: np.ndarray
    q_t: np.ndarray
    p_F: np.ndarray
    lift: np.ndarray
    error: float


def _level(data, n):
    """Per-step data: None, one array for every step, or a sequence indexed by step."""
    if data is None or isinstance(data, np.ndarray):
        return data
    return data[n]


def decompose_pressure(ops, nu, states, dt, f=None, theta=None, tol=1e-10):
    """Split the pressure of an unsteady Stokes trajectory.

    p = rho - q_t + p_F + R(theta) at every step, with rho the viscous
    pressure, q the kinematic pressure of the top velocity and p_F the
    forcing pressure. f and theta are indexed by step (states[1:]).

    Returns
    -------
    list of PressureDecomposition
        One entry per step; `error` is the weighted norm of the mismatch.
    """
    out = []
    q_prev = kinematic_pressure(ops, states[0].velocity, tol)
    for n, state in enumerate(states[1:]):
        q = kinematic_pressure(ops, state.velocity, tol)
        q_t = (q - q_prev) / dt
        rho = viscous_pressure(ops, state.velocity, nu, tol)
        p_F = forcing_pressure(ops, _level(f, n), tol)
        lift = harmonic_pressure_lift(ops, _level(theta, n), tol)
        error = ops.cell_norm(state.p.ravel() - (rho - q_t + p_F + lift))
        logging.debug("pressure decomposition t={:.4f}: mismatch {:.3e}".format(state.t, error))
        out.append(PressureDecomposition(state.t, rho, q_t, p_F, lift, error))
        q_prev = q
    return out


def steady_energy_balance(ops, nu, state, f=None, theta=None):
    """Terms of the steady energy identity nu <-LAP u, u> = <f, u> + boundary work.

    Exact for discrete steady solutions with homogeneous top data; the
    'residual' entry measures the defect.
    """
    grid = ops.grid
    free = grid.free
    u = state.velocity
    w = ops.face_weights[free]
    theta_vec = ops.theta_vector(_theta(grid, theta))
    dissipation = -nu * float(np.sum(w * (ops.laplacian @ u)[free] * u[free]))
    forcing = float(np.sum(w * face_field(grid, f)[free] * u[free]))
    boundary = -float(np.sum(w * theta_vec[free] * u[free]))
    return {
        'dissipation': dissipation,
        'forcing_work': forcing,
        'boundary_work': boundary,
        'gradient_energy': nu * ops.gradient_energy(u),
        'residual': dissipation - forcing - boundary,
    }


def mirror_doubled_grid(grid):
    """Grid of the domain reflected across the inlet, [-L, L] shifted to [0, 2L]."""
    return FluidGrid(2 * grid.nx, grid.nz, 2.0 * grid.length)
