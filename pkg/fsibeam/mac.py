"""Staggered (MAC) discretization on the flattened reference rectangle.

Layout on an N_x x N_z grid over (x, s) in [0, L] x [0, 1]:

    u1 : vertical faces    (x_i, s_j+1/2)   shape (N_x+1, N_z)
    u2 : horizontal faces  (x_i+1/2, s_j)   shape (N_x, N_z+1), rows 0 and N_z
                                            are the bottom/top boundary values
    p  : cell centers      (x_i+1/2, s_j+1/2) shape (N_x, N_z)

Velocities are Cartesian components of the reference velocity. The
reference domain {0 < z < a(x)}, a = 1 + eta0, enters through z = a*s:

    div u  = a^-1 div_flat(Q u),  Q u = (a u1, u2 - s a_x avg(u1))

and the gradient is the negative adjoint of div in the weighted L2 inner
product, so discrete projections are exactly orthogonal. In rect mode a = 1
and everything reduces to the textbook MAC scheme.

Ghost conventions: u1 is mirrored evenly across the inlet/outlet and oddly
across the walls; u2 is mirrored oddly across the inlet/outlet; pressure
Dirichlet data on the inlet/outlet enter through p_ghost = 2*Theta - p.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionError, DomainError, SolverError
from . import fsi_vars


class FluidGrid:
    """Cell counts and spacings of the flattened reference rectangle.

    Boundary tags: 'top' (Gamma_0), 'bottom' (Gamma_b), 'inlet' (Gamma_i,
    x = 0) and 'outlet' (Gamma_o, x = L). Gamma_d is top + bottom.
    """

    def __init__(self, nx, nz, length=1.0):
        if nx < 8 or nz < 8:
            raise DimensionError("grid needs at least 8 x 8 cells, got {} x {}".format(nx, nz))
        if length <= 0:
            raise DomainError("L must be > 0")
        self.nx = int(nx)
        self.nz = int(nz)
        self.length = float(length)
        self.hx = self.length / self.nx
        self.hz = 1.0 / self.nz

        self.x_nodes = np.linspace(0.0, self.length, self.nx + 1)
        self.x_centers = 0.5 * (self.x_nodes[1:] + self.x_nodes[:-1])
        self.s_nodes = np.linspace(0.0, 1.0, self.nz + 1)
        self.s_centers = 0.5 * (self.s_nodes[1:] + self.s_nodes[:-1])

        self.shape_u1 = (self.nx + 1, self.nz)
        self.shape_u2 = (self.nx, self.nz + 1)
        self.shape_p = (self.nx, self.nz)
        self.n1 = (self.nx + 1) * self.nz
        self.n2 = self.nx * (self.nz + 1)
        self.nfaces = self.n1 + self.n2
        self.ncells = self.nx * self.nz

        u2_rows = np.zeros(self.shape_u2, dtype=bool)
        u2_rows[:, 1:-1] = True
        self.free = np.concatenate([np.ones(self.n1, dtype=bool), u2_rows.ravel()])
        top = np.zeros(self.shape_u2, dtype=bool)
        top[:, -1] = True
        self.top_faces = self.n1 + np.flatnonzero(top.ravel())
        bottom = np.zeros(self.shape_u2, dtype=bool)
        bottom[:, 0] = True
        self.bottom_faces = self.n1 + np.flatnonzero(bottom.ravel())
        self.top_cells = np.arange(self.nx) * self.nz + (self.nz - 1)

    def __repr__(self):
        return "FluidGrid({} x {}, L={})".format(self.nx, self.nz, self.length)

    def __eq__(self, other):
        return isinstance(other, FluidGrid) and (self.nx, self.nz, self.length) == \
            (other.nx, other.nz, other.length)

    def __hash__(self):
        return hash((self.nx, self.nz, self.length))


@dataclass
class FluidState:
    u1: np.ndarray
    u2: np.ndarray
    p: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(np.zeros(grid.shape_u1), np.zeros(grid.shape_u2), np.zeros(grid.shape_p), t)

    @classmethod
    def from_vector(cls, grid, velocity, p=None, t=0.0):
        velocity = np.asarray(velocity, dtype=float)
        if velocity.shape != (grid.nfaces,):
            raise DimensionError("velocity vector has {} entries, expected {}".format(
                velocity.size, grid.nfaces))
        u1 = velocity[:grid.n1].reshape(grid.shape_u1).copy()
        u2 = velocity[grid.n1:].reshape(grid.shape_u2).copy()
        if p is None:
            p = np.zeros(grid.shape_p)
        return cls(u1, u2, np.asarray(p, dtype=float).reshape(grid.shape_p).copy(), t)

    @property
    def velocity(self):
        return np.concatenate([self.u1.ravel(), self.u2.ravel()])

    def copy(self):
        return FluidState(self.u1.copy(), self.u2.copy(), self.p.copy(), self.t)


def _first_difference(m, h, bc):
    """Centered first difference on m points; bc is 'even', 'odd' or 'onesided'."""
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for k in range(1, m - 1):
        add(k, k + 1, 0.5 / h)
        add(k, k - 1, -0.5 / h)
    if bc == 'odd':
        add(0, 1, 0.5 / h)
        add(0, 0, 0.5 / h)
        add(m - 1, m - 1, -0.5 / h)
        add(m - 1, m - 2, -0.5 / h)
    elif bc == 'onesided':
        for c, v in ((0, -1.5), (1, 2.0), (2, -0.5)):
            add(0, c, v / h)
            add(m - 1, m - 1 - c, -v / h)
    elif bc != 'even':
        raise ValueError(bc)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m))


def _second_difference(m, h, bc):
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v / h**2)

    for k in range(1, m - 1):
        add(k, k - 1, 1.0)
        add(k, k, -2.0)
        add(k, k + 1, 1.0)
    if bc == 'even':
        for r, c, v in ((0, 0, -2.0), (0, 1, 2.0), (m - 1, m - 1, -2.0), (m - 1, m - 2, 2.0)):
            add(r, c, v)
    elif bc == 'odd':
        for r, c, v in ((0, 0, -3.0), (0, 1, 1.0), (m - 1, m - 1, -3.0), (m - 1, m - 2, 1.0)):
            add(r, c, v)
    elif bc == 'onesided':
        for c, v in ((0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)):
            add(0, c, v)
            add(m - 1, m - 1 - c, v)
    else:
        raise ValueError(bc)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m))


class StaggeredOperators:
    """Sparse operators of the reference-domain calculus on one grid.

    Parameters
    ----------
    grid : FluidGrid
    profile : BeamProfile
        Reference profile on the N_x + 1 beam nodes (x_k coincide with the
        vertical faces).

    All matrices are built lazily, cached and never mutated afterwards;
    factorizations are cached per key in dictionaries.
    """

    def __init__(self, grid, profile):
        if profile.nodes != grid.nx + 1:
            raise DimensionError("profile has {} nodes, grid needs {}".format(profile.nodes, grid.nx + 1))
        if abs(profile.length - grid.length) > 1e-12 * grid.length:
            raise DimensionError("profile length {} != grid length {}".format(profile.length, grid.length))
        self.grid = grid
        self.profile = profile
        self.mode = profile.mode
        g = grid
        self.a_nodes = profile.gap
        self.a_centers = 0.5 * (profile.gap[1:] + profile.gap[:-1])
        self.ax_nodes = profile.eta_x
        self.ax_centers = np.diff(profile.gap) / g.hx
        self.axx_nodes = profile.eta_xx
        self.axx_centers = 0.5 * (profile.eta_xx[1:] + profile.eta_xx[:-1])
        self._factors = {}
        self._matrices = {}

    # ------------------------------------------------------------------
    # weights and metric coefficients

    def _metric(self, component):
        """a, a_x, a_xx and s on the positions of 'u1' or 'u2' (flattened arrays)."""
        g = self.grid
        if component == 'u1':
            a, ax, axx = self.a_nodes, self.ax_nodes, self.axx_nodes
            s = g.s_centers
        else:
            a, ax, axx = self.a_centers, self.ax_centers, self.axx_centers
            s = g.s_nodes
        mz = s.size
        A = np.repeat(a, mz)
        AX = np.repeat(ax, mz)
        AXX = np.repeat(axx, mz)
        S = np.tile(s, a.size)
        return A, AX, AXX, S

    @cached_property
    def face_weights(self):
        g = self.grid
        w1 = np.outer(self.a_nodes, np.ones(g.nz)) * g.hx * g.hz
        w1[0, :] *= 0.5
        w1[-1, :] *= 0.5
        w2 = np.outer(self.a_centers, np.ones(g.nz + 1)) * g.hx * g.hz
        w2[:, 0] *= 0.5
        w2[:, -1] *= 0.5
        return np.concatenate([w1.ravel(), w2.ravel()])

    @cached_property
    def cell_weights(self):
        g = self.grid
        return np.repeat(self.a_centers, g.nz) * g.hx * g.hz

    def inner(self, u, v):
        """Weighted L2 inner product of two face vectors."""
        return float(np.sum(self.face_weights * u * v))

    def norm(self, u):
        return np.sqrt(self.inner(u, u))

    def cell_norm(self, p):
        return float(np.sqrt(np.sum(self.cell_weights * np.ravel(p)**2)))

    # ------------------------------------------------------------------
    # divergence and gradient

    @cached_property
    def flat_divergence(self):
        g = self.grid
        rows, cols, vals = [], [], []
        for i in range(g.nx):
            for j in range(g.nz):
                c = i * g.nz + j
                rows += [c, c, c, c]
                cols += [(i + 1) * g.nz + j, i * g.nz + j,
                         g.n1 + i * (g.nz + 1) + j + 1, g.n1 + i * (g.nz + 1) + j]
                vals += [1.0 / g.hx, -1.0 / g.hx, 1.0 / g.hz, -1.0 / g.hz]
        return sp.csr_matrix((vals, (rows, cols)), shape=(g.ncells, g.nfaces))

    @cached_property
    def average_u1_to_u2(self):
        """Four-point average of u1 onto the interior horizontal faces (walls give 0)."""
        g = self.grid
        rows, cols = [], []
        for i in range(g.nx):
            for j in range(1, g.nz):
                r = i * (g.nz + 1) + j
                for ii, jj in ((i, j - 1), (i + 1, j - 1), (i, j), (i + 1, j)):
                    rows.append(r)
                    cols.append(ii * g.nz + jj)
        return sp.csr_matrix((np.full(len(rows), 0.25), (rows, cols)), shape=(g.n2, g.n1))

    @cached_property
    def average_u2_to_u1(self):
        """Four-point average of u2 onto the vertical faces (inlet/outlet give 0)."""
        g = self.grid
        rows, cols = [], []
        for i in range(1, g.nx):
            for j in range(g.nz):
                r = i * g.nz + j
                for ii, jj in ((i - 1, j), (i - 1, j + 1), (i, j), (i, j + 1)):
                    rows.append(r)
                    cols.append(ii * (g.nz + 1) + jj)
        return sp.csr_matrix((np.full(len(rows), 0.25), (rows, cols)), shape=(g.n1, g.n2))

    @cached_property
    def flux_map(self):
        """Q: reference velocity -> flat fluxes (a u1, u2 - s a_x avg(u1))."""
        g = self.grid
        A1, _, _, _ = self._metric('u1')
        _, AX2, _, S2 = self._metric('u2')
        upper = sp.hstack([sp.diags(A1), sp.csr_matrix((g.n1, g.n2))])
        lower = sp.hstack([-sp.diags(S2 * AX2) @ self.average_u1_to_u2, sp.identity(g.n2)])
        return sp.vstack([upper, lower]).tocsr()

    def flux_inverse(self, flux):
        """Velocity whose flux is `flux` (used by the stream-function lifting)."""
        g = self.grid
        A1, _, _, _ = self._metric('u1')
        _, AX2, _, S2 = self._metric('u2')
        u1 = flux[:g.n1] / A1
        u2 = flux[g.n1:] + S2 * AX2 * (self.average_u1_to_u2 @ u1)
        return np.concatenate([u1, u2])

    @cached_property
    def divergence_matrix(self):
        """Reference divergence on all faces (cells x faces)."""
        return (sp.diags(1.0 / np.repeat(self.a_centers, self.grid.nz))
                @ self.flat_divergence @ self.flux_map).tocsr()

    @cached_property
    def _flux_divergence(self):
        return (self.flat_divergence @ self.flux_map).tocsr()

    @cached_property
    def gradient_all(self):
        """Gradient with homogeneous Dirichlet pressure on the whole boundary."""
        g = self.grid
        cell = g.hx * g.hz
        return (-cell * sp.diags(1.0 / self.face_weights) @ self._flux_divergence.T).tocsr()

    @cached_property
    def gradient(self):
        """Gradient on the free faces, Dirichlet on inlet/outlet only (faces x cells)."""
        return self.gradient_all[self.grid.free, :]

    @cached_property
    def divergence_free(self):
        return self.divergence_matrix[:, self.grid.free]

    @cached_property
    def divergence_top(self):
        return self.divergence_matrix[:, self.grid.top_faces]

    def divergence(self, velocity):
        return self.divergence_matrix @ velocity

    def theta_vector(self, theta):
        """Face vector of the inlet/outlet pressure data entering grad p.

        theta has shape (2, N_z): row 0 on Gamma_i, row 1 on Gamma_o.
        """
        g = self.grid
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (2, g.nz):
            raise DimensionError("pressure data has shape {}, expected (2, {})".format(theta.shape, g.nz))
        u1 = np.zeros(g.shape_u1)
        u1[0, :] = -2.0 * theta[0] / g.hx
        u1[-1, :] = 2.0 * theta[1] / g.hx
        return np.concatenate([u1.ravel(), np.zeros(g.n2)])

    # ------------------------------------------------------------------
    # elliptic problems

    @cached_property
    def poisson_matrix(self):
        """Symmetric S with div_free(grad p) = -(h_x h_z) a^-1 S p (Neumann walls)."""
        B = self._flux_divergence[:, self.grid.free]
        w = self.face_weights[self.grid.free]
        return (B @ sp.diags(1.0 / w) @ B.T).tocsc()

    @cached_property
    def poisson_matrix_dirichlet(self):
        """Symmetric S_D for homogeneous Dirichlet pressure on the whole boundary."""
        B = self._flux_divergence
        return (B @ sp.diags(1.0 / self.face_weights) @ B.T).tocsc()

    def _factor(self, key, matrix):
        if key not in self._factors:
            logging.debug("factorizing {} ({} unknowns)".format(key, matrix.shape[0]))
            self._factors[key] = spla.splu(matrix.tocsc())
        return self._factors[key]

    def cached_matrix(self, key, build):
        """Assemble once per key with build() and keep the result."""
        if key not in self._matrices:
            self._matrices[key] = build()
        return self._matrices[key]

    def solve_cached(self, key, matrix, rhs, tol):
        if self.grid.ncells <= fsi_vars.DIRECT_SOLVER_MAX_CELLS:
            x = self._factor(key, matrix).solve(rhs)
        else:
            x = krylov_solve(matrix, rhs, tol, symmetric=key.startswith('poisson'))
        residual = np.linalg.norm(matrix @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if not np.isfinite(residual) or residual > max(tol, 1e-8):
            raise SolverError("{} solve failed, relative residual {:.3e}".format(key, residual), residual)
        return x

    def solve_poisson(self, rhs, boundary='mixed', tol=1e-10):
        """Solve div(grad p) = rhs.

        boundary='mixed': p = 0 on inlet/outlet, zero flux on the walls.
        boundary='dirichlet': p = 0 on the whole boundary.
        """
        scale = -np.repeat(self.a_centers, self.grid.nz) / (self.grid.hx * self.grid.hz)
        b = scale * np.ravel(rhs)
        if boundary == 'mixed':
            return self.solve_cached('poisson_mixed', self.poisson_matrix, b, tol)
        if boundary == 'dirichlet':
            return self.solve_cached('poisson_dirichlet', self.poisson_matrix_dirichlet, b, tol)
        raise ValueError(boundary)

    def poisson_inverse_columns(self, columns, boundary='mixed', tol=1e-10):
        """S^-1 applied to the columns of a dense matrix (unscaled)."""
        key = 'poisson_' + boundary
        matrix = self.poisson_matrix if boundary == 'mixed' else self.poisson_matrix_dirichlet
        columns = np.asarray(columns, dtype=float)
        if self.grid.ncells <= fsi_vars.DIRECT_SOLVER_MAX_CELLS:
            return self._factor(key, matrix).solve(columns)
        logging.debug("{}: {} Krylov column solves".format(key, 1 if columns.ndim == 1 else columns.shape[1]))
        precond = ilu_preconditioner(matrix)
        if columns.ndim == 1:
            return krylov_solve(matrix, columns, tol, symmetric=True, precond=precond)
        return np.column_stack([krylov_solve(matrix, column, tol, symmetric=True, precond=precond)
                                for column in columns.T])

    # ------------------------------------------------------------------
    # derivatives

    @cached_property
    def _flat_derivatives(self):
        """Flat (xi, s) derivatives per component: keys x, s, xx, ss, xs."""
        g = self.grid
        out = {}
        for name, (mx, hx_bc), (mz, hz_bc) in (
                ('u1', (g.nx + 1, 'even'), (g.nz, 'odd')),
                ('u2', (g.nx, 'odd'), (g.nz + 1, 'onesided'))):
            Dx = _first_difference(mx, g.hx, hx_bc)
            Dxx = _second_difference(mx, g.hx, hx_bc)
            Ds = _first_difference(mz, g.hz, hz_bc)
            Dss = _second_difference(mz, g.hz, hz_bc)
            Ix = sp.identity(mx)
            Iz = sp.identity(mz)
            out[name] = {
                'x': sp.kron(Dx, Iz).tocsr(),
                'xx': sp.kron(Dxx, Iz).tocsr(),
                's': sp.kron(Ix, Ds).tocsr(),
                'ss': sp.kron(Ix, Dss).tocsr(),
                'xs': sp.kron(Dx, Ds).tocsr(),
            }
        return out

    @cached_property
    def calculus(self):
        """Reference-domain derivatives per component: keys x, z, xx, zz, xz, lap.

        Chain rule for s = z/a(x):
            f_z  = f_s / a
            f_x  = f_xi + s_x f_s
            f_zz = f_ss / a^2
            f_xz = (f_xi,s + s_x f_ss)/a - (a_x/a^2) f_s
            f_xx = f_xixi + 2 s_x f_xi,s + s_x^2 f_ss + s_xx f_s
        with s_x = -s a_x/a and s_xx = -s a_xx/a + 2 s a_x^2/a^2.
        """
        out = {}
        for name in ('u1', 'u2'):
            A, AX, AXX, S = self._metric(name)
            sx = -S * AX / A
            sxx = -S * AXX / A + 2.0 * S * AX**2 / A**2
            d = self._flat_derivatives[name]
            diag = sp.diags
            ops = {
                'x': d['x'] + diag(sx) @ d['s'],
                'z': diag(1.0 / A) @ d['s'],
                'zz': diag(1.0 / A**2) @ d['ss'],
                'xz': diag(1.0 / A) @ (d['xs'] + diag(sx) @ d['ss']) - diag(AX / A**2) @ d['s'],
                'xx': d['xx'] + diag(2.0 * sx) @ d['xs'] + diag(sx**2) @ d['ss'] + diag(sxx) @ d['s'],
            }
            ops['lap'] = ops['xx'] + ops['zz']
            out[name] = {key: value.tocsr() for key, value in ops.items()}
        return out

    @cached_property
    def laplacian(self):
        """Block-diagonal vector Laplacian on all faces."""
        c = self.calculus
        return sp.block_diag([c['u1']['lap'], c['u2']['lap']]).tocsr()

    def derivative(self, velocity, key):
        """Apply derivative `key` componentwise; returns (du1, du2) flattened."""
        g = self.grid
        c = self.calculus
        return c['u1'][key] @ velocity[:g.n1], c['u2'][key] @ velocity[g.n1:]

    def gradient_energy(self, velocity):
        """Weighted sum of |grad u|^2 over the faces."""
        w = self.face_weights
        g = self.grid
        d1x, d2x = self.derivative(velocity, 'x')
        d1z, d2z = self.derivative(velocity, 'z')
        return float(np.sum(w[:g.n1] * (d1x**2 + d1z**2)) + np.sum(w[g.n1:] * (d2x**2 + d2z**2)))

    def second_derivative_energy(self, velocity):
        w = self.face_weights
        g = self.grid
        total = 0.0
        for key in ('xx', 'xz', 'zz'):
            d1, d2 = self.derivative(velocity, key)
            total += np.sum(w[:g.n1] * d1**2) + np.sum(w[g.n1:] * d2**2)
        return float(total)

    # ------------------------------------------------------------------
    # pressure at the vertical faces

    def pressure_on_u1(self, p, theta):
        """(p_x, p_z) in reference coordinates at the vertical faces.

        The inlet/outlet ghost columns carry 2*Theta - p.
        """
        g = self.grid
        p = np.asarray(p, dtype=float).reshape(g.shape_p)
        theta = np.asarray(theta, dtype=float)
        padded = np.empty((g.nx + 2, g.nz))
        padded[1:-1] = p
        padded[0] = 2.0 * theta[0] - p[0]
        padded[-1] = 2.0 * theta[1] - p[-1]
        p_xi = (padded[1:] - padded[:-1]) / g.hx
        column_s = np.empty_like(padded)
        column_s[:, 1:-1] = (padded[:, 2:] - padded[:, :-2]) / (2.0 * g.hz)
        column_s[:, 0] = (-3.0 * padded[:, 0] + 4.0 * padded[:, 1] - padded[:, 2]) / (2.0 * g.hz)
        column_s[:, -1] = (3.0 * padded[:, -1] - 4.0 * padded[:, -2] + padded[:, -3]) / (2.0 * g.hz)
        p_s = 0.5 * (column_s[1:] + column_s[:-1])
        A, AX, _, S = self._metric('u1')
        p_s = p_s.ravel()
        p_x = p_xi.ravel() - S * AX / A * p_s
        return p_x, p_s / A

    # ------------------------------------------------------------------
    # top boundary

    @cached_property
    def prolong(self):
        """P: beam nodes (N_x+1) -> top faces (N_x), mean of the two nodes."""
        g = self.grid
        rows = np.repeat(np.arange(g.nx), 2)
        cols = np.stack([np.arange(g.nx), np.arange(1, g.nx + 1)], axis=1).ravel()
        return sp.csr_matrix((np.full(2 * g.nx, 0.5), (rows, cols)), shape=(g.nx, g.nx + 1))

    def to_nodes(self, face_values):
        """P^T: top-face values -> beam nodes (mean of the two neighbors inside)."""
        out = self.prolong.T @ np.asarray(face_values, dtype=float)
        out[0] = out[-1] = 0.0
        return out

    @cached_property
    def top_cell_selector(self):
        """E: cells -> top-row cells (N_x x cells)."""
        g = self.grid
        return sp.csr_matrix((np.ones(g.nx), (np.arange(g.nx), g.top_cells)), shape=(g.nx, g.ncells))

    def top_u1_slope(self, velocity):
        """d(u1)/ds at s = 1 on the vertical-face abscissae (wall value 0)."""
        g = self.grid
        u1 = velocity[:g.n1].reshape(g.shape_u1)
        return (-9.0 * u1[:, -1] + u1[:, -2]) / (3.0 * g.hz)

    def top_rows(self, matrix):
        """Rows of a u2-block matrix belonging to the top faces."""
        g = self.grid
        return matrix[np.arange(g.nx) * (g.nz + 1) + g.nz, :]


def ilu_preconditioner(matrix):
    ilu = spla.spilu(matrix.tocsc(), drop_tol=1e-5, fill_factor=20)
    return spla.LinearOperator(matrix.shape, ilu.solve)


def krylov_solve(matrix, rhs, tol, symmetric=False, precond=None):
    """Preconditioned Krylov solve for grids beyond the direct-solver limit."""
    if precond is None:
        precond = ilu_preconditioner(matrix)
    solver = spla.cg if symmetric else spla.gmres
    try:
        x, info = solver(matrix, rhs, rtol=tol, M=precond, maxiter=2000)
    except TypeError:
        x, info = solver(matrix, rhs, tol=tol, M=precond, maxiter=2000)
    if info != 0:
        residual = np.linalg.norm(matrix @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        raise SolverError("Krylov solver did not converge (info={})".format(info), residual)
    return x
