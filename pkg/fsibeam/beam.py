"""Damped clamped Euler-Bernoulli beam.

    eta_tt - beta*eta_xx - gamma*eta_txx + alpha*eta_xxxx = load

on nodes x_k = k*h, k = 0..N, with eta = eta_x = 0 at both ends. The ends
are ghost-reflected (eta[-1] = eta[1]), so every operator below acts on the
N-1 interior nodes and stays symmetric and banded.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionError, DomainError, SolverError


@dataclass(frozen=True)
class BeamParams:
    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 0.1
    length: float = 1.0
    nodes: int = 33
    allow_undamped: bool = False

    def __post_init__(self):
        violations = []
        if not self.alpha > 0:
            violations.append("alpha must be > 0")
        if not self.beta >= 0:
            violations.append("beta must be >= 0")
        if not (self.gamma > 0 or (self.allow_undamped and self.gamma == 0)):
            violations.append("gamma must be > 0")
        if not self.length > 0:
            violations.append("L must be > 0")
        if self.nodes < 7:
            violations.append("beam needs at least 7 nodes")
        if violations:
            raise DomainError("; ".join(violations))

    @property
    def h(self):
        return self.length / (self.nodes - 1)

    @property
    def x(self):
        return np.linspace(0.0, self.length, self.nodes)


@dataclass
class BeamState:
    eta: np.ndarray
    eta_t: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, nodes, t=0.0):
        return cls(np.zeros(nodes), np.zeros(nodes), t)

    def copy(self):
        return BeamState(self.eta.copy(), self.eta_t.copy(), self.t)


def _check_nodes(params, *arrays):
    for a in arrays:
        if np.shape(a) != (params.nodes,):
            raise DimensionError("beam array has shape {}, expected ({},)".format(np.shape(a), params.nodes))


def assemble_beam_matrices(params):
    """Interior-node matrices (-eta_xx, -A_{alpha,beta}) as CSR.

    -eta_xx is tridiag(-1, 2, -1)/h^2. eta_xxxx is the 5-point stencil
    with 7 on the two corner diagonals coming from the ghost reflection.
    """
    n = params.nodes - 2
    h = params.h
    ones = np.ones(n)
    lap = sp.diags([-ones[1:], 2.0 * ones, -ones[1:]], [-1, 0, 1]) / h**2
    main = 6.0 * ones
    main[0] = main[-1] = 7.0
    quad = sp.diags([ones[2:], -4.0 * ones[1:], main, -4.0 * ones[1:], ones[2:]],
                    [-2, -1, 0, 1, 2]) / h**4
    stiffness = params.beta * lap + params.alpha * quad
    return lap.tocsr(), stiffness.tocsr()


def _ghosted(eta):
    g = np.empty(eta.size + 4)
    g[2:-2] = eta
    g[1], g[0] = eta[1], eta[2]
    g[-2], g[-1] = eta[-2], eta[-3]
    return g


def beam_operator_apply(params, eta):
    """beta*eta_xx - alpha*eta_xxxx on the nodes (zero on the clamped ends)."""
    eta = np.asarray(eta, dtype=float)
    if eta.size < 7:
        raise DimensionError("beam stencils need at least 7 nodes")
    _check_nodes(params, eta)
    h = params.h
    g = _ghosted(eta)
    eta_xx = (g[3:-1] - 2.0 * g[2:-2] + g[1:-3]) / h**2
    eta_xxxx = (g[4:] - 4.0 * g[3:-1] + 6.0 * g[2:-2] - 4.0 * g[1:-3] + g[:-4]) / h**4
    out = params.beta * eta_xx - params.alpha * eta_xxxx
    out[0] = out[-1] = 0.0
    return out


def _trapezoid(values, h):
    return h * (np.sum(values) - 0.5 * (values[0] + values[-1]))


def beam_energy(params, state):
    """Kinetic and potential beam energy by trapezoidal quadrature.

    Returns
    -------
    tuple of float
        (1/2 ||eta_t||^2, 1/2 (beta ||eta_x||^2 + alpha ||eta_xx||^2))

    Notes
    -----
    eta_x is the forward difference on each edge and eta_xx the ghosted
    second difference on each node, which makes the potential equal to
    h/2 * eta^T (-A) eta for the stepping matrices.
    """
    _check_nodes(params, state.eta, state.eta_t)
    h = params.h
    kinetic = 0.5 * _trapezoid(state.eta_t**2, h)
    slope = np.diff(state.eta) / h
    g = _ghosted(state.eta)
    curvature = (g[3:-1] - 2.0 * g[2:-2] + g[1:-3]) / h**2
    potential = 0.5 * (params.beta * h * np.sum(slope**2)
                       + params.alpha * _trapezoid(curvature**2, h))
    return kinetic, potential


def beam_dissipation(params, eta_t):
    """gamma * ||eta_tx||^2 (forward differences)."""
    return params.gamma * params.h * np.sum((np.diff(eta_t) / params.h)**2)


def beam_step(params, state, load, dt, mass=None, scheme='euler'):
    """Advance the beam by one step.

    Parameters
    ----------
    params : BeamParams
    state : BeamState
    load : ndarray
        Load on the beam nodes (end values are ignored).
    dt : float
        Time step, > 0.
    mass : ndarray or sparse matrix, optional
        Mass matrix on the interior nodes, e.g. I + N_s. Identity by default.
    scheme : str, optional
        'euler' (implicit Euler, default) or 'crank_nicolson'.

    Returns
    -------
    BeamState
    """
    if not dt > 0:
        raise DomainError("dt must be > 0")
    _check_nodes(params, state.eta, state.eta_t, load)
    lap, stiffness = assemble_beam_matrices(params)
    n = params.nodes - 2
    if mass is None:
        mass = sp.identity(n, format='csr')
    eta = state.eta[1:-1]
    vel = state.eta_t[1:-1]
    f = np.asarray(load, dtype=float)[1:-1]
    damping = params.gamma * lap
    if not sp.issparse(mass):
        mass = np.asarray(mass, dtype=float)
        damping = damping.toarray()
        stiffness = stiffness.toarray()

    if scheme == 'euler':
        lhs = mass + dt * damping + dt**2 * stiffness
        rhs = mass @ vel + dt * (f - stiffness @ eta)
    elif scheme == 'crank_nicolson':
        lhs = mass + 0.5 * dt * damping + 0.25 * dt**2 * stiffness
        rhs = (mass - 0.5 * dt * damping - 0.25 * dt**2 * stiffness) @ vel \
            + dt * (f - stiffness @ eta)
    else:
        raise DomainError("unknown beam scheme '{}'".format(scheme))

    if sp.issparse(lhs):
        new_vel = spla.spsolve(lhs.tocsc(), rhs)
    else:
        try:
            new_vel = scipy.linalg.solve(np.asarray(lhs), rhs, assume_a='pos')
        except np.linalg.LinAlgError as err:
            raise SolverError("beam step matrix is not positive definite: {}".format(err))
    if not np.all(np.isfinite(new_vel)):
        raise SolverError("beam step produced non-finite values")

    if scheme == 'euler':
        new_eta = eta + dt * new_vel
    else:
        new_eta = eta + 0.5 * dt * (new_vel + vel)

    out = BeamState.zeros(params.nodes, state.t + dt)
    out.eta[1:-1] = new_eta
    out.eta_t[1:-1] = new_vel
    return out


def static_deflection(params, load):
    """Solve -A eta = load with clamped ends."""
    _check_nodes(params, load)
    _, stiffness = assemble_beam_matrices(params)
    eta = np.zeros(params.nodes)
    eta[1:-1] = spla.spsolve(stiffness.tocsc(), np.asarray(load, dtype=float)[1:-1])
    return eta


def natural_frequencies(params, count=1, mass=None):
    """Lowest angular eigenfrequencies of the undamped beam.

    Solves -A phi = omega^2 M phi by shift-invert around zero.
    """
    _, stiffness = assemble_beam_matrices(params)
    n = params.nodes - 2
    if mass is None:
        mass = sp.identity(n, format='csc')
    if count >= n - 1:
        values = scipy.linalg.eigh(stiffness.toarray(), _dense(mass), eigvals_only=True)[:count]
    else:
        values = spla.eigsh(stiffness.tocsc(), k=count, M=sp.csc_matrix(mass), sigma=0.0,
                            which='LM', return_eigenvectors=False)
    values = np.sort(np.real(values))
    logging.debug("beam eigenvalues: {}".format(values))
    return np.sqrt(np.maximum(values, 0.0))


def _dense(matrix):
    return matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)


def sobolev_norm(params, eta, order):
    """Discrete H^order norm (order 0..4) of a clamped nodal field."""
    eta = np.asarray(eta, dtype=float)
    _check_nodes(params, eta)
    if not 0 <= order <= 4:
        raise DomainError("norm order must lie in 0..4, got {}".format(order))
    h = params.h
    g = _ghosted(eta)
    derivatives = [
        eta,
        (g[3:-1] - g[1:-3]) / (2.0 * h),
        (g[3:-1] - 2.0 * g[2:-2] + g[1:-3]) / h**2,
        (g[4:] - 2.0 * g[3:-1] + 2.0 * g[1:-3] - g[:-4]) / (2.0 * h**3),
        (g[4:] - 4.0 * g[3:-1] + 6.0 * g[2:-2] - 4.0 * g[1:-3] + g[:-4]) / h**4,
    ]
    return float(np.sqrt(sum(_trapezoid(d**2, h) for d in derivatives[:order + 1])))
