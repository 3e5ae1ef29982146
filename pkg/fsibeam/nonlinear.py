"""Nonlinear terms of the fixed-domain formulation.

With the relative displacement eta~ = (eta - eta0)/(1 + eta0) and the
vertical reference coordinate z, the velocity on the reference domain is
u^ = M(u-) = u- + N(u-) for the divergence-free unknown u-, and the
fluid/beam system reads

    u-_t - nu LAP u- + grad p = F(u-, p, eta),   div u- = 0,
    p = Theta(u-) on the inlet/outlet,
    beam load = p + H(u-, eta) on the top.

Every evaluator works on face vectors of a StaggeredOperators object and
coefficients sampled from a GeometryMap: 'nodes' at the vertical faces
(u1), 'centers' at the horizontal faces (u2).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionError, DimensionError
from .geometry import to_centers


@dataclass
class RhsBundle:
    """Right-hand sides of the linear coupled system for the steps of a slab.

    f[n], theta[n] and h[n] are the data of step n (new time level n + 1):
    a face vector, a (2, N_z) pressure array and a beam-node array.
    """
    f: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    h: list = field(default_factory=list)

    @classmethod
    def zeros(cls, grid, steps):
        return cls([np.zeros(grid.nfaces) for _ in range(steps)],
                   [np.zeros((2, grid.nz)) for _ in range(steps)],
                   [np.zeros(grid.nx + 1) for _ in range(steps)])

    def __len__(self):
        return len(self.f)

    def level(self, n):
        return self.f[n], self.theta[n], self.h[n]

    def append(self, f, theta, h):
        self.f.append(np.asarray(f, dtype=float))
        self.theta.append(np.asarray(theta, dtype=float))
        self.h.append(np.asarray(h, dtype=float))

    def truncate(self, steps):
        return RhsBundle(self.f[:steps], self.theta[:steps], self.h[:steps])

    def __add__(self, other):
        if len(self) != len(other):
            raise DimensionError("cannot add right-hand sides over {} and {} steps".format(len(self), len(other)))
        return RhsBundle([a + b for a, b in zip(self.f, other.f)],
                         [a + b for a, b in zip(self.theta, other.theta)],
                         [a + b for a, b in zip(self.h, other.h)])

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.f + self.theta + self.h)


_COEFFICIENTS = ('tilde', 'tilde_x', 'tilde_xx', 'tilde_t', 'eta_x', 'one_plus')


def _coefficients(gm, ops, component):
    """Geometry coefficients repeated onto the positions of one velocity component."""
    grid = ops.grid
    if gm.profile.nodes != grid.nx + 1:
        raise DimensionError("geometry has {} nodes, grid needs {}".format(gm.profile.nodes, grid.nx + 1))
    if component == 'u1':
        location, s = 'nodes', grid.s_centers
    else:
        location, s = 'centers', grid.s_nodes
    m = s.size
    out = {name: np.repeat(gm.at(location, name), m) for name in _COEFFICIENTS}
    a = gm.at(location, 'a')
    out['z'] = np.repeat(a, m) * np.tile(s, a.size)
    return out


def _split(ops, velocity):
    velocity = np.asarray(velocity, dtype=float)
    n1 = ops.grid.n1
    if velocity.shape != (ops.grid.nfaces,):
        raise DimensionError("velocity has shape {}, expected ({},)".format(velocity.shape, ops.grid.nfaces))
    return velocity[:n1], velocity[n1:]


def _check_gap(coefficients):
    worst = float(np.min(coefficients['one_plus']))
    if worst <= 0.0:
        raise CollisionError("1 + eta~ = {:.3e} <= 0".format(worst), margin=worst)


def eval_w(gm, ops, u_hat):
    """w = (-eta~ u1, z eta~_x u1)."""
    u1, _ = _split(ops, u_hat)
    c1 = _coefficients(gm, ops, 'u1')
    c2 = _coefficients(gm, ops, 'u2')
    w1 = -c1['tilde'] * u1
    w2 = c2['z'] * c2['tilde_x'] * (ops.average_u1_to_u2 @ u1)
    return np.concatenate([w1, w2])


def eval_M(gm, ops, u_bar):
    """M(u-) = (u1/(1 + eta~), z eta~_x u1/(1 + eta~) + u2)."""
    u1, u2 = _split(ops, u_bar)
    c1 = _coefficients(gm, ops, 'u1')
    c2 = _coefficients(gm, ops, 'u2')
    _check_gap(c1)
    _check_gap(c2)
    m1 = u1 / c1['one_plus']
    m2 = c2['z'] * c2['tilde_x'] * (ops.average_u1_to_u2 @ u1) / c2['one_plus'] + u2
    return np.concatenate([m1, m2])


def eval_N(gm, ops, u_bar):
    return eval_M(gm, ops, u_bar) - np.asarray(u_bar, dtype=float)


def g_terms(gm, ops, u_hat, u_hat_prev, p, theta, dt, nu):
    """The groups of G(u^, p^, eta) as separate face vectors.

    Keys: 'time', 'transport', 'viscous', 'pressure', 'convection'. The time
    derivative is the backward difference against u_hat_prev (None means
    u^ is constant in time).
    """
    grid = ops.grid
    u_hat = np.asarray(u_hat, dtype=float)
    if u_hat_prev is None:
        u_t = np.zeros(grid.nfaces)
    else:
        u_t = (u_hat - np.asarray(u_hat_prev, dtype=float)) / dt
    u1, u2 = _split(ops, u_hat)
    first_x = ops.derivative(u_hat, 'x')
    first_z = ops.derivative(u_hat, 'z')
    second_xx = ops.derivative(u_hat, 'xx')
    second_zz = ops.derivative(u_hat, 'zz')
    mixed = ops.derivative(u_hat, 'xz')
    # both velocity components at the positions of each component
    carried = {
        'u1': (u1, ops.average_u2_to_u1 @ u2),
        'u2': (ops.average_u1_to_u2 @ u1, u2),
    }

    groups = {key: [] for key in ('time', 'transport', 'viscous', 'pressure', 'convection')}
    for k, component in enumerate(('u1', 'u2')):
        c = _coefficients(gm, ops, component)
        _check_gap(c)
        z, et, etx, etxx = c['z'], c['tilde'], c['tilde_x'], c['tilde_xx']
        one_plus = c['one_plus']
        ut = u_t[:grid.n1] if k == 0 else u_t[grid.n1:]
        a1, a2 = carried[component]

        groups['time'].append(-et * ut)
        groups['transport'].append(
            (z * c['tilde_t'] + nu * z * (etx**2 / one_plus - etxx)) * first_z[k])
        groups['viscous'].append(nu * (-2.0 * z * etx * mixed[k] + et * second_xx[k]
                                       + (z**2 * etx**2 - et) / one_plus * second_zz[k]))
        groups['convection'].append(-one_plus * a1 * first_x[k] + (z * etx * a1 - a2) * first_z[k])
        if k == 0:
            if theta is None:
                theta = np.zeros((2, grid.nz))
            p_x, p_z = ops.pressure_on_u1(p, theta)
            groups['pressure'].append(z * (etx * p_z - et * p_x))
        else:
            groups['pressure'].append(np.zeros(grid.n2))
    return {key: np.concatenate(parts) for key, parts in groups.items()}


def eval_G(gm, ops, u_hat, u_hat_prev, p, theta, dt, nu):
    return sum(g_terms(gm, ops, u_hat, u_hat_prev, p, theta, dt, nu).values())


def eval_F(gm, gm_prev, ops, u_bar, u_bar_prev, p, theta, dt, nu):
    """F(u-, p, eta) = G(M(u-), p, eta) - d/dt N(u-) + nu LAP N(u-).

    gm_prev and u_bar_prev are the previous time level of the same slab;
    N carries zero wall values, so LAP N uses homogeneous boundary data.
    """
    u_bar = np.asarray(u_bar, dtype=float)
    u_bar_prev = np.asarray(u_bar_prev, dtype=float)
    M = eval_M(gm, ops, u_bar)
    M_prev = eval_M(gm_prev, ops, u_bar_prev)
    N = M - u_bar
    N_prev = M_prev - u_bar_prev
    G = eval_G(gm, ops, M, M_prev, p, theta, dt, nu)
    return G - (N - N_prev) / dt + nu * (ops.laplacian @ N)


def eval_Theta(ops, u_bar):
    """Bernoulli data -1/2 |u|^2 on the inlet (row 0) and outlet (row 1).

    u2 vanishes on both sides, so only u1 contributes.
    """
    u1, _ = _split(ops, u_bar)
    u1 = u1.reshape(ops.grid.shape_u1)
    return -0.5 * np.stack([u1[0]**2, u1[-1]**2])


def eval_Psi(gm, ops, u_hat, nu):
    """Viscous part of the beam load on the beam nodes.

    nu (eta_x/(1+eta~) u1_z + eta_x u2_x - (z eta~_x eta_x - 2)/(1+eta~) u2_z)
    evaluated on the top faces with one-sided z-derivatives, then moved to
    the nodes.
    """
    _, u2 = _split(ops, u_hat)
    u_hat = np.asarray(u_hat, dtype=float)
    a_nodes = gm.at('nodes', 'a')
    u1_z = to_centers(ops.top_u1_slope(u_hat) / a_nodes)
    u2_x = ops.top_rows(ops.calculus['u2']['x']) @ u2
    u2_z = ops.top_rows(ops.calculus['u2']['z']) @ u2

    z = gm.at('centers', 'a')
    eta_x = gm.at('centers', 'eta_x')
    tilde_x = gm.at('centers', 'tilde_x')
    one_plus = gm.at('centers', 'one_plus')
    psi = nu * (eta_x / one_plus * u1_z + eta_x * u2_x - (z * tilde_x * eta_x - 2.0) / one_plus * u2_z)
    return ops.to_nodes(psi)


def eval_H(gm, ops, u_bar, nu):
    return eval_Psi(gm, ops, eval_M(gm, ops, u_bar), nu)


def dump_terms(gm, gm_prev, ops, u_bar, u_bar_prev, p, theta, dt, nu):
    """Every named nonlinear term at one time level, for debugging output."""
    M = eval_M(gm, ops, u_bar)
    M_prev = eval_M(gm_prev, ops, u_bar_prev)
    terms = {
        'w': eval_w(gm, ops, M),
        'M': M,
        'N': M - np.asarray(u_bar, dtype=float),
    }
    for key, value in g_terms(gm, ops, M, M_prev, p, theta, dt, nu).items():
        terms['G_' + key] = value
    terms['F'] = eval_F(gm, gm_prev, ops, u_bar, u_bar_prev, p, theta, dt, nu)
    terms['Psi'] = eval_Psi(gm, ops, M, nu)
    terms['Theta'] = eval_Theta(ops, u_bar)
    return terms


def eta_tilde_scaling(profile, trajectories):
    """Log-log slope of max|eta~| over a slab against the slab length.

    trajectories: slabs of different horizons starting from the same data.
    """
    horizons, peaks = [], []
    for trajectory in trajectories:
        peak = max(float(np.max(np.abs((s.beam.eta - profile.eta) / profile.gap))) for s in trajectory)
        horizons.append(trajectory.horizon)
        peaks.append(peak)
    return float(np.polyfit(np.log(horizons), np.log(peaks), 1)[0])
