"""Reference configuration and change of variables.

The moving fluid domain {0 < y < 1 + eta(x)} is mapped onto the reference
domain {0 < z < 1 + eta0(x)} by z = (1 + eta0)/(1 + eta) * y, and the
reference domain is flattened onto the unit rectangle by s = z/(1 + eta0).
All fields therefore live on one fixed tensor grid; in rect mode (eta0 = 0)
the second map is the identity.

Beam nodes are x_k = k*h, k = 0..N, with clamped ends.
"""

import csv

import numpy as np

from .errors import CollisionError, DimensionError, DomainError


def node_derivatives(f, h):
    """First, second and third derivatives of a clamped nodal field.

    Parameters
    ----------
    f : ndarray
        Nodal values, f[0] and f[-1] are the clamped ends.
    h : float
        Node spacing.

    Returns
    -------
    tuple of ndarray
        (f_x, f_xx, f_xxx) on the same nodes.

    Notes
    -----
    f_x and f_xx use centered stencils with the clamped ghost value
    f[-1] = f[1] (reflection, f_x = 0 at the ends). f_xxx uses the centered
    5-point stencil inside and one-sided 4-point stencils on the two nodes
    next to each end and on the ends themselves.
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    if n < 7:
        raise DimensionError("at least 7 beam nodes are required, got {}".format(n))
    g = np.empty(n + 4)
    g[2:-2] = f
    # clamped reflection about both ends
    g[1] = f[1]
    g[0] = f[2]
    g[-2] = f[-2]
    g[-1] = f[-3]

    fx = (g[3:-1] - g[1:-3]) / (2.0 * h)
    fxx = (g[3:-1] - 2.0 * g[2:-2] + g[1:-3]) / h**2
    fxxx = (g[4:] - 2.0 * g[3:-1] + 2.0 * g[1:-3] - g[:-4]) / (2.0 * h**3)

    forward = (-f[0] + 3.0 * f[1] - 3.0 * f[2] + f[3]) / h**3
    backward = (f[-1] - 3.0 * f[-2] + 3.0 * f[-3] - f[-4]) / h**3
    fxxx[0] = fxxx[1] = forward
    fxxx[-1] = fxxx[-2] = backward
    return fx, fxx, fxxx


def to_centers(f):
    return 0.5 * (f[1:] + f[:-1])


class BeamProfile:
    """Reference beam shape eta0 sampled on the beam nodes.

    Parameters
    ----------
    eta : array_like
        Nodal values of eta0 (N_b entries).
    length : float
        Domain length L.
    mode : str, optional
        'rect' (requires eta0 = 0) or 'graph'. Defaults to 'rect' when eta0
        vanishes identically and 'graph' otherwise.
    """

    def __init__(self, eta, length, mode=None):
        eta = np.array(eta, dtype=float)
        if eta.ndim != 1:
            raise DimensionError("profile must be a 1D nodal array")
        if length <= 0:
            raise DomainError("L must be > 0")
        self.length = float(length)
        self.nodes = eta.size
        self.h = self.length / (self.nodes - 1)
        self.x = np.linspace(0.0, self.length, self.nodes)
        self.eta = eta
        self.eta_x, self.eta_xx, self.eta_xxx = node_derivatives(eta, self.h)

        flat = not np.any(eta)
        if mode is None:
            mode = 'rect' if flat else 'graph'
        if mode not in ('rect', 'graph'):
            raise DomainError("unknown reference mode '{}'".format(mode))
        if mode == 'rect' and not flat:
            raise DomainError("rect mode requires eta0 = 0")
        self.mode = mode

        gap = 1.0 + eta
        if np.min(gap) <= 0.0:
            raise CollisionError("reference profile has 1 + eta0 <= 0", margin=float(np.min(gap)))

        # end curvature is inflated by the ghost reflection when the slope is nonzero
        scale = 1.0 + np.max(np.abs(self.eta_xx[2:-2]))
        slope0 = abs(eta[1] - eta[0]) / self.h
        slope1 = abs(eta[-1] - eta[-2]) / self.h
        if abs(eta[0]) > 1e-12 or abs(eta[-1]) > 1e-12:
            raise DomainError("reference profile is not clamped: eta0 != 0 at an end")
        if max(slope0, slope1) > self.h * scale:
            raise DomainError("reference profile is not clamped: eta0_x != 0 at an end")

    @property
    def gap(self):
        """1 + eta0 on the nodes."""
        return 1.0 + self.eta

    @property
    def x_centers(self):
        return to_centers(self.x)

    def __repr__(self):
        return "BeamProfile(mode={}, nodes={}, L={}, max|eta0|={:.3g})".format(
            self.mode, self.nodes, self.length, float(np.max(np.abs(self.eta))))

    @classmethod
    def flat(cls, length, nodes):
        return cls(np.zeros(nodes), length, mode='rect')


def profile_values(spec, length, nodes):
    """Nodal values of a named analytic profile or a CSV column.

    spec is a dict with a 'kind' key: zero | bump | sine | polynomial | csv.
    """
    x = np.linspace(0.0, length, nodes)
    kind = spec.get('kind', 'zero')
    if kind == 'zero':
        return np.zeros(nodes)
    if kind == 'bump':
        return spec.get('amplitude', 0.0) * 16.0 * x**2 * (length - x)**2 / length**4
    if kind == 'sine':
        return spec.get('amplitude', 0.0) * np.sin(np.pi * x / length)**2
    if kind == 'polynomial':
        coefficients = spec.get('coefficients', [])
        # the clamping factor keeps eta = eta_x = 0 at both ends
        return np.polynomial.polynomial.polyval(x, coefficients) * x**2 * (length - x)**2
    if kind == 'csv':
        column = spec.get('column', 0)
        with open(spec['path'], newline='') as fh:
            rows = list(csv.reader(fh))
        if rows and not _is_number(rows[0][0]):
            header = rows.pop(0)
            if isinstance(column, str):
                column = header.index(column)
        values = np.array([float(row[column]) for row in rows])
        if values.size != nodes:
            raise DimensionError("CSV profile has {} values, expected {}".format(values.size, nodes))
        return values
    raise DomainError("unknown profile kind '{}'".format(kind))


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def profile_from_spec(spec, length, nodes, mode=None):
    return BeamProfile(profile_values(spec, length, nodes), length, mode=mode)


class GeometryMap:
    """Current beam position relative to the reference profile.

    Holds eta, eta_t and the relative displacement
    eta~ = (eta - eta0)/(1 + eta0) with its derivatives, sampled on the beam
    nodes and averaged/differenced onto the cell-center abscissae. Instances
    are treated as immutable.
    """

    def __init__(self, profile, eta, eta_t):
        self.profile = profile
        self.mode = profile.mode
        self.h = profile.h
        self.eta = np.array(eta, dtype=float)
        self.eta_t = np.array(eta_t, dtype=float)

        gap0 = profile.gap
        self.tilde = (self.eta - profile.eta) / gap0
        self.tilde_x, self.tilde_xx, self.tilde_xxx = node_derivatives(self.tilde, self.h)
        self.tilde_t = self.eta_t / gap0
        self.eta_x = node_derivatives(self.eta, self.h)[0]

        self._nodes = {
            'tilde': self.tilde,
            'tilde_x': self.tilde_x,
            'tilde_xx': self.tilde_xx,
            'tilde_t': self.tilde_t,
            'eta_x': self.eta_x,
            'a': gap0,
            'a_x': profile.eta_x,
            'a_xx': profile.eta_xx,
        }
        self._centers = {name: to_centers(value) for name, value in self._nodes.items()}
        # first derivatives are sharper as midpoint differences
        self._centers['tilde_x'] = np.diff(self.tilde) / self.h
        self._centers['eta_x'] = np.diff(self.eta) / self.h
        self._centers['a_x'] = np.diff(gap0) / self.h
        for cache in (self._nodes, self._centers):
            cache['one_plus'] = 1.0 + cache['tilde']

    def at(self, location, name):
        """Coefficient field `name` at 'nodes' (x_k) or 'centers' (x_k + h/2)."""
        cache = self._nodes if location == 'nodes' else self._centers
        return cache[name]

    @property
    def is_reference(self):
        return not np.any(self.tilde)


def build_geometry(profile, eta, eta_t):
    """Build the GeometryMap for the beam position (eta, eta_t).

    Raises
    ------
    DimensionError
        Fields do not live on the profile's beam grid.
    CollisionError
        1 + eta <= 0 at some node.
    """
    eta = np.asarray(eta, dtype=float)
    eta_t = np.asarray(eta_t, dtype=float)
    if eta.shape != (profile.nodes,) or eta_t.shape != (profile.nodes,):
        raise DimensionError("beam fields have shapes {} / {}, expected ({},)".format(
            eta.shape, eta_t.shape, profile.nodes))
    gap = 1.0 + eta
    if np.min(gap) <= 0.0:
        k = int(np.argmin(gap))
        raise CollisionError("non-positive gap 1 + eta = {:.3e} at x = {:.4f}".format(
            gap[k], profile.x[k]), margin=float(gap[k]))
    return GeometryMap(profile, eta, eta_t)


def _interp(gm, x, field):
    x = np.asarray(x, dtype=float)
    L = gm.profile.length
    if np.any(x < 0.0) or np.any(x > L):
        raise DomainError("x outside [0, {}]".format(L))
    return np.interp(x, gm.profile.x, field)


def map_forward(gm, x, y):
    """Physical point (x, y) to reference point (x, z)."""
    eta = _interp(gm, x, gm.eta)
    eta0 = _interp(gm, x, gm.profile.eta)
    y = np.asarray(y, dtype=float)
    top = 1.0 + eta
    if np.any(y < 0.0) or np.any(y > top * (1.0 + 1e-14)):
        raise DomainError("y outside [0, 1 + eta(x)]")
    return x, (1.0 + eta0) / top * y


def map_inverse(gm, x, z):
    """Reference point (x, z) to physical point (x, y)."""
    eta = _interp(gm, x, gm.eta)
    eta0 = _interp(gm, x, gm.profile.eta)
    z = np.asarray(z, dtype=float)
    top0 = 1.0 + eta0
    if np.any(z < 0.0) or np.any(z > top0 * (1.0 + 1e-14)):
        raise DomainError("z outside [0, 1 + eta0(x)]")
    return x, (1.0 + eta) / top0 * z


def transport_trace(profile, g):
    """Carry a field on the reference top boundary to the flat beam line.

    The reference top boundary is sampled at the points (x_k, 1 + eta0(x_k)),
    so the transport is a relabeling of the same nodal values.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (profile.nodes,):
        raise DimensionError("trace has shape {}, expected ({},)".format(g.shape, profile.nodes))
    return g.copy()


def transport_trace_inverse(profile, g):
    """Flat beam line back to the reference top boundary."""
    return transport_trace(profile, g)


def eta_tilde_expansion(profile, eta):
    """eta~_x by the quotient rule on eta~ = (eta - eta0) * (1 + eta0)^-1.

    Used to check the directly differenced eta~_x; both agree to O(h^2).
    """
    eta = np.asarray(eta, dtype=float)
    numerator = eta - profile.eta
    numerator_x = node_derivatives(eta, profile.h)[0] - profile.eta_x
    inverse_gap = 1.0 / profile.gap
    return numerator_x * inverse_gap - numerator * profile.eta_x * inverse_gap**2
