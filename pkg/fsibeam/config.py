"""Solver configuration: TOML tables on top of the defaults in fsi_vars.

Example
-------
    [physical]
    nu = 0.05

    [geometry]
    mode = "graph"
    eta0 = {kind = "bump", amplitude = 0.5}
    eta1 = {kind = "bump", amplitude = 0.5}

    [picard]
    horizon = 0.08
"""

import copy
import logging
import os

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import tomli_w

from . import fsi_vars
from .beam import BeamParams, BeamState
from .coupling import CoupledState, CoupledSystem, PicardConfig, enforce_compatibility
from .errors import ConfigError, FSIError
from .geometry import BeamProfile, profile_from_spec, profile_values
from .mac import FluidGrid, FluidState, StaggeredOperators

PROFILE_KINDS = ('zero', 'bump', 'sine', 'polynomial', 'csv')
VELOCITY_KINDS = ('zero', 'poiseuille')


class SolverConfig:
    """Effective configuration (defaults resolved) with factories for the solver objects."""

    def __init__(self, tables=None, path=None):
        self.tables = {name: copy.deepcopy(defaults) for name, defaults in fsi_vars.TABLES.items()}
        for name, table in (tables or {}).items():
            self.tables[name].update(table)
        self.path = path

    def __getattr__(self, name):
        tables = self.__dict__.get('tables', {})
        if name in tables:
            return tables[name]
        raise AttributeError(name)

    def __repr__(self):
        return "SolverConfig(mode={}, grid={}x{}, dt={})".format(
            self.geometry['mode'], self.discretization['nx'], self.discretization['nz'],
            self.discretization['dt'])

    # ------------------------------------------------------------------
    # factories

    def build_grid(self):
        d = self.discretization
        return FluidGrid(d['nx'], d['nz'], self.physical['length'])

    def build_params(self):
        p = self.physical
        return BeamParams(p['alpha'], p['beta'], p['gamma'], p['length'], self.discretization['nx'] + 1)

    def profile_values(self, key):
        return profile_values(self.geometry[key], self.physical['length'], self.discretization['nx'] + 1)

    def build_profile(self):
        length = self.physical['length']
        nodes = self.discretization['nx'] + 1
        if self.geometry['mode'] == 'rect':
            return BeamProfile.flat(length, nodes)
        return profile_from_spec(self.geometry['eta0'], length, nodes, mode='graph')

    def build_system(self, profile=None):
        grid = self.build_grid()
        ops = StaggeredOperators(grid, profile if profile is not None else self.build_profile())
        return CoupledSystem(ops, self.build_params(), self.physical['nu'], self.discretization['dt'],
                             self.picard['solver_tol'])

    def picard_config(self):
        p = dict(self.picard)
        p['norm_weights'] = tuple(p['norm_weights'])
        p['dt'] = self.discretization['dt']
        return PicardConfig(**p)

    def initial_state(self, ops):
        """x0 from the eta1/eta2/u0 specs, made compatible on ops."""
        grid = ops.grid
        eta = self.profile_values('eta1')
        eta_t = self.profile_values('eta2')
        u1 = np.zeros(grid.shape_u1)
        spec = self.geometry['u0']
        if spec.get('kind', 'zero') == 'poiseuille':
            u1[:] = 4.0 * spec.get('amplitude', 0.0) * grid.s_centers * (1.0 - grid.s_centers)
        velocity = np.concatenate([u1.ravel(), np.zeros(grid.n2)])
        velocity, change = enforce_compatibility(ops, velocity, eta_t, self.geometry['lift_cutoff'],
                                                 self.picard['solver_tol'])
        logging.info("initial velocity made compatible (change {:.3e})".format(change))
        return CoupledState(FluidState.from_vector(grid, velocity), BeamState(eta, eta_t))

    # ------------------------------------------------------------------
    # echo

    def to_toml(self):
        """The effective tables as TOML; unset (None) entries are left out."""
        return tomli_w.dumps(_drop_unset(self.tables))

    def write_echo(self, directory):
        path = os.path.join(directory, 'config_echo.toml')
        with open(path, 'wb') as fh:
            tomli_w.dump(_drop_unset(self.tables), fh)
        logging.info("effective config written to {}".format(path))
        return path


def _drop_unset(value):
    if isinstance(value, dict):
        return {key: _drop_unset(item) for key, item in value.items() if item is not None}
    if isinstance(value, (list, tuple)):
        return [_drop_unset(item) for item in value]
    return value


def _positive(violations, table, key, value, symbol=None, strict=True):
    symbol = symbol or key
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        violations.append("{}.{}: must be a number".format(table, key))
    elif strict and not value > 0:
        violations.append("{}.{}: {} must be > 0".format(table, key, symbol))
    elif not strict and not value >= 0:
        violations.append("{}.{}: {} must be >= 0".format(table, key, symbol))


def validate(cfg):
    """List of every violation in a SolverConfig (empty when valid)."""
    violations = []
    phys, geo, disc, out = cfg.physical, cfg.geometry, cfg.discretization, cfg.output

    _positive(violations, 'physical', 'nu', phys['nu'], 'ν')
    _positive(violations, 'physical', 'alpha', phys['alpha'], 'α')
    _positive(violations, 'physical', 'beta', phys['beta'], 'β', strict=False)
    _positive(violations, 'physical', 'gamma', phys['gamma'], 'γ')
    _positive(violations, 'physical', 'length', phys['length'], 'L')

    for key in ('nx', 'nz'):
        if not isinstance(disc[key], int) or disc[key] < 8:
            violations.append("discretization.{}: must be an integer >= 8".format(key))
    if 'nb' in disc and disc['nb'] != disc['nx'] + 1:
        violations.append("discretization.nb: must equal nx + 1 = {}".format(disc['nx'] + 1))
    _positive(violations, 'discretization', 'dt', disc['dt'], 'Δt')
    if disc['beam_scheme'] not in ('euler', 'crank_nicolson'):
        violations.append("discretization.beam_scheme: must be 'euler' or 'crank_nicolson'")

    if geo['mode'] not in ('rect', 'graph'):
        violations.append("geometry.mode: must be 'rect' or 'graph'")
    if not 0.0 < geo['lift_cutoff'] <= 1.0:
        violations.append("geometry.lift_cutoff: must lie in (0, 1]")
    if geo['u0'].get('kind', 'zero') not in VELOCITY_KINDS:
        violations.append("geometry.u0: kind must be one of {}".format(", ".join(VELOCITY_KINDS)))

    profiles = {}
    sized = isinstance(disc['nx'], int) and disc['nx'] >= 8 and isinstance(phys['length'], (int, float)) \
        and phys['length'] > 0
    if sized:
        for key in ('eta0', 'eta1', 'eta2'):
            spec = geo[key]
            if not isinstance(spec, dict) or spec.get('kind', 'zero') not in PROFILE_KINDS:
                violations.append("geometry.{}: kind must be one of {}".format(key, ", ".join(PROFILE_KINDS)))
                continue
            try:
                profiles[key] = cfg.profile_values(key)
            except (FSIError, ValueError, OSError, KeyError, IndexError) as err:
                violations.append("geometry.{}: {}".format(key, err))

    if 'eta0' in profiles and 'eta1' in profiles:
        eta0, eta1 = profiles['eta0'], profiles['eta1']
        if np.min(1.0 + eta1) <= 0.0:
            violations.append("geometry.eta1: initial displacement has 1 + η₁⁰ <= 0")
        if geo['mode'] == 'rect' and np.any(eta0):
            violations.append("geometry.eta0: rect mode uses the flat reference, eta0 must be zero")
        if geo['mode'] == 'graph':
            try:
                BeamProfile(eta0, phys['length'], mode='graph')
            except FSIError as err:
                violations.append("geometry.eta0: {}".format(err))
            if not np.allclose(eta0, eta1, rtol=0.0, atol=1e-12) and not geo['allow_rect_comparison']:
                violations.append("geometry.eta1: graph mode requires η₁⁰ = η⁰ (the reference must be the "
                                  "initially deformed configuration); set allow_rect_comparison = true to override")

    try:
        picard = cfg.picard_config()
    except FSIError as err:
        violations.extend("picard: {}".format(v) for v in str(err).split("; "))
    except TypeError as err:
        violations.append("picard: {}".format(err))
        picard = None
    else:
        steps = out['total_horizon'] / picard.dt if out['total_horizon'] > 0 else 0
        if not out['total_horizon'] > 0:
            violations.append("output.total_horizon: must be > 0")
        elif abs(round(steps) - steps) > 1e-9 * max(1.0, steps):
            violations.append("output.total_horizon: must be a multiple of Δt")

    if not isinstance(out['snapshot_every'], int) or out['snapshot_every'] < 1:
        violations.append("output.snapshot_every: must be an integer >= 1")
    unknown = set(out['formats']) - {'fsib', 'csv', 'json'}
    if unknown:
        violations.append("output.formats: unknown formats {}".format(sorted(unknown)))
    return violations


def load_config(path=None, text=None):
    """Read, merge and validate a TOML configuration.

    Raises
    ------
    ConfigError
        Parse error (with line information) or every validation violation.
    """
    if text is None:
        if path is None:
            text = ''
        else:
            try:
                with open(path, 'rb') as fh:
                    text = fh.read().decode('utf-8')
            except OSError as err:
                raise ConfigError("cannot read {}: {}".format(path, err))
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError("{}: {}".format(path or '<config>', err))

    violations = []
    for name, table in data.items():
        if name not in fsi_vars.TABLES:
            violations.append("unknown table [{}]".format(name))
        elif not isinstance(table, dict):
            violations.append("[{}] must be a table".format(name))
        else:
            allowed = set(fsi_vars.TABLES[name]) | ({'nb'} if name == 'discretization' else set())
            violations.extend("{}.{}: unknown key".format(name, key) for key in table if key not in allowed)
    if violations:
        raise ConfigError(violations)

    cfg = SolverConfig(data, path)
    violations = validate(cfg)
    if violations:
        raise ConfigError(violations)
    logging.debug("loaded {} from {}".format(cfg, path or '<defaults>'))
    return cfg
