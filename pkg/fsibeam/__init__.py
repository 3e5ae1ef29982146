"""fsibeam: 2D channel flow over a damped clamped elastic beam.

The fluid occupies 0 < z < 1 + eta(t, x) over 0 < x < L and is driven by
total-pressure (Bernoulli) data on the inlet and outlet. Everything is solved
on a fixed reference configuration (flat, or the graph of a reference
profile) with a MAC discretization, and the nonlinear problem is the fixed
point of a linear coupled solver over short time slabs.

TODO:
1) Second-order (BDF2) monolithic step; the partitioned step already has Crank-Nicolson for the beam.
"""

__author__ = "fsibeam developers"
__copyright__ = "Copyright 2026"
__credits__ = [""]
__license__ = "GPL"
__version__ = "0.1.0"
__maintainer__ = ""
__email__ = ""
__status__ = "Development"

import logging
import os
import sys

from . import fsi_vars


def configure_logging(logfilename=None, logfilemode='a', loglevel=None):
    """Root logger setup shared by the CLI and FSIBeam.

    Parameters
    ----------
    logfilename : str, optional
        File where the log is saved. If logfilename=None, stdout is used.
    logfilemode : str, optional
        'a' for append and 'w' for overriding (default is 'a').
    loglevel : str, optional
        Level name; falls back to the FSI_LOG environment variable, then INFO.
    """
    loglevel = loglevel or os.environ.get('FSI_LOG', 'INFO')
    level = getattr(logging, loglevel.upper(), logging.INFO)
    if logfilename:
        logging.basicConfig(format="[%(levelname)s] [%(asctime)s]: %(message)s",
                            filename=logfilename,
                            filemode=logfilemode,
                            level=level)
    else:
        logging.basicConfig(format="[%(levelname)s] [%(asctime)s]: %(message)s",
                            level=level,
                            stream=sys.stdout)
    logging.getLogger().setLevel(level)


class FSIBeam:
    """Configured solver with its current state.

        with FSIBeam('case.toml', logfilename=None) as solver:
            trajectory, reports = solver.run()
    """

    def __init__(self, config=None, logfilename='fsibeam.log', logfilemode='a', loglevel=None):
        """
        Parameters
        ----------
        config : str or SolverConfig, optional
            Path to a TOML file, an already loaded configuration, or None for the defaults.
        logfilename : str, optional
            Name of the file where the log is saved (default is 'fsibeam.log').
            If logfilename=None, it will use stdout instead of a file.
        logfilemode : str, optional
            Use 'a' for append and 'w' for overriding (default is 'a').
        loglevel : str, optional
            The loglevel passed to logging (default FSI_LOG or 'INFO')
        """
        from .config import SolverConfig, load_config

        configure_logging(logfilename, logfilemode, loglevel)
        self.config = config if isinstance(config, SolverConfig) else load_config(config)

        # expose the hardcoded defaults the same way the config tables are exposed
        for key, value in vars(fsi_vars).items():
            if key.isupper():
                setattr(self, key, value)

        self.system = None
        self.state = None
        self.reports = []

    def __enter__(self):
        self.reset()
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        if exc_type is not None:
            logging.error("solver stopped at t={:.4f}: {}".format(
                self.state.t if self.state is not None else float('nan'), exc_value))
        self.system = None

    def reset(self):
        """Rebuild the system and the initial state from the configuration."""
        self.system = self.config.build_system()
        self.state = self.config.initial_state(self.system.ops)
        self.reports = []
        logging.info("{} ready: {!r}".format(type(self).__name__, self.system))
        return self.state

    def step(self, f=None, theta=None, h=None):
        """One monolithic step of the linear coupled problem."""
        self.state = self.system.step(self.state, f, theta, h)
        return self.state

    def partitioned_step(self, f=None, theta=None, h=None, added_mass=True):
        """One step by beam/fluid sub-iterations with the configured beam scheme."""
        from .coupling import partitioned_step

        self.state, history = partitioned_step(self.system, self.state, f, theta, h, added_mass=added_mass,
                                               tol=self.config.picard['solver_tol'],
                                               scheme=self.config.discretization['beam_scheme'])
        return history

    def run(self, total_horizon=None):
        """Continue the nonlinear solution by Picard slabs; the state ends at the last accepted level."""
        from .coupling import continue_solution

        total_horizon = total_horizon if total_horizon is not None else self.config.output['total_horizon']
        systems = []
        trajectory, reports = continue_solution(self.system, self.state, self.config.picard_config(),
                                                total_horizon, cutoff=self.config.geometry['lift_cutoff'],
                                                on_slab=lambda system, slab, report: systems.append(system))
        self.reports.extend(reports)
        if reports and reports[-1].status == 'converged':
            self.system, self.state = systems[-1], trajectory.final
        return trajectory, reports

    def energy(self):
        from .coupling import energy_report

        return {key: float(values[0]) for key, values in energy_report(self.system, [self.state]).items()}
