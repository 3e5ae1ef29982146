"""Command line interface: fsibeam {run, verify, bench, plot, restart}.

Exit codes: 0 success, 2 collision, 3 horizon floor reached, 4 solver
failure, 5 configuration error (1 when a verification case fails).
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import configure_logging, fsi_vars
from .bench import run_suite
from .config import load_config
from .coupling import CoupledState, continue_solution, energy_report
from .errors import CollisionError, DimensionError, FSIError, HorizonFloorError
from .geometry import BeamProfile, build_geometry
from .nonlinear import dump_terms, eval_Theta
from .oracles import manufactured_suite
from .plots import plot_outputs
from .snapshot import (read_snapshot, write_beam_csv, write_energy_csv, write_json, write_reports,
                       write_snapshot, write_terms)


def _dump_first_step(system, slab, directory):
    if slab.steps < 1:
        return
    prev, state = slab[0], slab[1]
    profile = system.profile
    gm_prev = build_geometry(profile, prev.beam.eta, prev.beam.eta_t)
    gm = build_geometry(profile, state.beam.eta, state.beam.eta_t)
    terms = dump_terms(gm, gm_prev, system.ops, state.velocity, prev.velocity, state.fluid.p,
                       eval_Theta(system.ops, state.velocity), system.dt, system.nu)
    write_terms(os.path.join(directory, 'terms'), system.grid, terms, state.t)


def continue_and_write(cfg, system, x0, directory, dump=False):
    """continue_solution up to output.total_horizon with all output files.

    Raises
    ------
    CollisionError, HorizonFloorError
        The last slab failed.
    """
    formats = cfg.output['formats']
    every = cfg.output['snapshot_every']
    remaining = cfg.output['total_horizon'] - x0.t
    counter = {'slabs': 0}

    def on_slab(slab_system, slab, report):
        index = counter['slabs']
        first = index == 0
        if 'fsib' in formats and index % every == 0:
            write_snapshot(os.path.join(directory, 'snapshot_{:04d}.fsib'.format(index)), slab_system.grid,
                           slab[0].fluid, slab[0].beam, slab_system.profile.eta)
        levels = slab.states if first else slab.states[1:]
        if 'csv' in formats and levels:
            write_beam_csv(os.path.join(directory, 'beam.csv'), levels, slab_system.grid.x_nodes, append=not first)
            energy = energy_report(slab_system, levels)
            write_energy_csv(os.path.join(directory, 'energy.csv'), energy, append=not first)
        if dump and first:
            _dump_first_step(slab_system, slab, directory)
        counter['slabs'] += 1
        counter['system'] = slab_system

    trajectory, reports = continue_solution(system, x0, cfg.picard_config(), remaining,
                                            cutoff=cfg.geometry['lift_cutoff'], on_slab=on_slab)
    if not reports:
        logging.warning("t={:.4f} already reaches output.total_horizon, nothing to do".format(x0.t))
        return trajectory, reports
    if 'json' in formats:
        write_reports(os.path.join(directory, 'report.json'), reports)
    if 'fsib' in formats:
        final = trajectory.final
        last_system = counter.get('system', system)
        write_snapshot(os.path.join(directory, 'snapshot_final.fsib'), last_system.grid, final.fluid, final.beam,
                       last_system.profile.eta)

    last = reports[-1]
    if last.status == 'collision':
        raise CollisionError("beam collision in the slab starting at t={:.4f}".format(last.t0),
                             margin=min(last.margins) if last.margins else None)
    if last.status != 'converged':
        raise HorizonFloorError("no contraction down to the horizon floor at t={:.4f}".format(last.t0), last)
    logging.info("run completed at t={:.4f} after {} slabs".format(trajectory.final.t, len(reports)))
    return trajectory, reports


def run(cfg, directory, dump=False):
    os.makedirs(directory, exist_ok=True)
    cfg.write_echo(directory)
    system = cfg.build_system()
    x0 = cfg.initial_state(system.ops)
    continue_and_write(cfg, system, x0, directory, dump)
    return fsi_vars.EXIT_CODES['ok']


def restart(snapshot_path, cfg, directory, dump=False):
    """Resume from a slab-start snapshot written by run."""
    data = read_snapshot(snapshot_path)
    grid = cfg.build_grid()
    if (data['nx'], data['nz']) != (grid.nx, grid.nz) or abs(data['hx'] - grid.hx) > 1e-14 * grid.hx:
        raise DimensionError("snapshot grid {}x{} does not match the config grid {}x{}".format(
            data['nx'], data['nz'], grid.nx, grid.nz))
    if data['beam'] is None:
        raise DimensionError("snapshot {} carries no beam block".format(snapshot_path))
    eta0 = data['eta0']
    mode = 'rect' if not np.any(eta0) and cfg.geometry['mode'] == 'rect' else 'graph'
    profile = BeamProfile(eta0, cfg.physical['length'], mode=mode)
    system = cfg.build_system(profile)
    os.makedirs(directory, exist_ok=True)
    cfg.write_echo(directory)
    logging.info("restarting from {} at t={:.4f}".format(snapshot_path, data['t']))
    continue_and_write(cfg, system, CoupledState(data['fluid'], data['beam']), directory, dump)
    return fsi_vars.EXIT_CODES['ok']


def verify(directory, levels, seed=0):
    rows = manufactured_suite(levels, seed=seed)
    print("{:<24} {:>10} {:>12}  {}".format('case', 'order', 'last error', 'result'))
    for row in rows:
        order = '-' if row['order'] is None else '{:.3f}'.format(row['order'])
        error = '{:.3e}'.format(row['errors'][-1]) if row['errors'] else '-'
        print("{:<24} {:>10} {:>12}  {}".format(row['case'], order, error, 'PASS' if row['passed'] else 'FAIL'))
    os.makedirs(directory, exist_ok=True)
    write_json(os.path.join(directory, 'verify.json'), {'rows': rows})
    return 0 if all(row['passed'] for row in rows) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog='fsibeam',
                                     description='Channel flow over a damped clamped beam in a fixed reference domain.')
    parser.add_argument("--debug", action='store_true', help="log at DEBUG level (overrides FSI_LOG)")
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('run', help='solve over output.total_horizon')
    p.add_argument('--config', type=str, default=None, help='TOML configuration file')
    p.add_argument('--out', type=str, default=None, help='output directory (default: output.directory)')
    p.add_argument('--dump-terms', action='store_true', help='write every nonlinear term of the first step')

    p = commands.add_parser('verify', help='manufactured solutions and oracle checks')
    p.add_argument('--out', type=str, default='fsi_verify')
    p.add_argument('--levels', type=int, nargs='+', default=[16, 32, 64])
    p.add_argument('--seed', type=int, default=0, help='seed of the randomized projector check')

    p = commands.add_parser('bench', help='benchmark sweeps')
    p.add_argument('suite', choices=fsi_vars.BENCH_SUITES)
    p.add_argument('--config', type=str, default=None)
    p.add_argument('--out', type=str, default='fsi_bench')
    p.add_argument('--workers', type=int, default=1)

    p = commands.add_parser('plot', help='SVG figures from a run directory')
    p.add_argument('directory', type=str)
    p.add_argument('--out', type=str, default=None)

    p = commands.add_parser('restart', help='resume a run from a snapshot')
    p.add_argument('snapshot', type=str)
    p.add_argument('--config', type=str, default=None)
    p.add_argument('--out', type=str, default=None)
    p.add_argument('--dump-terms', action='store_true')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(loglevel='DEBUG' if args.debug else None)
    try:
        if args.command == 'run':
            cfg = load_config(args.config)
            return run(cfg, args.out or cfg.output['directory'], args.dump_terms)
        if args.command == 'restart':
            cfg = load_config(args.config)
            return restart(args.snapshot, cfg, args.out or cfg.output['directory'], args.dump_terms)
        if args.command == 'verify':
            return verify(args.out, args.levels, args.seed)
        if args.command == 'bench':
            tables = load_config(args.config).tables
            rows, summary = run_suite(args.suite, args.out, tables, args.workers)
            print(summary)
            return fsi_vars.EXIT_CODES['ok']
        if args.command == 'plot':
            for path in plot_outputs(args.directory, args.out):
                print(path)
            return fsi_vars.EXIT_CODES['ok']
    except FSIError as err:
        logging.error("{}: {}".format(type(err).__name__, err))
        return err.exit_code
    except KeyboardInterrupt:
        logging.warning("interrupted")
        return 130


if __name__ == '__main__':
    sys.exit(main())
