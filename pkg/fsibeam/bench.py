"""Benchmark sweeps, each scenario an isolated task on a process pool.

Suites
------
contraction     measured Picard contraction against the slab length
graph_vs_rect   large initial deformation, deformed vs flat reference
small_data      data scaled by r = 1, 1/2, 1/4, 1/8, continuation over [0, 1]
refinement      timing of one Picard slab on refined grids
"""

import copy
import csv
import logging
import os
import time
from multiprocessing import Pool

import numpy as np

from . import fsi_vars
from .config import SolverConfig, validate
from .coupling import continue_solution, picard_solve
from .errors import ConfigError, FSIError
from .snapshot import write_json


def measured_kappa(residuals, floor=1e-13):
    """Largest ratio of successive residuals while they are above round-off."""
    ratios = [b / a for a, b in zip(residuals[:-1], residuals[1:]) if a > floor]
    return max(ratios) if ratios else float('nan')


def _config(tables, overrides):
    tables = copy.deepcopy(tables)
    for name, table in overrides.items():
        tables.setdefault(name, {}).update(table)
    cfg = SolverConfig(tables)
    violations = validate(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def _slab(cfg, horizon):
    """One Picard slab of fixed length (no contraction-driven halving)."""
    system = cfg.build_system()
    x0 = cfg.initial_state(system.ops)
    picard = cfg.picard_config().with_horizon(horizon)
    picard.kappa_target = 0.999
    tic = time.monotonic()
    _, report = picard_solve(system, x0, picard)
    return report, time.monotonic() - tic


def run_scenario(task):
    """Worker entry point; task = (suite, label, tables, overrides, horizon)."""
    suite, label, tables, overrides, horizon = task
    row = {'suite': suite, 'label': label, 'horizon': horizon}
    try:
        cfg = _config(tables, overrides)
        if suite == 'small_data':
            system = cfg.build_system()
            x0 = cfg.initial_state(system.ops)
            tic = time.monotonic()
            trajectory, reports = continue_solution(system, x0, cfg.picard_config(), horizon)
            row.update({
                'completed': bool(reports[-1].status == 'converged'
                                  and trajectory.final.t >= horizon - 0.5 * cfg.discretization['dt']),
                'reached': float(trajectory.final.t),
                'slabs': len(reports),
                'seconds': time.monotonic() - tic,
            })
        else:
            report, seconds = _slab(cfg, horizon)
            row.update({
                'status': report.status,
                'iterations': report.iterations,
                'kappa': measured_kappa(report.residuals),
                'min_margin': min(report.margins) if report.margins else float('nan'),
                'seconds': seconds,
                'cells': cfg.discretization['nx'] * cfg.discretization['nz'],
            })
    except FSIError as err:
        row.update({'status': 'error', 'error': str(err)})
    logging.info("bench {} {}: {}".format(suite, label, row))
    return row


def suite_tasks(suite, tables=None):
    tables = copy.deepcopy(tables or {})
    base_horizon = tables.get('picard', {}).get('horizon', fsi_vars.PICARD['horizon'])
    dt = tables.get('discretization', {}).get('dt', fsi_vars.DISCRETIZATION['dt'])
    horizons = [h for h in (base_horizon / 2**k for k in range(4)) if h >= dt - 1e-12]
    moderate = {'geometry': {'mode': 'rect', 'eta2': {'kind': 'bump', 'amplitude': 0.1}}}
    tasks = []
    if suite == 'contraction':
        tasks = [(suite, 'T={:g}'.format(h), tables, moderate, h) for h in horizons]
    elif suite == 'graph_vs_rect':
        deformed = {'kind': 'bump', 'amplitude': 0.5}
        graph = {'geometry': {'mode': 'graph', 'eta0': deformed, 'eta1': deformed}}
        rect = {'geometry': {'mode': 'rect', 'eta0': {'kind': 'zero'}, 'eta1': deformed}}
        for h in horizons:
            tasks.append((suite, 'graph T={:g}'.format(h), tables, graph, h))
            tasks.append((suite, 'rect T={:g}'.format(h), tables, rect, h))
    elif suite == 'small_data':
        for r in (1.0, 0.5, 0.25, 0.125):
            data = {'geometry': {'mode': 'rect', 'eta2': {'kind': 'bump', 'amplitude': r}}}
            tasks.append((suite, 'r={:g}'.format(r), tables, data, 1.0))
    elif suite == 'refinement':
        for n in (16, 32, 64):
            grid = {'discretization': {'nx': n, 'nz': n}}
            grid.update(moderate)
            tasks.append((suite, '{0}x{0}'.format(n), tables, grid, dt))
    else:
        raise ConfigError("unknown bench suite '{}' (choose from {})".format(
            suite, ", ".join(fsi_vars.BENCH_SUITES)))
    return tasks


def summarize(suite, rows):
    """Suite-level findings on top of the per-scenario rows."""
    out = {}
    if suite == 'contraction':
        kappas = [row.get('kappa', float('nan')) for row in rows]
        out['kappa_monotone'] = bool(all(b <= 1.05 * a for a, b in zip(kappas[:-1], kappas[1:])))
    elif suite == 'graph_vs_rect':
        pairs = zip(rows[0::2], rows[1::2])
        out['graph_not_worse'] = bool(all(g.get('kappa', np.inf) <= r.get('kappa', np.inf) for g, r in pairs))
        out['graph_converged'] = bool(any(row.get('status') == 'converged' for row in rows[0::2]))
    elif suite == 'small_data':
        completed = [row.get('completed', False) for row in rows]
        out['threshold_index'] = next((k for k, done in enumerate(completed) if done), None)
    return out


def run_suite(suite, directory, tables=None, workers=1):
    """Run a suite, write bench_<suite>.json and .csv, return (rows, summary)."""
    tasks = suite_tasks(suite, tables)
    logging.info("bench {}: {} scenarios on {} workers".format(suite, len(tasks), workers))
    if workers > 1:
        with Pool(workers) as pool:
            rows = pool.map(run_scenario, tasks)
    else:
        rows = [run_scenario(task) for task in tasks]
    summary = summarize(suite, rows)

    os.makedirs(directory, exist_ok=True)
    write_json(os.path.join(directory, 'bench_{}.json'.format(suite)),
               {'suite': suite, 'rows': rows, 'summary': summary})
    columns = sorted({key for row in rows for key in row})
    with open(os.path.join(directory, 'bench_{}.csv'.format(suite)), 'w', newline='') as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    return rows, summary
