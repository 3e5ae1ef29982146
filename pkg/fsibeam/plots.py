"""SVG figures of run outputs (energy, contraction, gap margin, speed)."""

import glob
import logging
import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

from .snapshot import read_csv, read_json, read_snapshot


def _save(fig, path):
    fig.savefig(path, format='svg')
    plt.close(fig)
    logging.info("figure written to {}".format(path))
    return path


def plot_energy(energy, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for key in ('total', 'kinetic_fluid', 'kinetic_beam', 'potential_beam'):
        ax.plot(energy['t'], energy[key], label=key)
    ax.set_xlabel('t')
    ax.set_ylabel('energy')
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_kappa(report, path):
    """Contraction ratio against the global iteration count, one line per slab."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for k, slab in enumerate(report['slabs']):
        kappas = [v for v in slab['kappas'] if v is not None]
        if kappas:
            ax.semilogy(range(2, len(kappas) + 2), kappas, marker='o', label='slab {}'.format(k))
    ax.set_xlabel('iteration')
    ax.set_ylabel('kappa')
    if report['slabs']:
        ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_margin(beam, path):
    """min(1 + eta) over the nodes against t, from beam CSV columns."""
    times = np.unique(beam['t'])
    margins = [float(np.min(1.0 + beam['eta'][beam['t'] == t])) for t in times]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(times, margins)
    ax.set_xlabel('t')
    ax.set_ylabel('min(1 + eta)')
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def speed_field(fluid):
    """|u| at the cell centers of the flattened grid."""
    u1 = 0.5 * (fluid.u1[1:] + fluid.u1[:-1])
    u2 = 0.5 * (fluid.u2[:, 1:] + fluid.u2[:, :-1])
    return np.hypot(u1, u2)


def plot_speed(snapshot, path):
    """Heatmap of |u| over the physical domain z = (1 + eta0) s."""
    fluid = snapshot['fluid']
    nx, nz = snapshot['nx'], snapshot['nz']
    x = (np.arange(nx) + 0.5) * snapshot['hx']
    s = (np.arange(nz) + 0.5) * snapshot['hz']
    gap = np.ones(nx)
    if snapshot['eta0'] is not None:
        gap = 1.0 + 0.5 * (snapshot['eta0'][1:] + snapshot['eta0'][:-1])
    X = np.repeat(x[:, None], nz, axis=1)
    Z = gap[:, None] * s[None, :]
    fig, ax = plt.subplots(figsize=(8, 3))
    mesh = ax.pcolormesh(X, Z, speed_field(fluid), shading='nearest', cmap='viridis')
    fig.colorbar(mesh, ax=ax, label='|u|')
    ax.set_title('t = {:.4f}'.format(snapshot['t']))
    ax.set_xlabel('x')
    ax.set_ylabel('z')
    return _save(fig, path)


def plot_outputs(directory, target=None):
    """Every figure that the files in a run directory allow."""
    target = target or directory
    os.makedirs(target, exist_ok=True)
    written = []
    energy = os.path.join(directory, 'energy.csv')
    if os.path.exists(energy):
        written.append(plot_energy(read_csv(energy), os.path.join(target, 'energy.svg')))
    report = os.path.join(directory, 'report.json')
    if os.path.exists(report):
        written.append(plot_kappa(read_json(report), os.path.join(target, 'kappa.svg')))
    beam = os.path.join(directory, 'beam.csv')
    if os.path.exists(beam):
        written.append(plot_margin(read_csv(beam), os.path.join(target, 'margin.svg')))
    for path in sorted(glob.glob(os.path.join(directory, 'snapshot_*.fsib'))):
        name = os.path.splitext(os.path.basename(path))[0]
        written.append(plot_speed(read_snapshot(path), os.path.join(target, 'speed_{}.svg'.format(name))))
    if not written:
        logging.warning("nothing to plot in {}".format(directory))
    return written
