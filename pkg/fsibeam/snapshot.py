"""File formats: FSIB field snapshots, beam/energy CSV and report JSON.

FSIB layout (little-endian):

    magic      4s   b'FSIB'
    version    u32
    nx, nz     u32, u32
    hx, hz, t  f64 x 3
    u1         f64 x (nx+1)*nz    row-major, index (i, j)
    u2         f64 x nx*(nz+1)
    p          f64 x nx*nz
    nb         u32                 0 when no beam block follows
    eta, eta_t, eta0  f64 x nb each
"""

import csv
import json
import logging
import os
import struct

import numpy as np

from . import fsi_vars
from .beam import BeamState
from .errors import DimensionError, DomainError
from .mac import FluidState

HEADER = struct.Struct('<4sIIIddd')
COUNT = struct.Struct('<I')


def encode_snapshot(grid, fluid, beam=None, eta0=None):
    """Serialize a fluid state (and optionally the beam and reference profile)."""
    header = HEADER.pack(fsi_vars.SNAPSHOT_MAGIC, fsi_vars.SNAPSHOT_VERSION, grid.nx, grid.nz,
                         grid.hx, grid.hz, float(fluid.t))
    parts = [header]
    for array, shape in ((fluid.u1, grid.shape_u1), (fluid.u2, grid.shape_u2), (fluid.p, grid.shape_p)):
        array = np.asarray(array, dtype='<f8')
        if array.shape != shape:
            raise DimensionError("snapshot array has shape {}, expected {}".format(array.shape, shape))
        parts.append(array.tobytes(order='C'))
    if beam is None:
        parts.append(COUNT.pack(0))
    else:
        nb = beam.eta.size
        eta0 = np.zeros(nb) if eta0 is None else eta0
        parts.append(COUNT.pack(nb))
        for array in (beam.eta, beam.eta_t, eta0):
            parts.append(np.asarray(array, dtype='<f8').tobytes())
    return b''.join(parts)


def decode_snapshot(data):
    """Inverse of encode_snapshot.

    Returns
    -------
    dict
        nx, nz, hx, hz, t, fluid (FluidState), beam (BeamState or None),
        eta0 (ndarray or None)
    """
    if len(data) < HEADER.size:
        raise DomainError("snapshot truncated ({} bytes)".format(len(data)))
    magic, version, nx, nz, hx, hz, t = HEADER.unpack_from(data, 0)
    if magic != fsi_vars.SNAPSHOT_MAGIC:
        raise DomainError("not an FSIB snapshot (magic {!r})".format(magic))
    if version != fsi_vars.SNAPSHOT_VERSION:
        raise DomainError("unsupported snapshot version {}".format(version))

    offset = HEADER.size
    arrays = []
    for shape in ((nx + 1, nz), (nx, nz + 1), (nx, nz)):
        count = shape[0] * shape[1]
        if len(data) < offset + 8 * count:
            raise DomainError("snapshot truncated in the field block")
        arrays.append(np.frombuffer(data, dtype='<f8', count=count, offset=offset).reshape(shape).astype(float))
        offset += 8 * count
    out = {'nx': nx, 'nz': nz, 'hx': hx, 'hz': hz, 't': t,
           'fluid': FluidState(arrays[0], arrays[1], arrays[2], t), 'beam': None, 'eta0': None}

    if len(data) >= offset + COUNT.size:
        (nb,) = COUNT.unpack_from(data, offset)
        offset += COUNT.size
        if nb:
            if len(data) < offset + 24 * nb:
                raise DomainError("snapshot truncated in the beam block")
            eta, eta_t, eta0 = (np.frombuffer(data, dtype='<f8', count=nb, offset=offset + 8 * nb * k).astype(float)
                                for k in range(3))
            out['beam'] = BeamState(eta, eta_t, t)
            out['eta0'] = eta0
    return out


def write_snapshot(path, grid, fluid, beam=None, eta0=None):
    with open(path, 'wb') as fh:
        fh.write(encode_snapshot(grid, fluid, beam, eta0))
    logging.info("snapshot t={:.4f} written to {}".format(fluid.t, path))
    return path


def read_snapshot(path):
    with open(path, 'rb') as fh:
        return decode_snapshot(fh.read())


def write_beam_csv(path, trajectory, x, append=False):
    """One row per (time level, node)."""
    with open(path, 'a' if append else 'w', newline='') as fh:
        writer = csv.writer(fh)
        if not append or fh.tell() == 0:
            writer.writerow(fsi_vars.BEAM_CSV_COLUMNS)
        for state in trajectory:
            for xk, eta, eta_t in zip(x, state.beam.eta, state.beam.eta_t):
                writer.writerow([repr(float(state.t)), repr(float(xk)), repr(float(eta)), repr(float(eta_t))])
    return path


def write_energy_csv(path, energy, append=False):
    columns = fsi_vars.ENERGY_CSV_COLUMNS
    with open(path, 'a' if append else 'w', newline='') as fh:
        writer = csv.writer(fh)
        if not append or fh.tell() == 0:
            writer.writerow(columns)
        for row in zip(*(energy[key] for key in columns)):
            writer.writerow([repr(float(v)) for v in row])
    return path


def read_csv(path):
    """Columns of a numeric CSV file as float arrays keyed by header."""
    with open(path, newline='') as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path, data):
    with open(path, 'w') as fh:
        json.dump(_jsonable(data), fh, sort_keys=True, indent=4)
    logging.info("wrote {}".format(path))
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_reports(path, reports):
    """FixedPointReport list as JSON: {"slabs": [...]}."""
    return write_json(path, {'slabs': [report.to_dict() for report in reports]})


def write_terms(directory, grid, terms, t=0.0):
    """Nonlinear term dump: face vectors as FSIB files, the rest as CSV."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, value in terms.items():
        value = np.asarray(value, dtype=float)
        if value.shape == (grid.nfaces,):
            fluid = FluidState.from_vector(grid, value, None, t)
            paths.append(write_snapshot(os.path.join(directory, 'term_{}.fsib'.format(name)), grid, fluid))
        else:
            path = os.path.join(directory, 'term_{}.csv'.format(name))
            np.savetxt(path, np.atleast_2d(value), delimiter=',')
            paths.append(path)
    return paths
