# Default values for every configuration table, plus the constants shared by
# the file formats and the CLI. Loaded config tables are merged on top of copies
# of these dictionaries (see config.py).

PHYSICAL = {
    'nu':                         0.05,   # kinematic viscosity
    'alpha':                      1.0,    # bending stiffness
    'beta':                       0.5,    # tension
    'gamma':                      0.1,    # structural damping
    'length':                     1.0,    # channel / beam length L
}

GEOMETRY = {
    'mode':                       'rect', # rect | graph
    'eta0':                       {'kind': 'zero'},
    'eta1':                       {'kind': 'zero'},
    'eta2':                       {'kind': 'zero'},
    'u0':                         {'kind': 'zero'},
    'allow_rect_comparison':      False,
    'lift_cutoff':                0.5,    # width of the stream-function cutoff layer
}

DISCRETIZATION = {
    'nx':                         32,
    'nz':                         32,
    'dt':                         1.0e-2,
    'beam_scheme':                'euler', # euler | crank_nicolson
}

PICARD = {
    'radius':                     None,   # None -> 2 x norm of the homogeneous solution
    'mu':                         None,   # None -> ||(1+eta0)^-1||_inf
    'horizon':                    0.16,
    'horizon_floor':              None,   # None -> horizon / 2**6
    'kappa_target':               0.5,
    'tol':                        1.0e-8,
    'max_iter':                   30,
    'solver_tol':                 1.0e-10,
    'norm_weights':               [1.0, 1.0, 1.0, 1.0, 1.0],
}

OUTPUT = {
    'directory':                  'fsi_out',
    'snapshot_every':             1,      # in slabs
    'formats':                    ['fsib', 'csv', 'json'],
    'total_horizon':              0.16,
}

TABLES = {
    'physical':                   PHYSICAL,
    'geometry':                   GEOMETRY,
    'discretization':             DISCRETIZATION,
    'picard':                     PICARD,
    'output':                     OUTPUT,
}

EXIT_CODES = {
    'ok':                         0,
    'collision':                  2,
    'horizon_floor':              3,
    'solver':                     4,
    'config':                     5,
}

SNAPSHOT_MAGIC = b'FSIB'
SNAPSHOT_VERSION = 1

BEAM_CSV_COLUMNS = ['t', 'x', 'eta', 'eta_t']
ENERGY_CSV_COLUMNS = ['t', 'kinetic_fluid', 'kinetic_beam', 'potential_beam',
                      'dissipation', 'boundary_power', 'total']

# sparse direct factorizations up to this many cells, Krylov above
DIRECT_SOLVER_MAX_CELLS = 128 * 128

# dense oracles refuse grids larger than this (per direction)
ORACLE_MAX_CELLS = 32

BENCH_SUITES = ['contraction', 'graph_vs_rect', 'small_data', 'refinement']
