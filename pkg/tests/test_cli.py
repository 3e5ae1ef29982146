import os
import tempfile
import unittest

import numpy as np

from fsibeam import FSIBeam, fsi_vars
from fsibeam.config import load_config
from fsibeam.fsi_cli import build_parser, main
from fsibeam.snapshot import read_csv, read_json, read_snapshot

CASE = """
[discretization]
nx = 8
nz = 8

[geometry]
eta2 = {kind = "bump", amplitude = 0.05}

[picard]
horizon = 0.02

[output]
total_horizon = 0.04
"""


class TestParser(unittest.TestCase):
    def test_commands(self):
        parser = build_parser()
        args = parser.parse_args(['--debug', 'run', '--config', 'case.toml', '--dump-terms'])
        self.assertTrue(args.debug)
        self.assertTrue(args.dump_terms)
        args = parser.parse_args(['verify', '--levels', '8', '16'])
        self.assertEqual(args.levels, [8, 16])
        with self.assertRaises(SystemExit):
            parser.parse_args(['bench', 'unknown'])


class TestCommands(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config = os.path.join(self.tmp.name, 'case.toml')
        with open(self.config, 'w') as fh:
            fh.write(CASE)

    def test_run_restart_and_plot(self):
        out = os.path.join(self.tmp.name, 'run')
        self.assertEqual(main(['run', '--config', self.config, '--out', out, '--dump-terms']), 0)
        for name in ('config_echo.toml', 'beam.csv', 'energy.csv', 'report.json',
                     'snapshot_0000.fsib', 'snapshot_0001.fsib', 'snapshot_final.fsib'):
            self.assertTrue(os.path.exists(os.path.join(out, name)), name)
        self.assertTrue(os.listdir(os.path.join(out, 'terms')))
        report = read_json(os.path.join(out, 'report.json'))
        self.assertEqual([slab['status'] for slab in report['slabs']], ['converged', 'converged'])
        energy = read_csv(os.path.join(out, 'energy.csv'))
        np.testing.assert_allclose(energy['t'], [0.0, 0.01, 0.02, 0.03, 0.04], atol=1e-12)
        self.assertAlmostEqual(read_snapshot(os.path.join(out, 'snapshot_final.fsib'))['t'], 0.04)

        again = os.path.join(self.tmp.name, 'restart')
        snapshot = os.path.join(out, 'snapshot_0001.fsib')
        self.assertEqual(main(['restart', snapshot, '--config', self.config, '--out', again]), 0)
        report = read_json(os.path.join(again, 'report.json'))
        self.assertEqual(len(report['slabs']), 1)
        final = read_snapshot(os.path.join(again, 'snapshot_final.fsib'))
        np.testing.assert_array_equal(final['beam'].eta,
                                      read_snapshot(os.path.join(out, 'snapshot_final.fsib'))['beam'].eta)

        figures = os.path.join(self.tmp.name, 'figures')
        self.assertEqual(main(['plot', out, '--out', figures]), 0)
        self.assertIn('energy.svg', os.listdir(figures))

    def test_config_error_exit_code(self):
        with open(self.config, 'a') as fh:
            fh.write("\n[physical]\nnu = -1.0\n")
        self.assertEqual(main(['run', '--config', self.config, '--out', self.tmp.name]),
                         fsi_vars.EXIT_CODES['config'])

    def test_collision_exit_code(self):
        pinch = CASE.replace('eta2 = {kind = "bump", amplitude = 0.05}',
                             'eta1 = {kind = "bump", amplitude = -0.45}\n'
                             'eta2 = {kind = "bump", amplitude = -50.0}')
        with open(self.config, 'w') as fh:
            fh.write(pinch)
        out = os.path.join(self.tmp.name, 'pinch')
        self.assertEqual(main(['run', '--config', self.config, '--out', out]), fsi_vars.EXIT_CODES['collision'])
        report = read_json(os.path.join(out, 'report.json'))
        self.assertEqual(report['slabs'][-1]['status'], 'collision')

    def test_restart_grid_mismatch(self):
        out = os.path.join(self.tmp.name, 'run')
        self.assertEqual(main(['run', '--config', self.config, '--out', out]), 0)
        other = os.path.join(self.tmp.name, 'other.toml')
        with open(other, 'w') as fh:
            fh.write(CASE.replace('nx = 8', 'nx = 16'))
        code = main(['restart', os.path.join(out, 'snapshot_0000.fsib'), '--config', other,
                     '--out', os.path.join(self.tmp.name, 'again')])
        self.assertEqual(code, fsi_vars.EXIT_CODES['solver'])

    @unittest.skipUnless(os.environ.get('FSI_SLOW'), "set FSI_SLOW=1 to run the verification suite")
    def test_verify(self):
        out = os.path.join(self.tmp.name, 'verify')
        self.assertEqual(main(['verify', '--levels', '16', '32', '64', '--out', out]), 0)
        rows = read_json(os.path.join(out, 'verify.json'))['rows']
        self.assertEqual(len(rows), 8)
        for row in rows:
            self.assertTrue(row['passed'], row)


class TestFacade(unittest.TestCase):
    def test_context_manager(self):
        cfg = load_config(text=CASE)
        with FSIBeam(cfg, logfilename=None) as solver:
            self.assertEqual(solver.EXIT_CODES['ok'], 0)
            energy = solver.energy()
            self.assertEqual(set(energy), set(fsi_vars.ENERGY_CSV_COLUMNS))
            solver.step()
            self.assertAlmostEqual(solver.state.t, 0.01)
            history = solver.partitioned_step()
            self.assertGreaterEqual(len(history), 1)
            self.assertAlmostEqual(solver.state.t, 0.02)
            trajectory, reports = solver.run(0.02)
            self.assertEqual(reports[-1].status, 'converged')
            self.assertAlmostEqual(solver.state.t, 0.04)
        self.assertIsNone(solver.system)


if __name__ == '__main__':
    unittest.main()
