import math
import os
import tempfile
import unittest

from fsibeam import bench, fsi_vars
from fsibeam.errors import ConfigError

TINY = {'discretization': {'nx': 8, 'nz': 8}, 'picard': {'horizon': 0.02}, 'output': {'total_horizon': 0.02}}


class TestKappa(unittest.TestCase):
    def test_ignores_round_off(self):
        self.assertAlmostEqual(bench.measured_kappa([1.0, 0.5, 0.1, 1e-14, 1e-15]), 0.5)

    def test_single_residual(self):
        self.assertTrue(math.isnan(bench.measured_kappa([1.0])))


class TestSuites(unittest.TestCase):
    def test_task_counts(self):
        counts = {suite: len(bench.suite_tasks(suite)) for suite in fsi_vars.BENCH_SUITES}
        self.assertEqual(counts, {'contraction': 4, 'graph_vs_rect': 8, 'small_data': 4, 'refinement': 3})

    def test_horizons_respect_dt(self):
        tasks = bench.suite_tasks('contraction', TINY)
        self.assertEqual([task[-1] for task in tasks], [0.02, 0.01])

    def test_unknown_suite(self):
        with self.assertRaises(ConfigError):
            bench.suite_tasks('speed')

    def test_summaries(self):
        rows = [{'kappa': 0.1}, {'kappa': 0.2}]
        self.assertFalse(bench.summarize('contraction', rows)['kappa_monotone'])
        self.assertTrue(bench.summarize('contraction', rows[::-1])['kappa_monotone'])
        rows = [{'completed': False}, {'completed': True}, {'completed': True}]
        self.assertEqual(bench.summarize('small_data', rows)['threshold_index'], 1)
        pairs = [{'kappa': 0.1, 'status': 'converged'}, {'kappa': 0.3}]
        self.assertTrue(bench.summarize('graph_vs_rect', pairs)['graph_not_worse'])


class TestScenarios(unittest.TestCase):
    def test_invalid_overrides_are_reported(self):
        row = bench.run_scenario(('contraction', 'bad', TINY, {'physical': {'nu': 0.0}}, 0.02))
        self.assertEqual(row['status'], 'error')

    def test_run_suite_writes_files(self):
        with tempfile.TemporaryDirectory() as directory:
            rows, summary = bench.run_suite('contraction', directory, TINY)
            self.assertTrue(os.path.exists(os.path.join(directory, 'bench_contraction.json')))
            self.assertTrue(os.path.exists(os.path.join(directory, 'bench_contraction.csv')))
        self.assertEqual(len(rows), 2)
        self.assertIn('kappa_monotone', summary)
        for row in rows:
            self.assertIn(row['status'], ('converged', 'halved-to-floor', 'collision'))
            self.assertEqual(row['cells'], 64)


@unittest.skipUnless(os.environ.get('FSI_SLOW'), "set FSI_SLOW=1 for the benchmark sweeps")
class TestMeasuredSweeps(unittest.TestCase):
    SMALL = {'discretization': {'nx': 16, 'nz': 16, 'dt': 0.01}, 'picard': {'horizon': 0.08}}

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_kappa_shrinks_with_the_slab(self):
        rows, summary = bench.run_suite('contraction', self.tmp.name, self.SMALL)
        self.assertEqual([row['horizon'] for row in rows], [0.08, 0.04, 0.02, 0.01])
        kappas = [row['kappa'] for row in rows]
        self.assertTrue(all(math.isfinite(k) for k in kappas), rows)
        for longer, shorter in zip(kappas[:-1], kappas[1:]):
            self.assertLessEqual(shorter, 1.05 * longer)
        self.assertTrue(summary['kappa_monotone'])
        self.assertEqual(rows[-1]['status'], 'converged')
        self.assertLess(kappas[-1], 0.5)

    def test_graph_reference_contracts_better(self):
        rows, summary = bench.run_suite('graph_vs_rect', self.tmp.name, self.SMALL)
        for graph, rect in zip(rows[0::2], rows[1::2]):
            self.assertLessEqual(graph['kappa'], rect.get('kappa', float('inf')), (graph, rect))
        self.assertTrue(summary['graph_not_worse'])
        self.assertTrue(summary['graph_converged'])

    def test_small_data_threshold(self):
        tables = {'discretization': {'nx': 16, 'nz': 16, 'dt': 0.02}, 'picard': {'horizon': 0.16}}
        rows, summary = bench.run_suite('small_data', self.tmp.name, tables)
        index = summary['threshold_index']
        self.assertIsNotNone(index, rows)
        self.assertTrue(all(row['completed'] for row in rows[index:]), rows)
        self.assertAlmostEqual(rows[-1]['reached'], 1.0)


if __name__ == '__main__':
    unittest.main()
