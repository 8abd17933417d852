import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

import main
from src.conic import dump_program
from src import figures
from src.figures import rows_to_csv
from src.linalg import maximally_entangled
from src.matrix_io import dump_operator, load_operator, parse_matrix
from src.types import HermitianOperator, SandwichReport
from test_conic import top_eigenvalue_program


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main.main(list(argv))
    return code, out.getvalue()


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_matrix(self, name, matrix, dims=()):
        path = self.path(name)
        dump_operator(HermitianOperator(np.asarray(matrix, dtype=complex), dims), path)
        return path

    def test_sym_blocks(self):
        code, out = run_cli('sym', 'blocks', '--d', '2', '--m', '2')
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertEqual(sorted(b['size'] for b in payload['blocks']), [1, 3])
        self.assertEqual(payload['certificate'], 10)
        self.assertEqual(payload['orbit_count'], 10)

    def test_usage_errors(self):
        self.assertEqual(run_cli('frobnicate')[0], main.EXIT_USAGE)
        self.assertEqual(run_cli('div', '--kind', 'umegaki')[0], main.EXIT_USAGE)
        self.assertEqual(run_cli('sym', 'blocks', '--d', 'two', '--m', '2')[0], main.EXIT_USAGE)

    def test_domain_errors(self):
        self.assertEqual(run_cli('--tol', '1', 'sym', 'blocks', '--d', '2', '--m', '2')[0],
                         main.EXIT_DOMAIN)
        self.assertEqual(run_cli('sandwich', '--application', 'rains')[0], main.EXIT_DOMAIN)
        missing = self.path('missing.json')
        self.assertEqual(run_cli('div', '--kind', 'min', '--rho', missing, '--sigma', missing)[0],
                         main.EXIT_DOMAIN)
        self.assertEqual(run_cli('--threads', '0', 'sym', 'blocks', '--d', '2', '--m', '2')[0],
                         main.EXIT_DOMAIN)

    def test_divergence(self):
        rho = self.write_matrix('rho.json', np.diag([0.5, 0.5]))
        sigma = self.write_matrix('sigma.json', np.diag([0.25, 0.75]))
        code, out = run_cli('div', '--kind', 'max', '--rho', rho, '--sigma', sigma)
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)['value'], 1.0, places=8)

    def test_infinite_divergence(self):
        rho = self.write_matrix('rho.json', np.diag([1.0, 0.0]))
        sigma = self.write_matrix('sigma.json', np.diag([0.0, 1.0]))
        code, out = run_cli('div', '--kind', 'max', '--rho', rho, '--sigma', sigma)
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['value'], 'inf')

    def test_solve_program(self):
        path = self.path('program.json')
        dump_program(top_eigenvalue_program(np.diag([0.25, 0.75])), path)
        code, out = run_cli('solve', '--program', path)
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertEqual(payload['status'], 'optimal')
        self.assertAlmostEqual(payload['value'], 0.75, places=6)

    def test_set_probe(self):
        witness = self.write_matrix('phi.json', maximally_entangled(2).entries, (2, 2))
        code, out = run_cli('set', 'probe', '--name', 'rains', '--witness', witness)
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertAlmostEqual(payload['h'], 0.5, places=5)
        self.assertTrue(payload['polar_member'])

    def write_json(self, name, payload):
        path = self.path(name)
        with open(path, 'w') as f:
            json.dump(payload, f)
        return path

    def test_divergence_from_matrix_files(self):
        rho = self.write_json('rho.json', {'dim': 2, 'subsystems': [2], 're': [[1, 0], [0, 0]]})
        sigma = self.write_json('sigma.json',
                                {'dim': 2, 'subsystems': [2], 're': [[0.5, 0], [0, 0.5]]})
        code, out = run_cli('div', '--kind', 'umegaki', '--rho', rho, '--sigma', sigma)
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)['value'], 1.0, places=5)

    def test_malformed_matrix_file(self):
        rho = self.write_json('rho.json', {'dim': 2, 'subsystems': [3], 're': [[1, 0], [0, 0]]})
        code, _ = run_cli('div', '--kind', 'max', '--rho', rho, '--sigma', rho)
        self.assertEqual(code, main.EXIT_DOMAIN)

    def test_global_options_after_subcommand(self):
        path = self.path('program.json')
        dump_program(top_eigenvalue_program(np.diag([0.25, 0.75])), path)
        code, out = run_cli('solve', '--program', path, '--tol', '1e-6')
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['config']['tol'], 1e-6)
        code, out = run_cli('sym', 'blocks', '--d', '2', '--m', '2', '--seed', '1',
                            '--threads', '2', '--log-level', 'ERROR')
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['config']['seed'], 1)

    def test_global_options_before_subcommand(self):
        code, out = run_cli('--seed', '3', '--log-level', 'ERROR', 'sym', 'blocks', '--d', '2',
                            '--m', '2')
        self.assertEqual(code, 0)
        config = json.loads(out)['config']
        self.assertEqual(config['seed'], 3)
        self.assertEqual(config['tol'], 1e-7)

    def test_output_carries_config(self):
        code, out = run_cli('sym', 'blocks', '--d', '2', '--m', '2')
        self.assertEqual(code, 0)
        config = json.loads(out)['config']
        self.assertEqual(config['subcommand'], 'sym')
        self.assertEqual(config['seed'], 0)
        self.assertEqual(config['format'], 'json')
        self.assertIsNone(config['samples'])

    def test_figure_one_sample_grid(self):
        grid = [0.01, 0.04, 0.07, 0.1]
        report = SandwichReport(level=1, lower=0.1, upper=0.2, gap_bound=0.0, d=3)
        with mock.patch('src.figures.adc_bounds', return_value=report):
            code, out = run_cli('fig', '1', '--out', self.tmp.name, '--samples', '4')
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['rows'], 4)
        with open(json.loads(out)['path']) as f:
            rows = [line for line in f.read().splitlines() if not line.startswith('#')]
        p_values = [float(line.split(',')[0]) for line in rows[1:]]
        np.testing.assert_allclose(p_values, grid, atol=1e-12)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_figure_csv(self):
        code, out = run_cli('fig', '2a', '--out', self.tmp.name, '--samples', '5')
        self.assertEqual(code, 0)
        with open(json.loads(out)['path']) as f:
            lines = [line for line in f.read().splitlines() if not line.startswith('#')]
        self.assertEqual(len(lines), 6)


class TestMatrixFiles(unittest.TestCase):
    def test_parse_matrix(self):
        parsed = parse_matrix({'dim': 2, 'subsystems': [2], 're': [[1, 0], [0, 0]],
                               'im': [[0, 1], [-1, 0]]})
        self.assertEqual(parsed['matrix'][0, 1], 1j)
        self.assertEqual(parsed['dims'], ())
        parsed = parse_matrix({'dim': 4, 'subsystems': [2, 2], 're': np.eye(4).tolist()})
        self.assertEqual(parsed['dims'], (2, 2))
        self.assertFalse(np.any(parsed['matrix'].imag))

    def test_parse_errors(self):
        with self.assertRaises(ValueError):
            parse_matrix([[1.0]])
        with self.assertRaises(ValueError):
            parse_matrix({'dim': 1, 'subsystems': [1]})
        with self.assertRaises(ValueError):
            parse_matrix({'dim': 4, 'subsystems': [2, 3], 're': np.eye(4).tolist()})
        with self.assertRaises(ValueError):
            parse_matrix({'dim': 2, 'subsystems': [2], 're': [[1.0, 0.0]]})
        with self.assertRaises(ValueError):
            parse_matrix({'dim': 2, 'subsystems': [2], 're': np.eye(2).tolist(), 'im': [[0.0]]})
        with self.assertRaises(ValueError):
            parse_matrix({'dim': 0, 'subsystems': [], 're': []})

    def test_dump_writes_documented_keys(self):
        op = HermitianOperator(np.array([[0.5, 0.5j], [-0.5j, 0.5]]))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'op.json')
            dump_operator(op, path)
            with open(path) as f:
                data = json.load(f)
            loaded = load_operator(path)
        self.assertEqual(sorted(data), ['dim', 'im', 're', 'subsystems'])
        self.assertEqual(data['subsystems'], [2])
        np.testing.assert_allclose(loaded.entries, op.entries)

    def test_dump_and_load(self):
        op = HermitianOperator(maximally_entangled(2).entries, (2, 2))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'op.json')
            dump_operator(op, path)
            loaded = load_operator(path)
        self.assertEqual(loaded.subsystem_dims, (2, 2))
        np.testing.assert_allclose(loaded.entries, op.entries)


class TestFigureRows(unittest.TestCase):
    def test_improvement_fraction(self):
        d_m_values = iter([0.2, 0.0, 1e-7, 0.05])
        with mock.patch('src.figures.d_m_pptk', side_effect=lambda *a: next(d_m_values)), \
                mock.patch('src.figures.e_wd1', return_value=0.0), \
                mock.patch('src.figures.e_wd2', return_value=0.0):
            rows = figures.fig3(samples=4, ranks=[9])
        self.assertEqual(len(rows), 1)
        row = rows[0]
        self.assertEqual(row['samples'], 4)
        self.assertAlmostEqual(row['improvement_fraction'], 0.5)
        self.assertAlmostEqual(row['D_M(rho||PPT2)'], (0.2 + 1e-7 + 0.05) / 4)
        self.assertEqual(row['E_LR'], 0.0)

    def test_improvement_fraction_per_rank(self):
        with mock.patch('src.figures.d_m_pptk', return_value=0.0), \
                mock.patch('src.figures.e_wd1', return_value=0.0), \
                mock.patch('src.figures.e_wd2', return_value=0.0):
            rows = figures.fig3(samples=2, ranks=[2, 3])
        self.assertEqual([row['rank'] for row in rows], [2, 3])
        self.assertEqual([row['improvement_fraction'] for row in rows], [0.0, 0.0])
        self.assertEqual(rows[0]['E_LR'], '')


class TestCsvOutput(unittest.TestCase):
    def test_header_and_rows(self):
        text = rows_to_csv([{'p': 0.5, 'upper': float('inf')}], {'tol': 1e-7, 'seed': 0})
        lines = text.splitlines()
        self.assertEqual(lines[0], '# regent 0.1.0')
        self.assertEqual(lines[1:3], ['# seed=0', '# tol=1e-07'])
        self.assertEqual(lines[3], 'p,upper')
        self.assertEqual(lines[4], '0.5,inf')

    def test_empty_rows(self):
        self.assertEqual(rows_to_csv([], {}), '# regent 0.1.0\n')


if __name__ == '__main__':
    unittest.main()
