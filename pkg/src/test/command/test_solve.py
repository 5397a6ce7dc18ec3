import csv
import json
import os
import tempfile
import unittest

from click.testing import CliRunner

from src.main.helper import FEASIBLE, INPUT_ERROR, NO_FEASIBLE_POINT
from src.main.model.solution import check_document
from src.main.run import create_app

MIXED = {
    'P': [[2.0, 0.0], [0.0, 2.0]],
    'q': [-1.0, -3.0],
    'A': [[1.0, 1.0]],
    'b': [1.5],
    'sets': [{'type': 'finite', 'values': [0, 1]}, {'type': 'reals'}],
}

INFEASIBLE = {
    'P': [[1.0]],
    'q': [0.0],
    'A': [[1.0]],
    'b': [2.0],
    'sets': [{'type': 'interval', 'lo': 0, 'hi': 1}],
}


class SolveCommandTestCase(unittest.TestCase):
    """This class represents the solve command test case"""

    def setUp(self):
        self.app = create_app()
        self.runner = CliRunner(mix_stderr=False)
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, data):
        path = os.path.join(self.tmp.name, name)
        with open(path, 'w') as fh:
            fh.write(data if isinstance(data, str) else json.dumps(data))
        return path

    def test_feasible(self):
        """Test to solve a mixed-Boolean problem and print the solution JSON"""
        path = self.write('mixed.json', MIXED)
        result = self.runner.invoke(self.app, ['solve', path, '--polish', '--polish-tol', '1e-8'])
        self.assertEqual(result.exit_code, FEASIBLE, result.stderr)
        data = check_document(json.loads(result.stdout))
        self.assertEqual(data['status'], 'feasible')
        self.assertEqual(data['restarts'], 10)
        self.assertEqual(data['iterations'], 2000)
        self.assertEqual(data['factorizations'], 1)
        self.assertIsNone(data['wall_ms'])
        self.assertGreaterEqual(data['objective'], -2.25 - 1e-9)

    def test_polish_iterates_flag(self):
        """Test to switch the remainder solve of visited assignments off"""
        path = self.write('mixed.json', MIXED)
        args = ['solve', path, '--restarts', '5', '--seed', '0']
        raw = self.runner.invoke(self.app, args + ['--no-polish-iterates'])
        self.assertEqual(raw.exit_code, NO_FEASIBLE_POINT, raw.stderr)
        polished = self.runner.invoke(self.app, args + ['--polish-iterates'])
        self.assertEqual(polished.exit_code, FEASIBLE, polished.stderr)
        self.assertAlmostEqual(json.loads(polished.stdout)['objective'], -2.25, places=9)

    def test_no_feasible_point(self):
        """Test to exit with code 2 when no restart meets the tolerance"""
        path = self.write('infeasible.json', INFEASIBLE)
        result = self.runner.invoke(self.app, ['solve', path, '--iters', '20', '--restarts', '2'])
        self.assertEqual(result.exit_code, NO_FEASIBLE_POINT)
        data = json.loads(result.stdout)
        self.assertEqual(data['status'], 'no_feasible_point')
        self.assertIsNone(data['x'])
        self.assertIsNone(data['objective'])

    def test_deterministic(self):
        """Test that repeated runs print identical JSON"""
        path = self.write('mixed.json', MIXED)
        args = ['solve', path, '--seed', '3', '--restarts', '4', '--threads', '2']
        first = self.runner.invoke(self.app, args)
        second = self.runner.invoke(self.app, args)
        self.assertEqual(first.exit_code, FEASIBLE)
        self.assertEqual(first.stdout, second.stdout)

    def test_preset_and_overrides(self):
        """Test to apply a preset with command-line overrides"""
        path = self.write('mixed.json', MIXED)
        result = self.runner.invoke(self.app, ['solve', path, '--preset', 'miqp', '--iters', '30',
                                               '--restarts', '3', '--timing'])
        data = json.loads(result.stdout)
        self.assertEqual(data['iterations'], 90)
        self.assertEqual(data['restarts'], 3)
        self.assertGreaterEqual(data['wall_ms'], 0.0)

    def test_trace(self):
        """Test to write one trace row per iteration and restart"""
        path = self.write('mixed.json', MIXED)
        trace = os.path.join(self.tmp.name, 'trace.csv')
        result = self.runner.invoke(self.app, ['solve', path, '--iters', '15', '--restarts', '2',
                                               '--trace', trace])
        self.assertEqual(result.exit_code, FEASIBLE)
        with open(trace) as fh:
            rows = list(csv.DictReader(fh))
        self.assertEqual(len(rows), 30)
        self.assertEqual({row['restart'] for row in rows}, {'0', '1'})

    def test_invalid_problem(self):
        """Test to reject a problem whose P is not PSD"""
        data = dict(MIXED, P=[[1.0, 0.0], [0.0, -1.0]])
        result = self.runner.invoke(self.app, ['solve', self.write('bad.json', data)])
        self.assertEqual(result.exit_code, INPUT_ERROR)
        self.assertIn('not PSD', json.loads(result.stderr)['error'])

    def test_malformed_input(self):
        """Test to reject unreadable and schema-breaking files"""
        for data in ('{not json', {'P': [[1.0]], 'q': [0.0], 'sets': [{'type': 'circle'}]}):
            result = self.runner.invoke(self.app, ['solve', self.write('bad.json', data)])
            self.assertEqual(result.exit_code, INPUT_ERROR)
            self.assertIn('error', json.loads(result.stderr))
        missing = self.runner.invoke(self.app, ['solve', os.path.join(self.tmp.name, 'missing.json')])
        self.assertEqual(missing.exit_code, INPUT_ERROR)

    def test_usage_error(self):
        """Test that usage errors exit with the input-error code"""
        path = self.write('mixed.json', MIXED)
        result = self.runner.invoke(self.app, ['solve', path, '--precondition', 'ruiz'])
        self.assertEqual(result.exit_code, INPUT_ERROR)
        result = self.runner.invoke(self.app, ['solve', path, '--rho', '-1'])
        self.assertEqual(result.exit_code, INPUT_ERROR)


if __name__ == '__main__':
    unittest.main()
