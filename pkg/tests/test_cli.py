import os
import shutil
import tempfile
from unittest import TestCase

from click.testing import CliRunner

from cli.mecjoint_app import cli
from mecjoint.csv_io import mabla_diagnostics_path, metrics_csv_path, write_mabla_diagnostics
from mecjoint.mabla import ARM_JT, ConvergenceDiagnostics


class CliTestCase(TestCase):
    """
    """


    def test_run(self):
        with tempfile.TemporaryDirectory() as output_dir:
            result = CliRunner().invoke(cli, ['--log-level', 'WARNING', 'run', '--config', 'tests/config-tiny.json',
                                              '--seed', '1', '--out', output_dir])
            self.assertEqual(0, result.exit_code, result.output)
            self.assertIn('algorithm=MARL-MABLA, num_rows=2', result.output)
            self.assertTrue(os.path.exists(metrics_csv_path(output_dir, 'MARL-MABLA', 1)))
            self.assertTrue(os.path.exists(mabla_diagnostics_path(output_dir, 'MARL-MABLA', 1)))
            self.assertIn('* automata. p_optimal=', result.output)


    def test_report(self):
        with tempfile.TemporaryDirectory() as results_dir:
            shutil.copy('tests/metrics-lru.csv', results_dir)
            result = CliRunner().invoke(cli, ['report', '--in', results_dir, '--window', '2'])
        self.assertEqual(0, result.exit_code, result.output)
        self.assertIn('LRU-JT', result.output)
        self.assertIn('contains_zero', result.output)


    def test_report_diagnostics(self):
        diagnostics = ConvergenceDiagnostics({3: (0.2, 0.9)}, {3: ARM_JT}, 0.8, {3: 0.95}, 0.95, 0.05)
        with tempfile.TemporaryDirectory() as results_dir:
            shutil.copy('tests/metrics-lru.csv', results_dir)
            write_mabla_diagnostics(mabla_diagnostics_path(results_dir, 'MARL-MABLA', 0), 'MARL-MABLA', 0, diagnostics)
            result = CliRunner().invoke(cli, ['report', '--in', results_dir, '--window', '2'])
        self.assertEqual(0, result.exit_code, result.output)
        self.assertIn('num_jt_users', result.output)
        self.assertIn('MARL-MABLA', result.output)


    def test_bad_config(self):
        with tempfile.TemporaryDirectory() as config_dir:
            config_path = os.path.join(config_dir, 'config.json')
            with open(config_path, 'w') as fp:
                fp.write('{"bogus": 1}')
            result = CliRunner().invoke(cli, ['run', '--config', config_path])
        self.assertNotEqual(0, result.exit_code)
        self.assertIn('unknown config key', str(result.exception))
