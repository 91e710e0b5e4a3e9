import math
import os
import tempfile
from unittest import TestCase

from mecjoint.csv_io import CSV_HEADER, MetricsCsvWriter, MetricsRow, csv_row_from_metrics_row, \
    mabla_diagnostics_path, metrics_csv_path, metrics_row_from_csv_row, read_mabla_diagnostics, read_metrics_csv, \
    truncate_metrics_csv, validate_metrics_row, write_mabla_diagnostics
from mecjoint.mabla import ARM_JT, ARM_ST, ConvergenceDiagnostics


class CsvIOTestCase(TestCase):
    """
    """


    def test_read_metrics_csv(self):
        with open('tests/metrics-lru.csv') as csv_fp:
            metrics_rows = read_metrics_csv(csv_fp)
        self.assertEqual(6, len(metrics_rows))
        self.assertEqual(MetricsRow(0, 0, 'LRU-JT', 4.0, 1.0, 3.0, 0.5, 1.0, 0.25), metrics_rows[0])
        for metrics_row in metrics_rows:
            self.assertEqual([], validate_metrics_row(metrics_row))


    def test_read_metrics_csv_invalid(self):
        with tempfile.TemporaryFile('w+') as csv_fp:
            csv_fp.write('iteration,seed\n0,0\n')
            csv_fp.seek(0)
            with self.assertRaisesRegex(RuntimeError, 'invalid header'):
                read_metrics_csv(csv_fp)

        with tempfile.TemporaryFile('w+') as csv_fp:
            with self.assertRaisesRegex(RuntimeError, 'empty file'):
                read_metrics_csv(csv_fp)

        with self.assertRaisesRegex(RuntimeError, 'wrong number of columns'):
            metrics_row_from_csv_row(['0', '0', 'LRU-JT'])


    def test_csv_row_from_metrics_row(self):
        metrics_row = MetricsRow(3, 1, 'FIFO-JT', 0.1, 0.05, 0.05, 1, 0, 2.5)
        self.assertEqual(['3', '1', 'FIFO-JT', '0.1', '0.05', '0.05', '1.0', '0.0', '2.5'],
                         csv_row_from_metrics_row(metrics_row))
        self.assertEqual(metrics_row, metrics_row_from_csv_row(csv_row_from_metrics_row(metrics_row)))


    def test_validate_metrics_row(self):
        error_messages = validate_metrics_row(MetricsRow(0, 0, 'LRU-JT', -1.0, 0.0, 0.0, 1.5, 0.5, 0.0))
        self.assertEqual(2, len(error_messages))
        self.assertIn('total_delay_s', error_messages[0])
        self.assertIn('hit_ratio', error_messages[1])


    def test_writer_appends(self):
        with tempfile.TemporaryDirectory() as output_dir:
            csv_path = metrics_csv_path(output_dir, 'LRU-JT', 4)
            self.assertEqual(os.path.join(output_dir, 'LRU-JT-seed4.csv'), csv_path)
            for iteration in range(2):
                with MetricsCsvWriter(csv_path) as csv_writer:
                    csv_writer.write(MetricsRow(iteration, 4, 'LRU-JT', 1.0, 0.5, 0.5, 0.5, 1.0, 2.0))
            with open(csv_path) as csv_fp:
                lines = csv_fp.read().splitlines()
            self.assertEqual([','.join(CSV_HEADER), '0,4,LRU-JT,1.0,0.5,0.5,0.5,1.0,2.0',
                              '1,4,LRU-JT,1.0,0.5,0.5,0.5,1.0,2.0'], lines)


    def test_truncate_metrics_csv(self):
        with tempfile.TemporaryDirectory() as output_dir:
            csv_path = os.path.join(output_dir, 'metrics.csv')
            truncate_metrics_csv(csv_path, 1)  # no file: no-op
            self.assertFalse(os.path.exists(csv_path))
            with MetricsCsvWriter(csv_path) as csv_writer:
                for iteration in range(3):
                    csv_writer.write(MetricsRow(iteration, 0, 'LRU-JT', 1.0, 0.5, 0.5, 0.5, 1.0, 2.0))
            truncate_metrics_csv(csv_path, 1)
            with open(csv_path) as csv_fp:
                self.assertEqual([0], [metrics_row.iteration for metrics_row in read_metrics_csv(csv_fp)])


    def test_mabla_diagnostics_file(self):
        diagnostics = ConvergenceDiagnostics({2: (0.8, 0.25), 5: (0.4, 0.6)}, {2: ARM_ST, 5: ARM_JT}, math.nan,
                                             {2: 0.9, 5: 0.7}, 0.63, 0.01)
        with tempfile.TemporaryDirectory() as output_dir:
            path = mabla_diagnostics_path(output_dir, 'MARL-MABLA', 3)
            self.assertEqual(os.path.join(output_dir, 'MARL-MABLA-seed3-mabla.json'), path)
            write_mabla_diagnostics(path, 'MARL-MABLA', 3, diagnostics)
            diagnostics_dict = read_mabla_diagnostics(path)
            self.assertTrue(math.isnan(diagnostics_dict['optimal_arm_frequency']))
            self.assertEqual(0.63, diagnostics_dict['p_optimal'])
            self.assertEqual([2, 5], [user_dict['user'] for user_dict in diagnostics_dict['users']])
            self.assertEqual(['ST', 'JT'], [user_dict['optimal_arm'] for user_dict in diagnostics_dict['users']])
            self.assertEqual(0.25, diagnostics_dict['users'][0]['posterior_mean_jt'])

            with open(path, 'w') as fp:
                fp.write('{"algorithm": ')
            with self.assertRaisesRegex(RuntimeError, 'invalid diagnostics file'):
                read_mabla_diagnostics(path)
