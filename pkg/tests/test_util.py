import csv
import shutil
import tempfile
from unittest import TestCase

import numpy as np

from mecjoint.csv_io import CSV_HEADER, mabla_diagnostics_path, write_mabla_diagnostics
from mecjoint.mabla import ARM_JT, ARM_ST, ConvergenceDiagnostics
from mecjoint.util import DIAGNOSTICS_COLUMNS, dataframe_from_dir, dataframe_from_rows, \
    diagnostics_dataframe_from_dir, report_from_dir, slope_confidence_interval, summary_dataframe


class UtilTestCase(TestCase):
    """
    """


    def test_dataframe_from_rows(self):
        with open('tests/metrics-lru.csv') as csv_fp:
            rows = list(csv.reader(csv_fp))
        metrics_df = dataframe_from_rows(rows)
        self.assertEqual(CSV_HEADER, list(metrics_df.columns))
        self.assertEqual(6, len(metrics_df))
        self.assertEqual(4.0, metrics_df['total_delay_s'][0])
        self.assertEqual('LRU-JT', metrics_df['algorithm'][0])


    def test_summary_dataframe(self):
        with tempfile.TemporaryDirectory() as results_dir:
            shutil.copy('tests/metrics-lru.csv', results_dir)
            shutil.copy('tests/metrics-marl.csv', results_dir)
            metrics_df = dataframe_from_dir(results_dir)
        self.assertEqual(9, len(metrics_df))
        self.assertEqual(['LRU-JT'] * 6 + ['MARL-JT'] * 3, metrics_df['algorithm'].tolist())

        # final window of 2: seed 0 -> (5 + 3) / 2 = 4, seed 1 -> (6 + 8) / 2 = 7
        summary_df = summary_dataframe(metrics_df, final_window=2)
        self.assertEqual(['LRU-JT', 'MARL-JT'], summary_df['algorithm'].tolist())
        lru_row = summary_df.iloc[0]
        self.assertEqual(2, lru_row['num_seeds'])
        self.assertAlmostEqual(5.5, lru_row['final_mean_delay_s'])
        self.assertAlmostEqual(4.75, lru_row['q25_delay_s'])
        self.assertAlmostEqual(6.25, lru_row['q75_delay_s'])
        self.assertAlmostEqual(1.5, lru_row['iqr_delay_s'])
        self.assertAlmostEqual(4.0, summary_df.iloc[1]['final_mean_delay_s'])

        self.assertTrue(summary_dataframe(metrics_df.iloc[0:0]).empty)


    def test_slope_confidence_interval(self):
        iterations = np.arange(10)
        slope, ci_low, ci_high = slope_confidence_interval(iterations, 2 * iterations + 1)
        self.assertAlmostEqual(2, slope)
        self.assertAlmostEqual(2, ci_low)
        self.assertAlmostEqual(2, ci_high)

        # flat curve with alternating noise
        slope, ci_low, ci_high = slope_confidence_interval(np.arange(200), 5 + (-1.0) ** np.arange(200))
        self.assertTrue(ci_low <= 0 <= ci_high)
        self.assertTrue(ci_low <= slope <= ci_high)

        self.assertTrue(all(np.isnan(value) for value in slope_confidence_interval([0, 1], [1, 2])))


    def test_report_from_dir(self):
        with tempfile.TemporaryDirectory() as results_dir:
            shutil.copy('tests/metrics-marl.csv', results_dir)
            summary_df, slope_df = report_from_dir(results_dir)
        self.assertEqual(['MARL-JT'], summary_df['algorithm'].tolist())
        self.assertAlmostEqual(5.0, summary_df.iloc[0]['final_mean_delay_s'])
        self.assertAlmostEqual(-2.0, slope_df.iloc[0]['slope'])
        self.assertFalse(slope_df.iloc[0]['contains_zero'])

        with tempfile.TemporaryDirectory() as results_dir:
            summary_df, slope_df = report_from_dir(results_dir)
        self.assertTrue(summary_df.empty)
        self.assertTrue(slope_df.empty)


    def test_diagnostics_dataframe_from_dir(self):
        with tempfile.TemporaryDirectory() as results_dir:
            shutil.copy('tests/metrics-lru.csv', results_dir)
            for seed, optimal_arms in [(1, {0: ARM_JT, 4: ARM_JT}), (0, {4: ARM_ST})]:
                diagnostics = ConvergenceDiagnostics({user: (0.5, 0.5) for user in optimal_arms}, optimal_arms, 0.75,
                                                     {user: 0.5 for user in optimal_arms}, 0.5, 0.1)
                write_mabla_diagnostics(mabla_diagnostics_path(results_dir, 'MARL-MABLA', seed), 'MARL-MABLA', seed,
                                        diagnostics)
            diagnostics_df = diagnostics_dataframe_from_dir(results_dir)
            metrics_df = dataframe_from_dir(results_dir)  # the JSON files are not read as metrics
        self.assertEqual(DIAGNOSTICS_COLUMNS, list(diagnostics_df.columns))
        self.assertEqual([0, 1], diagnostics_df['seed'].tolist())
        self.assertEqual([1, 2], diagnostics_df['num_users'].tolist())
        self.assertEqual([0, 2], diagnostics_df['num_jt_users'].tolist())
        self.assertEqual(['LRU-JT'] * 6, metrics_df['algorithm'].tolist())

        with tempfile.TemporaryDirectory() as results_dir:
            self.assertTrue(diagnostics_dataframe_from_dir(results_dir).empty)
