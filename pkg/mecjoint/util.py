import csv
import glob
import io
import logging
import os

import numpy as np
import pandas as pd
from scipy import stats

from mecjoint.csv_io import CSV_HEADER, csv_row_from_metrics_row, read_mabla_diagnostics


logger = logging.getLogger(__name__)


#
# ---- metrics DataFrame utilities ----
#

DEFAULT_FINAL_WINDOW = 100  # number of final iterations averaged per replica in summaries
SUMMARY_COLUMNS = ['algorithm', 'num_seeds', 'final_mean_delay_s', 'q25_delay_s', 'q75_delay_s', 'iqr_delay_s',
                   'final_hit_ratio', 'final_jt_fraction']


def dataframe_from_rows(rows):
    """
    :param rows: a list of CSV rows including the header, i.e., CSV_HEADER
    :return: a Pandas DataFrame with numeric columns parsed
    """
    string_io = io.StringIO()
    csv_writer = csv.writer(string_io, delimiter=",")
    for row in rows:
        csv_writer.writerow(row)
    string_io.seek(0)
    # algorithm names look like "LRU-JT", which must stay str:
    return pd.read_csv(string_io, delimiter=",", dtype={'algorithm': str})


def dataframe_from_metrics_rows(metrics_rows):
    return dataframe_from_rows([CSV_HEADER] + [csv_row_from_metrics_row(metrics_row) for metrics_row in metrics_rows])


def dataframe_from_dir(results_dir):
    """
    Merges every "*.csv" metrics file in `results_dir` except the summary, sorted by (algorithm, seed, iteration).

    :return: a Pandas DataFrame with CSV_HEADER columns. empty if there are no files
    """
    csv_paths = sorted(path for path in glob.glob(os.path.join(results_dir, '*.csv'))
                       if os.path.basename(path) != 'summary.csv')
    dataframes = [pd.read_csv(path, dtype={'algorithm': str}) for path in csv_paths]
    if not dataframes:
        return pd.DataFrame(columns=CSV_HEADER)

    return pd.concat(dataframes, ignore_index=True) \
        .sort_values(['algorithm', 'seed', 'iteration'], kind='mergesort') \
        .reset_index(drop=True)


def summary_dataframe(metrics_df, final_window=DEFAULT_FINAL_WINDOW):
    """
    Summarizes each algorithm by the mean total delay over each replica's final `final_window` iterations, then takes
    the mean and interquartile range of those per-replica means across seeds.

    :param metrics_df: as returned by dataframe_from_dir()
    :return: a Pandas DataFrame with SUMMARY_COLUMNS, one row per algorithm sorted by algorithm. empty if `metrics_df`
        is empty
    """
    if metrics_df.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)

    final_df = metrics_df.sort_values('iteration', kind='mergesort') \
        .groupby(['algorithm', 'seed'], sort=True) \
        .tail(final_window)
    replica_df = final_df.groupby(['algorithm', 'seed'], sort=True)[['total_delay_s', 'hit_ratio', 'jt_fraction']] \
        .mean() \
        .reset_index()
    rows = []
    for algorithm, algorithm_df in replica_df.groupby('algorithm', sort=True):
        q25, q75 = np.percentile(algorithm_df['total_delay_s'], [25, 75])
        rows.append([algorithm, len(algorithm_df), algorithm_df['total_delay_s'].mean(), q25, q75, q75 - q25,
                     algorithm_df['hit_ratio'].mean(), algorithm_df['jt_fraction'].mean()])
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def slope_confidence_interval(iterations, delays, confidence=0.95):
    """
    Fits delay = intercept + slope * iteration by least squares.

    :return: 3-tuple: (slope, ci_low, ci_high). the CI uses Student's t with n - 2 degrees of freedom. (nan, nan, nan)
        if there are fewer than three points
    """
    iterations = np.asarray(iterations, dtype=float)
    delays = np.asarray(delays, dtype=float)
    if iterations.size < 3:
        return np.nan, np.nan, np.nan

    fit = stats.linregress(iterations, delays)
    half_width = stats.t.ppf((1 + confidence) / 2, iterations.size - 2) * fit.stderr
    return fit.slope, fit.slope - half_width, fit.slope + half_width


def slope_dataframe(metrics_df, confidence=0.95):
    """
    :return: a Pandas DataFrame with one row per algorithm: the slope CI of the across-seed mean delay curve, and
        whether the CI contains 0 (i.e., no detectable trend)
    """
    columns = ['algorithm', 'slope', 'ci_low', 'ci_high', 'contains_zero']
    if metrics_df.empty:
        return pd.DataFrame(columns=columns)

    rows = []
    for algorithm, algorithm_df in metrics_df.groupby('algorithm', sort=True):
        curve = algorithm_df.groupby('iteration', sort=True)['total_delay_s'].mean()
        slope, ci_low, ci_high = slope_confidence_interval(curve.index, curve.values, confidence)
        rows.append([algorithm, slope, ci_low, ci_high, bool(ci_low <= 0 <= ci_high)])
    return pd.DataFrame(rows, columns=columns)


def report_from_dir(results_dir, final_window=DEFAULT_FINAL_WINDOW):
    """
    :return: 2-tuple: (summary_dataframe(), slope_dataframe()) over every metrics file in `results_dir`
    """
    metrics_df = dataframe_from_dir(results_dir)
    logger.info(f"report_from_dir(): read metrics. results_dir={results_dir}, num_rows={len(metrics_df)}")
    return summary_dataframe(metrics_df, final_window), slope_dataframe(metrics_df)


#
# ---- automata diagnostics ----
#

DIAGNOSTICS_COLUMNS = ['algorithm', 'seed', 'num_users', 'num_jt_users', 'optimal_arm_frequency', 'p_optimal',
                       'factorial_estimate']


def diagnostics_dataframe_from_dir(results_dir):
    """
    Reads every "*-mabla.json" diagnostics file in `results_dir`.

    :return: a Pandas DataFrame with DIAGNOSTICS_COLUMNS, one row per replica sorted by (algorithm, seed). num_jt_users
        counts the users whose optimal arm is JT
    """
    rows = []
    for path in glob.glob(os.path.join(results_dir, '*-mabla.json')):
        diagnostics_dict = read_mabla_diagnostics(path)
        users = diagnostics_dict['users']
        rows.append([diagnostics_dict['algorithm'], diagnostics_dict['seed'], len(users),
                     sum(user['optimal_arm'] == 'JT' for user in users), diagnostics_dict['optimal_arm_frequency'],
                     diagnostics_dict['p_optimal'], diagnostics_dict['factorial_estimate']])
    return pd.DataFrame(rows, columns=DIAGNOSTICS_COLUMNS) \
        .sort_values(['algorithm', 'seed'], kind='mergesort') \
        .reset_index(drop=True)
