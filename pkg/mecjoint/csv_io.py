import csv
import json
import logging
import math
import os
from collections import namedtuple

from mecjoint.mabla import ARM_MODES


logger = logging.getLogger(__name__)


#
# per-iteration metrics CSV files
#

CSV_HEADER = ['iteration', 'seed', 'algorithm', 'total_delay_s', 'edge_delay_s', 'cloud_delay_s', 'hit_ratio',
              'jt_fraction', 'mean_reward']

MetricsRow = namedtuple('MetricsRow', CSV_HEADER)


def csv_row_from_metrics_row(metrics_row):
    """
    :return: a list of strings in CSV_HEADER order. floats use repr() so that files are byte-identical across runs
    """
    return [str(metrics_row.iteration), str(metrics_row.seed), metrics_row.algorithm] + \
           [repr(float(value)) for value in metrics_row[3:]]


def metrics_row_from_csv_row(csv_row):
    """
    :param csv_row: a list of strings in CSV_HEADER order
    :return: a MetricsRow
    :raises RuntimeError: if the row has the wrong number of columns
    """
    if len(csv_row) != len(CSV_HEADER):
        raise RuntimeError(f"invalid row: wrong number of columns. expected={len(CSV_HEADER)}, row={csv_row}")

    return MetricsRow(int(csv_row[0]), int(csv_row[1]), csv_row[2], *[float(value) for value in csv_row[3:]])


def validate_metrics_row(metrics_row):
    """
    :return: a list of error messages. empty if `metrics_row` is valid
    """
    error_messages = []
    for column in ('total_delay_s', 'edge_delay_s', 'cloud_delay_s'):
        value = getattr(metrics_row, column)
        if math.isnan(value) or (value < 0):
            error_messages.append(f"delay must be >= 0. column={column}, value={value}")
    for column in ('hit_ratio', 'jt_fraction'):
        value = getattr(metrics_row, column)
        if not (0 <= value <= 1):
            error_messages.append(f"fraction must be in [0, 1]. column={column}, value={value}")
    return error_messages


def metrics_csv_path(output_dir, algorithm, seed):
    return os.path.join(output_dir, f"{algorithm}-seed{seed}.csv")


class MetricsCsvWriter:
    """
    Append-only per-replica metrics file. The header is written only when the file is new or empty, and every row is
    flushed as soon as it is written so that a killed run leaves a valid partial file.
    """


    def __init__(self, path):
        self.path = path


    def __enter__(self):
        os.makedirs(os.path.dirname(self.path) or '.', exist_ok=True)
        is_new = (not os.path.exists(self.path)) or (os.path.getsize(self.path) == 0)
        self.csv_fp = open(self.path, 'a', newline='')
        self.csv_writer = csv.writer(self.csv_fp, delimiter=',')
        if is_new:
            self.csv_writer.writerow(CSV_HEADER)
            self.csv_fp.flush()
        return self


    def __exit__(self, exc_type, exc_val, exc_tb):
        self.csv_fp.close()


    def write(self, metrics_row):
        self.csv_writer.writerow(csv_row_from_metrics_row(metrics_row))
        self.csv_fp.flush()


def read_metrics_csv(csv_fp):
    """
    :param csv_fp: an open metrics CSV file-like object
    :return: a list of MetricsRows
    :raises RuntimeError: if the header is not CSV_HEADER
    """
    csv_reader = csv.reader(csv_fp, delimiter=',')
    try:
        header = next(csv_reader)
    except StopIteration:
        raise RuntimeError("empty file")

    if header != CSV_HEADER:
        raise RuntimeError(f"invalid header. header={header}, expected={CSV_HEADER}")

    return [metrics_row_from_csv_row(csv_row) for csv_row in csv_reader if csv_row]


def truncate_metrics_csv(path, num_iterations):
    """
    Drops every row whose iteration is >= `num_iterations`, so that resuming from a checkpoint taken after
    `num_iterations` iterations does not duplicate rows written after the checkpoint.
    """
    if not os.path.exists(path):
        return

    with open(path, newline='') as csv_fp:
        metrics_rows = read_metrics_csv(csv_fp)
    kept_rows = [metrics_row for metrics_row in metrics_rows if metrics_row.iteration < num_iterations]
    if len(kept_rows) == len(metrics_rows):
        return

    logger.warning(f"truncate_metrics_csv(): dropping rows past the checkpoint. path={path}, "
                   f"num_dropped={len(metrics_rows) - len(kept_rows)}")
    with open(path, 'w', newline='') as csv_fp:
        csv_writer = csv.writer(csv_fp, delimiter=',')
        csv_writer.writerow(CSV_HEADER)
        for metrics_row in kept_rows:
            csv_writer.writerow(csv_row_from_metrics_row(metrics_row))


#
# automata diagnostics JSON files
#

def mabla_diagnostics_path(output_dir, algorithm, seed):
    return os.path.join(output_dir, f"{algorithm}-seed{seed}-mabla.json")


def _json_number(value):
    return None if math.isnan(value) else float(value)


def write_mabla_diagnostics(path, algorithm, seed, diagnostics):
    """
    Saves a replica's automata convergence diagnostics.

    :param diagnostics: a ConvergenceDiagnostics as returned by convergence_report(). arms are saved by mode name
    """
    users = [{'user': int(user),
              'posterior_mean_st': diagnostics.posterior_means[user][0],
              'posterior_mean_jt': diagnostics.posterior_means[user][1],
              'optimal_arm': ARM_MODES[diagnostics.optimal_arms[user]].name,
              'win_probability': diagnostics.win_probabilities[user]}
             for user in sorted(diagnostics.optimal_arms)]
    diagnostics_dict = {'algorithm': algorithm, 'seed': seed,
                        'optimal_arm_frequency': _json_number(diagnostics.optimal_arm_frequency),
                        'p_optimal': diagnostics.p_optimal, 'factorial_estimate': diagnostics.factorial_estimate,
                        'users': users}
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w') as fp:
        json.dump(diagnostics_dict, fp, indent=4)


def read_mabla_diagnostics(path):
    """
    :return: the dict saved by write_mabla_diagnostics(). a null optimal_arm_frequency is read back as NaN
    :raises RuntimeError: if the file is not valid JSON
    """
    with open(path) as fp:
        try:
            diagnostics_dict = json.load(fp)
        except json.JSONDecodeError as jde:
            raise RuntimeError(f"invalid diagnostics file. path={path}, error={jde}")

    if diagnostics_dict['optimal_arm_frequency'] is None:
        diagnostics_dict['optimal_arm_frequency'] = math.nan
    return diagnostics_dict
