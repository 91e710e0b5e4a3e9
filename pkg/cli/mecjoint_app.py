import logging
import os
from dataclasses import replace

import click
import numpy as np
import pandas as pd

from mecjoint.csv_io import mabla_diagnostics_path, read_mabla_diagnostics
from mecjoint.experiment import PRESETS, configs_for_preset, parse_config, run_experiment, run_suite
from mecjoint.network import sample_channels, sample_requests, sample_topology_resampling
from mecjoint.oracle import OracleBudget, oracle_joint, search_size
from mecjoint.util import DEFAULT_FINAL_WINDOW, diagnostics_dataframe_from_dir, report_from_dir


@click.group()
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR']), default='INFO',
              show_default=True)
def cli(log_level):
    """
    Joint edge caching and hybrid transmission simulator.
    """
    logging.basicConfig(level=getattr(logging, log_level), format='%(asctime)s %(levelname)s %(name)s: %(message)s')


@cli.command()
@click.option('--config', 'config_path', type=click.Path(file_okay=True, exists=True), required=True)
@click.option('--seed', type=int, default=None, help="replica seed. defaults to the config's first seed")
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), default=None)
@click.option('--resume', is_flag=True, default=False, help="continue from the replica's checkpoint, if any")
def run(config_path, seed, output_dir, resume):
    """
    Runs one replica and writes its per-iteration metrics CSV. Runs whose automata pick the modes also write and print
    the automata diagnostics.
    """
    exp_config = parse_config(config_path)
    num_rows = 0
    for metrics_row in run_experiment(exp_config, seed, output_dir, resume):
        num_rows += 1
    click.echo(f"* done. algorithm={exp_config.algorithm}, num_rows={num_rows}")

    seed = exp_config.seeds[0] if seed is None else seed
    diagnostics_path = mabla_diagnostics_path(exp_config.output_dir if output_dir is None else output_dir,
                                              exp_config.algorithm, seed)
    if os.path.exists(diagnostics_path):
        diagnostics_dict = read_mabla_diagnostics(diagnostics_path)
        click.echo(f"* automata. p_optimal={diagnostics_dict['p_optimal']}, "
                   f"optimal_arm_frequency={diagnostics_dict['optimal_arm_frequency']}, "
                   f"factorial_estimate={diagnostics_dict['factorial_estimate']}")
        for user_dict in diagnostics_dict['users']:
            click.echo(f"  user={user_dict['user']}, optimal_arm={user_dict['optimal_arm']}, "
                       f"posterior_means=({user_dict['posterior_mean_st']}, {user_dict['posterior_mean_jt']}), "
                       f"win_probability={user_dict['win_probability']}")


@cli.command()
@click.option('--config', 'config_path', type=click.Path(file_okay=True, exists=True), required=True)
@click.option('--preset', type=click.Choice(sorted(PRESETS)), default=None,
              help="run every algorithm of a preset instead of the config's algorithm")
@click.option('--workers', type=int, default=1, show_default=True)
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), default=None)
def suite(config_path, preset, workers, output_dir):
    """
    Runs every seed of one or more algorithms and prints the summary table.
    """
    exp_config = parse_config(config_path)
    if output_dir is not None:
        exp_config = replace(exp_config, output_dir=output_dir)
    exp_configs = configs_for_preset(exp_config, preset) if preset else [exp_config]
    summary_df, _ = run_suite(exp_configs, workers=workers)
    with pd.option_context('display.max_columns', None, 'display.width', 200):
        click.echo(summary_df.to_string(index=False))


@cli.command()
@click.option('--config', 'config_path', type=click.Path(file_okay=True, exists=True), required=True)
@click.option('--seed', type=int, default=None)
def oracle(config_path, seed):
    """
    Solves one sampled snapshot exactly and prints the optimal caches, modes, and delay.
    """
    exp_config = parse_config(config_path)
    seed = exp_config.seeds[0] if seed is None else seed
    rng = np.random.default_rng([exp_config.sim.rng_seed, seed])
    topology = sample_topology_resampling(exp_config.sim, rng)
    req = sample_requests(exp_config.sim, topology, rng)
    ch = sample_channels(exp_config.sim, topology, rng)
    exact_size, coarse_size = search_size(exp_config.sim, topology)
    click.echo(f"* searching. search_size={exact_size}, coarse_size={coarse_size}")
    result = oracle_joint(exp_config.sim, topology, req, ch, OracleBudget(exp_config.oracle_max_configs))
    click.echo(f"* requests: {req.files.tolist()}")
    click.echo(f"* caches: {[result.cache.files_at(edge) for edge in range(topology.num_edges)]}")
    click.echo(f"* modes: {[mode.name for mode in result.association.modes]}")
    click.echo(f"* total_delay_s={result.total_delay}, hit_ratio={result.report.hit_ratio}")


@cli.command()
@click.option('--in', 'results_dir', type=click.Path(file_okay=False, exists=True), required=True)
@click.option('--window', type=int, default=DEFAULT_FINAL_WINDOW, show_default=True,
              help="number of final iterations averaged per replica")
def report(results_dir, window):
    """
    Merges the metrics CSV files in a directory and prints the per-algorithm summary and slope confidence intervals,
    plus the automata diagnostics of any replicas that saved them.
    """
    summary_df, slope_df = report_from_dir(results_dir, window)
    diagnostics_df = diagnostics_dataframe_from_dir(results_dir)
    with pd.option_context('display.max_columns', None, 'display.width', 200):
        click.echo(summary_df.to_string(index=False))
        click.echo('')
        click.echo(slope_df.to_string(index=False))
        if not diagnostics_df.empty:
            click.echo('')
            click.echo(diagnostics_df.to_string(index=False))


if __name__ == '__main__':
    cli()
