import json
import logging
import os
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
import pandas as pd
import torch

from mecjoint.baselines import BaselinePolicyKind, baseline_step
from mecjoint.csv_io import MetricsCsvWriter, MetricsRow, mabla_diagnostics_path, metrics_csv_path, \
    truncate_metrics_csv, write_mabla_diagnostics
from mecjoint.delay import check_constraints, evaluate_delay
from mecjoint.mabla import ARM_JT, ARM_ST, AutomatonState, build_association, convergence_report, initial_arms, \
    initial_automata, mabla_round
from mecjoint.marl import CHECKPOINT_VERSION, LearnerConfig, LinearSchedule, MaddpgCaching, SarlCaching, \
    apply_cache_action, compute_rewards, decode_action, request_histograms
from mecjoint.network import ChannelSnapshot, Mode, NetworkTopology, RequestState, SimConfig, CacheState, \
    initial_cache, sample_channels, sample_requests, sample_topology_resampling
from mecjoint.oracle import OracleBudget, oracle_joint
from mecjoint.util import dataframe_from_metrics_rows, summary_dataframe


logger = logging.getLogger(__name__)


#
# This file implements the two-step iteration loop: each iteration runs `marl_steps` caching steps (with the
# association held at the most recent transmission modes) followed by `mabla_steps` transmission steps (with the
# caches frozen). One MetricsRow is emitted per iteration, computed from the iteration's final step.
#

ALGORITHMS = ('MARL-MABLA', 'MARL-ST', 'MARL-JT', 'SARL-JT', 'LRU-JT', 'LFU-JT', 'FIFO-JT', 'ORACLE')

# caching learner, baseline policy, and pinned arm (None = learned by the automata), per algorithm
ALGORITHM_PARTS = {
    'MARL-MABLA': ('MARL', None, None),
    'MARL-ST': ('MARL', None, ARM_ST),
    'MARL-JT': ('MARL', None, ARM_JT),
    'SARL-JT': ('SARL', None, ARM_JT),
    'LRU-JT': (None, BaselinePolicyKind.LRU, ARM_JT),
    'LFU-JT': (None, BaselinePolicyKind.LFU, ARM_JT),
    'FIFO-JT': (None, BaselinePolicyKind.FIFO, ARM_JT),
    'ORACLE': (None, None, None),
}

PRESETS = {
    'caching': ('MARL-JT', 'LRU-JT', 'LFU-JT', 'FIFO-JT', 'SARL-JT'),  # caching comparison under JT
    'transmission': ('MARL-MABLA', 'MARL-ST', 'MARL-JT'),  # transmission comparison under MARL caching
}


class ConfigError(RuntimeError):
    pass


class SuiteConfigError(RuntimeError):
    pass


class ConstraintViolationError(RuntimeError):

    def __init__(self, message, violations):
        super().__init__(message)
        self.violations = violations


#
# ExperimentConfig and parse_config()
#

@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    algorithm: str = 'MARL-MABLA'
    num_iterations: int = 4000  # N_T
    marl_steps: int = 75  # N_t1
    mabla_steps: int = 50  # N_t2
    seeds: tuple = (0,)
    output_dir: str = 'results'
    reinit_beta_each_iteration: bool = False
    log_every: int = 100
    checkpoint_every: int = 0  # 0 -> no checkpoints
    oracle_max_configs: int = 1_000_000


    def validate(self):
        """
        :return: a list of error messages for me and my SimConfig and LearnerConfig. empty if valid
        """
        error_messages = self.sim.validate() + self.learner.validate()
        if self.algorithm not in ALGORITHMS:
            error_messages.append(f"algorithm must be one of {list(ALGORITHMS)}. algorithm={self.algorithm!r}")
        for field_name in ('num_iterations', 'marl_steps', 'mabla_steps', 'log_every'):
            if getattr(self, field_name) < 1:
                error_messages.append(f"{field_name} must be >= 1. {field_name}={getattr(self, field_name)}")
        for field_name in ('checkpoint_every', 'oracle_max_configs'):
            if getattr(self, field_name) < 0:
                error_messages.append(f"{field_name} must be >= 0. {field_name}={getattr(self, field_name)}")
        if len(set(self.seeds)) != len(self.seeds):
            error_messages.append(f"seeds must be distinct. seeds={list(self.seeds)}")
        return error_messages


    def to_dict(self):
        """
        :return: the flat dict that config_from_dict() accepts
        """
        config_dict = {}
        for sub_config in (self.sim, self.learner):
            config_dict.update({config_field.name: getattr(sub_config, config_field.name)
                                for config_field in fields(sub_config)})
        config_dict.update({config_field.name: getattr(self, config_field.name) for config_field in fields(self)
                            if config_field.name not in ('sim', 'learner')})
        config_dict['seeds'] = list(self.seeds)
        return config_dict


def _checked_value(field_name, field_type, value):
    """
    :return: `value` converted to `field_type`
    :raises ConfigError: if `value` has the wrong type. bools are not accepted as numbers
    """
    if field_type is tuple:
        if (not isinstance(value, list)) or any((not isinstance(seed, int)) or isinstance(seed, bool)
                                                for seed in value):
            raise ConfigError(f"field must be a list of ints. field={field_name!r}, value={value!r}")

        return tuple(value)

    if field_type is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"field must be a bool. field={field_name!r}, value={value!r}")

        return value

    if field_type is int:
        if (not isinstance(value, int)) or isinstance(value, bool):
            raise ConfigError(f"field must be an int. field={field_name!r}, value={value!r}")

        return value

    if field_type is float:
        if (not isinstance(value, (int, float))) or isinstance(value, bool):
            raise ConfigError(f"field must be a number. field={field_name!r}, value={value!r}")

        return float(value)

    if not isinstance(value, str):
        raise ConfigError(f"field must be a string. field={field_name!r}, value={value!r}")

    return value


def config_from_dict(config_dict):
    """
    Strictly converts a flat dict to an ExperimentConfig. Keys are the field names of SimConfig, LearnerConfig, and
    ExperimentConfig. Missing keys take their defaults.

    :raises ConfigError: if a key is unknown, a value has the wrong type, or the resulting config is invalid
    """
    if not isinstance(config_dict, dict):
        raise ConfigError(f"config must be a JSON object. type={type(config_dict).__name__}")

    sub_fields = {}  # config class -> {field_name: field_type}
    for config_class in (SimConfig, LearnerConfig, ExperimentConfig):
        sub_fields[config_class] = {config_field.name: config_field.type for config_field in fields(config_class)
                                    if config_field.name not in ('sim', 'learner')}
    all_fields = {field_name for class_fields in sub_fields.values() for field_name in class_fields}
    unknown_keys = sorted(set(config_dict) - all_fields)
    if unknown_keys:
        raise ConfigError(f"unknown config key(s): {unknown_keys}")

    kwargs = {config_class: {} for config_class in sub_fields}
    for config_class, class_fields in sub_fields.items():
        for field_name, field_type in class_fields.items():
            if field_name in config_dict:
                kwargs[config_class][field_name] = _checked_value(field_name, field_type, config_dict[field_name])

    exp_config = ExperimentConfig(sim=SimConfig(**kwargs[SimConfig]), learner=LearnerConfig(**kwargs[LearnerConfig]),
                                  **kwargs[ExperimentConfig])
    error_messages = exp_config.validate()
    if error_messages:
        raise ConfigError(f"invalid config: {error_messages}")

    return exp_config


def parse_config(config_path):
    """
    :param config_path: path to a flat JSON config file. see config_from_dict()
    :return: an ExperimentConfig
    :raises ConfigError: if the file is not valid JSON or the config is invalid
    """
    with open(config_path) as fp:
        try:
            config_dict = json.load(fp)
        except json.JSONDecodeError as jde:
            raise ConfigError(f"invalid JSON. config_path={config_path}, error={jde}")

    return config_from_dict(config_dict)


def configs_for_preset(exp_config, preset):
    """
    :return: a list of ExperimentConfigs, one per algorithm in `preset`, otherwise copies of `exp_config`
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset. preset={preset!r}, presets={sorted(PRESETS)}")

    return [replace(exp_config, algorithm=algorithm) for algorithm in PRESETS[preset]]


#
# Runner
#

StepResult = namedtuple('StepResult', ['report', 'association', 'rewards'])

Snapshot = namedtuple('Snapshot', ['cache', 'association', 'req', 'ch'])


def jt_fraction(topology, assoc):
    """
    :return: fraction of the multi-covered users in JT mode. 0 if there are none
    """
    users = topology.multi_covered_users()
    if not users:
        return 0.0

    return sum(assoc.modes[user] == Mode.JT for user in users) / len(users)


class Runner:
    """
    Holds one replica's complete state: topology, caches, caching learner, automata, current traffic and channels,
    and the single numpy Generator that drives every random draw.
    """


    def __init__(self, exp_config, seed):
        self.exp_config = exp_config
        self.sim_cfg = exp_config.sim
        self.seed = seed
        self.rng = np.random.default_rng([exp_config.sim.rng_seed, seed])
        self.topology = sample_topology_resampling(self.sim_cfg, self.rng)
        self.learner_kind, self.baseline_policy, self.pinned_arm = ALGORITHM_PARTS[exp_config.algorithm]
        self.learner = None
        if self.learner_kind is not None:
            torch.manual_seed(int(self.rng.integers(2 ** 31 - 1)))
            learner_class = MaddpgCaching if self.learner_kind == 'MARL' else SarlCaching
            self.learner = learner_class(self.sim_cfg, exp_config.learner)
        self.epsilon_schedule = LinearSchedule(exp_config.learner.epsilon_start, exp_config.learner.epsilon_end,
                                               exp_config.num_iterations * exp_config.marl_steps)
        self.cache = initial_cache(self.sim_cfg, self.rng)
        self.automata = initial_automata(self.topology)
        self.arms = initial_arms(self.topology) if self.pinned_arm is None \
            else {user: self.pinned_arm for user in self.topology.multi_covered_users()}
        self.req = sample_requests(self.sim_cfg, self.topology, self.rng)
        self.ch = sample_channels(self.sim_cfg, self.topology, self.rng)
        self.iteration = 0
        self.caching_step_count = 0
        self.last_snapshot = None
        self.mabla_history = []  # the current iteration's MablaRound.outcomes
        logger.info(f"Runner(): initialized. algorithm={exp_config.algorithm}, seed={seed}, "
                    f"num_users={self.topology.num_users}, "
                    f"num_multi_covered={len(self.topology.multi_covered_users())}")


    def __repr__(self):
        return str((self.__class__.__name__, self.exp_config.algorithm, self.seed, self.iteration))


    @property
    def uses_automata(self):
        """
        :return: True if the automata choose the transmission modes, i.e., the arm is not pinned and the oracle is not
            in use
        """
        return (self.pinned_arm is None) and (self.exp_config.algorithm != 'ORACLE')


    def convergence_diagnostics(self):
        """
        :return: a ConvergenceDiagnostics of the current automata and the current iteration's feedback
        """
        return convergence_report(self.automata, self.mabla_history)


    def _advance_traffic(self):
        self.req = sample_requests(self.sim_cfg, self.topology, self.rng)
        self.ch = sample_channels(self.sim_cfg, self.topology, self.rng)


    def evaluate_snapshot(self, cache, assoc, req, ch):
        """
        Checks the constraints and evaluates the delay of one snapshot.

        :return: a DelayReport
        :raises ConstraintViolationError: if any constraint or association invariant is violated
        """
        violations = check_constraints(cache, assoc, ch, self.sim_cfg)
        error_messages = [violation.message for violation in violations] + assoc.validate(self.topology)
        if error_messages:
            raise ConstraintViolationError(f"infeasible step. iteration={self.iteration}, "
                                           f"error_messages={error_messages}", violations)

        self.last_snapshot = Snapshot(cache, assoc, req, ch)
        return evaluate_delay(cache, assoc, req, ch, self.sim_cfg)


    def caching_step(self):
        """
        One caching step. A learner acts on the current observation, and the resulting caches are evaluated on the next
        step's requests and channels, which also yield the transition's next observation. A fixed policy serves the
        current requests from the current caches, then demand-fills.

        :return: a StepResult
        """
        if self.learner is None:
            assoc = build_association(self.topology, self.cache, self.req, self.ch, self.arms)
            report = self.evaluate_snapshot(self.cache, assoc, self.req, self.ch)
            self.cache = baseline_step(self.baseline_policy, self.cache, self.topology, self.req)
            self._advance_traffic()
            return StepResult(report, assoc, compute_rewards(report, self.exp_config.learner.reward_kind))

        num_files, cache_slots = self.sim_cfg.num_files, self.sim_cfg.cache_slots
        histograms = request_histograms(self.topology, self.req, num_files)
        slots = self.cache.slots.copy()
        epsilon = self.epsilon_schedule.value(self.caching_step_count)
        actions = self.learner.act(histograms, slots, epsilon, self.rng)
        new_cache = self.cache
        for edge, action in enumerate(actions):
            new_cache = apply_cache_action(new_cache, edge, decode_action(int(action), num_files, cache_slots))

        self._advance_traffic()
        assoc = build_association(self.topology, new_cache, self.req, self.ch, self.arms)
        report = self.evaluate_snapshot(new_cache, assoc, self.req, self.ch)
        rewards = compute_rewards(report, self.exp_config.learner.reward_kind)
        self.learner.store(histograms, slots, actions, rewards,
                           request_histograms(self.topology, self.req, num_files), new_cache.slots)
        losses = self.learner.learn(self.rng)
        logger.debug(f"caching_step(): actions={actions.tolist()}, rewards={rewards}, losses={losses}")
        self.cache = new_cache
        self.caching_step_count += 1
        return StepResult(report, assoc, rewards)


    def mabla_step(self):
        """
        One transmission step with the caches frozen. The automata (or the pinned arm) choose every multi-covered
        user's mode for the current requests and channels.

        :return: a StepResult
        """
        mabla_result = mabla_round(self.topology, self.automata, self.cache, self.req, self.ch, self.sim_cfg,
                                   self.rng, pinned_arm=self.pinned_arm)
        self.automata, self.arms = mabla_result.automata, mabla_result.arms
        if mabla_result.outcomes:
            self.mabla_history.append(mabla_result.outcomes)
        report = self.evaluate_snapshot(self.cache, mabla_result.association, self.req, self.ch)
        self._advance_traffic()
        return StepResult(report, mabla_result.association,
                          compute_rewards(report, self.exp_config.learner.reward_kind))


    def oracle_step(self):
        """
        Solves the current snapshot exactly and adopts the optimal caches.
        """
        result = oracle_joint(self.sim_cfg, self.topology, self.req, self.ch,
                              OracleBudget(self.exp_config.oracle_max_configs))
        report = self.evaluate_snapshot(result.cache, result.association, self.req, self.ch)
        self.cache = result.cache
        self._advance_traffic()
        return StepResult(report, result.association,
                          compute_rewards(report, self.exp_config.learner.reward_kind))


    def run_iteration(self):
        """
        Runs one iteration: the caching sub-loop, then the transmission sub-loop.

        :return: the iteration's MetricsRow
        """
        if self.exp_config.algorithm == 'ORACLE':
            step_result = self.oracle_step()
        else:
            if self.exp_config.reinit_beta_each_iteration:
                self.automata = initial_automata(self.topology)
            self.mabla_history = []
            for _ in range(self.exp_config.marl_steps):
                step_result = self.caching_step()
            for _ in range(self.exp_config.mabla_steps):
                step_result = self.mabla_step()

        report = step_result.report
        metrics_row = MetricsRow(self.iteration, self.seed, self.exp_config.algorithm, report.total,
                                 report.edge_delay, report.cloud_delay, report.hit_ratio,
                                 jt_fraction(self.topology, step_result.association),
                                 float(np.mean(step_result.rewards)))
        self.iteration += 1
        return metrics_row


    #
    # checkpoints
    #

    def state_dict(self):
        return {'version': CHECKPOINT_VERSION,
                'config': self.exp_config.to_dict(),
                'seed': self.seed,
                'iteration': self.iteration,
                'caching_step_count': self.caching_step_count,
                'edge_positions': self.topology.edge_positions,
                'user_positions': self.topology.user_positions,
                'cache': self.cache.state_dict(),
                'automata': {user: (state.alpha0, state.beta0, state.alpha1, state.beta1)
                             for user, state in self.automata.items()},
                'arms': dict(self.arms),
                'req': self.req.files.copy(),
                'ch': self.ch.state_dict(),
                'rng_state': self.rng.bit_generator.state,
                'torch_rng_state': torch.get_rng_state(),
                'learner': self.learner.state_dict() if self.learner else None}


    def load_state_dict(self, state):
        """
        :raises RuntimeError: if `state` has an unknown version or was saved by a different algorithm or seed
        """
        if state['version'] != CHECKPOINT_VERSION:
            raise RuntimeError(f"unsupported checkpoint version. version={state['version']}, "
                               f"expected={CHECKPOINT_VERSION}")

        if (state['config']['algorithm'] != self.exp_config.algorithm) or (state['seed'] != self.seed):
            raise RuntimeError(f"checkpoint is for a different replica. algorithm={state['config']['algorithm']}, "
                               f"seed={state['seed']}, expected=({self.exp_config.algorithm}, {self.seed})")

        self.iteration = state['iteration']
        self.caching_step_count = state['caching_step_count']
        self.topology = NetworkTopology(state['edge_positions'], state['user_positions'], self.sim_cfg.cell_radius)
        self.cache = CacheState.from_state_dict(state['cache'])
        self.automata = {user: AutomatonState(*params) for user, params in state['automata'].items()}
        self.arms = dict(state['arms'])
        self.req = RequestState(state['req'], self.sim_cfg.num_files)
        self.ch = ChannelSnapshot.from_state_dict(state['ch'])
        self.rng.bit_generator.state = state['rng_state']
        torch.set_rng_state(state['torch_rng_state'])
        if self.learner:
            self.learner.load_state_dict(state['learner'])


    def save_checkpoint(self, path):
        torch.save(self.state_dict(), path)
        logger.info(f"save_checkpoint(): saved. path={path}, iteration={self.iteration}")


    def load_checkpoint(self, path):
        self.load_state_dict(torch.load(path, weights_only=False))
        logger.info(f"load_checkpoint(): loaded. path={path}, iteration={self.iteration}")


#
# run_experiment() and run_suite()
#

def checkpoint_path(output_dir, algorithm, seed):
    return os.path.join(output_dir, f"{algorithm}-seed{seed}.ckpt")


def run_experiment(exp_config, seed=None, output_dir=None, resume=False):
    """
    Runs one replica, writing each MetricsRow to its CSV file as soon as it is computed.

    :param seed: the replica seed. defaults to the first of `exp_config.seeds`
    :param output_dir: directory for the CSV and checkpoint files. None means `exp_config.output_dir`
    :param resume: True to continue from the replica's checkpoint if there is one. rows after the checkpoint's
        iteration are dropped from the CSV first
    :return: a generator of MetricsRows, one per iteration not yet run
    :raises ConstraintViolationError: if any step is infeasible
    """
    seed = exp_config.seeds[0] if seed is None else seed
    output_dir = exp_config.output_dir if output_dir is None else output_dir
    csv_path = metrics_csv_path(output_dir, exp_config.algorithm, seed)
    ckpt_path = checkpoint_path(output_dir, exp_config.algorithm, seed)
    runner = Runner(exp_config, seed)
    if resume and os.path.exists(ckpt_path):
        runner.load_checkpoint(ckpt_path)
        truncate_metrics_csv(csv_path, runner.iteration)
    elif os.path.exists(csv_path):
        os.remove(csv_path)  # a fresh run starts a fresh file

    logger.info(f"run_experiment(): starting. algorithm={exp_config.algorithm}, seed={seed}, "
                f"iteration={runner.iteration}, num_iterations={exp_config.num_iterations}, csv_path={csv_path}")
    with MetricsCsvWriter(csv_path) as csv_writer:
        while runner.iteration < exp_config.num_iterations:
            metrics_row = runner.run_iteration()
            csv_writer.write(metrics_row)
            if (metrics_row.iteration + 1) % exp_config.log_every == 0:
                logger.info(f"run_experiment(): iteration done. algorithm={exp_config.algorithm}, seed={seed}, "
                            f"iteration={metrics_row.iteration}, total_delay_s={metrics_row.total_delay_s}, "
                            f"hit_ratio={metrics_row.hit_ratio}, jt_fraction={metrics_row.jt_fraction}")
            if exp_config.checkpoint_every and (runner.iteration % exp_config.checkpoint_every == 0):
                runner.save_checkpoint(ckpt_path)
            yield metrics_row
    if runner.uses_automata:
        diagnostics = runner.convergence_diagnostics()
        diagnostics_path = mabla_diagnostics_path(output_dir, exp_config.algorithm, seed)
        write_mabla_diagnostics(diagnostics_path, exp_config.algorithm, seed, diagnostics)
        logger.info(f"run_experiment(): automata diagnostics. p_optimal={diagnostics.p_optimal}, "
                    f"optimal_arm_frequency={diagnostics.optimal_arm_frequency}, "
                    f"optimal_arms={diagnostics.optimal_arms}, path={diagnostics_path}")
    logger.info(f"run_experiment(): done. algorithm={exp_config.algorithm}, seed={seed}")


def run_replica(exp_config, seed):
    """
    :return: list of all MetricsRows of one replica. a picklable top-level function for process pools
    """
    return list(run_experiment(exp_config, seed))


def run_suite(exp_configs, workers=1):
    """
    Runs every (config, seed) replica and summarizes them. Replicas are merged in (algorithm, seed) order regardless
    of `workers`.

    :param exp_configs: a list of ExperimentConfigs sharing one SimConfig
    :param workers: number of worker processes. 1 runs replicas in this process
    :return: 2-tuple: (summary DataFrame as returned by summary_dataframe(), metrics DataFrame of every row)
    :raises SuiteConfigError: if the SimConfigs or the output_dirs differ
    """
    if not exp_configs:
        return summary_dataframe(pd.DataFrame()), dataframe_from_metrics_rows([])

    sim_configs = {exp_config.sim for exp_config in exp_configs}
    if len(sim_configs) != 1:
        raise SuiteConfigError(f"suite configs must share one SimConfig. num_distinct={len(sim_configs)}")

    output_dirs = sorted({exp_config.output_dir for exp_config in exp_configs})
    if len(output_dirs) != 1:
        raise SuiteConfigError(f"suite configs must share one output_dir. output_dirs={output_dirs}")

    jobs = sorted(((exp_config, seed) for exp_config in exp_configs for seed in exp_config.seeds),
                  key=lambda job: (job[0].algorithm, job[1]))
    logger.info(f"run_suite(): starting. num_replicas={len(jobs)}, workers={workers}")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            replica_rows = list(executor.map(run_replica, [job[0] for job in jobs], [job[1] for job in jobs]))
    else:
        replica_rows = [run_replica(exp_config, seed) for exp_config, seed in jobs]

    metrics_df = dataframe_from_metrics_rows([metrics_row for rows in replica_rows for metrics_row in rows])
    summary_df = summary_dataframe(metrics_df)
    output_dir = exp_configs[0].output_dir
    os.makedirs(output_dir, exist_ok=True)
    summary_df.to_csv(os.path.join(output_dir, 'summary.csv'), index=False)
    logger.info(f"run_suite(): done. output_dir={output_dir}")
    return summary_df, metrics_df


def run_oracle_comparison(sim_cfg, topology, snapshots, budget=OracleBudget()):
    """
    Re-solves each frozen snapshot exactly and compares a policy's achieved delay against the optimum.

    :param snapshots: a list of Snapshots, e.g., collected from Runner.last_snapshot
    :return: a Pandas DataFrame with columns: snapshot, policy_delay_s, oracle_delay_s, gap_s
    """
    rows = []
    for idx, snapshot in enumerate(snapshots):
        policy_report = evaluate_delay(snapshot.cache, snapshot.association, snapshot.req, snapshot.ch, sim_cfg)
        oracle_result = oracle_joint(sim_cfg, topology, snapshot.req, snapshot.ch, budget)
        rows.append([idx, policy_report.total, oracle_result.total_delay,
                     policy_report.total - oracle_result.total_delay])
    return pd.DataFrame(rows, columns=['snapshot', 'policy_delay_s', 'oracle_delay_s', 'gap_s'])
