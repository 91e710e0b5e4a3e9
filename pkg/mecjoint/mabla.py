import enum
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, stats
from scipy.special import betaln

from mecjoint.delay import evaluate_delay
from mecjoint.network import AssociationState, Mode


logger = logging.getLogger(__name__)


#
# This file implements the per-user Bayesian learning automaton that picks a transmission mode for every user covered
# by two or more edge servers. Arm 0 is single-server transmission (ST) and Arm 1 is joint transmission (JT). Each
# automaton keeps one Beta posterior per arm. Arms are chosen by sampling both posteriors, and the chosen arm's
# posterior is updated by comparing the total delay against the counterfactual total with the user on the other arm.
#

ARM_ST = 0
ARM_JT = 1
ARM_MODES = {ARM_ST: Mode.ST, ARM_JT: Mode.JT}


class Feedback(enum.Enum):
    REWARD = enum.auto()
    PENALTY = enum.auto()
    NO_UPDATE = enum.auto()  # neither arm could be observed this round


@dataclass(frozen=True)
class AutomatonState:
    """
    Beta(alpha, beta) parameters of both arms of one user's automaton.
    """
    alpha0: float = 1
    beta0: float = 1
    alpha1: float = 1
    beta1: float = 1


    def params(self, arm):
        """
        :return: 2-tuple: (alpha, beta) of `arm`
        """
        return (self.alpha0, self.beta0) if arm == ARM_ST else (self.alpha1, self.beta1)


    def posterior_mean(self, arm):
        alpha, beta = self.params(arm)
        return alpha / (alpha + beta)


ArmOutcome = namedtuple('ArmOutcome', ['chosen_arm', 'feedback', 'chosen_delay', 'counterfactual_delay'])

MablaRound = namedtuple('MablaRound', ['association', 'automata', 'arms', 'outcomes'])


def initial_automata(topology):
    """
    :return: dict that maps each multi-covered user to a fresh AutomatonState
    """
    return {user: AutomatonState() for user in topology.multi_covered_users()}


def initial_arms(topology):
    """
    :return: dict that maps each multi-covered user to ARM_JT, the arm used before any automaton has been consulted
    """
    return {user: ARM_JT for user in topology.multi_covered_users()}


#
# bla_select() and bla_update()
#

def bla_select(state, rng):
    """
    Draws one sample from each arm's Beta posterior and returns the arm with the larger sample. Ties go to Arm 1.

    :param state: an AutomatonState
    :param rng: a numpy Generator
    :return: ARM_ST or ARM_JT
    """
    sample0 = rng.beta(state.alpha0, state.beta0)
    sample1 = rng.beta(state.alpha1, state.beta1)
    return ARM_ST if sample0 > sample1 else ARM_JT


def bla_update(state, outcome):
    """
    :param state: an AutomatonState
    :param outcome: an ArmOutcome
    :return: a new AutomatonState: reward increments the chosen arm's alpha and penalty its beta. NO_UPDATE returns
        `state`
    """
    if outcome.feedback == Feedback.NO_UPDATE:
        return state

    arm = outcome.chosen_arm
    if outcome.feedback == Feedback.REWARD:
        return replace(state, alpha0=state.alpha0 + 1) if arm == ARM_ST else replace(state, alpha1=state.alpha1 + 1)
    else:  # Feedback.PENALTY
        return replace(state, beta0=state.beta0 + 1) if arm == ARM_ST else replace(state, beta1=state.beta1 + 1)


#
# association
#

def file_holders(user, topology, cache, req):
    """
    :return: list of the edges covering `user` that cache its requested file, ascending
    """
    return [edge for edge in topology.coverage(user) if cache.holds(edge, req.files[user])]


def best_holder(holders, user, ch):
    """
    :return: the holder with the strongest gain to `user`. ties go to the lowest edge index
    """
    return max(holders, key=lambda edge: (ch.h_edge[edge, user], -edge))


def user_servers(user, arm, topology, cache, req, ch):
    """
    :return: 2-tuple: (servers, mode) that `user` is associated with when it plays `arm`. `arm` is ignored for users
        that are not multi-covered or that fewer than two holders cover
    """
    holders = file_holders(user, topology, cache, req)
    if not holders:
        return [], Mode.CLOUD

    if (arm == ARM_JT) and (len(topology.coverage(user)) >= 2) and (len(holders) >= 2):
        return holders, Mode.JT

    return [best_holder(holders, user, ch)], Mode.ST


def build_association(topology, cache, req, ch, arms):
    """
    Builds y and the modes. Users with no covering holder of their file go to the cloud. A multi-covered user playing
    JT is served by every covering holder. Everyone else is served by the strongest covering holder (ST).

    :param arms: dict that maps multi-covered users to ARM_ST or ARM_JT. missing users play ST
    :return: an AssociationState
    """
    y = np.zeros((topology.num_edges, topology.num_users), dtype=int)
    modes = []
    for user in range(topology.num_users):
        servers, mode = user_servers(user, arms.get(user, ARM_ST), topology, cache, req, ch)
        y[servers, user] = 1
        modes.append(mode)
    return AssociationState(y, modes)


#
# evaluate_feedback() and mabla_round()
#

def evaluate_feedback(user, arm, topology, cache, assoc, req, ch, cfg, chosen_delay=None):
    """
    Compares the snapshot's total delay with `user` playing `arm` against the total with `user` switched to the other
    arm, changing only `user`'s association and holding every other user, the caches, and the channels fixed. The
    total includes the interference and power that `user`'s extra JT links take from the other users. A tie counts as
    a reward.

    :param assoc: the round's AssociationState, in which `user` plays `arm`
    :param chosen_delay: optional total delay of `assoc`, if the caller already evaluated it
    :return: an ArmOutcome. NO_UPDATE if fewer than two covering servers hold `user`'s file, since both arms then
        yield the same association
    """
    if len(file_holders(user, topology, cache, req)) < 2:
        return ArmOutcome(arm, Feedback.NO_UPDATE, math.nan, math.nan)

    if chosen_delay is None:
        chosen_delay = evaluate_delay(cache, assoc, req, ch, cfg).total
    other_servers, other_mode = user_servers(user, 1 - arm, topology, cache, req, ch)
    counterfactual_delay = evaluate_delay(cache, assoc.with_user(user, other_servers, other_mode), req, ch, cfg).total
    feedback = Feedback.REWARD if chosen_delay <= counterfactual_delay else Feedback.PENALTY
    return ArmOutcome(arm, feedback, chosen_delay, counterfactual_delay)


def mabla_round(topology, automata, cache, req, ch, cfg, rng, pinned_arm=None):
    """
    One round of hybrid transmission: every multi-covered user (ascending) selects an arm, the association is built,
    and each automaton is updated from its user's feedback.

    :param automata: dict that maps multi-covered users to AutomatonStates. not modified
    :param pinned_arm: if ARM_ST or ARM_JT then every user plays it and no automaton is sampled or updated. this gives
        the all-ST and all-JT baselines
    :return: a MablaRound
    """
    users = topology.multi_covered_users()
    if pinned_arm is not None:
        arms = {user: pinned_arm for user in users}
    else:
        arms = {user: bla_select(automata[user], rng) for user in users}

    assoc = build_association(topology, cache, req, ch, arms)
    if (pinned_arm is not None) or (not users):
        return MablaRound(assoc, automata, arms, {})

    round_delay = evaluate_delay(cache, assoc, req, ch, cfg).total
    outcomes = {user: evaluate_feedback(user, arms[user], topology, cache, assoc, req, ch, cfg,
                                        chosen_delay=round_delay)
                for user in users}
    new_automata = {user: bla_update(automata[user], outcomes[user]) for user in users}
    feedback_names = {user: outcome.feedback.name for user, outcome in outcomes.items()}
    logger.debug(f"mabla_round(): arms={arms}, feedback={feedback_names}")
    return MablaRound(assoc, new_automata, arms, outcomes)


#
# convergence diagnostics
#

ConvergenceDiagnostics = namedtuple('ConvergenceDiagnostics',
                                    ['posterior_means', 'optimal_arms', 'optimal_arm_frequency',
                                     'win_probabilities', 'p_optimal', 'factorial_estimate'])


def win_probability(alpha1, beta1, alpha2, beta2):
    """
    :return: P(X1 > X2) for independent X1 ~ Beta(alpha1, beta1) and X2 ~ Beta(alpha2, beta2). exact closed form when
        alpha1 is an integer, numerical integration otherwise
    """
    if float(alpha1).is_integer():
        idxs = np.arange(int(alpha1))
        terms = betaln(alpha2 + idxs, beta1 + beta2) - np.log(beta1 + idxs) - betaln(1 + idxs, beta1) \
                - betaln(alpha2, beta2)
        return float(np.exp(terms).sum())

    value, _ = integrate.quad(lambda x: stats.beta.pdf(x, alpha1, beta1) * stats.beta.cdf(x, alpha2, beta2), 0, 1)
    return float(value)


def factorial_estimate(state, arm):
    """
    :return: beta^i! alpha^(1-i)! / (beta^i + alpha^(1-i))!, the factorial expression used to argue convergence to
        `arm`. evaluated with lgamma so that non-integer parameters are accepted
    """
    _, beta = state.params(arm)
    other_alpha, _ = state.params(1 - arm)
    return math.exp(math.lgamma(beta + 1) + math.lgamma(other_alpha + 1) - math.lgamma(beta + other_alpha + 1))


def optimal_arm(state):
    """
    :return: the arm with the larger posterior mean. ties go to ARM_JT, matching bla_select()
    """
    return ARM_ST if state.posterior_mean(ARM_ST) > state.posterior_mean(ARM_JT) else ARM_JT


def convergence_report(automata, history):
    """
    :param automata: dict that maps users to AutomatonStates
    :param history: list of per-round dicts that map users to ArmOutcomes, e.g., MablaRound.outcomes
    :return: a ConvergenceDiagnostics. optimal_arm_frequency is the fraction of non-degenerate outcomes in `history`
        in which the chosen arm was the ex-post optimal one (i.e., rewarded). p_optimal is the product over users of
        the probability that the optimal arm's posterior sample wins
    """
    posterior_means, optimal_arms, win_probabilities, factorial_estimates = {}, {}, {}, {}
    for user, state in automata.items():
        arm = optimal_arm(state)
        posterior_means[user] = (state.posterior_mean(ARM_ST), state.posterior_mean(ARM_JT))
        optimal_arms[user] = arm
        win_probabilities[user] = win_probability(*state.params(arm), *state.params(1 - arm))
        factorial_estimates[user] = factorial_estimate(state, arm)

    outcomes = [outcome for outcomes in history for outcome in outcomes.values()
                if outcome.feedback != Feedback.NO_UPDATE]
    num_optimal = sum(outcome.feedback == Feedback.REWARD for outcome in outcomes)
    return ConvergenceDiagnostics(posterior_means, optimal_arms, num_optimal / len(outcomes) if outcomes else math.nan,
                                  win_probabilities, float(np.prod(list(win_probabilities.values()))),
                                  float(np.prod(list(factorial_estimates.values()))))


class BernoulliArms:
    """
    A stationary two-armed Bernoulli bandit: pulling arm i pays a reward with probability `probabilities[i]`.
    """


    def __init__(self, probabilities):
        self.probabilities = tuple(probabilities)


    def __repr__(self):
        return str((self.__class__.__name__, self.probabilities))


    @property
    def best_arm(self):
        return int(np.argmax(self.probabilities))


    def pull(self, arm, rng):
        """
        :return: an ArmOutcome whose feedback is REWARD or PENALTY. delays are not defined for a bandit
        """
        feedback = Feedback.REWARD if rng.random() < self.probabilities[arm] else Feedback.PENALTY
        return ArmOutcome(arm, feedback, math.nan, math.nan)


    def run(self, num_steps, rng, state=None):
        """
        Plays one automaton against me for `num_steps` steps.

        :return: 2-tuple: (final AutomatonState, list of the arms chosen at each step)
        """
        state = state or AutomatonState()
        chosen_arms = []
        for _ in range(num_steps):
            arm = bla_select(state, rng)
            state = bla_update(state, self.pull(arm, rng))
            chosen_arms.append(arm)
        return state, chosen_arms
