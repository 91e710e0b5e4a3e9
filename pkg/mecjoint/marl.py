import copy
import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


logger = logging.getLogger(__name__)


#
# This file implements the multi-agent caching learner: each edge server is an agent whose actor sees only its own
# observation and whose critic sees the global state and joint action (MADDPG). Actions are discrete: 0 is a no-op,
# and 1..F1*F encode (slot to delete, file to add). The actor's categorical output is relaxed with Gumbel noise and a
# straight-through estimator during training, and used greedily (with epsilon exploration) during execution.
#
# A single-agent baseline (SARL) observes the concatenated global state and picks all E actions jointly from one
# network with one Q head per edge.
#
# All networks are float64 so that finite-difference gradient checks are meaningful.
#

ACTION_NOOP = 0
CHECKPOINT_VERSION = 1
DTYPE = torch.float64
REWARD_INVERSE_EDGE_DELAY = 'inverse_edge_delay'
REWARD_NEGATIVE_TOTAL_DELAY = 'negative_total_delay'
REWARD_KINDS = (REWARD_INVERSE_EDGE_DELAY, REWARD_NEGATIVE_TOTAL_DELAY)


@dataclass(frozen=True)
class LearnerConfig:
    """
    Learning hyperparameters of the caching learners.
    """
    hidden_dim: int = 128
    learning_rate: float = 1.5e-4
    gamma: float = 0.95
    tau: float = 0.001  # decay rate of the soft target updates
    batch_size: int = 512
    replay_capacity: int = 100000
    learning_starts: int = 0  # 0 -> batch_size
    epsilon_start: float = 0.03
    epsilon_end: float = 0.0
    gumbel_temperature: float = 1.0
    optimizer: str = 'sgd'  # 'sgd' | 'adam'
    reward_kind: str = REWARD_INVERSE_EDGE_DELAY  # see compute_reward()


    @property
    def min_transitions(self):
        return self.learning_starts if self.learning_starts > 0 else self.batch_size


    def validate(self):
        error_messages = []
        for field_name in ('hidden_dim', 'batch_size', 'replay_capacity'):
            if getattr(self, field_name) < 1:
                error_messages.append(f"{field_name} must be >= 1. {field_name}={getattr(self, field_name)}")
        if self.learning_rate < 0:
            error_messages.append(f"learning_rate must be >= 0. learning_rate={self.learning_rate}")
        if not (0 <= self.gamma <= 1):
            error_messages.append(f"gamma must be in [0, 1]. gamma={self.gamma}")
        if not (0 < self.tau <= 1):
            error_messages.append(f"tau must be in (0, 1]. tau={self.tau}")
        if self.learning_starts < 0:
            error_messages.append(f"learning_starts must be >= 0. learning_starts={self.learning_starts}")
        for field_name in ('epsilon_start', 'epsilon_end'):
            if not (0 <= getattr(self, field_name) <= 1):
                error_messages.append(f"{field_name} must be in [0, 1]. {field_name}={getattr(self, field_name)}")
        if not (self.gumbel_temperature > 0):
            error_messages.append(f"gumbel_temperature must be > 0. gumbel_temperature={self.gumbel_temperature}")
        if self.optimizer not in OPTIMIZERS:
            error_messages.append(f"optimizer must be one of {sorted(OPTIMIZERS)}. optimizer={self.optimizer!r}")
        if self.reward_kind not in REWARD_KINDS:
            error_messages.append(f"reward_kind must be one of {list(REWARD_KINDS)}. "
                                  f"reward_kind={self.reward_kind!r}")
        return error_messages


OPTIMIZERS = {'sgd': torch.optim.SGD, 'adam': torch.optim.Adam}


def make_optimizer(name, parameters, learning_rate):
    return OPTIMIZERS[name](parameters, lr=learning_rate)


class LinearSchedule:
    """
    Anneals linearly from `start` to `end` over `num_steps` steps, then stays at `end`.
    """


    def __init__(self, start, end, num_steps):
        self.start, self.end, self.num_steps = start, end, max(int(num_steps), 1)


    def value(self, step):
        fraction = min(step / self.num_steps, 1.0)
        return self.start + fraction * (self.end - self.start)


#
# actions
#

def decode_action(action, num_files, cache_slots):
    """
    :param action: an int in 0..cache_slots * num_files
    :return: None for the no-op, otherwise a 2-tuple: (delete_slot, add_file) with a 0-based slot and a 1-based file
    :raises ValueError: if `action` is out of range
    """
    if not (0 <= action <= cache_slots * num_files):
        raise ValueError(f"action out of range. action={action}, max={cache_slots * num_files}")

    if action == ACTION_NOOP:
        return None

    delete_slot, file_idx = divmod(action - 1, num_files)
    return delete_slot, file_idx + 1


def encode_action(delete_slot, add_file, num_files):
    """
    The inverse of decode_action() for non-no-op actions.
    """
    return delete_slot * num_files + add_file


def apply_cache_action(cache, edge, decoded):
    """
    Deletes the file in `decoded`'s slot and writes its file there. Adding a file that `edge` already caches is a
    no-op, so a cache never holds duplicates.

    :param cache: a warmed CacheState. not modified
    :param decoded: as returned by decode_action()
    :return: a CacheState. `cache` itself if nothing changed
    """
    if decoded is None:
        return cache

    delete_slot, add_file = decoded
    if cache.holds(edge, add_file):
        return cache

    new_cache = cache.copy()
    new_cache.clock += 1
    new_cache.slots[edge, delete_slot] = add_file
    new_cache.last_access[edge, delete_slot] = new_cache.clock
    new_cache.frequency[edge, delete_slot] = 0
    new_cache.inserted_at[edge, delete_slot] = new_cache.clock
    return new_cache


def compute_reward(edge, delay_report, reward_kind=REWARD_INVERSE_EDGE_DELAY):
    """
    :param reward_kind: REWARD_INVERSE_EDGE_DELAY: 1 / (the delay of the traffic `edge` served), 0 if it served none.
        REWARD_NEGATIVE_TOTAL_DELAY: the team reward -(total delay), the same for every edge
    :return: `edge`'s reward for one evaluated step
    """
    if reward_kind == REWARD_NEGATIVE_TOTAL_DELAY:
        return -delay_report.total

    edge_delay = delay_report.per_edge_delay[edge]
    return 1.0 / edge_delay if edge_delay > 0 else 0.0


def compute_rewards(delay_report, reward_kind=REWARD_INVERSE_EDGE_DELAY):
    """
    :return: list of compute_reward() for every edge in `delay_report`
    """
    return [compute_reward(edge, delay_report, reward_kind) for edge in range(len(delay_report.per_edge_delay))]


#
# observations and state
#

def request_histograms(topology, req, num_files):
    """
    :return: E x F int array: per edge, how many of its covered users request each file. this is the edge's local
        observation of the requested files F^r_e
    """
    histograms = np.zeros((topology.num_edges, num_files), dtype=int)
    for edge in range(topology.num_edges):
        for user in topology.users_of_edge(edge):
            histograms[edge, req.files[user] - 1] += 1
    return histograms


def observation_dim(num_files, cache_slots):
    return num_files + cache_slots * num_files


def encode_observations(histograms, slots, num_files):
    """
    Encodes each edge's observation as its request histogram followed by the one-hot files of its own slots.

    :param histograms: (..., E, F) request counts
    :param slots: (..., E, F1) 1-based file ids (0 = empty)
    :return: (..., E, F + F1 * F) float array
    """
    histograms = np.asarray(histograms, dtype=float)
    slots = np.asarray(slots, dtype=int)
    one_hot = np.eye(num_files + 1)[slots][..., 1:]  # (..., E, F1, F). empty slots encode as zeros
    return np.concatenate([histograms, one_hot.reshape(slots.shape[:-1] + (-1,))], axis=-1)


def global_state(observations):
    """
    :return: the concatenation of all edges' observations: (..., E * obs_dim)
    """
    observations = np.asarray(observations)
    return observations.reshape(observations.shape[:-2] + (-1,))


#
# ReplayBuffer
#

Minibatch = namedtuple('Minibatch', ['states', 'observations', 'actions', 'rewards', 'next_states',
                                     'next_observations'])


class ReplayBuffer:
    """
    A ring buffer of joint transitions. Observations are stored compactly as request histograms and cache slots and
    encoded when sampled.
    """


    def __init__(self, capacity, num_edges, num_files, cache_slots):
        self.capacity = int(capacity)
        self.num_files = num_files
        self.histograms = np.zeros((self.capacity, num_edges, num_files), dtype=np.int16)
        self.slots = np.zeros((self.capacity, num_edges, cache_slots), dtype=np.int16)
        self.actions = np.zeros((self.capacity, num_edges), dtype=np.int64)
        self.rewards = np.zeros((self.capacity, num_edges), dtype=np.float64)
        self.next_histograms = np.zeros_like(self.histograms)
        self.next_slots = np.zeros_like(self.slots)
        self.next_index = 0
        self.size = 0


    def __len__(self):
        return self.size


    def add(self, histograms, slots, actions, rewards, next_histograms, next_slots):
        idx = self.next_index
        self.histograms[idx] = histograms
        self.slots[idx] = slots
        self.actions[idx] = actions
        self.rewards[idx] = rewards
        self.next_histograms[idx] = next_histograms
        self.next_slots[idx] = next_slots
        self.next_index = (idx + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)


    def sample_indices(self, batch_size, rng):
        """
        :return: up to `batch_size` distinct indices drawn uniformly
        """
        return rng.choice(self.size, size=min(batch_size, self.size), replace=False)


    def minibatch(self, idxs):
        observations = encode_observations(self.histograms[idxs], self.slots[idxs], self.num_files)
        next_observations = encode_observations(self.next_histograms[idxs], self.next_slots[idxs], self.num_files)
        return Minibatch(torch.as_tensor(global_state(observations), dtype=DTYPE),
                         torch.as_tensor(observations, dtype=DTYPE),
                         torch.as_tensor(self.actions[idxs]),
                         torch.as_tensor(self.rewards[idxs], dtype=DTYPE),
                         torch.as_tensor(global_state(next_observations), dtype=DTYPE),
                         torch.as_tensor(next_observations, dtype=DTYPE))


    def sample(self, batch_size, rng):
        return self.minibatch(self.sample_indices(batch_size, rng))


    def state_dict(self):
        return {'histograms': self.histograms[:self.size].copy(), 'slots': self.slots[:self.size].copy(),
                'actions': self.actions[:self.size].copy(), 'rewards': self.rewards[:self.size].copy(),
                'next_histograms': self.next_histograms[:self.size].copy(),
                'next_slots': self.next_slots[:self.size].copy(), 'next_index': self.next_index, 'size': self.size}


    def load_state_dict(self, state):
        size = state['size']
        for name in ('histograms', 'slots', 'actions', 'rewards', 'next_histograms', 'next_slots'):
            getattr(self, name)[:size] = state[name]
        self.next_index, self.size = state['next_index'], size


#
# networks
#

class Actor(nn.Module):
    """
    Maps an edge's observation to logits over its F1 * F + 1 caching actions.
    """


    def __init__(self, obs_dim, num_actions, hidden_dim):
        super().__init__()
        self.network = nn.Sequential(
            nn.Linear(obs_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, num_actions),
        )


    def forward(self, observation):
        return self.network(observation)


class Critic(nn.Module):
    """
    Centralized action-value function Q_e(s, a_1..a_E). Joint actions are one-hot per edge and concatenated.
    """


    def __init__(self, state_dim, joint_action_dim, hidden_dim):
        super().__init__()
        self.network = nn.Sequential(
            nn.Linear(state_dim + joint_action_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, 1),
        )


    def forward(self, state, joint_actions):
        return self.network(torch.cat([state, joint_actions], dim=-1)).squeeze(-1)


class CachingAgent:
    """
    One edge server's actor and critic plus their target copies and optimizers.
    """


    def __init__(self, index, obs_dim, num_agents, num_actions, learner_cfg):
        self.index = index
        self.num_agents = num_agents
        self.num_actions = num_actions
        self.gamma = learner_cfg.gamma
        self.gumbel_temperature = learner_cfg.gumbel_temperature
        self.actor = Actor(obs_dim, num_actions, learner_cfg.hidden_dim).to(DTYPE)
        self.critic = Critic(obs_dim * num_agents, num_actions * num_agents, learner_cfg.hidden_dim).to(DTYPE)
        self.target_actor = copy.deepcopy(self.actor)
        self.target_critic = copy.deepcopy(self.critic)
        self.actor_optimizer = make_optimizer(learner_cfg.optimizer, self.actor.parameters(),
                                              learner_cfg.learning_rate)
        self.critic_optimizer = make_optimizer(learner_cfg.optimizer, self.critic.parameters(),
                                               learner_cfg.learning_rate)


    def __repr__(self):
        return str((self.__class__.__name__, self.index, self.num_actions))


    def state_dict(self):
        return {'actor': self.actor.state_dict(), 'critic': self.critic.state_dict(),
                'target_actor': self.target_actor.state_dict(), 'target_critic': self.target_critic.state_dict(),
                'actor_optimizer': self.actor_optimizer.state_dict(),
                'critic_optimizer': self.critic_optimizer.state_dict()}


    def load_state_dict(self, state):
        self.actor.load_state_dict(state['actor'])
        self.critic.load_state_dict(state['critic'])
        self.target_actor.load_state_dict(state['target_actor'])
        self.target_critic.load_state_dict(state['target_critic'])
        self.actor_optimizer.load_state_dict(state['actor_optimizer'])
        self.critic_optimizer.load_state_dict(state['critic_optimizer'])


def select_action(agent, observation, epsilon, rng):
    """
    Epsilon-greedy over the actor's categorical output.

    :param observation: the edge's obs_dim array
    :param epsilon: exploration probability. pass 0 to act greedily
    :param rng: a numpy Generator
    :return: an int action
    """
    if rng.random() < epsilon:
        return int(rng.integers(agent.num_actions))

    with torch.no_grad():
        logits = agent.actor(torch.as_tensor(observation, dtype=DTYPE))
    return int(torch.argmax(logits))


def one_hot_actions(actions, num_actions):
    """
    :param actions: (B, E) long tensor
    :return: (B, E * num_actions) float tensor
    """
    return F.one_hot(actions, num_actions).to(DTYPE).reshape(actions.shape[0], -1)


def target_joint_actions(target_actors, next_observations, num_actions):
    """
    :return: (B, E * A) one-hot of every target actor's greedy action on its own next observation
    """
    with torch.no_grad():
        actions = [torch.argmax(target_actor(next_observations[:, idx]), dim=-1)
                   for idx, target_actor in enumerate(target_actors)]
    return one_hot_actions(torch.stack(actions, dim=1), num_actions)


def critic_loss(agent, minibatch, target_actors):
    """
    Mean squared error between Q_e(s, a) and y_e = r_e + gamma * Q'_e(s', a') where a' comes from the target actors.

    :param target_actors: every agent's target actor, in agent order
    :return: a scalar tensor
    """
    next_joint_actions = target_joint_actions(target_actors, minibatch.next_observations, agent.num_actions)
    with torch.no_grad():
        targets = minibatch.rewards[:, agent.index] + \
                  agent.gamma * agent.target_critic(minibatch.next_states, next_joint_actions)
    q_values = agent.critic(minibatch.states, one_hot_actions(minibatch.actions, agent.num_actions))
    return F.mse_loss(q_values, targets)


def sample_gumbel(shape, rng):
    uniforms = rng.random(shape)
    return torch.as_tensor(-np.log(-np.log(np.clip(uniforms, 1e-20, 1.0 - 1e-16))), dtype=DTYPE)


def relaxed_actions(logits, gumbel_noise, temperature, straight_through=True):
    """
    Gumbel-softmax relaxation of a categorical sample. With `straight_through` the forward value is the one-hot of the
    argmax while gradients flow through the soft sample.
    """
    soft = torch.softmax((logits + gumbel_noise) / temperature, dim=-1)
    if not straight_through:
        return soft

    hard = F.one_hot(torch.argmax(soft, dim=-1), soft.shape[-1]).to(soft.dtype)
    return hard - soft.detach() + soft


def actor_loss(agent, minibatch, gumbel_noise, straight_through=True):
    """
    -Q_e(s, a) averaged over the minibatch, where agent e's action is the relaxed sample of its actor and every other
    agent's action is the one stored in the transition.
    """
    logits = agent.actor(minibatch.observations[:, agent.index])
    own_actions = relaxed_actions(logits, gumbel_noise, agent.gumbel_temperature, straight_through)
    joint_actions = F.one_hot(minibatch.actions, agent.num_actions).to(DTYPE)
    joint_actions = torch.cat([joint_actions[:, :agent.index], own_actions.unsqueeze(1),
                               joint_actions[:, agent.index + 1:]], dim=1)
    return -agent.critic(minibatch.states, joint_actions.reshape(joint_actions.shape[0], -1)).mean()


def critic_gradient_step(agent, minibatch, target_actors):
    loss = critic_loss(agent, minibatch, target_actors)
    agent.critic_optimizer.zero_grad()
    loss.backward()
    agent.critic_optimizer.step()
    return float(loss)


def actor_gradient_step(agent, minibatch, rng, gumbel_noise=None, straight_through=True):
    """
    One ascent step on the relaxed policy gradient of Q_e with respect to the actor parameters.

    :param gumbel_noise: optional (B, A) tensor. drawn from `rng` if None
    :return: the loss value (a float)
    """
    if gumbel_noise is None:
        gumbel_noise = sample_gumbel((minibatch.observations.shape[0], agent.num_actions), rng)
    loss = actor_loss(agent, minibatch, gumbel_noise, straight_through)
    agent.actor_optimizer.zero_grad()
    loss.backward()
    agent.actor_optimizer.step()
    return float(loss)


def soft_update(target_module, online_module, tau):
    with torch.no_grad():
        for target_param, param in zip(target_module.parameters(), online_module.parameters()):
            target_param.lerp_(param, tau)  # target + tau * (online - target)


def soft_update_targets(agent, tau):
    """
    target <- tau * online + (1 - tau) * target for both the actor and the critic.
    """
    if not (0 < tau <= 1):
        raise RuntimeError(f"tau must be in (0, 1]. tau={tau}")

    soft_update(agent.target_actor, agent.actor, tau)
    soft_update(agent.target_critic, agent.critic, tau)


#
# MaddpgCaching
#

class MaddpgCaching:
    """
    Coordinates one CachingAgent per edge and their shared replay buffer.
    """


    def __init__(self, sim_cfg, learner_cfg):
        self.sim_cfg = sim_cfg
        self.learner_cfg = learner_cfg
        self.num_files = sim_cfg.num_files
        obs_dim = observation_dim(sim_cfg.num_files, sim_cfg.cache_slots)
        self.agents = [CachingAgent(edge, obs_dim, sim_cfg.num_edges, sim_cfg.num_actions, learner_cfg)
                       for edge in range(sim_cfg.num_edges)]
        self.buffer = ReplayBuffer(learner_cfg.replay_capacity, sim_cfg.num_edges, sim_cfg.num_files,
                                   sim_cfg.cache_slots)
        self.num_updates = 0


    def act(self, histograms, slots, epsilon, rng):
        """
        :return: E array of actions, one per agent from its own observation only
        """
        observations = encode_observations(histograms, slots, self.num_files)
        return np.array([select_action(agent, observations[agent.index], epsilon, rng) for agent in self.agents])


    def store(self, histograms, slots, actions, rewards, next_histograms, next_slots):
        self.buffer.add(histograms, slots, actions, rewards, next_histograms, next_slots)


    def learn(self, rng):
        """
        Each agent in turn samples its own minibatch and updates its critic then its actor. Targets are updated once
        all agents are done. Does nothing until the buffer holds `min_transitions` transitions.

        :return: list of (critic_loss, actor_loss) per agent. empty if no update was done
        """
        if len(self.buffer) < self.learner_cfg.min_transitions:
            return []

        target_actors = [agent.target_actor for agent in self.agents]
        losses = []
        for agent in self.agents:
            minibatch = self.buffer.sample(self.learner_cfg.batch_size, rng)
            losses.append((critic_gradient_step(agent, minibatch, target_actors),
                           actor_gradient_step(agent, minibatch, rng)))
        for agent in self.agents:
            soft_update_targets(agent, self.learner_cfg.tau)
        self.num_updates += 1
        logger.debug(f"learn(): num_updates={self.num_updates}, losses={losses}")
        return losses


    def state_dict(self):
        return {'agents': [agent.state_dict() for agent in self.agents], 'buffer': self.buffer.state_dict(),
                'num_updates': self.num_updates}


    def load_state_dict(self, state):
        for agent, agent_state in zip(self.agents, state['agents']):
            agent.load_state_dict(agent_state)
        self.buffer.load_state_dict(state['buffer'])
        self.num_updates = state['num_updates']


#
# SARL baseline
#

class QNetwork(nn.Module):
    """
    Global state -> E heads of F1 * F + 1 action values.
    """


    def __init__(self, state_dim, num_edges, num_actions, hidden_dim):
        super().__init__()
        self.num_edges, self.num_actions = num_edges, num_actions
        self.network = nn.Sequential(
            nn.Linear(state_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, num_edges * num_actions),
        )


    def forward(self, state):
        return self.network(state).reshape(state.shape[:-1] + (self.num_edges, self.num_actions))


class SarlAgent:
    """
    One Q-learning agent deciding every edge's cache action from the concatenated global state.
    """


    def __init__(self, state_dim, num_edges, num_actions, learner_cfg):
        self.num_edges, self.num_actions = num_edges, num_actions
        self.gamma = learner_cfg.gamma
        self.q_network = QNetwork(state_dim, num_edges, num_actions, learner_cfg.hidden_dim).to(DTYPE)
        self.target_q_network = copy.deepcopy(self.q_network)
        self.optimizer = make_optimizer(learner_cfg.optimizer, self.q_network.parameters(),
                                        learner_cfg.learning_rate)


    def q_values(self, state):
        """
        :return: (E, A) numpy array of action values for one global state
        """
        with torch.no_grad():
            return self.q_network(torch.as_tensor(state, dtype=DTYPE)).numpy()


def sarl_baseline_step(agent, state, epsilon, rng):
    """
    Picks the joint action: per edge, a uniform random action with probability `epsilon`, otherwise the argmax of
    that edge's Q head.

    :return: E array of actions
    """
    q_values = agent.q_values(state)
    actions = []
    for edge in range(agent.num_edges):
        if rng.random() < epsilon:
            actions.append(int(rng.integers(agent.num_actions)))
        else:
            actions.append(int(np.argmax(q_values[edge])))
    return np.array(actions)


def sarl_loss(agent, minibatch):
    """
    Every head regresses onto the team reward sum_e r_e plus its own discounted greedy target value.
    """
    team_rewards = minibatch.rewards.sum(dim=1, keepdim=True)
    with torch.no_grad():
        targets = team_rewards + agent.gamma * agent.target_q_network(minibatch.next_states).max(dim=-1).values
    q_values = agent.q_network(minibatch.states).gather(-1, minibatch.actions.unsqueeze(-1)).squeeze(-1)
    return F.mse_loss(q_values, targets)


class SarlCaching:
    """
    Same interface as MaddpgCaching, backed by a single SarlAgent.
    """


    def __init__(self, sim_cfg, learner_cfg):
        self.sim_cfg = sim_cfg
        self.learner_cfg = learner_cfg
        self.num_files = sim_cfg.num_files
        state_dim = observation_dim(sim_cfg.num_files, sim_cfg.cache_slots) * sim_cfg.num_edges
        self.agent = SarlAgent(state_dim, sim_cfg.num_edges, sim_cfg.num_actions, learner_cfg)
        self.buffer = ReplayBuffer(learner_cfg.replay_capacity, sim_cfg.num_edges, sim_cfg.num_files,
                                   sim_cfg.cache_slots)
        self.num_updates = 0


    def act(self, histograms, slots, epsilon, rng):
        state = global_state(encode_observations(histograms, slots, self.num_files))
        return sarl_baseline_step(self.agent, state, epsilon, rng)


    def store(self, histograms, slots, actions, rewards, next_histograms, next_slots):
        self.buffer.add(histograms, slots, actions, rewards, next_histograms, next_slots)


    def learn(self, rng):
        if len(self.buffer) < self.learner_cfg.min_transitions:
            return []

        minibatch = self.buffer.sample(self.learner_cfg.batch_size, rng)
        loss = sarl_loss(self.agent, minibatch)
        self.agent.optimizer.zero_grad()
        loss.backward()
        self.agent.optimizer.step()
        soft_update(self.agent.target_q_network, self.agent.q_network, self.learner_cfg.tau)
        self.num_updates += 1
        return [float(loss)]


    def state_dict(self):
        return {'q_network': self.agent.q_network.state_dict(),
                'target_q_network': self.agent.target_q_network.state_dict(),
                'optimizer': self.agent.optimizer.state_dict(), 'buffer': self.buffer.state_dict(),
                'num_updates': self.num_updates}


    def load_state_dict(self, state):
        self.agent.q_network.load_state_dict(state['q_network'])
        self.agent.target_q_network.load_state_dict(state['target_q_network'])
        self.agent.optimizer.load_state_dict(state['optimizer'])
        self.buffer.load_state_dict(state['buffer'])
        self.num_updates = state['num_updates']
