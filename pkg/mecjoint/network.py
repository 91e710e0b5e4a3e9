import enum
import logging
import math
from dataclasses import dataclass, fields

import numpy as np


logger = logging.getLogger(__name__)


#
# This file defines the physical network model: configuration, geometry (edge cells and PPP users), Zipf traffic,
# Rayleigh channels with path loss, and the binary state tensors x (caching), y (association), and z (requests).
#
# File ids are 1-based everywhere in the public API (1..F). Column f-1 of the x and z matrices holds file f. A slot
# holding file 0 is empty.
#

MIN_PATH_LOSS_DISTANCE = 1.0  # meters. distances below this are clamped before applying d^(-alpha/2)
MAX_TOPOLOGY_RESAMPLES = 100
POWER_ALLOCATIONS = ('equal_split', 'fixed')


class EmptyTopologyError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """
    Physical and traffic parameters of the network. Defaults are the deployment described for the three-cell setup:
    1 MB files, 10 MB caches, 50 files, 100 m cells, 4.5 MHz links, and a 39.953 W system peak power.
    """
    num_edges: int = 3  # E
    num_files: int = 50  # F
    cache_slots: int = 10  # F1
    file_size_bits: float = 8e6  # s_f
    cell_radius: float = 100.0  # r, meters
    user_density: float = 200.0  # lambda, users per km^2
    zipf_skew: float = 1.2  # upsilon
    path_loss: float = 4.0  # alpha
    bandwidth_edge: float = 4.5e6  # B_{e,u}, Hz
    bandwidth_cloud: float = 4.5e6  # B_{c,u}, Hz
    cloud_distance: float = 3000.0  # d_{c,u}, meters
    peak_power: float = 39.953  # P, watts
    noise_power: float = 1e-13  # sigma^2, watts
    rng_seed: int = 0
    fixed_users: int = 20  # 0 -> draw the user count from the PPP
    power_split: float = 0.5  # fraction of P given to the edge links. the rest goes to the cloud links
    power_allocation: str = 'equal_split'  # 'equal_split' re-splits over the active links | 'fixed' keeps p as given


    @property
    def cache_capacity_bits(self):
        """
        :return: C_e, the per-edge cache capacity in bits
        """
        return self.cache_slots * self.file_size_bits


    @property
    def num_actions(self):
        """
        :return: size of each caching agent's action space: {0, 1, ..., F1 * F}
        """
        return self.cache_slots * self.num_files + 1


    def validate(self):
        """
        :return: a list of error messages (strings), one per invalid field. empty if valid
        """
        error_messages = []
        if self.num_edges < 1:
            error_messages.append(f"num_edges must be >= 1. num_edges={self.num_edges}")
        if self.num_files < 1:
            error_messages.append(f"num_files must be >= 1. num_files={self.num_files}")
        if not (1 <= self.cache_slots < self.num_files):
            error_messages.append(f"cache_slots must satisfy 1 <= cache_slots < num_files. "
                                  f"cache_slots={self.cache_slots}, num_files={self.num_files}")
        for field_name in ('file_size_bits', 'cell_radius', 'user_density', 'path_loss', 'bandwidth_edge',
                           'bandwidth_cloud', 'cloud_distance', 'peak_power', 'noise_power'):
            value = getattr(self, field_name)
            if not (value > 0) or math.isinf(value):
                error_messages.append(f"{field_name} must be strictly positive and finite. {field_name}={value}")
        if not (self.zipf_skew >= 0) or math.isinf(self.zipf_skew):
            error_messages.append(f"zipf_skew must be >= 0. zipf_skew={self.zipf_skew}")
        if self.fixed_users < 0:
            error_messages.append(f"fixed_users must be >= 0. fixed_users={self.fixed_users}")
        if not (0 < self.power_split < 1):
            error_messages.append(f"power_split must be in (0, 1). power_split={self.power_split}")
        if self.power_allocation not in POWER_ALLOCATIONS:
            error_messages.append(f"power_allocation must be one of {list(POWER_ALLOCATIONS)}. "
                                  f"power_allocation={self.power_allocation!r}")
        return error_messages


    @classmethod
    def field_names(cls):
        return [field.name for field in fields(cls)]


#
# Mode
#

class Mode(enum.Enum):
    """
    Transmission mode of a user.
    """
    ST = enum.auto()
    JT = enum.auto()
    CLOUD = enum.auto()


#
# NetworkTopology and sample_topology()
#

class NetworkTopology:
    """
    Positions of the edge servers and users, and the coverage relation between them. Positions are fixed for the
    duration of an experiment.
    """


    def __init__(self, edge_positions, user_positions, cell_radius):
        """
        :param edge_positions: E x 2 array-like of meters
        :param user_positions: U x 2 array-like of meters
        :param cell_radius: r, meters. e covers u iff distance(e, u) <= r
        """
        self.edge_positions = np.asarray(edge_positions, dtype=float).reshape(-1, 2)
        self.user_positions = np.asarray(user_positions, dtype=float).reshape(-1, 2)
        self.cell_radius = float(cell_radius)
        deltas = self.edge_positions[:, None, :] - self.user_positions[None, :, :]
        self.distances = np.sqrt((deltas ** 2).sum(axis=2))  # E x U
        self.coverage_matrix = self.distances <= self.cell_radius  # E x U


    def __repr__(self):
        return str((self.num_edges, self.num_users, self.cell_radius))


    @property
    def num_edges(self):
        return self.edge_positions.shape[0]


    @property
    def num_users(self):
        return self.user_positions.shape[0]


    def coverage(self, user):
        """
        :return: E^u: list of the edge servers covering `user`, ascending
        """
        return [int(edge) for edge in np.flatnonzero(self.coverage_matrix[:, user])]


    def users_of_edge(self, edge):
        """
        :return: U^e: list of the users covered by `edge`, ascending
        """
        return [int(user) for user in np.flatnonzero(self.coverage_matrix[edge, :])]


    def multi_covered_users(self):
        """
        :return: U^E: users covered by two or more edge servers, ascending. these are the users that choose between ST
            and JT
        """
        return [int(user) for user in np.flatnonzero(self.coverage_matrix.sum(axis=0) >= 2)]


    def uncovered_users(self):
        return [int(user) for user in np.flatnonzero(self.coverage_matrix.sum(axis=0) == 0)]


def edge_positions_for(num_edges, cell_radius):
    """
    Deterministic cell geometry: one edge at the origin; three edges on an equilateral triangle of side r (so that
    all three cells intersect); any other count on a ring of radius 0.9 r.

    :return: E x 2 array of meters
    """
    if num_edges == 1:
        return np.zeros((1, 2))

    if num_edges == 3:
        ring_radius = cell_radius / math.sqrt(3)  # circumradius of the triangle of side r
    else:
        ring_radius = 0.9 * cell_radius
    angles = 2 * math.pi * np.arange(num_edges) / num_edges + math.pi / 2
    return ring_radius * np.column_stack((np.cos(angles), np.sin(angles)))


def deployment_disc(edge_positions, cell_radius):
    """
    :return: 2-tuple: (center, radius) of the disc users are placed in: centered on the edges' centroid, and large
        enough to contain every cell
    """
    center = edge_positions.mean(axis=0)
    radius = np.sqrt(((edge_positions - center) ** 2).sum(axis=1)).max() + cell_radius
    return center, float(radius)


def deployment_area_km2(cfg):
    _, radius = deployment_disc(edge_positions_for(cfg.num_edges, cfg.cell_radius), cfg.cell_radius)
    return math.pi * radius ** 2 / 1e6


def sample_user_count(cfg, rng, size=None):
    """
    :return: a Poisson(lambda * area) draw (or `size` of them), area being deployment_area_km2()
    """
    return rng.poisson(cfg.user_density * deployment_area_km2(cfg), size=size)


def sample_topology(cfg, rng):
    """
    Places the edge servers per edge_positions_for() and samples users as a PPP of intensity `cfg.user_density` over
    the deployment disc. If `cfg.fixed_users` is positive then exactly that many users are placed uniformly instead.

    :param cfg: a SimConfig
    :param rng: a numpy Generator
    :return: a NetworkTopology
    :raises EmptyTopologyError: if zero users were sampled. callers may resample
    """
    edge_positions = edge_positions_for(cfg.num_edges, cfg.cell_radius)
    center, radius = deployment_disc(edge_positions, cfg.cell_radius)
    num_users = cfg.fixed_users if cfg.fixed_users > 0 else int(sample_user_count(cfg, rng))
    if num_users == 0:
        raise EmptyTopologyError(f"sampled zero users. user_density={cfg.user_density}, "
                                 f"area_km2={deployment_area_km2(cfg)}")

    # uniform in the disc: sqrt for the radial coordinate
    radii = radius * np.sqrt(rng.random(num_users))
    angles = 2 * math.pi * rng.random(num_users)
    user_positions = center + np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
    topology = NetworkTopology(edge_positions, user_positions, cfg.cell_radius)
    logger.debug(f"sample_topology(): num_users={num_users}, multi_covered={topology.multi_covered_users()}, "
                 f"uncovered={topology.uncovered_users()}")
    return topology


def sample_topology_resampling(cfg, rng, max_resamples=MAX_TOPOLOGY_RESAMPLES):
    """
    Calls sample_topology() until it returns a non-empty topology.
    """
    for attempt in range(max_resamples):
        try:
            return sample_topology(cfg, rng)
        except EmptyTopologyError as exc:
            logger.warning(f"sample_topology_resampling(): resampling. attempt={attempt}, exc={exc}")
    raise EmptyTopologyError(f"gave up after {max_resamples} empty topologies")


#
# RequestState and sample_requests()
#

class RequestState:
    """
    One requested file per user per step.
    """


    def __init__(self, files, num_files):
        """
        :param files: U array-like of 1-based file ids
        :param num_files: F
        """
        self.files = np.asarray(files, dtype=int).reshape(-1)
        self.num_files = int(num_files)
        if self.files.size and ((self.files.min() < 1) or (self.files.max() > self.num_files)):
            raise RuntimeError(f"file ids must be in 1..{self.num_files}. files={self.files}")


    def __repr__(self):
        return str(tuple(self.files))


    @property
    def z(self):
        """
        :return: U x F binary matrix with exactly one 1 per row
        """
        z = np.zeros((self.files.size, self.num_files), dtype=int)
        z[np.arange(self.files.size), self.files - 1] = 1
        return z


def zipf_probabilities(num_files, skew):
    """
    :return: F array whose k-1'th entry is the probability of requesting the file of rank k: k^-skew / sum_j j^-skew
    """
    weights = np.arange(1, num_files + 1, dtype=float) ** (-skew)
    return weights / weights.sum()


def sample_requests(cfg, topology, rng):
    """
    Each user independently requests a file drawn from the Zipf popularity distribution. File id k has rank k.

    :return: a RequestState
    """
    probabilities = zipf_probabilities(cfg.num_files, cfg.zipf_skew)
    files = rng.choice(cfg.num_files, size=topology.num_users, p=probabilities) + 1
    return RequestState(files, cfg.num_files)


#
# CacheState
#

class CacheState:
    """
    The contents of every edge cache as F1 slots per edge, plus the per-slot bookkeeping that the fixed replacement
    policies need. `x` is derived from the slots. Operations that change a cache return a new CacheState.
    """


    def __init__(self, slots, num_files, last_access=None, frequency=None, inserted_at=None, clock=0):
        """
        :param slots: E x F1 array-like of 1-based file ids. 0 marks an empty slot
        :param num_files: F
        :param last_access: optional E x F1 int array of clock values. defaults to zeros
        :param frequency: optional E x F1 int array of access counts. defaults to zeros
        :param inserted_at: optional E x F1 int array of clock values. defaults to zeros
        :param clock: logical time of the most recent cache access
        """
        self.slots = np.array(slots, dtype=int, ndmin=2)
        self.num_files = int(num_files)
        shape = self.slots.shape
        self.last_access = np.zeros(shape, dtype=int) if last_access is None else np.array(last_access, dtype=int)
        self.frequency = np.zeros(shape, dtype=int) if frequency is None else np.array(frequency, dtype=int)
        self.inserted_at = np.zeros(shape, dtype=int) if inserted_at is None else np.array(inserted_at, dtype=int)
        self.clock = int(clock)


    def __repr__(self):
        return str([list(row) for row in self.slots])


    @classmethod
    def empty(cls, num_edges, cache_slots, num_files):
        return cls(np.zeros((num_edges, cache_slots), dtype=int), num_files)


    @property
    def num_edges(self):
        return self.slots.shape[0]


    @property
    def x(self):
        """
        :return: E x F matrix counting how many slots of edge e hold file f. binary unless a cache holds duplicates
        """
        counts = np.zeros((self.num_edges, self.num_files + 1), dtype=int)  # column 0 counts empty slots
        rows = np.repeat(np.arange(self.num_edges), self.slots.shape[1])
        np.add.at(counts, (rows, self.slots.reshape(-1)), 1)
        return counts[:, 1:]


    def holds(self, edge, file_id):
        return bool(np.any(self.slots[edge] == file_id))


    def files_at(self, edge):
        return sorted(int(file_id) for file_id in self.slots[edge] if file_id > 0)


    def copy(self):
        return CacheState(self.slots.copy(), self.num_files, self.last_access.copy(), self.frequency.copy(),
                          self.inserted_at.copy(), self.clock)


    def state_dict(self):
        return {'slots': self.slots.copy(), 'num_files': self.num_files, 'last_access': self.last_access.copy(),
                'frequency': self.frequency.copy(), 'inserted_at': self.inserted_at.copy(), 'clock': self.clock}


    @classmethod
    def from_state_dict(cls, state):
        return cls(state['slots'], state['num_files'], state['last_access'], state['frequency'],
                   state['inserted_at'], state['clock'])


def initial_cache(cfg, rng):
    """
    Warms every edge cache with F1 distinct files drawn uniformly without replacement.

    :return: a CacheState
    """
    slots = np.array([rng.choice(cfg.num_files, size=cfg.cache_slots, replace=False) + 1
                      for _ in range(cfg.num_edges)])
    return CacheState(slots, cfg.num_files)


#
# AssociationState
#

class AssociationState:
    """
    The association matrix y and each user's transmission mode.
    """


    def __init__(self, y, modes):
        """
        :param y: E x U binary array-like
        :param modes: U list of Mode
        """
        self.y = np.array(y, dtype=int, ndmin=2)
        self.modes = list(modes)


    def __repr__(self):
        return str((self.y.tolist(), [mode.name for mode in self.modes]))


    def copy(self):
        return AssociationState(self.y.copy(), self.modes)


    def servers_of(self, user):
        return [int(edge) for edge in np.flatnonzero(self.y[:, user])]


    def with_user(self, user, servers, mode):
        """
        :return: a new AssociationState that's a copy of me except that `user` is associated with exactly `servers`
            in `mode`
        """
        new_assoc = self.copy()
        new_assoc.y[:, user] = 0
        new_assoc.y[servers, user] = 1
        new_assoc.modes[user] = mode
        return new_assoc


    def validate(self, topology):
        """
        :return: a list of error messages for violations of the mode and coverage rules. empty if consistent
        """
        error_messages = []
        for user, mode in enumerate(self.modes):
            servers = self.servers_of(user)
            if (mode == Mode.ST) and (len(servers) != 1):
                error_messages.append(f"ST user must have exactly one server. user={user}, servers={servers}")
            elif (mode == Mode.JT) and (len(servers) < 2):
                error_messages.append(f"JT user must have two or more servers. user={user}, servers={servers}")
            elif (mode == Mode.CLOUD) and servers:
                error_messages.append(f"cloud user must have no edge server. user={user}, servers={servers}")
            uncovering = [edge for edge in servers if not topology.coverage_matrix[edge, user]]
            if uncovering:
                error_messages.append(f"user associated with non-covering servers. user={user}, "
                                      f"servers={uncovering}")
        return error_messages


#
# ChannelSnapshot and sample_channels()
#

class ChannelSnapshot:
    """
    Gain magnitudes |h|, link powers p, and the per-edge SIC decoding order for one step.
    """


    def __init__(self, h_edge, h_cloud, p_edge, p_cloud, sic_order=None):
        """
        :param h_edge: E x U nonnegative gain magnitudes
        :param h_cloud: U nonnegative gain magnitudes
        :param p_edge: E x U watts
        :param p_cloud: U watts
        :param sic_order: optional list (one per edge) of user index arrays sorted by descending |h_edge|. if None then
            every user is ordered at every edge. sample_channels() restricts each order to the edge's covered users
        """
        self.h_edge = np.array(h_edge, dtype=float, ndmin=2)
        self.h_cloud = np.array(h_cloud, dtype=float).reshape(-1)
        self.p_edge = np.array(p_edge, dtype=float, ndmin=2)
        self.p_cloud = np.array(p_cloud, dtype=float).reshape(-1)
        if sic_order is None:
            sic_order = [sic_order_for(self.h_edge[edge], range(self.h_edge.shape[1]))
                         for edge in range(self.h_edge.shape[0])]
        self.sic_order = [np.asarray(order, dtype=int) for order in sic_order]


    def __repr__(self):
        return str((self.h_edge.shape, self.p_edge.sum() + self.p_cloud.sum()))


    @property
    def total_power(self):
        return float(self.p_edge.sum() + self.p_cloud.sum())


    def with_powers(self, cfg, assoc):
        """
        Re-splits the power budget once `assoc` is known: the edge budget (power_split * P) evenly over the active
        (e, u) links of y, and the cloud budget evenly over the cloud-served users. Inactive links get 0 W. Does
        nothing if cfg.power_allocation is 'fixed'.

        :return: a ChannelSnapshot with my gains and SIC order and the re-split powers
        """
        if cfg.power_allocation == 'fixed':
            return self

        edge_budget = cfg.peak_power * cfg.power_split
        cloud_budget = cfg.peak_power - edge_budget
        is_active = assoc.y > 0
        is_cloud = np.array([mode == Mode.CLOUD for mode in assoc.modes], dtype=bool)
        num_links, num_cloud_users = int(is_active.sum()), int(is_cloud.sum())
        p_edge = np.where(is_active, edge_budget / num_links, 0.0) if num_links else np.zeros(is_active.shape)
        p_cloud = np.where(is_cloud, cloud_budget / num_cloud_users, 0.0) if num_cloud_users \
            else np.zeros(is_cloud.shape)
        return ChannelSnapshot(self.h_edge, self.h_cloud, p_edge, p_cloud, self.sic_order)


    def state_dict(self):
        return {'h_edge': self.h_edge, 'h_cloud': self.h_cloud, 'p_edge': self.p_edge, 'p_cloud': self.p_cloud,
                'sic_order': self.sic_order}


    @classmethod
    def from_state_dict(cls, state):
        return cls(state['h_edge'], state['h_cloud'], state['p_edge'], state['p_cloud'], state['sic_order'])


def sic_order_for(gains, users):
    """
    :param gains: one edge's U gain magnitudes
    :param users: the users to order
    :return: int array of `users` sorted by descending gain. ties are broken by ascending user index
    """
    users = list(users)
    return np.array(sorted(users, key=lambda user: (-gains[user], user)), dtype=int)


def rayleigh_magnitudes(rng, shape):
    """
    :return: |g| for g ~ CN(0, 1), i.e., Rayleigh magnitudes with E[|g|^2] = 1
    """
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return np.sqrt((real ** 2 + imag ** 2) / 2)


def path_loss_gains(magnitudes, distances, path_loss):
    """
    :return: h = |g| * d^(-alpha/2), with d clamped below at MIN_PATH_LOSS_DISTANCE
    """
    return magnitudes * np.maximum(distances, MIN_PATH_LOSS_DISTANCE) ** (-path_loss / 2)


def equal_split_powers(cfg, topology):
    """
    Provisional equal-split allocation made before the association is known: the edge budget (power_split * P) is
    divided evenly over every covering (e, u) link, and the cloud budget over every user. Delay evaluation re-splits it
    over the links actually used via ChannelSnapshot.with_powers().

    :return: 2-tuple: (p_edge E x U, p_cloud U)
    """
    edge_budget = cfg.peak_power * cfg.power_split
    cloud_budget = cfg.peak_power - edge_budget
    num_links = int(topology.coverage_matrix.sum())
    p_edge = np.where(topology.coverage_matrix, edge_budget / num_links, 0.0) if num_links \
        else np.zeros(topology.coverage_matrix.shape)
    p_cloud = np.full(topology.num_users, cloud_budget / topology.num_users)
    return p_edge, p_cloud


def sample_channels(cfg, topology, rng):
    """
    Draws fresh Rayleigh fading for every edge and cloud link, applies path loss, allocates powers per
    equal_split_powers(), and orders each edge's covered users for SIC.

    :return: a ChannelSnapshot
    """
    h_edge = path_loss_gains(rayleigh_magnitudes(rng, (topology.num_edges, topology.num_users)), topology.distances,
                             cfg.path_loss)
    h_cloud = path_loss_gains(rayleigh_magnitudes(rng, topology.num_users),
                              np.full(topology.num_users, cfg.cloud_distance), cfg.path_loss)
    p_edge, p_cloud = equal_split_powers(cfg, topology)
    sic_order = [sic_order_for(h_edge[edge], topology.users_of_edge(edge)) for edge in range(topology.num_edges)]
    return ChannelSnapshot(h_edge, h_cloud, p_edge, p_cloud, sic_order)
