import logging
from collections import namedtuple

import numpy as np

from mecjoint.network import Mode


logger = logging.getLogger(__name__)


#
# This file evaluates rates, delays, and the constraint set for one frozen snapshot (cache, association, requests,
# channels). The equations are implemented literally, including the x and z masks on the SIC interference terms: an
# interferer i only counts at edge e when it requests the same file as the user being decoded.
#

CONSTRAINT_TOLERANCE = 1e-12  # relative slack for the power budget comparison


class InconsistentAssociationError(RuntimeError):
    pass


class DelayReport:
    """
    Delays for one snapshot, in seconds.
    """


    def __init__(self, edge_delay, cloud_delay, per_edge_delay, per_user_delay, hit_count, miss_count, cloud_users):
        self.edge_delay = edge_delay  # D^E2U
        self.cloud_delay = cloud_delay  # D^C2U
        self.per_edge_delay = per_edge_delay  # E array. a JT user's delay is attributed to every serving edge
        self.per_user_delay = per_user_delay  # U array
        self.hit_count = hit_count
        self.miss_count = miss_count
        self.cloud_users = cloud_users  # U^c, ascending


    def __repr__(self):
        return str((self.total, self.edge_delay, self.cloud_delay, self.hit_count, self.miss_count))


    @property
    def total(self):
        return self.edge_delay + self.cloud_delay


    @property
    def hit_ratio(self):
        num_requests = self.hit_count + self.miss_count
        return self.hit_count / num_requests if num_requests else 0.0


#
# rates
#

def _shannon_rate(bandwidth, signal, interference, noise_power):
    return bandwidth * np.log2(1 + signal / (interference + noise_power))


def edge_indicators(cache, assoc, req):
    """
    :return: U bool array: True where some server associated with the user caches its requested file, i.e.,
        I(sum_e x y z >= 1)
    """
    return np.any((cache.x[:, req.files - 1] > 0) & (assoc.y > 0), axis=0)


def edge_indicator(user, cache, assoc, req):
    file_idx = req.files[user] - 1
    return bool(np.any((cache.slots == file_idx + 1).any(axis=1) & (assoc.y[:, user] > 0)))


def st_rate(edge, user, cache, assoc, req, ch, cfg):
    """
    Downlink rate from `edge` to `user`. Interference comes only from users later in the edge's SIC order, masked by
    their association with `edge` and by whether they request the same file.

    :return: bits/s. 0 if `edge` does not cache the requested file or `user` is not associated with it
    """
    file_id = req.files[user]
    if (not cache.holds(edge, file_id)) or (not assoc.y[edge, user]):
        return 0.0

    order = list(ch.sic_order[edge])
    if user not in order:
        return 0.0

    signal = abs(ch.h_edge[edge, user] * ch.p_edge[edge, user]) ** 2
    interference = 0.0
    for other in order[order.index(user) + 1:]:
        if assoc.y[edge, other] and (req.files[other] == file_id):
            interference += abs(ch.h_edge[edge, other] * ch.p_edge[edge, other]) ** 2
    return float(_shannon_rate(cfg.bandwidth_edge, signal, interference, cfg.noise_power))


def jt_rate(user, cache, assoc, req, ch, cfg):
    """
    Joint transmission rate: the per-server rates of every associated server add. Servers lacking the file
    contribute 0.

    :return: bits/s
    """
    return float(sum(st_rate(edge, user, cache, assoc, req, ch, cfg) for edge in assoc.servers_of(user)))


def user_edge_rate(user, cache, assoc, req, ch, cfg):
    """
    :return: the mode-appropriate edge rate for `user`: st_rate() of its single server in ST mode, jt_rate() in JT
        mode, and 0 for cloud users
    """
    mode = assoc.modes[user]
    if mode == Mode.CLOUD:
        return 0.0

    if mode == Mode.ST:
        servers = assoc.servers_of(user)
        return st_rate(servers[0], user, cache, assoc, req, ch, cfg) if servers else 0.0

    return jt_rate(user, cache, assoc, req, ch, cfg)


def cloud_rate(user, cache, assoc, req, ch, cfg):
    """
    Cloud downlink rate. Interference comes from every other user that the edges do not serve.

    :return: bits/s. 0 if `user` is served at the edge (its numerator is masked)
    """
    if edge_indicator(user, cache, assoc, req):
        return 0.0

    signal = abs(ch.h_cloud[user] * ch.p_cloud[user]) ** 2
    is_cloud = ~edge_indicators(cache, assoc, req)
    is_cloud[user] = False
    interference = float((np.abs(ch.h_cloud * ch.p_cloud) ** 2)[is_cloud].sum())
    return float(_shannon_rate(cfg.bandwidth_cloud, signal, interference, cfg.noise_power))


#
# evaluate_delay()
#

def user_delay(user, cache, assoc, req, ch, cfg):
    """
    The delay of one user alone, holding everything else fixed. `ch`'s powers are used as given.

    :return: 2-tuple: (delay in seconds, is_edge_served)
    :raises InconsistentAssociationError: if `user` is assigned to the edge but cannot be served there
    """
    if assoc.modes[user] != Mode.CLOUD:
        rate = user_edge_rate(user, cache, assoc, req, ch, cfg)
        if rate <= 0:
            raise InconsistentAssociationError(f"edge-assigned user has zero rate. user={user}, "
                                               f"mode={assoc.modes[user].name}, servers={assoc.servers_of(user)}, "
                                               f"file={req.files[user]}")

        return cfg.file_size_bits / rate, True

    if edge_indicator(user, cache, assoc, req):
        raise InconsistentAssociationError(f"cloud user is associated with a server holding its file. user={user}, "
                                           f"servers={assoc.servers_of(user)}")

    rate = cloud_rate(user, cache, assoc, req, ch, cfg)
    if rate <= 0:
        raise InconsistentAssociationError(f"cloud user has zero rate. user={user}")

    return cfg.file_size_bits / rate, False


def evaluate_delay(cache, assoc, req, ch, cfg):
    """
    Evaluates the total transmission delay D^E2U + D^C2U for one snapshot.

    :param cache: a CacheState
    :param assoc: an AssociationState consistent with coverage and the cache
    :param req: a RequestState
    :param ch: a ChannelSnapshot. its powers are re-split over `assoc` per cfg.power_allocation
    :param cfg: a SimConfig
    :return: a DelayReport
    :raises InconsistentAssociationError: if an edge-assigned user has rate 0
    """
    ch = ch.with_powers(cfg, assoc)
    num_users = req.files.size
    per_user_delay = np.zeros(num_users)
    per_edge_delay = np.zeros(cache.num_edges)
    edge_delay, cloud_delay = 0.0, 0.0
    cloud_users = []
    for user in range(num_users):
        delay, is_edge_served = user_delay(user, cache, assoc, req, ch, cfg)
        per_user_delay[user] = delay
        if is_edge_served:
            edge_delay += delay
            for edge in assoc.servers_of(user):
                if cache.holds(edge, req.files[user]):
                    per_edge_delay[edge] += delay
        else:
            cloud_delay += delay
            cloud_users.append(user)
    return DelayReport(edge_delay, cloud_delay, per_edge_delay, per_user_delay, num_users - len(cloud_users),
                       len(cloud_users), cloud_users)


#
# check_constraints()
#

Violation = namedtuple('Violation', ['constraint', 'indices', 'message'])


def check_constraints(cache, assoc, ch, cfg):
    """
    Checks C1 (x binary), C2 (y binary), C3 (per-edge cache capacity), and C4 (peak power). Processing continues
    through every constraint so that all problems are reported.

    :return: a list of Violations. empty if feasible
    """
    violations = []  # return value. filled next

    x = cache.x
    for edge, file_idx in zip(*np.nonzero((x != 0) & (x != 1))):
        violations.append(Violation('C1', (int(edge), int(file_idx) + 1),
                                    f"x is not binary. edge={edge}, file={file_idx + 1}, x={x[edge, file_idx]}"))

    y = assoc.y
    for edge, user in zip(*np.nonzero((y != 0) & (y != 1))):
        violations.append(Violation('C2', (int(edge), int(user)),
                                    f"y is not binary. edge={edge}, user={user}, y={y[edge, user]}"))

    used_bits = x.sum(axis=1) * cfg.file_size_bits
    for edge in np.flatnonzero(used_bits > cfg.cache_capacity_bits):
        violations.append(Violation('C3', (int(edge),),
                                    f"cache capacity exceeded. edge={edge}, used_bits={used_bits[edge]}, "
                                    f"capacity_bits={cfg.cache_capacity_bits}"))

    ch = ch.with_powers(cfg, assoc)
    total_power = ch.total_power
    if (ch.p_edge < 0).any() or (ch.p_cloud < 0).any():
        violations.append(Violation('C4', (), "negative link power"))
    if total_power > cfg.peak_power * (1 + CONSTRAINT_TOLERANCE):
        violations.append(Violation('C4', (), f"peak power exceeded. total_power={total_power}, "
                                              f"peak_power={cfg.peak_power}"))
    return violations
