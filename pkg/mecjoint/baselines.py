import enum
import logging

import numpy as np


logger = logging.getLogger(__name__)


#
# Fixed cache replacement policies. Each edge demand-fills: every request routed to an edge counts as an access; a miss
# evicts one slot per the policy and inserts the requested file, even though the cloud serves that request this step.
#

class BaselinePolicyKind(enum.Enum):
    LRU = enum.auto()
    LFU = enum.auto()
    FIFO = enum.auto()


def _victim_slot(policy, cache, edge):
    """
    :return: index of the slot to evict from `edge`'s cache. empty slots are filled before anything is evicted
    """
    row = cache.slots[edge]
    empty_slots = np.flatnonzero(row == 0)
    if empty_slots.size:
        return int(empty_slots[0])

    slot_idxs = np.arange(row.size)
    if policy == BaselinePolicyKind.LRU:
        keys = (slot_idxs, cache.last_access[edge])
    elif policy == BaselinePolicyKind.LFU:  # ties: least recent, then lowest slot
        keys = (slot_idxs, cache.last_access[edge], cache.frequency[edge])
    elif policy == BaselinePolicyKind.FIFO:  # access metadata is ignored
        keys = (slot_idxs, cache.inserted_at[edge])
    else:
        raise RuntimeError(f"invalid policy: {policy!r}")

    return int(np.lexsort(keys)[0])  # lexsort's primary key is the last one


def baseline_update(policy, cache, edge, requested_file):
    """
    Applies one request for `requested_file` at `edge`.

    :param policy: a BaselinePolicyKind
    :param cache: a warmed CacheState. not modified
    :param edge: edge server index
    :param requested_file: 1-based file id
    :return: a new CacheState. on a hit only the recency/frequency bookkeeping changes
    """
    new_cache = cache.copy()
    new_cache.clock += 1
    hit_slots = np.flatnonzero(new_cache.slots[edge] == requested_file)
    if hit_slots.size:
        slot = int(hit_slots[0])
        new_cache.last_access[edge, slot] = new_cache.clock
        new_cache.frequency[edge, slot] += 1
        return new_cache

    slot = _victim_slot(policy, new_cache, edge)
    logger.debug(f"baseline_update(): miss. policy={policy.name}, edge={edge}, file={requested_file}, slot={slot}, "
                 f"evicted={new_cache.slots[edge, slot]}")
    new_cache.slots[edge, slot] = requested_file
    new_cache.last_access[edge, slot] = new_cache.clock
    new_cache.frequency[edge, slot] = 1
    new_cache.inserted_at[edge, slot] = new_cache.clock
    return new_cache


def baseline_step(policy, cache, topology, req):
    """
    Routes every user's request to each edge covering it, in ascending (edge, user) order.

    :return: a new CacheState
    """
    for edge in range(topology.num_edges):
        for user in topology.users_of_edge(edge):
            cache = baseline_update(policy, cache, edge, int(req.files[user]))
    return cache
