import itertools
import logging
import math
from collections import namedtuple

from mecjoint.delay import evaluate_delay
from mecjoint.mabla import ARM_JT, ARM_ST, build_association
from mecjoint.network import CacheState


logger = logging.getLogger(__name__)


#
# Brute-force solvers for tiny instances. Both enumerate in lexicographic order (cache subsets in
# itertools.combinations order per edge, then arms with ST before JT per multi-covered user, ascending) and keep the
# first strict minimum, so ties resolve to the lexicographically smallest configuration.
#

DEFAULT_MAX_CONFIGS = 1_000_000
ARM_ORDER = (ARM_ST, ARM_JT)


class OracleBudgetError(RuntimeError):

    def __init__(self, message, search_size):
        super().__init__(message)
        self.search_size = search_size


OracleBudget = namedtuple('OracleBudget', ['max_configs'], defaults=[DEFAULT_MAX_CONFIGS])

OracleResult = namedtuple('OracleResult', ['cache', 'association', 'total_delay', 'report'])


def search_size(cfg, topology):
    """
    :return: 2-tuple: (exact number of configurations oracle_joint() evaluates: C(F, F1)^E * 2^|U^E|, the coarse
        F^E + E^U complexity figure)
    """
    num_caches = math.comb(cfg.num_files, cfg.cache_slots) ** cfg.num_edges
    exact = num_caches * 2 ** len(topology.multi_covered_users())
    coarse = cfg.num_files ** cfg.num_edges + cfg.num_edges ** topology.num_users
    return exact, coarse


def _check_budget(size, budget, name):
    if size > budget.max_configs:
        raise OracleBudgetError(f"{name}(): search size exceeds budget. search_size={size}, "
                                f"max_configs={budget.max_configs}", size)


def _arm_assignments(topology):
    users = topology.multi_covered_users()
    for arms in itertools.product(ARM_ORDER, repeat=len(users)):
        yield dict(zip(users, arms))


def _best_association(cfg, topology, cache, req, ch):
    best = None
    for arms in _arm_assignments(topology):
        assoc = build_association(topology, cache, req, ch, arms)
        report = evaluate_delay(cache, assoc, req, ch, cfg)
        if (best is None) or (report.total < best.total_delay):
            best = OracleResult(cache, assoc, report.total, report)
    return best


def oracle_transmission(cfg, topology, cache, req, ch, budget=OracleBudget()):
    """
    Finds the ST/JT assignment minimizing the total delay with the cache frozen.

    :return: an OracleResult
    :raises OracleBudgetError: if 2^|U^E| exceeds `budget`
    """
    size = 2 ** len(topology.multi_covered_users())
    _check_budget(size, budget, 'oracle_transmission')
    return _best_association(cfg, topology, cache, req, ch)


def oracle_joint(cfg, topology, req, ch, budget=OracleBudget()):
    """
    Finds the caching and transmission configuration minimizing the total delay of one frozen (requests, channels)
    snapshot by evaluating every F1-subset per edge against every mode assignment.

    :param cfg: a SimConfig
    :param topology: a NetworkTopology
    :param req: a RequestState
    :param ch: a ChannelSnapshot
    :param budget: an OracleBudget
    :return: an OracleResult
    :raises OracleBudgetError: if the search size exceeds `budget`
    """
    size, coarse_size = search_size(cfg, topology)
    _check_budget(size, budget, 'oracle_joint')
    logger.info(f"oracle_joint(): searching. search_size={size}, coarse_size={coarse_size}")
    edge_subsets = list(itertools.combinations(range(1, cfg.num_files + 1), cfg.cache_slots))
    best = None
    for slots in itertools.product(edge_subsets, repeat=cfg.num_edges):
        cache = CacheState(slots, cfg.num_files)
        result = _best_association(cfg, topology, cache, req, ch)
        if (best is None) or (result.total_delay < best.total_delay):
            best = result
    return best
