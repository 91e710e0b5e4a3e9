from unittest import TestCase

from mecjoint.baselines import BaselinePolicyKind, baseline_step, baseline_update
from mecjoint.network import CacheState, RequestState
from tests.test_network import two_cell_topology


def apply_requests(policy, cache, requested_files, edge=0):
    for requested_file in requested_files:
        cache = baseline_update(policy, cache, edge, requested_file)
    return cache


class BaselinesTestCase(TestCase):
    """
    """


    def test_lru_evicts_least_recent(self):
        cache = apply_requests(BaselinePolicyKind.LRU, CacheState.empty(1, 3, 5), [1, 2, 3, 1])
        self.assertEqual([1, 2, 3], cache.files_at(0))
        cache = baseline_update(BaselinePolicyKind.LRU, cache, 0, 4)
        self.assertEqual([1, 3, 4], cache.files_at(0))  # 2 evicted


    def test_fifo_ignores_hits(self):
        cache = apply_requests(BaselinePolicyKind.FIFO, CacheState.empty(1, 2, 5), [1, 2, 1, 1, 1])
        cache = baseline_update(BaselinePolicyKind.FIFO, cache, 0, 3)
        self.assertEqual([2, 3], cache.files_at(0))  # 1 evicted


    def test_lfu_evicts_least_frequent(self):
        cache = CacheState([[1, 2, 3]], 5, last_access=[[1, 2, 3]], frequency=[[5, 1, 2]], inserted_at=[[1, 2, 3]],
                           clock=3)
        cache = baseline_update(BaselinePolicyKind.LFU, cache, 0, 4)
        self.assertEqual([1, 3, 4], cache.files_at(0))  # 2 evicted
        self.assertEqual([5, 1, 2], cache.frequency[0].tolist())  # slot 1 now holds 4 with count 1

        # frequency ties go to the least recently accessed
        cache = CacheState([[1, 2]], 5, last_access=[[4, 3]], frequency=[[2, 2]], clock=4)
        self.assertEqual([1, 5], baseline_update(BaselinePolicyKind.LFU, cache, 0, 5).files_at(0))


    def test_baseline_update_hit(self):
        cache = CacheState([[1, 2]], 5)
        new_cache = baseline_update(BaselinePolicyKind.LRU, cache, 0, 2)
        self.assertEqual([[1, 2]], new_cache.slots.tolist())
        self.assertEqual(1, new_cache.clock)
        self.assertEqual([0, 1], new_cache.last_access[0].tolist())
        self.assertEqual([0, 1], new_cache.frequency[0].tolist())
        self.assertEqual(0, cache.clock)  # not modified


    def test_empty_slots_fill_first(self):
        cache = CacheState([[0, 2, 0]], 5)
        cache = baseline_update(BaselinePolicyKind.FIFO, cache, 0, 4)
        self.assertEqual([[4, 2, 0]], cache.slots.tolist())


    def test_baseline_step(self):
        topology = two_cell_topology()  # edge 0 covers users 0 and 1. edge 1 covers user 0
        cache = CacheState([[0, 0], [0, 0]], 5)
        req = RequestState([3, 4, 5], 5)
        for policy in BaselinePolicyKind:
            new_cache = baseline_step(policy, cache, topology, req)
            self.assertEqual([3, 4], new_cache.files_at(0))
            self.assertEqual([3], new_cache.files_at(1))
            self.assertEqual(3, new_cache.clock)
