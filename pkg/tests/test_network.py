import math
from unittest import TestCase

import numpy as np

from mecjoint.network import AssociationState, CacheState, ChannelSnapshot, EmptyTopologyError, Mode, \
    NetworkTopology, RequestState, SimConfig, deployment_area_km2, deployment_disc, edge_positions_for, \
    equal_split_powers, initial_cache, path_loss_gains, rayleigh_magnitudes, sample_channels, sample_requests, \
    sample_topology, sample_topology_resampling, sample_user_count, sic_order_for, zipf_probabilities


def two_cell_topology():
    """
    Two edges 100 m apart with r = 100 m. user 0 is covered by both, user 1 by edge 0 only, user 2 by neither.
    """
    return NetworkTopology([(0, 0), (100, 0)], [(50, 0), (-50, 0), (300, 0)], 100)


class NetworkTestCase(TestCase):
    """
    """


    def test_sim_config_defaults_and_validate(self):
        cfg = SimConfig()
        self.assertEqual([], cfg.validate())
        self.assertEqual(3, cfg.num_edges)
        self.assertEqual(50, cfg.num_files)
        self.assertEqual(8e7, cfg.cache_capacity_bits)  # 10 MB
        self.assertEqual(501, cfg.num_actions)

        error_messages = SimConfig(cache_slots=50).validate()
        self.assertEqual(1, len(error_messages))
        self.assertIn('cache_slots', error_messages[0])

        error_messages = SimConfig(zipf_skew=-1, peak_power=0).validate()
        self.assertEqual(2, len(error_messages))
        self.assertIn('peak_power', error_messages[0])
        self.assertIn('zipf_skew', error_messages[1])

        error_messages = SimConfig(power_allocation='greedy').validate()
        self.assertEqual(1, len(error_messages))
        self.assertIn('power_allocation', error_messages[0])


    def test_edge_positions_for(self):
        positions = edge_positions_for(3, 100)
        for edge_1, edge_2 in [(0, 1), (0, 2), (1, 2)]:
            self.assertAlmostEqual(100, np.linalg.norm(positions[edge_1] - positions[edge_2]))
        self.assertTrue(np.allclose([0, 0], edge_positions_for(1, 100)))

        positions = edge_positions_for(4, 100)
        self.assertTrue(np.allclose(90, np.linalg.norm(positions, axis=1)))


    def test_topology_coverage(self):
        topology = two_cell_topology()
        self.assertEqual((2, 3), topology.distances.shape)
        self.assertEqual([0, 1], topology.coverage(0))
        self.assertEqual([0], topology.coverage(1))
        self.assertEqual([], topology.coverage(2))
        self.assertEqual([0, 1], topology.users_of_edge(0))
        self.assertEqual([0], topology.users_of_edge(1))
        self.assertEqual([0], topology.multi_covered_users())
        self.assertEqual([2], topology.uncovered_users())

        # zero distance is inside the radius
        topology = NetworkTopology([(0, 0)], [(0, 0)], 100)
        self.assertEqual([0], topology.coverage(0))


    def test_sample_topology_fixed_users(self):
        cfg = SimConfig()
        topology = sample_topology(cfg, np.random.default_rng(0))
        self.assertEqual(20, topology.num_users)
        self.assertEqual(3, topology.num_edges)
        center, radius = deployment_disc(topology.edge_positions, cfg.cell_radius)
        self.assertTrue(np.all(np.linalg.norm(topology.user_positions - center, axis=1) <= radius + 1e-9))


    def test_sample_topology_ppp(self):
        cfg = SimConfig(fixed_users=0)
        topology = sample_topology(cfg, np.random.default_rng(1))
        self.assertGreater(topology.num_users, 0)

        # lambda * area = 4
        cfg = SimConfig(fixed_users=0, user_density=4 / deployment_area_km2(SimConfig()))
        counts = sample_user_count(cfg, np.random.default_rng(2), size=100000)
        self.assertAlmostEqual(4, counts.mean(), delta=0.05)


    def test_sample_topology_empty(self):
        cfg = SimConfig(fixed_users=0, user_density=1e-9)
        with self.assertRaisesRegex(EmptyTopologyError, 'sampled zero users'):
            sample_topology(cfg, np.random.default_rng(0))
        with self.assertRaisesRegex(EmptyTopologyError, 'gave up after 3'):
            sample_topology_resampling(cfg, np.random.default_rng(0), max_resamples=3)


    def test_zipf_probabilities(self):
        self.assertTrue(np.allclose([0.25] * 4, zipf_probabilities(4, 0)))
        self.assertTrue(np.allclose([6 / 11, 3 / 11, 2 / 11], zipf_probabilities(3, 1)))

        probabilities = zipf_probabilities(50, 1.2)
        self.assertAlmostEqual(1, probabilities.sum())
        self.assertAlmostEqual(1 / sum(j ** -1.2 for j in range(1, 51)), probabilities[0])


    def test_sample_requests(self):
        cfg = SimConfig()
        topology = NetworkTopology([(0, 0)], np.zeros((100000, 2)), 100)
        req = sample_requests(cfg, topology, np.random.default_rng(0))
        self.assertEqual(100000, req.files.size)
        self.assertTrue((req.files >= 1).all() and (req.files <= 50).all())
        frequencies = np.bincount(req.files, minlength=51)[1:] / req.files.size
        for rank, (expected, actual) in enumerate(zip(zipf_probabilities(50, 1.2), frequencies), start=1):
            self.assertAlmostEqual(expected, actual, delta=0.01, msg=f"rank={rank}")

        # single file
        req = sample_requests(SimConfig(num_files=1, cache_slots=0), two_cell_topology(), np.random.default_rng(0))
        self.assertEqual([1, 1, 1], req.files.tolist())


    def test_request_state(self):
        req = RequestState([2, 1, 2], 3)
        self.assertEqual([[0, 1, 0], [1, 0, 0], [0, 1, 0]], req.z.tolist())
        with self.assertRaisesRegex(RuntimeError, 'file ids must be in 1..3'):
            RequestState([0, 1], 3)
        with self.assertRaisesRegex(RuntimeError, 'file ids must be in 1..3'):
            RequestState([4], 3)


    def test_cache_state(self):
        cache = CacheState([[1, 2, 0], [3, 3, 1]], 3)
        self.assertEqual([[1, 1, 0], [1, 0, 2]], cache.x.tolist())
        self.assertTrue(cache.holds(0, 2))
        self.assertFalse(cache.holds(0, 3))
        self.assertEqual([1, 2], cache.files_at(0))

        cache_copy = cache.copy()
        cache_copy.slots[0, 0] = 3
        self.assertEqual(1, cache.slots[0, 0])

        restored = CacheState.from_state_dict(cache.state_dict())
        self.assertEqual(cache.slots.tolist(), restored.slots.tolist())
        self.assertEqual([[0, 0, 0]], CacheState.empty(1, 3, 5).slots.tolist())


    def test_initial_cache(self):
        cfg = SimConfig()
        cache = initial_cache(cfg, np.random.default_rng(0))
        self.assertEqual((3, 10), cache.slots.shape)
        for edge in range(3):
            self.assertEqual(10, len(set(cache.slots[edge].tolist())))
        self.assertTrue((cache.x.sum(axis=1) == 10).all())


    def test_association_validate(self):
        topology = two_cell_topology()
        assoc = AssociationState([[1, 1, 0], [1, 0, 0]], [Mode.JT, Mode.ST, Mode.CLOUD])
        self.assertEqual([], assoc.validate(topology))
        self.assertEqual([0, 1], assoc.servers_of(0))

        bad_assoc = assoc.with_user(0, [0, 1], Mode.ST)
        error_messages = bad_assoc.validate(topology)
        self.assertEqual(1, len(error_messages))
        self.assertIn('ST user must have exactly one server', error_messages[0])
        self.assertEqual(Mode.JT, assoc.modes[0])  # with_user() copies

        bad_assoc = assoc.with_user(2, [1], Mode.ST)
        error_messages = bad_assoc.validate(topology)
        self.assertEqual(1, len(error_messages))
        self.assertIn('non-covering', error_messages[0])

        bad_assoc = assoc.with_user(1, [0], Mode.JT)
        self.assertIn('JT user must have two or more servers', bad_assoc.validate(topology)[0])


    def test_sic_order_for(self):
        self.assertEqual([1, 2, 0], sic_order_for(np.array([0.1, 0.5, 0.5]), [0, 1, 2]).tolist())
        self.assertEqual([2, 0], sic_order_for(np.array([0.1, 0.5, 0.3]), [0, 2]).tolist())


    def test_path_loss_gains(self):
        self.assertEqual(0.7, path_loss_gains(np.array([0.7]), np.array([1.0]), 4)[0])
        self.assertAlmostEqual(0.25, path_loss_gains(1.0, 20.0, 4) / path_loss_gains(1.0, 10.0, 4))
        self.assertEqual(0.7, path_loss_gains(np.array([0.7]), np.array([0.0]), 4)[0])  # clamped


    def test_rayleigh_magnitudes(self):
        magnitudes = rayleigh_magnitudes(np.random.default_rng(0), 1000000)
        self.assertAlmostEqual(1.0, (magnitudes ** 2).mean(), delta=0.01)
        self.assertTrue((magnitudes >= 0).all())


    def test_equal_split_powers(self):
        cfg = SimConfig()
        topology = two_cell_topology()
        p_edge, p_cloud = equal_split_powers(cfg, topology)
        self.assertAlmostEqual(cfg.peak_power, p_edge.sum() + p_cloud.sum())
        self.assertEqual(0, p_edge[1, 1])  # not covered
        self.assertAlmostEqual(cfg.peak_power / 2 / 3, p_edge[0, 0])
        self.assertAlmostEqual(cfg.peak_power / 2 / 3, p_cloud[2])


    def test_with_powers(self):
        # user 0 covered by edge 0, user 1 by both, user 2 by edge 1, user 3 by neither. 4 coverage links
        cfg = SimConfig(num_edges=2, num_files=3, cache_slots=1, peak_power=8.0)
        topology = NetworkTopology([(0, 0), (100, 0)], [(-50, 0), (50, 0), (150, 0), (500, 0)], 100)
        p_edge, p_cloud = equal_split_powers(cfg, topology)
        self.assertTrue(np.allclose(topology.coverage_matrix * 1.0, p_edge))
        self.assertTrue(np.allclose([1.0] * 4, p_cloud))
        ch = ChannelSnapshot(np.ones((2, 4)), np.ones(4), p_edge, p_cloud, [[1, 0], [2, 1]])

        # 2 active links and 2 cloud users
        assoc = AssociationState([[1, 1, 0, 0], [0, 0, 0, 0]], [Mode.ST, Mode.ST, Mode.CLOUD, Mode.CLOUD])
        resplit_ch = ch.with_powers(cfg, assoc)
        self.assertTrue(np.allclose([[2, 2, 0, 0], [0, 0, 0, 0]], resplit_ch.p_edge))
        self.assertTrue(np.allclose([0, 0, 2, 2], resplit_ch.p_cloud))
        self.assertAlmostEqual(cfg.peak_power, resplit_ch.total_power)
        self.assertEqual([[1, 0], [2, 1]], [order.tolist() for order in resplit_ch.sic_order])
        self.assertTrue(np.array_equal(ch.h_edge, resplit_ch.h_edge))

        # user 1 in JT: 3 active links
        jt_assoc = AssociationState([[1, 1, 0, 0], [0, 1, 0, 0]], [Mode.ST, Mode.JT, Mode.CLOUD, Mode.CLOUD])
        self.assertTrue(np.allclose(np.array([[1, 1, 0, 0], [0, 1, 0, 0]]) * 4 / 3,
                                    ch.with_powers(cfg, jt_assoc).p_edge))

        # all cloud: only the cloud budget is used
        cloud_assoc = AssociationState(np.zeros((2, 4)), [Mode.CLOUD] * 4)
        cloud_ch = ch.with_powers(cfg, cloud_assoc)
        self.assertEqual(0, cloud_ch.p_edge.sum())
        self.assertTrue(np.allclose([1.0] * 4, cloud_ch.p_cloud))

        fixed_cfg = SimConfig(num_edges=2, num_files=3, cache_slots=1, peak_power=8.0, power_allocation='fixed')
        self.assertIs(ch, ch.with_powers(fixed_cfg, assoc))


    def test_sample_channels(self):
        cfg = SimConfig()
        topology = two_cell_topology()
        ch = sample_channels(cfg, topology, np.random.default_rng(0))
        self.assertEqual((2, 3), ch.h_edge.shape)
        self.assertEqual(3, ch.h_cloud.size)
        self.assertAlmostEqual(cfg.peak_power, ch.total_power)
        self.assertEqual(sorted(ch.sic_order[0].tolist()), [0, 1])
        self.assertEqual([0], ch.sic_order[1].tolist())
        gains = ch.h_edge[0, ch.sic_order[0]]
        self.assertTrue(gains[0] >= gains[1])

        restored = ChannelSnapshot.from_state_dict(ch.state_dict())
        self.assertTrue(np.array_equal(ch.h_edge, restored.h_edge))

        # same seed -> same draws
        ch2 = sample_channels(cfg, topology, np.random.default_rng(0))
        self.assertTrue(np.array_equal(ch.h_edge, ch2.h_edge))
        self.assertTrue(math.isclose(ch.h_cloud[0], ch2.h_cloud[0]))
