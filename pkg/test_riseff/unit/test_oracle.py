# Copyright (c) 2026 The riseff Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
# implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import unittest

import numpy as np

from riseff import oracle
from riseff.netmodel import ChannelRealization
from riseff.power_control import PowerController, PowerModel
from riseff.system import PhaseConfig, SystemParams, energy_efficiency, \
    random_phases, static_power, sum_rate
from test_riseff.unit import DumbLogger, random_channel, unit_params


def direct_only(h):
    h = np.asarray(h, dtype=complex)
    empty = np.zeros((0, h.shape[0]))
    return ChannelRealization(h, empty, empty)


class TestGridSpec(unittest.TestCase):

    def test_values(self):
        grid = oracle.GridSpec(5, 2.0)
        np.testing.assert_allclose(grid.values(), [0, 0.5, 1.0, 1.5, 2.0])

    def test_refined_contains_points(self):
        grid = oracle.GridSpec(5, 2.0)
        finer = grid.refined()
        self.assertEqual(finer.points_per_dim, 9)
        np.testing.assert_allclose(finer.values()[::2], grid.values())

    def test_validation(self):
        self.assertRaises(ValueError, oracle.GridSpec, 1, 2.0)
        self.assertRaises(ValueError, oracle.GridSpec, 5, 0.0)


class TestGridPowerSearch(unittest.TestCase):

    def test_single_link(self):
        # log2(1 + 10 p) / (p + 0.1) peaks at p = (e - 1) / 10
        chan = direct_only([[np.sqrt(10.0)]])
        params = SystemParams(1.0, 0.05, p_max=10.0)
        result = oracle.grid_power_search(chan, PhaseConfig([]), params)
        self.assertEqual(result.status, oracle.OK)
        self.assertAlmostEqual(result.p[0], (np.e - 1) / 10, delta=0.05)
        best = 10.0 / (np.e * np.log(2.0))
        self.assertTrue(result.ee <= best + 1e-12)
        self.assertTrue(result.ee >= 0.99 * best)

    def test_matches_energy_efficiency(self):
        rng = np.random.default_rng(1)
        chan = random_channel(rng, 2, 3)
        phase = random_phases(3, 0.8, rng)
        params = unit_params(links=2, circuit_power=0.1)
        result = oracle.grid_power_search(chan, phase, params,
                                          oracle.GridSpec(30, 2.0))
        self.assertAlmostEqual(result.ee,
                               energy_efficiency(chan, phase, result.p,
                                                 params))

    def test_failure(self):
        rng = np.random.default_rng(2)
        chan = random_channel(rng, 2, 0)
        params = unit_params(links=2, r_min=30.0)
        result = oracle.grid_power_search(chan, PhaseConfig([]), params,
                                          oracle.GridSpec(10, 2.0))
        self.assertEqual(result.status, oracle.FAILURE)
        self.assertTrue(result.p is None)
        self.assertEqual(result.ee, 0.0)

    def test_refinement_never_worse(self):
        rng = np.random.default_rng(3)
        chan = random_channel(rng, 2, 0)
        params = unit_params(links=2, circuit_power=0.05, r_min=0.1)
        grid = oracle.GridSpec(11, params.p_max)
        previous = oracle.grid_power_search(chan, PhaseConfig([]), params,
                                            grid)
        for _junk in range(3):
            grid = grid.refined()
            result = oracle.grid_power_search(chan, PhaseConfig([]), params,
                                              grid)
            self.assertTrue(result.ee >= previous.ee - 1e-12)
            previous = result

    def test_rate_targets_respected(self):
        rng = np.random.default_rng(4)
        chan = random_channel(rng, 2, 0)
        params = unit_params(links=2, r_min=0.2)
        result = oracle.grid_power_search(chan, PhaseConfig([]), params,
                                          oracle.GridSpec(40, 2.0))
        if result.status == oracle.OK:
            model = PowerModel.from_channel(chan, PhaseConfig([]), params)
            self.assertTrue(np.all(model.rates(result.p) >= 0.2 - 1e-9))
        else:
            self.assertTrue(result.p is None)

    def test_too_many_links(self):
        rng = np.random.default_rng(5)
        chan = random_channel(rng, 5, 0)
        self.assertRaises(ValueError, oracle.grid_power_search, chan,
                          PhaseConfig([]), unit_params(links=5))


class TestPhaseSearch(unittest.TestCase):

    def test_levels(self):
        np.testing.assert_allclose(oracle.quantized_levels(1), [0, np.pi])
        self.assertEqual(len(oracle.quantized_levels(3)), 8)

    def test_lexicographic(self):
        candidates = np.vstack(list(oracle.quantized_phases(2, 1)))
        np.testing.assert_allclose(candidates, [[0, 0], [0, np.pi],
                                                [np.pi, 0], [np.pi, np.pi]])

    def test_small_chunks(self):
        whole = np.vstack(list(oracle.quantized_phases(3, 2)))
        pieces = np.vstack(list(oracle.quantized_phases(3, 2, chunk=5)))
        np.testing.assert_array_equal(whole, pieces)
        self.assertEqual(len(whole), 64)

    def test_candidate_limit(self):
        self.assertRaises(ValueError, list, oracle.quantized_phases(7, 3))

    def test_single_element(self):
        rng = np.random.default_rng(6)
        chan = random_channel(rng, 1, 1)
        params = unit_params()
        result = oracle.exhaustive_phase_search(chan, [1.0], params, 1)
        options = [sum_rate(chan, PhaseConfig([a]), [1.0], 1.0)
                   for a in (0.0, np.pi)]
        self.assertAlmostEqual(result.sum_rate, max(options))

    def test_no_elements(self):
        rng = np.random.default_rng(7)
        chan = random_channel(rng, 2, 0)
        result = oracle.exhaustive_phase_search(chan, [1.0, 0.5],
                                                unit_params(links=2), 3)
        self.assertEqual(result.phase.elements, 0)
        self.assertAlmostEqual(result.sum_rate,
                               sum_rate(chan, PhaseConfig([]), [1.0, 0.5],
                                        1.0))

    def test_first_best_wins(self):
        chan = ChannelRealization(np.eye(2), np.zeros((2, 2)),
                                  np.zeros((2, 2)))
        result = oracle.exhaustive_phase_search(chan, [1.0, 1.0],
                                                unit_params(links=2), 2)
        np.testing.assert_array_equal(result.phase.phases, [0.0, 0.0])

    def test_beats_sampled_settings(self):
        rng = np.random.default_rng(8)
        chan = random_channel(rng, 2, 3)
        p = [1.0, 0.7]
        params = unit_params(links=2)
        result = oracle.exhaustive_phase_search(chan, p, params, 2)
        levels = oracle.quantized_levels(2)
        for _junk in range(50):
            phase = PhaseConfig(rng.choice(levels, 3))
            self.assertTrue(result.sum_rate >=
                            sum_rate(chan, phase, p, 1.0) - 1e-12)
        self.assertAlmostEqual(result.sum_rate,
                               sum_rate(chan, result.phase, p, 1.0))


class TestBaselines(unittest.TestCase):

    def test_random_phase_draw(self):
        rng = np.random.default_rng(9)
        chan = random_channel(rng, 2, 4)
        params = unit_params(links=2, circuit_power=0.1)
        controller = PowerController(logger=DumbLogger())
        result = oracle.baselines(chan, params, np.random.default_rng(77),
                                  controller=controller)
        expected = random_phases(4, 0.8, np.random.default_rng(77))
        np.testing.assert_array_equal(result.phase.phases, expected.phases)
        self.assertAlmostEqual(
            result.random_phase.ee,
            energy_efficiency(chan, result.phase, result.random_phase.p,
                              params))
        self.assertAlmostEqual(
            result.no_ris.ee,
            energy_efficiency(chan.without_ris(), PhaseConfig([]),
                              result.no_ris.p, params))

    def test_vanishing_reflection(self):
        rng = np.random.default_rng(10)
        chan = random_channel(rng, 2, 4)
        params = unit_params(links=2, circuit_power=0.1)
        controller = PowerController(logger=DumbLogger())
        result = oracle.baselines(chan, params, np.random.default_rng(1),
                                  eta=1e-12, controller=controller)
        # direct channel only, RIS power still drawn
        direct = PowerModel(np.abs(chan.direct) ** 2, params.noise_power,
                            static_power(2, params, 4), params.p_max,
                            params.min_rates(2))
        expected = controller.solve(direct)
        self.assertAlmostEqual(result.random_phase.ee / expected.ee, 1.0,
                               places=4)
        self.assertTrue(result.no_ris.ee >= result.random_phase.ee)


if __name__ == '__main__':
    unittest.main()
