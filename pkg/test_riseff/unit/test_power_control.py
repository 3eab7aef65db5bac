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

from riseff import power_control as pc
from riseff.common import DimensionMismatch
from riseff.netmodel import ChannelRealization
from riseff.oracle import grid_power_search
from riseff.system import PhaseConfig, SystemParams, dbm_to_watts, \
    energy_efficiency, random_phases, sum_rate, watts_to_dbm
from test_riseff.unit import DumbLogger, random_channel, unit_params


def direct_only(h):
    h = np.asarray(h, dtype=complex)
    links = h.shape[0]
    empty = np.zeros((0, links))
    return ChannelRealization(h, empty, empty)


def instance(seed, links=2, elements=3):
    rng = np.random.default_rng(seed)
    chan = random_channel(rng, links, elements)
    phase = random_phases(elements, 0.8, rng)
    params = unit_params(links=links, circuit_power=0.1)
    return rng, chan, phase, params


def strong_links(seed):
    """Two links with strong direct channels and a weak RIS."""
    rng = np.random.default_rng(seed)
    h = np.array([[1.5, 0.3j], [0.2, 1.2 - 0.5j]])
    chan = ChannelRealization(h, 0.1 * rng.standard_normal((3, 2)),
                              0.1 * rng.standard_normal((3, 2)))
    phase = random_phases(3, 0.8, rng)
    params = unit_params(links=2, circuit_power=0.1)
    return rng, chan, phase, params


class TestParametricObjective(unittest.TestCase):

    def test_zero_lambda(self):
        _rng, chan, phase, params = instance(0)
        p = np.array([0.3, 1.2])
        self.assertAlmostEqual(pc.F_lambda(chan, phase, p, params, 0.0),
                               sum_rate(chan, phase, p, 1.0))

    def test_energy_efficiency_root(self):
        _rng, chan, phase, params = instance(1)
        p = np.array([0.7, 0.4])
        ee = energy_efficiency(chan, phase, p, params)
        self.assertAlmostEqual(pc.F_lambda(chan, phase, p, params, ee), 0.0,
                               places=12)

    def test_decreasing_in_lambda(self):
        _rng, chan, phase, params = instance(2)
        p = np.array([0.7, 0.4])
        self.assertTrue(pc.F_lambda(chan, phase, p, params, 0.1) >
                        pc.F_lambda(chan, phase, p, params, 0.2))


class TestDcComponents(unittest.TestCase):

    def test_single_link(self):
        chan = direct_only([[2.0]])
        params = SystemParams(0.25, 0.0, p_max=1.0)
        parts = pc.dc_components(chan, PhaseConfig([]), [0.5], params, 0.3)
        self.assertAlmostEqual(parts.f2, np.log2(0.25))
        np.testing.assert_array_equal(parts.grad_f2, [0.0])

    def test_difference_is_f(self):
        for seed in range(5):
            rng, chan, phase, params = instance(seed)
            p = rng.uniform(0, 2, 2)
            lam = rng.uniform(0, 3)
            parts = pc.dc_components(chan, phase, p, params, lam)
            self.assertAlmostEqual(
                parts.f1 - parts.f2, pc.F_lambda(chan, phase, p, params, lam),
                places=12)
            model = pc.PowerModel.from_channel(chan, phase, params)
            np.testing.assert_allclose(parts.c1 - parts.c2, model.rates(p))

    def test_gradients(self):
        rng, chan, phase, params = instance(5, links=3)
        model = pc.PowerModel.from_channel(chan, phase, params)
        p = rng.uniform(0.2, 2, 3)
        h = 1e-6
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            df2 = (model.f2(p + step) - model.f2(p - step)) / (2 * h)
            self.assertAlmostEqual(model.grad_f2(p)[k] / df2, 1.0, places=5)
            dc2 = (model.c2(p + step) - model.c2(p - step)) / (2 * h)
            dc1 = (model.c1(p + step) - model.c1(p - step)) / (2 * h)
            for l in range(3):
                self.assertAlmostEqual(model.grad_c2(p)[l, k], dc2[l],
                                       delta=1e-5 * (1 + abs(dc2[l])))
                self.assertAlmostEqual(model.grad_c1(p)[l, k], dc1[l],
                                       delta=1e-5 * (1 + abs(dc1[l])))

    def test_model_shape(self):
        self.assertRaises(DimensionMismatch, pc.PowerModel, np.ones((2, 3)),
                          1.0, 0.0, 1.0, 0.0)


class TestKktResidual(unittest.TestCase):

    def test_interior(self):
        self.assertAlmostEqual(
            pc.kkt_residual([3.0, 4.0], np.eye(2), [1.0, 1.0]), 5.0 / 6.0)

    def test_active_bound(self):
        # maximize -x at x = 0 with x >= 0
        self.assertAlmostEqual(pc.kkt_residual([-1.0], [[1.0]], [0.0]), 0.0)
        self.assertAlmostEqual(pc.kkt_residual([1.0], [[1.0]], [0.0]), 0.5)


class TestSubproblem(unittest.TestCase):

    def test_full_power(self):
        model = pc.PowerModel([[4.0]], 1.0, 0.1, 2.0, 0.0)
        result = pc.solve_convex_subproblem(model, 0.0, [1.0])
        self.assertEqual(result.status, pc.OK)
        self.assertAlmostEqual(result.p[0], 2.0, places=6)
        self.assertTrue(result.kkt_residual <= 1e-6)

    def test_zero_power(self):
        model = pc.PowerModel([[4.0]], 1.0, 0.1, 2.0, 0.0)
        result = pc.solve_convex_subproblem(model, 100.0, [1.0])
        self.assertAlmostEqual(result.p[0], 0.0, places=6)
        self.assertTrue(result.kkt_residual <= 1e-6)

    def test_beats_random_points(self):
        rng, chan, phase, params = instance(6)
        model = pc.PowerModel.from_channel(chan, phase, params)
        lam = 0.5
        p_k = np.array([1.0, 1.0])
        result = pc.solve_convex_subproblem(model, lam, p_k)
        f2_k, g2_k = model.f2(p_k), model.grad_f2(p_k)
        for p in rng.uniform(0, params.p_max, (10000, 2)):
            value = model.f1(p, lam) - (f2_k + g2_k.dot(p - p_k))
            self.assertTrue(result.objective >= value - 1e-7)


class TestDca(unittest.TestCase):

    def test_monotone(self):
        for seed in range(5):
            rng, chan, phase, params = instance(10 + seed)
            iterates = pc.dca_solve(chan, phase, params, 0.4,
                                    rng.uniform(0, 2, 2))
            values = [it.objective for it in iterates]
            self.assertTrue(len(values) >= 1)
            self.assertTrue(np.all(np.diff(values) >= -1e-9))

    def test_monotone_with_rate_targets(self):
        _rng, chan, phase, params = strong_links(20)
        params = params.replace(r_min=np.array([0.2, 0.2]))
        model = pc.PowerModel.from_channel(chan, phase, params)
        start = pc.feasibility_search(model)
        self.assertTrue(start.feasible)
        iterates = pc.dca_iterations(model, 0.3, start.p)
        values = [it.objective for it in iterates]
        self.assertTrue(np.all(np.diff(values) >= -1e-9))
        for it in iterates:
            self.assertTrue(model.feasible(it.p))

    def test_fixed_point(self):
        chan = direct_only([[2.0]])
        params = unit_params(p_max=2.0)
        iterates = pc.dca_solve(chan, PhaseConfig([]), params, 0.0, [2.0])
        self.assertEqual(len(iterates), 1)
        self.assertAlmostEqual(iterates[0].p[0], 2.0, places=6)


class TestFeasibility(unittest.TestCase):

    def _model(self, r_min):
        gains = np.array([[10.0, 5.0], [5.0, 10.0]])
        return pc.PowerModel(gains, 1.0, 0.1, 10.0, r_min)

    def test_no_targets(self):
        result = pc.feasibility_search(self._model([0.0, 0.0]))
        self.assertTrue(result.feasible)
        self.assertEqual(result.margin, np.inf)

    def test_below_full_power(self):
        model = self._model([2.5, 0.1])
        self.assertFalse(model.feasible(np.full(2, 10.0)))
        result = pc.feasibility_search(model)
        self.assertTrue(result.feasible)
        self.assertTrue(model.feasible(result.p))

    def test_unreachable(self):
        result = pc.feasibility_search(self._model([5.0, 5.0]))
        self.assertFalse(result.feasible)
        self.assertTrue(result.margin < 0)

    def test_feasibility_check(self):
        _rng, chan, phase, params = instance(21)
        self.assertTrue(pc.feasibility_check(chan, phase, params).feasible)
        hard = params.replace(r_min=np.array([30.0, 30.0]))
        self.assertFalse(pc.feasibility_check(chan, phase, hard).feasible)


class TestDinkelbach(unittest.TestCase):

    def test_conf(self):
        controller = pc.PowerController({'dinkelbach_tol': '1e-6',
                                         'dca_max_iter': '7'}, DumbLogger())
        self.assertEqual(controller.tol, 1e-6)
        self.assertEqual(controller.dca_max_iter, 7)
        self.assertEqual(controller.max_iter, 50)

    def test_single_link_grid(self):
        chan = direct_only([[np.sqrt(10.0)]])
        # static power 2 * 0.05, optimum at p = (e - 1) / 10
        params = SystemParams(1.0, 0.05, p_max=10.0)
        conf = {'dinkelbach_tol': '1e-10', 'dca_tol': '1e-10'}
        result = pc.dinkelbach(chan, PhaseConfig([]), params, conf=conf,
                               logger=DumbLogger())
        self.assertEqual(result.status, pc.OK)
        grid = np.linspace(0, 10.0, 10000)
        best = np.max(np.log2(1 + 10 * grid) / (grid + 0.1))
        self.assertTrue(result.ee >= best - 1e-6)
        self.assertAlmostEqual(result.ee / best, 1.0, places=4)
        self.assertAlmostEqual(result.p.p[0], (np.e - 1) / 10, delta=0.01)
        self.assertEqual(result.lam, result.ee)

    def test_lambda_increases(self):
        _rng, chan, phase, params = instance(30)
        single = {'power_start_step_db': '0'}
        result = pc.dinkelbach(chan, phase, params, conf=single,
                               logger=DumbLogger())
        lams = [state.lam for state in result.states]
        self.assertEqual(lams[0], 0.0)
        self.assertTrue(np.all(np.diff(lams) >= -1e-9))
        self.assertAlmostEqual(result.ee,
                               energy_efficiency(chan, phase, result.p,
                                                 params))

    def test_failure(self):
        _rng, chan, phase, params = instance(31)
        hard = params.replace(r_min=np.array([30.0, 30.0]))
        result = pc.dinkelbach(chan, phase, hard, logger=DumbLogger())
        self.assertEqual(result.status, pc.FAILURE)
        self.assertEqual(result.ee, 0.0)
        np.testing.assert_array_equal(result.p.p, [0.0, 0.0])

    def test_meets_rate_targets(self):
        _rng, chan, phase, params = strong_links(32)
        params = params.replace(r_min=np.array([0.3, 0.3]))
        result = pc.dinkelbach(chan, phase, params, logger=DumbLogger())
        self.assertEqual(result.status, pc.OK)
        model = pc.PowerModel.from_channel(chan, phase, params)
        self.assertTrue(model.feasible(result.p.p))
        self.assertTrue(np.all(result.p.p <= params.p_max + 1e-12))

    def test_two_link_grid(self):
        good = 0
        for seed in range(20):
            rng = np.random.default_rng(200 + seed)
            chan = random_channel(rng, 2, 0, cross=0.1)
            phase = PhaseConfig([])
            params = unit_params(links=2, p_max=2.0, circuit_power=0.05)
            result = pc.dinkelbach(chan, phase, params, logger=DumbLogger())
            grid = grid_power_search(chan, phase, params)
            if result.ee >= 0.99 * grid.ee:
                good += 1
        self.assertTrue(good >= 18, good)


def interference_model(p_max_dbm, r_min=0.0):
    """Two strongly coupled links, 0 dBm noise, powers in watts."""
    gains = np.array([[4e-2, 3e-2], [2.5e-2, 5e-2]])
    return pc.PowerModel(gains, 1e-3, 0.05, dbm_to_watts(p_max_dbm), r_min)


class TestPowerStarts(unittest.TestCase):

    def test_defaults(self):
        controller = pc.PowerController({}, DumbLogger())
        self.assertEqual(controller.step_db, 5.0)
        self.assertEqual(controller.floor_dbm, -10.0)

    def test_caps(self):
        controller = pc.PowerController({}, DumbLogger())
        caps = controller.caps(float(dbm_to_watts(10.0)))
        np.testing.assert_allclose(watts_to_dbm(np.array(caps)),
                                   [-10.0, -5.0, 0.0, 5.0])
        self.assertEqual(caps[-1], float(dbm_to_watts(5.0)))
        self.assertEqual(controller.caps(float(dbm_to_watts(-10.0))), [])
        off = pc.PowerController({'power_start_step_db': '0'}, DumbLogger())
        self.assertEqual(off.caps(float(dbm_to_watts(30.0))), [])

    def test_capped_matches_fresh_model(self):
        capped = interference_model(20.0).capped(dbm_to_watts(10.0))
        fresh = interference_model(10.0)
        self.assertEqual(capped.p_max, fresh.p_max)
        np.testing.assert_array_equal(capped.gains, fresh.gains)
        self.assertEqual(interference_model(20.0).p_max,
                         float(dbm_to_watts(20.0)))

    def test_warm_start_never_loses(self):
        controller = pc.PowerController({}, DumbLogger())
        model = interference_model(20.0)
        for q in ([0.1, 0.0], [0.0, 0.1], [0.01, 0.003]):
            result = controller.solve(model, np.array(q))
            self.assertEqual(result.status, pc.OK)
            self.assertTrue(result.ee >= model.ee(np.array(q)) - 1e-12)

    def test_monotone_in_power_limit(self):
        controller = pc.PowerController({}, DumbLogger())
        found = [controller.solve(interference_model(dbm)).ee
                 for dbm in (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)]
        for lower, higher in zip(found, found[1:]):
            self.assertTrue(higher >= lower - 1e-12, found)

    def test_feasible_stays_feasible(self):
        controller = pc.PowerController({}, DumbLogger())
        statuses = [controller.solve(interference_model(dbm, 0.2)).status
                    for dbm in (-10.0, 0.0, 10.0, 20.0)]
        for lower, higher in zip(statuses, statuses[1:]):
            if lower == pc.OK:
                self.assertEqual(higher, pc.OK)
        self.assertEqual(statuses[-1], pc.OK)

    def test_single_start_matches_main_run(self):
        controller = pc.PowerController({}, DumbLogger())
        model = interference_model(20.0)
        single = controller.solve(model, ladder=False)
        self.assertTrue(controller.solve(model).ee >= single.ee - 1e-12)


if __name__ == '__main__':
    unittest.main()
