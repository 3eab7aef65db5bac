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

"""
Energy-efficient power allocation for fixed phases.

The ratio R(p) / P_total(p) is maximized with Dinkelbach's method. Every
parametric problem max R(p) - lam * P_total(p), and the rate constraints,
are differences of concave functions of p

    f1(p)    = sum_l log2(n + sum_i G[i, l] p_i) - lam * P_total(p)
    f2(p)    = sum_l log2(n + sum_{i != l} G[i, l] p_i)
    c1_l(p)  = log2(n + sum_i G[i, l] p_i)
    c2_l(p)  = log2(n + sum_{i != l} G[i, l] p_i)

and are handled by DCA: f2 and c2_l are replaced by their tangents at the
current point and the resulting concave program is solved with SLSQP.
"""

import copy
import time
from collections import namedtuple

import numpy as np
from scipy.optimize import minimize, nnls

from riseff.common import DimensionMismatch, resolve_logger
from riseff.system import PowerAlloc, dbm_to_watts, gain_matrix, \
    static_power, watts_to_dbm

LN2 = np.log(2.0)
#: tolerance on rate constraints, bits/s/Hz
RATE_TOL = 1e-9
#: a constraint this close to its bound counts as active in the KKT check
ACTIVE_TOL = 1e-7
KKT_CONTRACT = 1e-6

OK = 'ok'
FAILURE = 'failure'
INFEASIBLE = 'infeasible'

DinkelbachState = namedtuple('DinkelbachState', 'lam F_value iteration')
DcIterate = namedtuple('DcIterate', 'p objective kkt_residual')
DcComponents = namedtuple('DcComponents', 'f1 f2 grad_f2 c1 c2 grad_c2')
SubproblemResult = namedtuple('SubproblemResult', 'p objective kkt_residual '
                              'status')
FeasibilityResult = namedtuple('FeasibilityResult', 'feasible p margin')
PowerResult = namedtuple('PowerResult', 'p ee lam status states dca_traces '
                         'iterations')


class PowerModel(object):
    """
    Rate and power model of one channel at fixed phases.

    Gains are kept relative to the noise power so the logarithms stay well
    conditioned; c1, c2 and f2 add log2(noise) back.

    :param gains: G[i, l] = |effective channel from tx i to rx l|^2
    :param noise_power: watts
    :param static: power drawn independently of p (circuits and RIS)
    :param p_max: per-link power limit
    :param r_min: minimum rate per link
    """

    def __init__(self, gains, noise_power, static, p_max, r_min):
        gains = np.asarray(gains, dtype=float)
        links = gains.shape[0]
        if gains.shape != (links, links):
            raise DimensionMismatch('gain matrix must be L x L, got %r' %
                                    (gains.shape,))
        self.links = links
        self.noise_power = float(noise_power)
        self.log_noise = np.log2(self.noise_power)
        self.gains = gains / self.noise_power
        self.off = self.gains * (1.0 - np.eye(links))
        self.static = float(static)
        self.p_max = float(p_max)
        self.r_min = np.broadcast_to(np.asarray(r_min, dtype=float),
                                     (links,)).copy()
        self.constrained = self.r_min > 0

    @classmethod
    def from_channel(cls, chan, phase, params):
        return cls(gain_matrix(chan, phase), params.noise_power,
                   static_power(chan.links, params, chan.elements),
                   params.p_max, params.min_rates(chan.links))

    def capped(self, p_max):
        """The same model with a different power limit."""
        model = copy.copy(self)
        model.p_max = float(p_max)
        return model

    def received(self, p):
        return 1.0 + self.gains.T.dot(p)

    def interference(self, p):
        return 1.0 + self.off.T.dot(p)

    def rates(self, p):
        return np.log2(self.received(p) / self.interference(p))

    def sum_rate(self, p):
        return float(np.sum(self.rates(p)))

    def total_power(self, p):
        return float(np.sum(p)) + self.static

    def ee(self, p):
        return self.sum_rate(p) / self.total_power(p)

    def F(self, p, lam):
        return self.sum_rate(p) - lam * self.total_power(p)

    def c1(self, p):
        return self.log_noise + np.log2(self.received(p))

    def c2(self, p):
        return self.log_noise + np.log2(self.interference(p))

    def grad_c1(self, p):
        """row l is the gradient of c1_l"""
        return self.gains.T / (self.received(p)[:, None] * LN2)

    def grad_c2(self, p):
        return self.off.T / (self.interference(p)[:, None] * LN2)

    def f1(self, p, lam):
        return float(np.sum(self.c1(p))) - lam * self.total_power(p)

    def f2(self, p):
        return float(np.sum(self.c2(p)))

    def grad_f1(self, p, lam):
        return np.sum(self.grad_c1(p), axis=0) - lam

    def grad_f2(self, p):
        return np.sum(self.grad_c2(p), axis=0)

    def margins(self, p):
        return self.rates(p) - self.r_min

    def feasible(self, p):
        return bool(np.all(self.margins(p)[self.constrained] >= -RATE_TOL))

    def clip(self, p):
        return np.clip(np.asarray(p, dtype=float), 0.0, self.p_max)


def F_lambda(chan, phase, p, params, lam):
    """R(p) - lam * P_total(p)"""
    p = np.asarray(getattr(p, 'p', p), dtype=float)
    return PowerModel.from_channel(chan, phase, params).F(p, lam)


def dc_components(chan, phase, p, params, lam):
    p = np.asarray(getattr(p, 'p', p), dtype=float)
    model = PowerModel.from_channel(chan, phase, params)
    return DcComponents(model.f1(p, lam), model.f2(p), model.grad_f2(p),
                        model.c1(p), model.c2(p), model.grad_c2(p))


def kkt_residual(grad, jac, values):
    """
    Stationarity residual of max f s.t. g_j >= 0 at a point.

    :param grad: gradient of f
    :param jac: rows are gradients of the constraints g_j
    :param values: constraint values g_j; only active ones get multipliers
    :returns: min over mu >= 0 of ||grad + jac_active' mu||, relative to
              1 + ||grad||
    """
    grad = np.asarray(grad, dtype=float)
    active = np.abs(values) <= ACTIVE_TOL
    scale = 1.0 + np.linalg.norm(grad)
    if not np.any(active):
        return float(np.linalg.norm(grad)) / scale
    _mu, res = nnls(np.asarray(jac)[active].T, -grad)
    return float(res) / scale


def _box_rows(x):
    eye = np.eye(len(x))
    return np.vstack([eye, -eye]), np.concatenate([x, 1.0 - x])


def solve_convex_subproblem(model, lam, p_k):
    """
    Maximize f1(p) - [f2(p_k) + grad f2(p_k) (p - p_k)] over the box with
    the linearized rate constraints, using SLSQP on p / p_max.

    :param model: PowerModel
    :param lam: Dinkelbach parameter
    :param p_k: linearization point, feasible for the rate constraints
    :returns: SubproblemResult; status 'infeasible' when the solver ended
              outside the linearized constraints
    """
    p_max = model.p_max
    p_k = model.clip(p_k)
    f2_k, g2_k = model.f2(p_k), model.grad_f2(p_k)
    c2_k, J2_k = model.c2(p_k), model.grad_c2(p_k)
    rows = model.constrained

    def objective(x):
        p = p_max * x
        value = model.f1(p, lam) - (f2_k + g2_k.dot(p - p_k))
        grad = (model.grad_f1(p, lam) - g2_k) * p_max
        return -value, -grad

    def linear_rates(x):
        p = p_max * x
        return (model.c1(p) - c2_k - J2_k.dot(p - p_k) - model.r_min)[rows]

    def linear_rates_jac(x):
        return ((model.grad_c1(p_max * x) - J2_k) * p_max)[rows]

    constraints = []
    if np.any(rows):
        constraints.append({'type': 'ineq', 'fun': linear_rates,
                            'jac': linear_rates_jac})
    x0 = p_k / p_max
    res = minimize(objective, x0, jac=True, method='SLSQP',
                   bounds=[(0.0, 1.0)] * model.links,
                   constraints=constraints,
                   options={'ftol': 1e-12, 'maxiter': 200})
    x = np.clip(res.x, 0.0, 1.0)
    box_jac, box_val = _box_rows(x)
    if np.any(rows):
        lin = linear_rates(x)
        if np.any(lin < -RATE_TOL):
            return SubproblemResult(p_max * x, -objective(x)[0], np.inf,
                                    INFEASIBLE)
        jac = np.vstack([box_jac, linear_rates_jac(x)])
        values = np.concatenate([box_val, lin])
    else:
        jac, values = box_jac, box_val
    value, grad = objective(x)
    residual = kkt_residual(-grad, jac, values)
    return SubproblemResult(p_max * x, -value, residual, OK)


def dca_iterations(model, lam, p_init, tol=1e-6, max_iter=50):
    """
    DCA on the parametric problem from a feasible p_init.

    A subproblem result that would lower F or break a rate constraint is
    discarded and the iteration stops, so the objective sequence never
    decreases.

    :returns: list of DcIterate, at least one entry
    """
    p = model.clip(p_init)
    current = model.F(p, lam)
    iterates = []
    for _junk in range(max_iter):
        sub = solve_convex_subproblem(model, lam, p)
        new_p = model.clip(sub.p)
        new = model.F(new_p, lam)
        if sub.status != OK or not model.feasible(new_p) or \
                new < current - 1e-12 * max(1.0, abs(current)):
            iterates.append(DcIterate(p, current, sub.kkt_residual))
            break
        improvement = new - current
        p, current = new_p, new
        iterates.append(DcIterate(p, current, sub.kkt_residual))
        if improvement < tol * max(1.0, abs(current)):
            break
    return iterates


def dca_solve(chan, phase, params, lam, p_init, tol=1e-6, max_iter=50):
    """
    :returns: list of DcIterate with non-decreasing objective
    """
    p_init = np.asarray(getattr(p_init, 'p', p_init), dtype=float)
    return dca_iterations(PowerModel.from_channel(chan, phase, params), lam,
                          p_init, tol, max_iter)


def feasibility_search(model, tol=1e-6, max_iter=50):
    """
    Maximize the smallest rate margin over the box by DCA.

    Stops as soon as every constrained link meets its target.

    :returns: FeasibilityResult
    """
    p = np.full(model.links, model.p_max)
    rows = model.constrained
    if not np.any(rows):
        return FeasibilityResult(True, p, np.inf)
    margin = float(np.min(model.margins(p)[rows]))
    p_max = model.p_max
    for _junk in range(max_iter):
        if margin >= -RATE_TOL:
            break
        c2_k, J2_k = model.c2(p), model.grad_c2(p)
        p_k = p

        def objective(z):
            grad = np.zeros_like(z)
            grad[-1] = -1.0
            return -z[-1], grad

        def linear_margins(z):
            q = p_max * z[:-1]
            lin = model.c1(q) - c2_k - J2_k.dot(q - p_k) - model.r_min
            return lin[rows] - z[-1]

        def linear_margins_jac(z):
            jac = (model.grad_c1(p_max * z[:-1]) - J2_k) * p_max
            return np.column_stack([jac[rows], -np.ones(np.sum(rows))])

        z0 = np.append(p / p_max, margin)
        res = minimize(objective, z0, jac=True, method='SLSQP',
                       bounds=[(0.0, 1.0)] * model.links + [(None, None)],
                       constraints=[{'type': 'ineq', 'fun': linear_margins,
                                     'jac': linear_margins_jac}],
                       options={'ftol': 1e-12, 'maxiter': 200})
        new_p = model.clip(p_max * res.x[:-1])
        new_margin = float(np.min(model.margins(new_p)[rows]))
        if new_margin <= margin + tol * max(1.0, abs(margin)):
            if new_margin > margin:
                p, margin = new_p, new_margin
            break
        p, margin = new_p, new_margin
    return FeasibilityResult(margin >= -RATE_TOL, p, margin)


def feasibility_check(chan, phase, params, tol=1e-6, max_iter=50):
    """Whether some p in the box meets every minimum rate."""
    return feasibility_search(PowerModel.from_channel(chan, phase, params),
                              tol, max_iter)


class PowerController(object):
    """
    Dinkelbach iterations over DCA-solved parametric problems.

    The main run starts at lam = 0 from the first feasible point of p_init,
    p_max * 1 and the feasibility maximizer. Warm runs start at lam =
    EE(q) from a feasible q, so they never end below EE(q); q is p_init
    and the best point found with the power cap lowered in steps of
    power_start_step_db down to power_start_floor_dbm. A cap ladder that
    meets a smaller p_max reproduces its solution exactly, so the result
    never loses energy efficiency when p_max grows along that ladder.
    """

    def __init__(self, conf=None, logger=None):
        if conf is None:
            conf = {}
        self.logger = resolve_logger(logger or (conf,), 'power-control')
        self.tol = float(conf.get('dinkelbach_tol', '1e-4'))
        self.max_iter = int(conf.get('dinkelbach_max_iter', '50'))
        self.dca_tol = float(conf.get('dca_tol', '1e-6'))
        self.dca_max_iter = int(conf.get('dca_max_iter', '50'))
        self.step_db = float(conf.get('power_start_step_db', '5'))
        self.floor_dbm = float(conf.get('power_start_floor_dbm', '-10'))

    def _start(self, model, p_init):
        if p_init is not None:
            p = model.clip(getattr(p_init, 'p', p_init))
            if model.feasible(p):
                return p
        p = np.full(model.links, model.p_max)
        if model.feasible(p):
            return p
        found = feasibility_search(model, self.dca_tol, self.dca_max_iter)
        if found.feasible:
            return found.p
        self.logger.debug(_('Rate targets unreachable, best margin '
                            '%(margin).4g') % {'margin': found.margin})
        return None

    def caps(self, p_max):
        """Power caps below p_max on the ladder, smallest first."""
        if self.step_db <= 0:
            return []
        top = float(watts_to_dbm(p_max))
        levels = []
        level = self.floor_dbm
        while level < top - 1e-6:
            levels.append(round(level, 9))
            level = self.floor_dbm + len(levels) * self.step_db
        return [float(dbm_to_watts(level)) for level in levels]

    def _run(self, model, p, lam):
        states = []
        traces = []
        iteration = 0
        for iteration in range(1, self.max_iter + 1):
            iterates = dca_iterations(model, lam, p, self.dca_tol,
                                      self.dca_max_iter)
            traces.append(iterates)
            p = iterates[-1].p
            worst = max(it.kkt_residual for it in iterates)
            if worst > KKT_CONTRACT:
                self.logger.debug(_('DCA subproblem KKT residual %(res).3g') %
                                  {'res': worst})
            value = model.F(p, lam)
            states.append(DinkelbachState(lam, value, iteration))
            if abs(value) < self.tol:
                break
            lam = model.ee(p)
        else:
            self.logger.warning(_('Dinkelbach stopped after %(it)d iterations '
                                  '(|F| = %(f).3g)') %
                                {'it': iteration, 'f': states[-1].F_value})
        ee = model.ee(p)
        return PowerResult(PowerAlloc(p), ee, ee, OK, states, traces,
                           iteration)

    def _best(self, model, p_init=None, warm=()):
        """Best of the main run and the warm runs, None if none is feasible"""
        runs = []
        p = self._start(model, p_init)
        if p is not None:
            runs.append(self._run(model, p, 0.0))
        for q in warm:
            q = model.clip(getattr(q, 'p', q))
            if model.feasible(q):
                runs.append(self._run(model, q, model.ee(q)))
        best = None
        for run in runs:
            if best is None or run.ee > best.ee:
                best = run
        return best

    def solve(self, model, p_init=None, ladder=True):
        """
        :param model: PowerModel
        :param p_init: optional starting powers
        :param ladder: also start from the solutions with lowered caps
        :returns: PowerResult; status 'failure' with ee 0 when the rate
                  targets cannot be met
        """
        start = time.time()
        below = None
        if ladder:
            for cap in self.caps(model.p_max):
                found = self._best(model.capped(cap),
                                   warm=[below.p] if below else [])
                below = found or below
        warm = [] if p_init is None else [p_init]
        if below is not None:
            warm.append(below.p)
        result = self._best(model, p_init, warm)
        if result is None:
            return PowerResult(PowerAlloc(np.zeros(model.links)), 0.0, 0.0,
                               FAILURE, [], [], 0)
        self.logger.debug(_('Dinkelbach done: EE %(ee).6g after %(it)d '
                            'iterations (%(secs)0.2f seconds)') %
                          {'ee': result.ee, 'it': result.iterations,
                           'secs': time.time() - start})
        return result

    def dinkelbach(self, chan, phase, params, p_init=None, ladder=True):
        return self.solve(PowerModel.from_channel(chan, phase, params),
                          p_init, ladder)


def dinkelbach(chan, phase, params, p_init=None, conf=None, logger=None):
    """
    Maximize energy efficiency over the powers for fixed phases.

    :returns: PowerResult; result.lam equals the energy efficiency of
              result.p
    """
    return PowerController(conf, logger).dinkelbach(chan, phase, params,
                                                    p_init)
