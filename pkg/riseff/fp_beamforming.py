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
Phase optimization for fixed transmit powers.

The sum rate is rewritten with a Lagrangian dual transform (auxiliary beta)
and a quadratic transform (auxiliary eps) into a quadratic in the phase
vector theta, lifted to an SDP over Q = [theta; 1][theta; 1]^H and rounded
back by Gaussian randomization.

theta is the conjugate of the reflection phasors, theta[n] =
exp(-1j * phases[n]), so that theta^H a = sum_n exp(1j * phases[n]) a[n].
With

    A[i, l] = sqrt(eta) * g_i * f_l * sqrt(p_i)     (N-vector)
    b[i, l] = h_il * sqrt(p_i)

the received amplitude of tx i at rx l is b[i, l] + theta^H A[i, l].
"""

import time
from collections import namedtuple

import numpy as np

from riseff import sdp
from riseff.common import NotPositiveSemidefinite, resolve_logger
from riseff.system import PhaseConfig, gain_matrix, sinrs, sum_rate

LN2 = np.log(2.0)
#: relative slack allowed on SINR thresholds when checking candidates
SINR_SLACK = 1e-9
PSD_TOL = 1e-8

OK = 'ok'
PHASE_INFEASIBLE = 'phase-infeasible'


def theta_from_phases(phases):
    return np.exp(-1j * np.asarray(phases, dtype=float))


def phases_from_theta(theta):
    return np.mod(-np.angle(theta), 2 * np.pi)


AuxVars = namedtuple('AuxVars', 'beta eps')

FpTerms = namedtuple('FpTerms', 'A b sigma2')


def fp_terms(chan, p, eta, noise_power):
    """Per-pair vectors A[i, l] (N) and scalars b[i, l] for powers p."""
    sp = np.sqrt(np.asarray(p, dtype=float))
    A = np.sqrt(eta) * chan.tx_to_ris.T[:, None, :] * \
        chan.ris_to_rx.T[None, :, :] * sp[:, None, None]
    b = chan.direct * sp[:, None]
    return FpTerms(A, b, float(noise_power))


def composite(theta, terms):
    """b[i, l] + theta^H A[i, l]; theta may carry leading batch axes."""
    return terms.b + np.einsum('...n,iln->...il', np.conj(theta), terms.A)


def _received(y, sigma2):
    """signal |y_ll|^2 and sigma2 + sum_i |y_il|^2 per link"""
    power = np.abs(y) ** 2
    signal = np.diagonal(power, axis1=-2, axis2=-1)
    return signal, sigma2 + np.sum(power, axis=-2)


def update_beta(chan, phase, p, noise_power):
    """Optimal Lagrangian auxiliary: the SINR of each link."""
    return sinrs(chan, phase, p, noise_power)


def lagrangian_objective(chan, phase, p, beta, noise_power):
    """
    sum log2(1 + beta) + (1 / ln 2) * sum(-beta + (1 + beta) S / (S + I + n))

    Maximized over beta at beta = SINR, where it equals the sum rate.
    """
    beta = np.asarray(beta, dtype=float)
    p = np.asarray(p, dtype=float)
    gains = gain_matrix(chan, phase)
    signal = np.diag(gains) * p
    received = gains.T.dot(p) + noise_power
    frac = signal / received
    return float(np.sum(np.log2(1.0 + beta)) +
                 np.sum(-beta + (1.0 + beta) * frac) / LN2)


def fractional_objective(theta, beta, terms):
    """sum (1 + beta) S / (S + I + n) over links"""
    signal, received = _received(composite(theta, terms), terms.sigma2)
    return np.sum((1.0 + np.asarray(beta)) * signal / received, axis=-1)


def _eps(theta, beta, terms):
    y = composite(theta, terms)
    _signal, received = _received(y, terms.sigma2)
    return np.sqrt(1.0 + np.asarray(beta)) * np.diagonal(y) / received


def update_eps(chan, phase, p, beta, noise_power):
    """Closed-form optimal quadratic-transform auxiliary per link."""
    terms = fp_terms(chan, p, phase.eta, noise_power)
    return _eps(theta_from_phases(phase.phases), beta, terms)


def quadratic_objective(theta, eps, beta, terms):
    """
    sum_l 2 sqrt(1 + beta_l) Re{eps_l^* y_ll}
        - |eps_l|^2 (n + sum_i |y_il|^2)
    """
    y = composite(theta, terms)
    _signal, received = _received(y, terms.sigma2)
    eps = np.asarray(eps)
    cross = np.real(np.conj(eps) * np.diagonal(y, axis1=-2, axis2=-1))
    return np.sum(2.0 * np.sqrt(1.0 + np.asarray(beta)) * cross -
                  np.abs(eps) ** 2 * received, axis=-1)


class QuadraticForm(namedtuple('QuadraticForm', 'U v c')):
    """f(theta) = -theta^H U theta + 2 Re{theta^H v} + c"""

    __slots__ = ()

    def value(self, theta):
        theta = np.asarray(theta)
        quad = np.real(np.einsum('...n,nm,...m->...', np.conj(theta), self.U,
                                 theta))
        return -quad + 2.0 * np.real(np.conj(theta).dot(self.v)) + self.c


def build_quadratic_form(terms, beta, eps):
    """
    Expand the quadratic-transform objective in theta.

    :param terms: FpTerms for the channel and powers
    :param beta: Lagrangian auxiliaries, one per link
    :param eps: quadratic-transform auxiliaries, one per link
    :returns: QuadraticForm equal to quadratic_objective for every theta
    """
    beta = np.asarray(beta, dtype=float)
    eps = np.asarray(eps, dtype=complex)
    A, b = terms.A, terms.b
    links = len(beta)
    w = np.abs(eps) ** 2
    U = np.einsum('l,iln,ilm->nm', w, A, np.conj(A))
    U = (U + U.conj().T) / 2.0
    direct = A[np.arange(links), np.arange(links)]
    v = np.einsum('l,ln->n', np.sqrt(1.0 + beta) * np.conj(eps), direct) - \
        np.einsum('l,il,iln->n', w, np.conj(b), A)
    c = float(np.sum(2.0 * np.sqrt(1.0 + beta) *
                     np.real(np.conj(eps) * np.diag(b)) -
                     w * (terms.sigma2 + np.sum(np.abs(b) ** 2, axis=0))))
    return QuadraticForm(U, v, c)


def lift(theta):
    tb = np.append(np.asarray(theta, dtype=complex), 1.0)
    return np.outer(tb, np.conj(tb))


class LiftedProblem(namedtuple('LiftedProblem', 'Ubar R b_abs2 gamma_min '
                               'sigma2 c terms')):
    """
    Semidefinite relaxation of the phase problem.

    Tr(Ubar Q) + c is the quadratic objective and Tr(R[i, l] Q) +
    b_abs2[i, l] the received power of tx i at rx l whenever
    Q = lift(theta).
    """

    __slots__ = ()

    @property
    def elements(self):
        return self.Ubar.shape[0] - 1

    def objective(self, Q):
        return float(np.real(np.sum(self.Ubar * Q.T))) + self.c

    def received(self, Q, i, l):
        return float(np.real(np.sum(self.R[i, l] * Q.T))) + self.b_abs2[i, l]

    def sinr_constraint(self, l):
        """(G, '>=', rhs) with Tr(G Q) >= rhs iff link l meets gamma_min."""
        gamma = self.gamma_min[l]
        others = [i for i in range(len(self.gamma_min)) if i != l]
        G = self.R[l, l] - gamma * np.sum(self.R[others, l], axis=0)
        rhs = gamma * (np.sum(self.b_abs2[others, l]) + self.sigma2) - \
            self.b_abs2[l, l]
        return G, sdp.GE, float(rhs)

    def to_sdp(self):
        """SdpProblem with one constraint per link with a rate target."""
        constraints = [self.sinr_constraint(l)
                       for l in range(len(self.gamma_min))
                       if self.gamma_min[l] > 0]
        return sdp.SdpProblem(self.Ubar, constraints, diag_one=True)


def build_sdr(quadratic, terms, params):
    """
    :param quadratic: QuadraticForm from build_quadratic_form
    :param terms: FpTerms the form was built from
    :param params: SystemParams providing the minimum rates
    :returns: LiftedProblem
    """
    N = len(quadratic.v)
    links = terms.b.shape[0]
    Ubar = np.zeros((N + 1, N + 1), dtype=complex)
    Ubar[:N, :N] = -quadratic.U
    Ubar[:N, N] = quadratic.v
    Ubar[N, :N] = np.conj(quadratic.v)
    A, b = terms.A, terms.b
    R = np.zeros((links, links, N + 1, N + 1), dtype=complex)
    R[:, :, :N, :N] = np.einsum('iln,ilm->ilnm', A, np.conj(A))
    R[:, :, :N, N] = A * np.conj(b)[:, :, None]
    R[:, :, N, :N] = b[:, :, None] * np.conj(A)
    gamma = 2.0 ** params.min_rates(links) - 1.0
    return LiftedProblem(Ubar, R, np.abs(b) ** 2, gamma, terms.sigma2,
                         quadratic.c, terms)


def _meets_targets(y, gamma, sigma2):
    """Per-candidate bool: every link reaches its SINR target."""
    signal, received = _received(y, sigma2)
    sinr = signal / (received - signal)
    return np.all(sinr >= gamma * (1.0 - SINR_SLACK), axis=-1)


def gaussian_randomization(Q, problem, samples, rng, score=None):
    """
    Round a relaxed solution to a unit-modulus theta.

    Draws circular Gaussian vectors with covariance Q, keeps the phases
    relative to the last entry, and returns the candidate meeting every
    SINR target with the largest score. The principal eigenvector of Q and
    its last column are always among the candidates.

    :param score: callable mapping a (candidates, N) theta array to one
                  value per candidate; defaults to the lifted quadratic
                  objective
    :returns: theta (N complex) or None when no candidate is feasible
    :raises NotPositiveSemidefinite: Q has a clearly negative eigenvalue
    """
    Q = np.asarray(Q, dtype=complex)
    Q = (Q + Q.conj().T) / 2.0
    w, V = np.linalg.eigh(Q)
    if w[0] < -PSD_TOL * max(1.0, abs(w[-1])):
        raise NotPositiveSemidefinite(w[0])
    root = V * np.sqrt(np.clip(w, 0.0, None))
    dim = Q.shape[0]
    noise = (rng.standard_normal((dim, samples)) +
             1j * rng.standard_normal((dim, samples))) / np.sqrt(2.0)
    r = np.column_stack([V[:, -1], Q[:, -1], root.dot(noise)]).T
    anchor = r[:, -1:]
    anchor = np.where(np.abs(anchor) > 0, anchor, 1.0)
    theta = np.exp(1j * np.angle(r[:, :-1] / anchor))
    y = composite(theta, problem.terms)
    ok = _meets_targets(y, problem.gamma_min, problem.sigma2)
    if not np.any(ok):
        return None
    if score is None:
        tb = np.column_stack([theta, np.ones(len(theta))])
        objective = np.real(np.einsum('sa,ab,sb->s', np.conj(tb),
                                      problem.Ubar, tb))
    else:
        objective = np.asarray(score(theta), dtype=float)
    objective = np.where(ok, objective, -np.inf)
    return theta[int(np.argmax(objective))]


PhaseResult = namedtuple('PhaseResult', 'phase trace status iterations '
                         'sum_rate')


class PhaseOptimizer(object):
    """
    Alternating closed-form auxiliaries, SDR and randomization for the
    phases at fixed powers.

    Each outer iteration fixes beta at the current SINRs and alternates
    eps and theta until the fractional objective stops improving.
    Randomization candidates are ranked on that fractional objective. A
    new point replaces the current phases when the current point misses a
    rate target, or when it meets every target without lowering the sum
    rate. The trace holds the sum rate of every accepted feasible point.
    """

    def __init__(self, conf=None, logger=None):
        if conf is None:
            conf = {}
        self.logger = resolve_logger(logger or (conf,), 'phase-optimizer')
        self.tol = float(conf.get('inner_tol', '1e-4'))
        self.max_iter = int(conf.get('inner_max_iter', '20'))
        self.eps_max_iter = int(conf.get('eps_max_iter', '10'))
        self.samples = int(conf.get('randomization_samples', '200'))
        self.sdp_tol = float(conf.get('sdp_tol', sdp.DEFAULT_TOL))
        self.sdp_max_iter = int(conf.get('sdp_max_iter',
                                         sdp.DEFAULT_MAX_ITER))

    def _feasible(self, chan, phase, p, params):
        z = sinrs(chan, phase, p, params.noise_power)
        gamma = 2.0 ** params.min_rates(chan.links) - 1.0
        return bool(np.all(z >= gamma * (1.0 - SINR_SLACK)))

    def improve(self, chan, phase, p, beta, params, feasible, rng):
        """
        Alternate eps and theta for fixed beta.

        :param feasible: whether phase meets every rate target
        :returns: (PhaseConfig, steps); the given phase object when no
                  candidate was accepted
        """
        terms = fp_terms(chan, p, phase.eta, params.noise_power)
        theta = theta_from_phases(phase.phases)
        current = float(fractional_objective(theta, beta, terms))
        accepted = None

        def score(candidates):
            return fractional_objective(candidates, beta, terms)

        steps = 0
        while steps < self.eps_max_iter:
            steps += 1
            eps = _eps(theta, beta, terms)
            lifted = build_sdr(build_quadratic_form(terms, beta, eps), terms,
                               params)
            solution = sdp.solve(lifted.to_sdp(), self.sdp_tol,
                                 self.sdp_max_iter)
            if solution.status == sdp.INFEASIBLE:
                self.logger.debug(_('Relaxation infeasible at step '
                                    '%(step)d') % {'step': steps})
                break
            if solution.status != sdp.OPTIMAL:
                self.logger.warning(_('SDP stopped with status %(status)s '
                                      '(residual %(res).3g)') %
                                    {'status': solution.status,
                                     'res': solution.kkt_residual})
            candidate = gaussian_randomization(solution.Q, lifted,
                                               self.samples, rng, score)
            if candidate is None:
                self.logger.debug(_('No feasible randomization candidate at '
                                    'step %(step)d') % {'step': steps})
                break
            value = float(score(candidate))
            if feasible and value <= current:
                break
            if feasible:
                improvement = (value - current) / max(abs(current), 1e-300)
            else:
                improvement = np.inf
            theta, current, feasible = candidate, value, True
            accepted = theta
            if improvement < self.tol:
                break
        if accepted is None:
            return phase, steps
        return PhaseConfig(phases_from_theta(accepted), phase.eta), steps

    def optimize(self, chan, p, params, init, rng=None):
        """
        :param chan: ChannelRealization
        :param p: transmit powers, held fixed
        :param params: SystemParams
        :param init: PhaseConfig to start from
        :param rng: numpy Generator used by the randomization
        :returns: PhaseResult
        """
        if rng is None:
            rng = np.random.default_rng()
        p = np.asarray(getattr(p, 'p', p), dtype=float)
        noise = params.noise_power
        phase = init
        rate = sum_rate(chan, phase, p, noise)
        if chan.elements == 0:
            return PhaseResult(phase, [rate], OK, 0, rate)
        feasible = self._feasible(chan, phase, p, params)
        trace = [rate] if feasible else []
        start = time.time()
        iteration = 0
        while iteration < self.max_iter:
            iteration += 1
            beta = update_beta(chan, phase, p, noise)
            new_phase, steps = self.improve(chan, phase, p, beta, params,
                                            feasible, rng)
            if new_phase is phase:
                break
            new_rate = sum_rate(chan, new_phase, p, noise)
            if not self._feasible(chan, new_phase, p, params):
                break
            if feasible and new_rate < rate:
                break
            if feasible:
                improvement = (new_rate - rate) / max(abs(rate), 1e-300)
            else:
                improvement = np.inf
            phase, rate, feasible = new_phase, new_rate, True
            trace.append(rate)
            self.logger.debug(_('Phase iteration %(it)d sum rate %(rate).6g '
                                'after %(steps)d steps') %
                              {'it': iteration, 'rate': rate,
                               'steps': steps})
            if improvement < self.tol:
                break
        self.logger.debug(_('Phase optimization done in %(it)d iterations '
                            '(%(secs)0.2f seconds)') %
                          {'it': iteration, 'secs': time.time() - start})
        status = OK if feasible else PHASE_INFEASIBLE
        return PhaseResult(phase, trace, status, iteration, rate)


def optimize_phases(chan, p, params, init, opts=None, rng=None, logger=None):
    """
    Optimize the phases for fixed powers.

    :param opts: conf dict for PhaseOptimizer (inner_tol, inner_max_iter,
                 eps_max_iter, randomization_samples, sdp_tol,
                 sdp_max_iter)
    :returns: PhaseResult
    """
    return PhaseOptimizer(opts, logger).optimize(chan, p, params, init, rng)
