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
Link metrics for the RIS-aided D2D network.

Element n reflects with coefficient sqrt(eta) * exp(1j * phases[n]); every
formula here is written in those phase angles. Link indices are 0-based.
Rates are bits/s/Hz, powers watts, energy efficiency bits/Hz/J.
"""

from collections import namedtuple

import numpy as np

from riseff.common import DimensionMismatch

#: per-element RIS power (W) by phase resolution in bits
ELEMENT_POWER_BY_BITS = {3: 1.5e-3, 4: 4.5e-3, 5: 6.0e-3, 6: 7.8e-3}

FEASIBILITY_TOL = 1e-9


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(watts) + 30.0


def element_power_for_bits(bits):
    try:
        return ELEMENT_POWER_BY_BITS[int(bits)]
    except KeyError:
        raise ValueError('no element power known for %r-bit resolution; '
                         'give element_power explicitly' % (bits,))


class PhaseConfig(namedtuple('PhaseConfig', 'phases eta')):
    __slots__ = ()

    def __new__(cls, phases, eta=0.8):
        phases = np.mod(np.array(phases, dtype=float).reshape(-1), 2 * np.pi)
        phases.flags.writeable = False
        if not 0.0 < eta <= 1.0:
            raise ValueError('eta must lie in (0, 1], got %r' % (eta,))
        return super(PhaseConfig, cls).__new__(cls, phases, float(eta))

    @property
    def elements(self):
        return len(self.phases)

    @property
    def coefficients(self):
        """Physical reflection coefficients sqrt(eta) * exp(j phase)."""
        return np.sqrt(self.eta) * np.exp(1j * self.phases)


def random_phases(elements, eta, rng):
    return PhaseConfig(rng.uniform(0.0, 2 * np.pi, size=elements), eta)


class PowerAlloc(namedtuple('PowerAlloc', 'p')):
    __slots__ = ()

    def __new__(cls, p):
        p = np.array(p, dtype=float).reshape(-1)
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError('powers must be finite and >= 0: %r' % (p,))
        p.flags.writeable = False
        return super(PowerAlloc, cls).__new__(cls, p)

    @property
    def links(self):
        return len(self.p)


def _p(p):
    return p.p if isinstance(p, PowerAlloc) else np.asarray(p, dtype=float)


class SystemParams(namedtuple('SystemParams', 'noise_power circuit_power '
                              'element_power resolution_bits p_max r_min')):
    """
    Physical constants of one experiment.

    element_power defaults to the tabulated P(b) and must agree with it
    whenever resolution_bits is one of the tabulated resolutions.
    """

    __slots__ = ()

    def __new__(cls, noise_power, circuit_power, element_power=None,
                resolution_bits=3, p_max=0.1, r_min=0.0, links=None):
        resolution_bits = int(resolution_bits)
        if element_power is None:
            element_power = element_power_for_bits(resolution_bits)
        table = ELEMENT_POWER_BY_BITS.get(resolution_bits)
        if table is not None and \
                not np.isclose(element_power, table, rtol=1e-9, atol=0):
            raise ValueError('element_power %r W does not match %d-bit '
                             'resolution (%r W)' %
                             (element_power, resolution_bits, table))
        if noise_power <= 0 or element_power <= 0 or p_max <= 0:
            raise ValueError('noise, element and maximum power must be > 0')
        if circuit_power < 0:
            raise ValueError('circuit power must be >= 0')
        r_min = np.array(r_min, dtype=float).reshape(-1)
        if links is not None and r_min.size == 1:
            r_min = np.repeat(r_min, links)
        if np.any(r_min < 0) or not np.all(np.isfinite(r_min)):
            raise ValueError('minimum rates must be finite and >= 0')
        r_min.flags.writeable = False
        return super(SystemParams, cls).__new__(
            cls, float(noise_power), float(circuit_power),
            float(element_power), resolution_bits, float(p_max), r_min)

    @classmethod
    def from_dbm(cls, noise_dbm=-117.0, circuit_dbm=15.0, resolution_bits=3,
                 p_max_dbm=20.0, r_min=0.0, links=None):
        return cls(float(dbm_to_watts(noise_dbm)),
                   float(dbm_to_watts(circuit_dbm)),
                   resolution_bits=resolution_bits,
                   p_max=float(dbm_to_watts(p_max_dbm)),
                   r_min=r_min, links=links)

    def min_rates(self, links):
        if self.r_min.size == 1:
            return np.repeat(self.r_min, links)
        if self.r_min.size != links:
            raise DimensionMismatch('%d minimum rates for %d links' %
                                    (self.r_min.size, links))
        return np.array(self.r_min)

    def replace(self, **kw):
        return self._replace(**kw)


def _check_phase(chan, phase):
    if phase.elements != chan.elements:
        raise DimensionMismatch('%d phases for %d RIS elements' %
                                (phase.elements, chan.elements))


def effective_channels(chan, phase):
    """Matrix of composite channels, entry (i, l) for tx i -> rx l."""
    _check_phase(chan, phase)
    if chan.elements == 0:
        return np.array(chan.direct)
    reflected = (chan.tx_to_ris * phase.coefficients[:, None]).T.dot(
        chan.ris_to_rx)
    return chan.direct + reflected


def effective_channel(chan, phase, i, l):
    """h_il + sqrt(eta) * sum_n exp(j phase_n) f_l[n] g_i[n]"""
    if not (0 <= i < chan.links and 0 <= l < chan.links):
        raise IndexError('link index (%d, %d) out of range for L=%d' %
                         (i, l, chan.links))
    _check_phase(chan, phase)
    return chan.direct[i, l] + np.sum(
        phase.coefficients * chan.ris_to_rx[:, l] * chan.tx_to_ris[:, i])


def gain_matrix(chan, phase):
    """|effective channel|^2 for every (tx, rx) pair."""
    return np.abs(effective_channels(chan, phase)) ** 2


def sinr_from_gains(gains, p, noise_power):
    """
    SINR of every link for one or a batch of gain matrices / power vectors.

    :param gains: (..., L, L) array, gains[..., i, l] from tx i to rx l
    :param p: (..., L) transmit powers
    """
    gains = np.asarray(gains)
    p = np.asarray(p, dtype=float)
    links = gains.shape[-1]
    off = gains * (1.0 - np.eye(links))
    signal = np.diagonal(gains, axis1=-2, axis2=-1) * p
    interference = np.einsum('...il,...i->...l', off, p)
    return signal / (interference + noise_power)


def _check_power(chan, p):
    p = _p(p)
    if p.shape != (chan.links,):
        raise DimensionMismatch('%d powers for %d links' %
                                (p.size, chan.links))
    return p


def sinrs(chan, phase, p, noise_power):
    p = _check_power(chan, p)
    return sinr_from_gains(gain_matrix(chan, phase), p, noise_power)


def sinr(chan, phase, p, l, noise_power):
    return sinrs(chan, phase, p, noise_power)[l]


def rates(chan, phase, p, noise_power):
    return np.log2(1.0 + sinrs(chan, phase, p, noise_power))


def sum_rate(chan, phase, p, noise_power):
    return float(np.sum(rates(chan, phase, p, noise_power)))


def static_power(links, params, elements):
    """Everything in the power budget except the transmit powers."""
    return 2 * links * params.circuit_power + elements * params.element_power


def total_power(p, params, elements):
    p = _p(p)
    return float(np.sum(p)) + static_power(len(p), params, elements)


def energy_efficiency(chan, phase, p, params):
    return sum_rate(chan, phase, p, params.noise_power) / \
        total_power(p, params, chan.elements)


class FeasibilityReport(namedtuple('FeasibilityReport', [
        'rate_ok', 'rate_violation', 'power_ok', 'power_violation',
        'unit_modulus_ok', 'unit_modulus_violation'])):
    __slots__ = ()

    @property
    def feasible(self):
        return bool(np.all(self.rate_ok) and np.all(self.power_ok) and
                    self.unit_modulus_ok)


def check_feasibility(chan, phase, p, params, tol=FEASIBILITY_TOL):
    """
    Check the rate, power box and unit-modulus constraints.

    Violations are reported as non-negative amounts, zero when satisfied.
    """
    p = _check_power(chan, p)
    achieved = rates(chan, phase, p, params.noise_power)
    rate_violation = np.maximum(params.min_rates(chan.links) - achieved, 0.0)
    power_violation = np.maximum(np.maximum(p - params.p_max, -p), 0.0)
    theta = np.exp(1j * phase.phases)
    modulus_violation = float(np.max(np.abs(np.abs(theta) - 1.0))) \
        if phase.elements else 0.0
    return FeasibilityReport(rate_violation <= tol, rate_violation,
                             power_violation <= tol, power_violation,
                             modulus_violation <= tol, modulus_violation)
