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
Brute-force references and the baseline algorithms.

Both exhaustive searches walk their candidate sets in lexicographic order,
in vectorized chunks; the first best candidate wins ties.
"""

from collections import namedtuple

import numpy as np

from riseff import power_control
from riseff.system import PhaseConfig, gain_matrix, random_phases, \
    sinr_from_gains, static_power

MAX_GRID_LINKS = 4
MAX_PHASE_CANDIDATES = 10 ** 6
CHUNK = 8192

OK = 'ok'
FAILURE = 'failure'


class GridSpec(namedtuple('GridSpec', 'points_per_dim upper')):
    """points_per_dim evenly spaced powers on [0, upper], endpoints kept."""

    __slots__ = ()

    def __new__(cls, points_per_dim, upper):
        points_per_dim = int(points_per_dim)
        if points_per_dim < 2:
            raise ValueError('a power grid needs at least 2 points per '
                             'dimension, got %d' % points_per_dim)
        if upper <= 0:
            raise ValueError('grid upper bound must be > 0')
        return super(GridSpec, cls).__new__(cls, points_per_dim,
                                            float(upper))

    def values(self):
        return np.linspace(0.0, self.upper, self.points_per_dim)

    def refined(self):
        """Grid with every gap halved; contains all current points."""
        return GridSpec(2 * self.points_per_dim - 1, self.upper)


GridResult = namedtuple('GridResult', 'p ee status')
PhaseSearchResult = namedtuple('PhaseSearchResult', 'phase sum_rate')
Baselines = namedtuple('Baselines', 'no_ris random_phase phase')


def _chunks(shape, chunk=CHUNK):
    """Yield index arrays (rows = candidates) in lexicographic order."""
    total = int(np.prod(shape)) if shape else 1
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        if shape:
            yield np.stack(np.unravel_index(flat, shape), axis=1)
        else:
            yield np.zeros((len(flat), 0), dtype=int)


def grid_power_search(chan, phase, params, grid=None, chunk=CHUNK):
    """
    Best energy efficiency over a power grid at fixed phases.

    Points missing a minimum rate are skipped.

    :param grid: GridSpec, defaults to 200 points on [0, p_max]
    :returns: GridResult; status 'failure' with p None when no grid point
              meets the rate targets
    """
    links = chan.links
    if links > MAX_GRID_LINKS:
        raise ValueError('grid search is limited to %d links, got %d' %
                         (MAX_GRID_LINKS, links))
    if grid is None:
        grid = GridSpec(200, params.p_max)
    values = grid.values()
    gains = gain_matrix(chan, phase)
    r_min = params.min_rates(links)
    static = static_power(links, params, chan.elements)
    best_ee, best_p = -np.inf, None
    for idx in _chunks((grid.points_per_dim,) * links, chunk):
        P = values[idx]
        rates = np.log2(1.0 + sinr_from_gains(gains, P, params.noise_power))
        ok = np.all(rates >= r_min - power_control.RATE_TOL, axis=1)
        ee = np.where(ok, rates.sum(axis=1) / (P.sum(axis=1) + static),
                      -np.inf)
        k = int(np.argmax(ee))
        if ee[k] > best_ee:
            best_ee, best_p = float(ee[k]), P[k]
    if best_p is None:
        return GridResult(None, 0.0, FAILURE)
    return GridResult(best_p, best_ee, OK)


def quantized_levels(bits):
    return 2 * np.pi * np.arange(2 ** bits) / 2 ** bits


def quantized_phases(elements, bits, chunk=CHUNK):
    """Yield arrays of phase vectors covering every quantized setting."""
    if 2 ** (elements * bits) > MAX_PHASE_CANDIDATES:
        raise ValueError('%d candidates exceed the exhaustive limit %d' %
                         (2 ** (elements * bits), MAX_PHASE_CANDIDATES))
    levels = quantized_levels(bits)
    for idx in _chunks((2 ** bits,) * elements, chunk):
        yield levels[idx]


def exhaustive_phase_search(chan, p, params, bits, eta=0.8, chunk=CHUNK):
    """
    Best sum rate over all phases on the 2**bits level grid.

    :returns: PhaseSearchResult
    """
    p = np.asarray(getattr(p, 'p', p), dtype=float)
    N = chan.elements
    best_rate, best = -np.inf, None
    for phases in quantized_phases(N, bits, chunk):
        coeff = np.sqrt(eta) * np.exp(1j * phases)
        h = chan.direct + np.einsum('cn,ni,nl->cil', coeff, chan.tx_to_ris,
                                    chan.ris_to_rx)
        z = sinr_from_gains(np.abs(h) ** 2, p, params.noise_power)
        rates = np.sum(np.log2(1.0 + z), axis=1)
        k = int(np.argmax(rates))
        if rates[k] > best_rate:
            best_rate, best = float(rates[k]), phases[k]
    return PhaseSearchResult(PhaseConfig(best, eta), best_rate)


def baselines(chan, params, rng, eta=0.8, controller=None):
    """
    Energy efficiency without the RIS and with random phases, both through
    the same Dinkelbach path as the joint algorithm.

    :param rng: numpy Generator; its first draw gives the random phases
    :returns: Baselines of two PowerResults and the random PhaseConfig
    """
    if controller is None:
        controller = power_control.PowerController()
    phase = random_phases(chan.elements, eta, rng)
    no_ris = controller.dinkelbach(chan.without_ris(), PhaseConfig([], eta),
                                   params)
    random_phase = controller.dinkelbach(chan, phase, params)
    return Baselines(no_ris, random_phase, phase)
