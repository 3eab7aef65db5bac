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
Network geometry and Rician fading channels.

Channel layout, for L links and N RIS elements in total:

    direct[i, l]     transmitter i -> receiver l
    tx_to_ris[n, i]  transmitter i -> element n
    ris_to_rx[n, l]  element n -> receiver l

Element rows are stacked RIS by RIS in the order of
``Topology.ris_positions``; both RIS matrices share that order.
"""

from collections import namedtuple

import numpy as np

from riseff.common import CoLocatedError, DimensionMismatch, PlacementError

DEFAULT_AREA = (200.0, 200.0)
DEFAULT_D_RANGE = (20.0, 40.0)
#: distances below this are clamped before computing path loss
DISTANCE_FLOOR = 1.0
PLACEMENT_ATTEMPTS = 10000


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


def _inside(point, area):
    return 0.0 <= point[0] <= area[0] and 0.0 <= point[1] <= area[1]


class Topology(namedtuple('Topology', 'tx_positions rx_positions '
                          'ris_positions elements_per_ris area')):
    """Node placement. Positions are (x, y) rows in meters."""

    __slots__ = ()

    def __new__(cls, tx_positions, rx_positions, ris_positions,
                elements_per_ris, area=DEFAULT_AREA):
        tx = _frozen(tx_positions).reshape(-1, 2)
        rx = _frozen(rx_positions).reshape(-1, 2)
        ris = _frozen(ris_positions).reshape(-1, 2)
        counts = tuple(int(n) for n in elements_per_ris)
        area = (float(area[0]), float(area[1]))
        if len(tx) != len(rx) or len(tx) < 1:
            raise DimensionMismatch(
                'need L >= 1 transmitters and as many receivers, got %d/%d'
                % (len(tx), len(rx)))
        if len(counts) != len(ris):
            raise DimensionMismatch(
                '%d element counts for %d RISs' % (len(counts), len(ris)))
        if any(n < 0 for n in counts):
            raise ValueError('element counts must be >= 0: %r' % (counts,))
        for kind, points in (('transmitter', tx), ('receiver', rx),
                             ('RIS', ris)):
            outside = [tuple(p) for p in points if not _inside(p, area)]
            if outside:
                raise ValueError('%s positions outside the %gx%g area: %r'
                                 % (kind, area[0], area[1], outside))
        return super(Topology, cls).__new__(cls, tx, rx, ris, counts, area)

    @property
    def links(self):
        return len(self.tx_positions)

    @property
    def total_elements(self):
        return sum(self.elements_per_ris)

    @property
    def ris_of_element(self):
        """RIS index for every stacked element row."""
        return np.repeat(np.arange(len(self.elements_per_ris)),
                         self.elements_per_ris)

    def link_distances(self):
        return np.hypot(*(self.rx_positions - self.tx_positions).T)

    def inside(self, point):
        return _inside(point, self.area)


class FadingParams(namedtuple('FadingParams', 'rician_k pathloss_k '
                              'pathloss_exp ris_pathloss_exp')):
    """
    Rician factor and the path-loss law k * d ** -exp.

    ris_pathloss_exp applies to the tx->RIS and RIS->rx segments and
    defaults to pathloss_exp.
    """

    __slots__ = ()

    def __new__(cls, rician_k=2.0, pathloss_k=1e-3, pathloss_exp=4.0,
                ris_pathloss_exp=None):
        if ris_pathloss_exp is None:
            ris_pathloss_exp = pathloss_exp
        if rician_k < 0:
            raise ValueError('rician_k must be >= 0, got %r' % rician_k)
        if pathloss_k <= 0 or pathloss_exp <= 0 or ris_pathloss_exp <= 0:
            raise ValueError('path-loss constant and exponents must be > 0')
        return super(FadingParams, cls).__new__(
            cls, float(rician_k), float(pathloss_k), float(pathloss_exp),
            float(ris_pathloss_exp))


class ChannelRealization(namedtuple('ChannelRealization',
                                    'direct tx_to_ris ris_to_rx')):
    __slots__ = ()

    def __new__(cls, direct, tx_to_ris, ris_to_rx):
        direct = _frozen(direct, complex)
        if direct.ndim != 2 or direct.shape[0] != direct.shape[1] or \
                direct.shape[0] < 1:
            raise DimensionMismatch('direct channel must be L x L, got %r'
                                    % (direct.shape,))
        links = direct.shape[0]
        tx_to_ris = _frozen(tx_to_ris, complex).reshape(-1, links)
        ris_to_rx = _frozen(ris_to_rx, complex).reshape(-1, links)
        if tx_to_ris.shape != ris_to_rx.shape:
            raise DimensionMismatch(
                'RIS channel shapes differ: %r vs %r' %
                (tx_to_ris.shape, ris_to_rx.shape))
        for a in (direct, tx_to_ris, ris_to_rx):
            if not np.all(np.isfinite(a)):
                raise ValueError('channel entries must be finite')
        return super(ChannelRealization, cls).__new__(
            cls, direct, tx_to_ris, ris_to_rx)

    @property
    def links(self):
        return self.direct.shape[0]

    @property
    def elements(self):
        return self.tx_to_ris.shape[0]

    def cascade(self):
        """cascade[n, i, l] = g_i[n] * f_l[n]"""
        return self.tx_to_ris[:, :, None] * self.ris_to_rx[:, None, :]

    def without_ris(self):
        empty = np.zeros((0, self.links), dtype=complex)
        return ChannelRealization(self.direct, empty, empty)

    def permuted(self, order):
        """Reorder the element rows of both RIS matrices."""
        order = np.asarray(order)
        return ChannelRealization(self.direct, self.tx_to_ris[order],
                                  self.ris_to_rx[order])


def default_ris_positions(area=DEFAULT_AREA, offset=50.0):
    cx, cy = area[0] / 2.0, area[1] / 2.0
    return [(cx - offset, cy - offset), (cx + offset, cy - offset),
            (cx - offset, cy + offset), (cx + offset, cy + offset)]


def split_elements(total, ris_count):
    """Split total elements evenly, remainder to the first surfaces."""
    if ris_count < 1:
        if total:
            raise ValueError('cannot place %d elements on no RIS' % total)
        return []
    base, extra = divmod(int(total), int(ris_count))
    return [base + (1 if m < extra else 0) for m in range(ris_count)]


def distance(a, b):
    """Euclidean distance clamped to DISTANCE_FLOOR."""
    return max(float(np.hypot(a[0] - b[0], a[1] - b[1])), DISTANCE_FLOOR)


def sample_topology(area=DEFAULT_AREA, links=1, ris_positions=None,
                    elements_per_ris=None, d_range=DEFAULT_D_RANGE,
                    rng=None, max_attempts=PLACEMENT_ATTEMPTS):
    """
    Draw a random D2D topology.

    Transmitters are uniform in the area; every receiver is uniform on the
    annulus d_range around its transmitter and redrawn until it falls inside
    the area.

    :raises PlacementError: a receiver could not be placed in max_attempts
    """
    if rng is None:
        rng = np.random.default_rng()
    width, height = float(area[0]), float(area[1])
    d_min, d_max = float(d_range[0]), float(d_range[1])
    if links < 1:
        raise ValueError('need at least one link, got %r' % links)
    if not 0 < d_min <= d_max < np.hypot(width, height):
        raise ValueError('d_range %r must lie in (0, %g)' %
                         (d_range, np.hypot(width, height)))
    if ris_positions is None:
        ris_positions = default_ris_positions(area)
    if elements_per_ris is None:
        elements_per_ris = [0] * len(ris_positions)
    tx = rng.uniform((0.0, 0.0), (width, height), size=(links, 2))
    rx = np.empty_like(tx)
    for i in range(links):
        for _attempt in range(max_attempts):
            r = np.sqrt(rng.uniform(d_min ** 2, d_max ** 2))
            angle = rng.uniform(0.0, 2 * np.pi)
            x = tx[i, 0] + r * np.cos(angle)
            y = tx[i, 1] + r * np.sin(angle)
            if 0.0 <= x <= width and 0.0 <= y <= height:
                rx[i] = (x, y)
                break
        else:
            raise PlacementError(i, max_attempts)
    return Topology(tx, rx, ris_positions, elements_per_ris, (width, height))


def path_loss_gain(d, fading, exponent=None):
    """
    Amplitude-squared large-scale gain k * d ** -chi.

    :raises CoLocatedError: d is not positive
    """
    if d <= 0:
        raise CoLocatedError(d)
    if exponent is None:
        exponent = fading.pathloss_exp
    return fading.pathloss_k * d ** (-exponent)


def rician_coefficients(shape, rician_k, rng):
    """Unit-power Rician draws: LOS term with a uniform phase plus CN(0, 1)."""
    los_phase = rng.uniform(0.0, 2 * np.pi, size=shape)
    scatter = (rng.standard_normal(shape) +
               1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return np.sqrt(rician_k / (1.0 + rician_k)) * np.exp(1j * los_phase) + \
        np.sqrt(1.0 / (1.0 + rician_k)) * scatter


def realize_channels(topology, fading, rng=None):
    """
    Draw one fading realization for the topology.

    The direct channels are drawn first, so topologies that differ only in
    their element counts share the same direct links for the same seed.
    """
    if rng is None:
        rng = np.random.default_rng()
    links = topology.links
    tx, rx = topology.tx_positions, topology.rx_positions
    gains = np.array([[path_loss_gain(distance(tx[i], rx[l]), fading)
                       for l in range(links)] for i in range(links)])
    direct = np.sqrt(gains) * rician_coefficients((links, links),
                                                  fading.rician_k, rng)

    owner = topology.ris_of_element
    ris = topology.ris_positions
    exponent = fading.ris_pathloss_exp
    tx_gain = np.array([[path_loss_gain(distance(tx[i], ris[m]), fading,
                                        exponent)
                         for i in range(links)] for m in owner])
    rx_gain = np.array([[path_loss_gain(distance(ris[m], rx[l]), fading,
                                        exponent)
                         for l in range(links)] for m in owner])
    shape = (len(owner), links)
    tx_gain = tx_gain.reshape(shape)
    rx_gain = rx_gain.reshape(shape)
    tx_to_ris = np.sqrt(tx_gain) * rician_coefficients(
        shape, fading.rician_k, rng)
    ris_to_rx = np.sqrt(rx_gain) * rician_coefficients(
        shape, fading.rician_k, rng)
    return ChannelRealization(direct, tx_to_ris, ris_to_rx)
