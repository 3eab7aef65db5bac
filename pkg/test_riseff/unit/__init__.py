""" riseff unit test helpers """

import os
from contextlib import contextmanager
from tempfile import NamedTemporaryFile

import numpy as np

from riseff.netmodel import ChannelRealization
from riseff.system import SystemParams


class DumbLogger(object):
    def __getattr__(self, n):
        return self.foo

    def foo(self, *a, **kw):
        pass


class FakeLogger(object):
    """Records every call as (level, message)."""

    def __init__(self, *args, **kwargs):
        self.lines = []

    def _store(self, level):
        def log(msg, *args, **kwargs):
            self.lines.append((level, msg % args if args else msg))
        return log

    def __getattr__(self, level):
        if level in ('debug', 'info', 'warning', 'error', 'exception'):
            return self._store(level)
        raise AttributeError(level)


@contextmanager
def tmpfile(content):
    with NamedTemporaryFile('w', delete=False) as f:
        f.write(content)
    try:
        yield f.name
    finally:
        os.unlink(f.name)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) +
            1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_channel(rng, links, elements, direct=1.0, ris=1.0, cross=1.0):
    """
    Synthetic channel with CN(0, 1) entries scaled by the given amplitudes;
    off-diagonal direct links are further scaled by cross.
    """
    h = direct * crandn(rng, links, links)
    h = h * np.where(np.eye(links, dtype=bool), 1.0, cross)
    g = np.sqrt(ris) * crandn(rng, elements, links)
    f = np.sqrt(ris) * crandn(rng, elements, links)
    return ChannelRealization(h, g, f)


def unit_params(links=1, p_max=2.0, r_min=0.0, circuit_power=0.0,
                noise_power=1.0):
    """Well-scaled parameters: unit noise, 3-bit RIS power."""
    return SystemParams(noise_power, circuit_power, resolution_bits=3,
                        p_max=p_max, r_min=r_min, links=links)
