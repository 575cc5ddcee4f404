import math

import numpy as np
import pytest

from lexisgrid.core import DIRECTION_DISEASED, DIRECTION_HEALTHY, GridSpec, LexisPoint, LifeSegment


def closed_form_cumhaz(t, a0, d0, beta0=-10.0, beta1=0.1, gamma=0.1):
    """Integral over [0, t] of exp(beta0 + beta1 (a0 + tau)) (1 + gamma (d0 + tau)).

    Antiderivative of exp(c + b tau)(k + g tau) is
    exp(c + b tau) ((k + g tau) / b - g / b**2).
    """
    c = beta0 + beta1 * a0
    k = 1.0 + gamma * d0
    if beta1 == 0:
        return math.exp(c) * (k * t + 0.5 * gamma * t * t)

    def anti(x):
        return math.exp(c + beta1 * x) * ((k + gamma * x) / beta1 - gamma / beta1**2)

    return anti(t) - anti(0.0)


def closed_form_cdf(t, a0, d0, **kw):
    return -math.expm1(-closed_form_cumhaz(t, a0, d0, **kw))


def random_segments(rng, n, exact_fraction=0.3):
    """Random valid segments plus grids, mixing awkward cases.

    About ``exact_fraction`` of the draws use dyadic resolutions with
    starts and ends on grid planes, body diagonals through vertices and
    (1,1,0) lines lying in a duration plane.
    """
    out = []
    for _ in range(n):
        kind = rng.random()
        if kind < exact_fraction:
            t_r = float(rng.choice([0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]))
            cells = rng.integers(0, 40, size=3).astype(float)
            start = cells * t_r
            if rng.random() < 0.5:
                # body diagonal from a vertex through further vertices
                delta = float(rng.integers(1, 8)) * t_r
                direction = DIRECTION_DISEASED
            else:
                delta = float(rng.integers(1, 64)) * t_r / 4
                direction = DIRECTION_DISEASED if rng.random() < 0.5 else DIRECTION_HEALTHY
        else:
            t_r = float(rng.uniform(0.1, 10.0))
            start = rng.uniform(0.0, 100.0, size=3)
            if rng.random() < 0.2:
                start = np.floor(start / t_r) * t_r  # on planes, up to rounding
            delta = float(rng.uniform(1e-3, 20.0))
            direction = DIRECTION_DISEASED if rng.random() < 0.5 else DIRECTION_HEALTHY
        seg = LifeSegment(LexisPoint(*map(float, start)), delta, direction)
        out.append((seg, GridSpec(t_r, 3)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def worked_segment():
    # (0.5, 0.5, 0) -> (2.5, 2.5, 2)
    return LifeSegment(LexisPoint(0.5, 0.5, 0.0), 2.0, DIRECTION_DISEASED)


@pytest.fixture
def unit_grid():
    return GridSpec(1.0, 3)
