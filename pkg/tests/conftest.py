import numpy as np
import pytest

from lppvar import (
    LipschitzPath,
    RectangleDomain,
    constant_field,
    quadratic_y_field,
)


@pytest.fixture
def unit_domain():
    return RectangleDomain(1.0, 0.0)


@pytest.fixture
def slanted_domain():
    return RectangleDomain(1.0, 0.5)


@pytest.fixture
def concave_field(unit_domain):
    return quadratic_y_field(unit_domain, 2.0, -1.0)


@pytest.fixture
def flat_field(unit_domain):
    return constant_field(unit_domain, 1.0)


def random_lipschitz_path(domain: RectangleDomain, n_segments: int, rng) -> LipschitzPath:
    """Uniform-grid path drawn increment by increment inside the feasible
    window, so it ends at b exactly and stays 1-Lipschitz and inside Q."""
    l, b = domain.l, domain.b
    dx = l / n_segments
    ys = np.zeros(n_segments + 1)
    for i in range(n_segments):
        x_next = (i + 1) * dx
        remaining = (n_segments - i - 1) * dx
        lo_q, hi_q = domain.y_bounds(x_next)
        lo = max(ys[i] - dx, b - remaining, float(lo_q))
        hi = min(ys[i] + dx, b + remaining, float(hi_q))
        ys[i + 1] = rng.uniform(lo, hi)
    ys[-1] = b
    return LipschitzPath(np.linspace(0.0, l, n_segments + 1), ys)
