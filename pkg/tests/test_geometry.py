import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lppvar import (
    DomainError,
    LipschitzPath,
    RectangleDomain,
    ValidationError,
    gamma,
    gamma_derivatives,
)

slopes = st.floats(min_value=-1.0, max_value=1.0)


def test_gamma_anchor_values():
    assert gamma(0.0) == 2.0
    assert gamma(1.0) == 1.0
    assert gamma(-1.0) == 1.0
    assert gamma(0.5) == pytest.approx(1.0 + math.sqrt(0.75), abs=1e-15)


def test_gamma_clamps_roundoff_but_rejects_real_overshoot():
    assert gamma(1.0 + 1e-13) == 1.0
    with pytest.raises(DomainError):
        gamma(1.0 + 1e-9)


def test_gamma_derivatives_hand_values():
    g1, g2 = gamma_derivatives(0.0)
    assert (g1, g2) == (0.0, -1.0)
    g1, g2 = gamma_derivatives(0.6)
    assert g1 == pytest.approx(-0.75, abs=1e-12)
    assert g2 == pytest.approx(-1.953125, abs=1e-12)
    with pytest.raises(DomainError):
        gamma_derivatives(1.0)


def test_gamma_ratio_peak_value():
    # (gamma')^2 / (-gamma gamma'') = u(1-u) with u = sqrt(1-w^2):
    # equals exactly 1/4 at w^2 = 3/4
    w = math.sqrt(3.0) / 2.0
    g = gamma(w)
    g1, g2 = gamma_derivatives(w)
    assert g1 * g1 / (-g * g2) == pytest.approx(0.25, abs=1e-12)


@given(w1=slopes, w2=slopes, t=st.floats(min_value=0.0, max_value=1.0))
def test_gamma_concavity(w1, w2, t):
    mix = t * w1 + (1.0 - t) * w2
    assert gamma(mix) >= t * gamma(w1) + (1.0 - t) * gamma(w2) - 1e-12


@given(w1=slopes, w2=slopes)
def test_gamma_holder_bound(w1, w2):
    assert abs(gamma(w1) - gamma(w2)) <= 2.0 * math.sqrt(abs(w1 - w2)) + 1e-12


class TestRectangleDomain:
    def test_rejects_degenerate(self):
        with pytest.raises(ValidationError):
            RectangleDomain(1.0, 1.0)
        with pytest.raises(ValidationError):
            RectangleDomain(0.0, 0.0)
        with pytest.raises(ValidationError):
            RectangleDomain(1.0, -1.5)

    def test_contains_corners_and_outside(self):
        d = RectangleDomain(1.0, 0.5)
        assert d.contains(0.0, 0.0)
        assert d.contains(1.0, 0.5)
        assert d.contains(0.75, 0.75)
        assert d.contains(0.25, -0.25)
        assert not d.contains(0.1, 0.5)
        assert not d.contains(1.0, 0.0)
        assert not d.contains(-0.1, 0.0)

    def test_reflection_symmetry_when_centered(self):
        d = RectangleDomain(2.0, 0.0)
        rng = np.random.default_rng(7)
        xs = rng.uniform(0, 2, 200)
        ys = rng.uniform(-1, 1, 200)
        assert np.array_equal(d.contains(xs, ys), d.contains(xs, -ys))

    def test_project_is_identity_inside(self):
        d = RectangleDomain(1.0, 0.2)
        assert d.project(0.5, 0.1) == (0.5, 0.1)
        px, py = d.project(0.5, 5.0)
        assert d.contains(px, py)

    def test_extents(self):
        d = RectangleDomain(1.0, 0.5)
        assert d.y_extent == (-0.25, 0.75)
        assert d.max_column_height == pytest.approx(0.5)


class TestLipschitzPath:
    def test_valid_straight_line(self):
        p = LipschitzPath.straight(1.0, 0.5, 4)
        assert p.l == 1.0
        assert p.b == 0.5
        assert p.value_at(0.5) == pytest.approx(0.25)

    def test_rejects_endpoint_violation(self):
        with pytest.raises(ValidationError):
            LipschitzPath([0.0, 1.0], [0.1, 0.0])

    def test_rejects_slope_violation(self):
        with pytest.raises(ValidationError):
            LipschitzPath([0.0, 0.5, 1.0], [0.0, 0.6, 0.0])

    def test_rejects_decreasing_grid(self):
        with pytest.raises(ValidationError):
            LipschitzPath([0.0, 0.6, 0.5], [0.0, 0.1, 0.2])

    def test_grid_points_inside_rectangle(self):
        # endpoints plus the Lipschitz bound already force membership in Q
        rng = np.random.default_rng(3)
        from conftest import random_lipschitz_path

        d = RectangleDomain(1.0, 0.3)
        for _ in range(20):
            p = random_lipschitz_path(d, 37, rng)
            assert np.all(d.contains(p.x_grid, p.y_values, tol=1e-9))

    def test_immutable(self):
        p = LipschitzPath.straight(1.0, 0.0, 4)
        with pytest.raises(ValueError):
            p.y_values[0] = 1.0
