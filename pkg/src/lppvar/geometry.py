"""Macroscopic geometry: the rectangle domain, the shape function, and
1-Lipschitz candidate paths.

The domain Q is the rectangle with opposite corners (0, 0) and (l, b),
rotated 45 degrees with respect to the axes:

    Q = {(x, y): 0 <= x <= l, |y| <= x, |b - y| <= l - x}

The shape function gamma(w) = 1 + sqrt(1 - w^2) is the passage time per
unit horizontal length of a homogeneous unit-rate field at slope w.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ValidationError

# Slopes may land on +-1 exactly (lattice paths do); allow this much noise
# before declaring a query out of range.
SLOPE_TOL = 1e-12

# Geometric membership tolerance used throughout.
GEOM_TOL = 1e-12


def gamma(w):
    """Shape function 1 + sqrt(1 - w^2) for slopes w in [-1, 1].

    Accepts scalars or arrays. Inputs within SLOPE_TOL of +-1 are clamped;
    anything farther out raises DomainError.
    """
    arr = np.asarray(w, dtype=float)
    if np.any(np.abs(arr) > 1.0 + SLOPE_TOL):
        worst = float(np.max(np.abs(arr)))
        raise DomainError(f"slope magnitude {worst} exceeds 1")
    clipped = np.clip(arr, -1.0, 1.0)
    out = 1.0 + np.sqrt(1.0 - clipped * clipped)
    if np.isscalar(w) or arr.ndim == 0:
        return float(out)
    return out


def gamma_derivatives(w):
    """First and second derivatives of the shape function on (-1, 1).

    Returns (gamma', gamma'') with gamma' = -w/sqrt(1-w^2) and
    gamma'' = -(1-w^2)^(-3/2). The second derivative is negative
    everywhere: the shape function is strictly concave.
    """
    arr = np.asarray(w, dtype=float)
    if np.any(np.abs(arr) >= 1.0):
        raise DomainError("shape function derivatives diverge at |w| = 1")
    s = 1.0 - arr * arr
    g1 = -arr / np.sqrt(s)
    g2 = -np.power(s, -1.5)
    if np.isscalar(w) or arr.ndim == 0:
        return float(g1), float(g2)
    return g1, g2


@dataclass(frozen=True)
class RectangleDomain:
    """The rectangle Q with corners (0, 0) and (l, b), requiring |b| < l."""

    l: float
    b: float

    def __post_init__(self):
        if not np.isfinite(self.l) or not np.isfinite(self.b):
            raise ValidationError("domain extents must be finite")
        if self.l <= 0:
            raise ValidationError(f"horizontal extent l must be positive, got {self.l}")
        if abs(self.b) >= self.l:
            raise ValidationError(
                f"|b| < l required for a nondegenerate rectangle, got l={self.l}, b={self.b}"
            )

    def y_bounds(self, x):
        """Lower/upper y limits of Q at abscissa x (vectorized)."""
        xa = np.asarray(x, dtype=float)
        lo = np.maximum(-xa, self.b - (self.l - xa))
        hi = np.minimum(xa, self.b + (self.l - xa))
        return lo, hi

    def contains(self, x, y, tol: float = GEOM_TOL):
        xa = np.asarray(x, dtype=float)
        ya = np.asarray(y, dtype=float)
        lo, hi = self.y_bounds(xa)
        ok = (
            (xa >= -tol)
            & (xa <= self.l + tol)
            & (ya >= lo - tol)
            & (ya <= hi + tol)
        )
        if np.isscalar(x) and np.isscalar(y):
            return bool(ok)
        return ok

    def project(self, x, y):
        """Nearest-in-y point of Q after clamping x into [0, l].

        Used to evaluate fields at transient excursions of ODE trajectories.
        """
        xa = np.clip(np.asarray(x, dtype=float), 0.0, self.l)
        lo, hi = self.y_bounds(xa)
        ya = np.clip(np.asarray(y, dtype=float), lo, hi)
        if np.isscalar(x) and np.isscalar(y):
            return float(xa), float(ya)
        return xa, ya

    @property
    def y_extent(self) -> tuple[float, float]:
        """Bounding-box y range of Q: [-(l-b)/2, (l+b)/2]."""
        return (-(self.l - self.b) / 2.0, (self.l + self.b) / 2.0)

    @property
    def max_column_height(self) -> float:
        """Height of the widest vertical section of Q, l - |b|."""
        return self.l - abs(self.b)


class LipschitzPath:
    """A candidate macroscopic path: y(0) = 0, y(l) = b, 1-Lipschitz.

    Stored as node values on a strictly increasing x grid from 0 to l and
    interpolated linearly in between. Immutable after construction.
    """

    def __init__(self, x_grid, y_values):
        x = np.array(x_grid, dtype=float)
        y = np.array(y_values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValidationError("path needs matching 1-d grids with >= 2 nodes")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise ValidationError("path x grid must be strictly increasing")
        if abs(x[0]) > GEOM_TOL:
            raise ValidationError("path must start at x = 0")
        if abs(y[0]) > GEOM_TOL:
            raise ValidationError("path must start at y = 0")
        if np.any(np.abs(np.diff(y)) > dx + GEOM_TOL):
            worst = float(np.max(np.abs(np.diff(y)) - dx))
            raise ValidationError(f"path violates the 1-Lipschitz bound by {worst}")
        x.flags.writeable = False
        y.flags.writeable = False
        self.x_grid = x
        self.y_values = y

    @property
    def l(self) -> float:
        return float(self.x_grid[-1])

    @property
    def b(self) -> float:
        return float(self.y_values[-1])

    def value_at(self, x):
        return np.interp(x, self.x_grid, self.y_values)

    def slopes(self) -> np.ndarray:
        return np.diff(self.y_values) / np.diff(self.x_grid)

    def domain(self) -> RectangleDomain:
        return RectangleDomain(self.l, self.b)

    @classmethod
    def from_function(cls, f: Callable, l: float, n_segments: int) -> "LipschitzPath":
        x = np.linspace(0.0, l, n_segments + 1)
        return cls(x, np.asarray(f(x), dtype=float))

    @classmethod
    def straight(cls, l: float, b: float, n_segments: int = 1) -> "LipschitzPath":
        x = np.linspace(0.0, l, n_segments + 1)
        return cls(x, x * (b / l))

    def save_text(self, path) -> None:
        """Two-column text export (x, y), one node per line."""
        np.savetxt(path, np.column_stack([self.x_grid, self.y_values]))

    def __repr__(self) -> str:
        return f"LipschitzPath(l={self.l}, b={self.b}, nodes={self.x_grid.size})"
