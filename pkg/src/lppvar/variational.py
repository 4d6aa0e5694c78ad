"""The limiting functional, its Riemann-sum upper bounds, and the global
discrete maximizer.

The functional of a candidate path y is the line integral of
alpha(x, y(x)) * gamma(y') over [0, l]. Its supremum over the 1-Lipschitz
path space is computed here by exact dynamic programming over a
discretized path space: a global y-grid of step dy, transitions between
consecutive x-columns by integer multiples of dy up to dx, and the
transition reward alpha(midpoint) * gamma(slope) * dx.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .fields import AlphaField
from .geometry import LipschitzPath, RectangleDomain, gamma

_ALIGN_TOL = 1e-9


def _eval_on_curve(field: AlphaField, x, y):
    # points are in Q up to validation tolerance; projection strips the
    # floating-point overshoot without masking real excursions
    return field.evaluate(*field.domain.project(x, y))


def _snap_extreme_slopes(slopes: np.ndarray) -> np.ndarray:
    # gamma is Holder-1/2 at |w| = 1: a few ulps of slope roundoff would
    # otherwise blow up to ~1e-8 in gamma; paths only produce such slopes
    # when they mean exactly +-1
    s = np.clip(slopes, -1.0, 1.0)
    return np.where(np.abs(np.abs(s) - 1.0) < 1e-13, np.sign(s), s)


def functional_eval(y: LipschitzPath, field: AlphaField) -> float:
    """Composite midpoint quadrature of alpha(x, y) * gamma(y') along y."""
    dx = np.diff(y.x_grid)
    xm = 0.5 * (y.x_grid[:-1] + y.x_grid[1:])
    ym = 0.5 * (y.y_values[:-1] + y.y_values[1:])
    slopes = _snap_extreme_slopes(np.diff(y.y_values) / dx)
    return float(np.sum(_eval_on_curve(field, xm, ym) * gamma(slopes) * dx))


def riemann_upper(y: LipschitzPath, field: AlphaField, m: int) -> float:
    """Riemann-sum upper bound on the functional with m coarse strips.

    Per strip: (l/m) * [sup of alpha along the curve over the strip]
    * gamma(chord slope). Dominates the functional by concavity of the
    shape function. The sup is sampled along the curve, starting at 16
    uniform points per strip plus the curve's own nodes and segment
    midpoints, doubling the density until the strip sups move < 1e-10.
    """
    if m < 1:
        raise ValidationError("need at least one strip")
    l = y.l
    edges = np.linspace(0.0, l, m + 1)
    node_y = y.value_at(edges)
    gam = gamma(_snap_extreme_slopes((node_y[1:] - node_y[:-1]) * (m / l)))

    own = np.unique(
        np.concatenate([y.x_grid, 0.5 * (y.x_grid[:-1] + y.x_grid[1:])])
    )
    own_vals = np.asarray(_eval_on_curve(field, own, y.value_at(own)))
    sups = np.full(m, -np.inf)
    strip_of_own = np.clip(np.searchsorted(edges, own, side="right") - 1, 0, m - 1)
    np.maximum.at(sups, strip_of_own, own_vals)
    # a node sitting exactly on a strip edge belongs to both neighbors
    on_edge = np.isin(own, edges[1:-1])
    np.maximum.at(sups, np.maximum(strip_of_own[on_edge] - 1, 0), own_vals[on_edge])

    n_per = 16
    while True:
        xs = np.linspace(0.0, l, m * n_per + 1)
        grid_vals = np.asarray(_eval_on_curve(field, xs, y.value_at(xs)))
        # n_per points per strip plus shared edges: window stride n_per
        blocks = np.lib.stride_tricks.sliding_window_view(grid_vals, n_per + 1)[::n_per]
        new_sups = np.maximum(sups, blocks.max(axis=1))
        done = np.max(new_sups - sups) < 1e-10 and n_per > 16
        sups = new_sups
        if done or n_per >= 4096:
            break
        n_per *= 2
    return float(np.sum((l / m) * sups * gam))


@dataclass(frozen=True)
class DiscretizedPathSpace:
    """Grid over which the functional is maximized exactly.

    dx = l / n_x. The y-grid is global with step dy = (l - |b|) / n_y, so
    the widest column of Q carries n_y levels. Transitions are integer
    multiples of dy with magnitude <= dx; the ratio r = dx/dy must be an
    integer so the extreme slopes +-1 stay representable, and b must lie
    on the y-grid. Use `aligned` to round n_y to the nearest admissible
    value instead of validating strictly.
    """

    domain: RectangleDomain
    n_x: int
    n_y: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValidationError("grid sizes must be positive")
        r = self.dx / self.dy
        if abs(r - round(r)) > _ALIGN_TOL:
            raise ValidationError(
                f"dx/dy = {r} must be an integer (n_x={self.n_x}, n_y={self.n_y})"
            )
        jb = self.domain.b / self.dy
        if abs(jb - round(jb)) > _ALIGN_TOL:
            raise ValidationError(
                f"endpoint b = {self.domain.b} does not lie on the y-grid (dy = {self.dy})"
            )

    @property
    def dx(self) -> float:
        return self.domain.l / self.n_x

    @property
    def dy(self) -> float:
        return self.domain.max_column_height / self.n_y

    @property
    def slope_ratio(self) -> int:
        """Number of admissible upward increments per step, dx/dy."""
        return int(round(self.dx / self.dy))

    @property
    def terminal_level(self) -> int:
        return int(round(self.domain.b / self.dy))

    @classmethod
    def aligned(
        cls, domain: RectangleDomain, n_x: int, n_y: int
    ) -> "DiscretizedPathSpace":
        """Round n_y upward until dx/dy is integral and b is on the grid."""
        dx = domain.l / n_x
        h = domain.max_column_height
        r = max(1, round(n_y * dx / h))
        while True:
            dy = dx / r
            jb = domain.b / dy
            if abs(jb - round(jb)) <= _ALIGN_TOL:
                return cls(domain, n_x, int(round(h / dy)))
            r += 1
            if r > 10**6:
                raise ValidationError("could not align the path-space grid with b")

    def column_levels(self, i: int) -> tuple[int, int]:
        """Inclusive integer level range of nodes in Q at column i."""
        x = i * self.dx
        lo, hi = self.domain.y_bounds(x)
        j0 = int(np.ceil(lo / self.dy - _ALIGN_TOL))
        j1 = int(np.floor(hi / self.dy + _ALIGN_TOL))
        if j0 > j1:
            raise NumericalError(f"empty node column at x = {x}")
        return j0, j1


def _transition_rewards(
    field: AlphaField, space: DiscretizedPathSpace, i: int, k: int, j_from: np.ndarray
) -> np.ndarray:
    """Reward of stepping from levels j_from at column i by k levels."""
    dx, dy = space.dx, space.dy
    xm = (i + 0.5) * dx
    ym = np.asarray(j_from, dtype=float) * dy + 0.5 * k * dy
    alpha = _eval_on_curve(field, np.full(ym.shape, xm), ym)
    # nominal grid slope k/r is exact at the +-1 extremes
    slope = k / space.slope_ratio
    return np.asarray(alpha) * gamma(slope) * dx


def variational_dp(
    field: AlphaField, space: DiscretizedPathSpace
) -> tuple[float, LipschitzPath]:
    """Exact maximizer of the discretized functional by forward DP.

    Backtracking ties resolve to the predecessor with smallest |y|, then
    the lower one, which selects the symmetric solution in symmetric
    instances.
    """
    cx, cy = _corner_probe(space.domain)
    if not np.all(field.domain.contains(cx, cy, tol=1e-9)):
        raise ValidationError("path space extends beyond the field's domain")
    n_x = space.n_x
    r = space.slope_ratio
    bounds = [space.column_levels(i) for i in range(n_x + 1)]

    values: list[np.ndarray] = []
    V = np.zeros(1)
    values.append(V)
    for i in range(1, n_x + 1):
        lo_p, hi_p = bounds[i - 1]
        lo_c, hi_c = bounds[i]
        Vn = np.full(hi_c - lo_c + 1, -np.inf)
        for k in range(-r, r + 1):
            a = max(lo_p, lo_c - k)
            z = min(hi_p, hi_c - k)
            if a > z:
                continue
            src = np.arange(a, z + 1)
            cand = V[a - lo_p : z - lo_p + 1] + _transition_rewards(
                field, space, i - 1, k, src
            )
            t0 = a + k - lo_c
            seg = Vn[t0 : t0 + cand.size]
            np.maximum(seg, cand, out=seg)
        V = Vn
        values.append(V)

    jb = space.terminal_level
    lo_T, hi_T = bounds[n_x]
    g_star = float(V[jb - lo_T])
    if not np.isfinite(g_star):
        raise NumericalError("terminal node unreachable; grid misaligned")

    # backtrack, re-deriving candidate sums exactly as the forward pass did
    levels = np.empty(n_x + 1, dtype=np.int64)
    levels[n_x] = jb
    for i in range(n_x, 0, -1):
        lo_p, hi_p = bounds[i - 1]
        target_val = values[i][levels[i] - bounds[i][0]]
        best = None
        for k in range(-r, r + 1):
            j_from = levels[i] - k
            if j_from < lo_p or j_from > hi_p:
                continue
            rew = _transition_rewards(
                field, space, i - 1, k, np.array([j_from], dtype=np.int64)
            )[0]
            cand = values[i - 1][j_from - lo_p] + rew
            if cand == target_val:
                key = (abs(j_from), j_from)
                if best is None or key < best[0]:
                    best = (key, j_from)
        if best is None:
            raise NumericalError("backtrack lost the optimal chain")
        levels[i - 1] = best[1]

    xs = np.arange(n_x + 1) * space.dx
    y_star = LipschitzPath(xs, levels * space.dy)
    return g_star, y_star


def _corner_probe(domain: RectangleDomain):
    xs = np.array([0.0, domain.l, (domain.l + domain.b) / 2, (domain.l - domain.b) / 2])
    ys = np.array([0.0, domain.b, (domain.l + domain.b) / 2, -(domain.l - domain.b) / 2])
    return xs, ys


def refinement_study(
    field: AlphaField,
    domain: RectangleDomain,
    resolutions: list[tuple[int, int]],
) -> list[tuple[int, int, float]]:
    """g_star across grid resolutions, for convergence reporting."""
    rows = []
    for n_x, n_y in resolutions:
        space = DiscretizedPathSpace.aligned(domain, n_x, n_y)
        g, _ = variational_dp(field, space)
        rows.append((space.n_x, space.n_y, g))
    return rows
