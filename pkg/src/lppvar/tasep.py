"""Totally asymmetric exclusion process with position-dependent rates,
coupled to the passage-time layer through origin-crossing times.

Step initial condition: sites <= 0 occupied, sites > 0 empty. A particle
at site s jumps to s + 1 at rate 1/alpha(s/N) when s + 1 is empty; waits
are exponential and regenerated whenever a jump becomes enabled, which by
memorylessness reproduces the continuous-time law exactly. The k-th
particle's jump from site 0 to site 1 happens at time T_k; T_k / N is the
rescaled crossing time whose large-N limit is the variational value of the
rectangle with endpoint (l, 0), l = 2k/N.

Only the first `particle_budget` particles are simulated: particles behind
never influence those ahead. A particle reaching the right window edge is
removed; with window_hi >= particle_budget + 1 a blocking chain from the
edge can never reach back to site 1 (it would need more particles than
exist ahead of the origin), so removal cannot bias any tracked crossing.
Narrower windows are rejected rather than silently truncated.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError, WindowOverrunError
from .fields import AlphaField
from .geometry import LipschitzPath
from .variational import DiscretizedPathSpace, variational_dp

_CHUNK = 4096


@dataclass(frozen=True)
class TasepConfig:
    """Simulation window and rates for the exclusion process.

    rate_field must be a pure y-profile: the mean waiting time at site s is
    alpha(s / N). An optional `rate` callable (site_index, particle_index)
    -> mean wait overrides the field, for particle-dependent dynamics.
    """

    rate_field: AlphaField | None
    N: int
    particle_budget: int
    window: tuple[int, int] | None = None
    rate: object = None

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("scale N must be positive")
        if self.particle_budget < 1:
            raise ValidationError("need at least one tracked particle")
        if self.rate_field is None and self.rate is None:
            raise ValidationError("either a rate field or a rate callable is required")
        if self.rate_field is not None and not self.rate_field.y_only:
            raise ValidationError("exclusion rates must depend on position only (y profile)")
        win = self.window
        if win is None:
            safety = max(1, self.particle_budget // 2)
            win = (-(self.particle_budget + safety), self.particle_budget + safety)
            object.__setattr__(self, "window", win)
        lo, hi = self.window
        if lo > -(self.particle_budget - 1):
            raise WindowOverrunError(
                f"window {self.window} does not contain the initial particles"
            )
        if hi < self.particle_budget + 1:
            raise WindowOverrunError(
                f"window {self.window} too narrow: removal at the edge could bias "
                f"crossing times; need hi >= particle_budget + 1"
            )
        if self.rate_field is not None:
            sites = np.arange(lo, hi + 1)
            waits = self.rate_field.profile_y(sites / self.N)
            if np.any(~np.isfinite(waits)) or np.any(waits <= 0):
                raise ValidationError("mean waits must be positive on the whole window")

    def mean_wait(self, site: int, particle: int) -> float:
        if self.rate is not None:
            return float(self.rate(site, particle))
        return float(self.rate_field.profile_y(site / self.N))


class _ExpStream:
    """Chunked unit-exponential draws in event order."""

    def __init__(self, seed: int):
        self._gen = np.random.default_rng(seed)
        self._buf = self._gen.standard_exponential(_CHUNK)
        self._i = 0

    def next(self) -> float:
        if self._i >= self._buf.size:
            self._buf = self._gen.standard_exponential(_CHUNK)
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return float(v)


def crossing_times(config: TasepConfig, seed: int) -> np.ndarray:
    """Absolute times T_1..T_budget of the jumps from site 0 to site 1.

    Event-driven with a lazy-deletion heap; stale entries are superseded by
    bumping a per-particle stamp. Window bias is precluded by the config's
    window check; the exclusion/order invariant is asserted at every event.
    """
    B = config.particle_budget
    lo, hi = config.window
    stream = _ExpStream(seed)

    if config.rate is None:
        site_wait = np.asarray(
            config.rate_field.profile_y(np.arange(lo, hi + 1) / config.N), dtype=float
        )
        mean_wait = lambda site, particle: site_wait[site - lo]
    else:
        mean_wait = config.mean_wait

    pos = np.arange(0, -B, -1, dtype=np.int64)
    alive = np.ones(B, dtype=bool)
    stamp = np.zeros(B, dtype=np.int64)
    T = np.full(B, np.nan)
    recorded = 0

    heap: list[tuple[float, int, int]] = []

    def schedule(i: int, t: float) -> None:
        stamp[i] += 1
        wait = stream.next() * mean_wait(int(pos[i]), i + 1)
        if wait <= 0 or not np.isfinite(wait):
            raise ValidationError("non-positive mean wait encountered")
        heapq.heappush(heap, (t + wait, int(stamp[i]), i))

    schedule(0, 0.0)

    while recorded < B:
        if not heap:
            raise WindowOverrunError("event queue drained before all crossings")
        t, st, i = heapq.heappop(heap)
        if not alive[i] or st != stamp[i]:
            continue
        old = pos[i]
        target = old + 1
        if i > 0 and alive[i - 1] and pos[i - 1] <= target:
            raise NumericalError("exclusion violated; a scheduled jump was blocked")
        pos[i] = target
        if old == 0:
            T[i] = t
            recorded += 1
        if target >= hi:
            # leaves the window; cannot influence any tracked crossing
            # because hi >= particle_budget + 1 (validated at construction)
            alive[i] = False
            stamp[i] += 1
        elif (i == 0) or (not alive[i - 1]) or (pos[i - 1] > target + 1):
            schedule(i, t)
        if i + 1 < B and alive[i + 1] and pos[i + 1] + 1 == old:
            schedule(i + 1, t)
    return T


def tasep_crossing_time(config: TasepConfig, k: int, seed: int) -> float:
    """Rescaled time T_k / N for the k-th particle to cross the origin."""
    if not (1 <= k <= config.particle_budget):
        raise ValidationError(f"k = {k} exceeds the particle budget")
    return float(crossing_times(config, seed)[k - 1] / config.N)


# -- variational crossing-time curve -----------------------------------------


@dataclass
class GStarCurve:
    """Limiting rescaled crossing times g(l) for endpoints (l, 0)."""

    l_values: np.ndarray
    g_values: np.ndarray
    maximizers: list[LipschitzPath] | None = None

    def __post_init__(self):
        lv = np.asarray(self.l_values, dtype=float)
        gv = np.asarray(self.g_values, dtype=float)
        if lv.ndim != 1 or lv.shape != gv.shape or lv.size < 2:
            raise ValidationError("curve needs matching 1-d l and g arrays")
        if np.any(np.diff(lv) <= 0):
            raise ValidationError("l values must be increasing")
        if np.any(np.diff(gv) < -1e-9 * max(1.0, float(np.abs(gv).max()))):
            raise ValidationError("crossing-time curve must be non-decreasing")
        self.l_values = lv
        self.g_values = gv

    def slopes(self) -> np.ndarray:
        return np.diff(self.g_values) / np.diff(self.l_values)


def gstar_curve(
    field: AlphaField,
    l_values,
    n_x: int,
    n_y: int,
    keep_maximizers: bool = True,
) -> GStarCurve:
    """Sweep the discrete variational solver over endpoints (l, 0).

    (n_x, n_y) is the resolution of the largest rectangle; every smaller l
    reuses the same grid steps, so all endpoints live on nested grids and
    differences along the curve are free of step-size jitter. Each l must
    therefore be a multiple of l_max / n_x. The field must be defined on
    the largest rectangle; smaller ones nest inside it.
    """
    from .geometry import RectangleDomain

    ls = np.asarray(sorted(float(v) for v in l_values))
    if ls.size < 2:
        raise ValidationError("need at least two endpoints for a curve")
    if ls[-1] > field.domain.l + 1e-12:
        raise ValidationError("field domain does not cover the largest endpoint")
    dx = ls[-1] / n_x
    dy = ls[-1] / n_y
    gs = np.empty_like(ls)
    paths = [] if keep_maximizers else None
    for idx, l in enumerate(ls):
        cols = l / dx
        if abs(cols - round(cols)) > 1e-9:
            raise ValidationError(
                f"endpoint l = {l} is not a multiple of the grid step {dx}"
            )
        dom = RectangleDomain(l, 0.0)
        space = DiscretizedPathSpace(dom, int(round(cols)), int(round(l / dy)))
        g, y_star = variational_dp(field, space)
        gs[idx] = g
        if keep_maximizers:
            paths.append(y_star)
    return GStarCurve(ls, gs, paths)


def convexity_check(curve: GStarCurve, tol: float) -> tuple[bool, dict]:
    """Second differences of g(l) on a uniform l grid, >= -tol each."""
    lv = curve.l_values
    dl = np.diff(lv)
    if np.max(np.abs(dl - dl[0])) > 1e-9 * dl[0]:
        raise ValidationError("convexity check needs uniformly spaced l values")
    if lv.size < 3:
        raise ValidationError("need at least three points")
    second = curve.g_values[2:] - 2.0 * curve.g_values[1:-1] + curve.g_values[:-2]
    ok = bool(np.all(second >= -tol))
    report = {
        "convex": ok,
        "tolerance": float(tol),
        "min_second_difference": float(second.min()),
        "violations": [int(i) for i in np.nonzero(second < -tol)[0]],
    }
    return ok, report
