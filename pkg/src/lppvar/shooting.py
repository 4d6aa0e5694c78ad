"""Stationary-path ODE solved by shooting on the initial slope.

Critical points of the functional solve the first-order system

    w' = -(1/alpha) * [alpha_y (1 - w^2)^(3/2) + (alpha_x w + alpha_y)(1 - w^2)]
    y' = w,    y(0) = 0,

integrated with classical fixed-step RK4. {w = +-1} is an invariant set:
the right-hand side is exactly zero there, and w is clamped into [-1, 1]
after every stage, so the invariance survives floating point. Trajectories
shot with the wrong initial slope leave the rectangle on its right half;
the field is then queried at the projection onto Q while y itself keeps
integrating, which keeps the shooting map w0 -> y(l) continuous and
strictly bracketed: y(l) = +-l at w0 = +-1.

The boundary-value solve scans w0 over [-1, 1], brackets every sign change
of y(l) - b, and bisects each bracket. Multiple roots are returned when
present; uniqueness is only guaranteed for strictly concave instances.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fields import AlphaField
from .geometry import LipschitzPath, RectangleDomain


def el_rhs(x, y, w, field: AlphaField):
    """Right-hand side of w'; exactly 0 at |w| = 1. Vectorized."""
    if field.alpha_min <= 0:
        raise ValidationError(
            "stationary-path ODE needs a field with a positive declared lower bound"
        )
    alpha = np.asarray(field.evaluate(x, y), dtype=float)
    if np.any(alpha <= 1e-12):
        raise ValidationError("field vanishes along the trajectory; ODE undefined")
    ax, ay = field.gradient(x, y)
    s = 1.0 - np.square(np.asarray(w, dtype=float))
    s = np.maximum(s, 0.0)
    rhs = -(ay * np.power(s, 1.5) + (ax * np.asarray(w) + ay) * s) / alpha
    if np.isscalar(w) and np.isscalar(y):
        return float(rhs)
    return rhs


@dataclass
class ShootingSolution:
    """One integrated trajectory: initial slope, samples, endpoint miss."""

    w0: float
    xs: np.ndarray
    ys: np.ndarray
    ws: np.ndarray
    endpoint_error: float

    def to_path(self) -> LipschitzPath:
        return LipschitzPath(self.xs, self.ys)

    def save_text(self, path) -> None:
        """Three-column text export (x, y, w)."""
        np.savetxt(path, np.column_stack([self.xs, self.ys, self.ws]))

    def summary(self) -> dict:
        return {"w0": self.w0, "endpoint_error": self.endpoint_error}


def _make_fast_rhs(field: AlphaField, domain: RectangleDomain):
    """Per-stage right-hand side without repeated domain checks.

    Validity is established once by the caller; stage points are projected
    onto Q (x is the scalar integration variable, so the column bounds are
    scalars and the projection is a single clip).
    """
    if field.alpha_min <= 0:
        raise ValidationError(
            "stationary-path ODE needs a field with a positive declared lower bound"
        )
    f = field._f
    fx = field._fx
    fy = field._fy
    step = field.fd_step
    l, b = domain.l, domain.b

    def rhs(x: float, y, w):
        px = min(max(x, 0.0), l)
        lo = max(-px, b - (l - px))
        hi = min(px, b + (l - px))
        py = np.clip(y, lo, hi)
        a = f(px, py)
        ax = fx(px, py) if fx is not None else (f(px + step, py) - f(px - step, py)) / (2 * step)
        ay = fy(px, py) if fy is not None else (f(px, py + step) - f(px, py - step)) / (2 * step)
        s = 1.0 - w * w
        return -(ay * s * np.sqrt(s) + (ax * w + ay) * s) / a

    return rhs


def _integrate(
    field: AlphaField,
    domain: RectangleDomain,
    w0: np.ndarray,
    h: float,
    record: bool,
):
    """Vectorized RK4 over a batch of initial slopes; returns final (y, w)
    and, when recording, the full sample arrays."""
    rhs = _make_fast_rhs(field, domain)
    l = domain.l
    n_steps = int(round(l / h))
    if n_steps < 1 or abs(n_steps * h - l) > 1e-9 * l:
        n_steps = max(1, int(np.ceil(l / h - 1e-12)))
    h = l / n_steps
    w = np.clip(np.asarray(w0, dtype=float).copy(), -1.0, 1.0)
    y = np.zeros_like(w)
    if record:
        ys = np.empty((n_steps + 1,) + w.shape)
        ws = np.empty_like(ys)
        ys[0] = y
        ws[0] = w
    h2 = 0.5 * h
    h6 = h / 6.0
    for n in range(n_steps):
        x = n * h
        k1w = rhs(x, y, w)
        w2 = np.clip(w + h2 * k1w, -1.0, 1.0)
        k2w = rhs(x + h2, y + h2 * w, w2)
        w3 = np.clip(w + h2 * k2w, -1.0, 1.0)
        k3w = rhs(x + h2, y + h2 * w2, w3)
        w4 = np.clip(w + h * k3w, -1.0, 1.0)
        k4w = rhs(x + h, y + h * w3, w4)
        y = y + h6 * (w + 2.0 * w2 + 2.0 * w3 + w4)
        w = np.clip(w + h6 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w), -1.0, 1.0)
        if record:
            ys[n + 1] = y
            ws[n + 1] = w
    if record:
        xs = np.linspace(0.0, l, n_steps + 1)
        return y, w, xs, ys, ws
    return y, w, None, None, None


def shoot(
    field: AlphaField, domain: RectangleDomain, w0: float, h: float | None = None
) -> ShootingSolution:
    """Integrate one trajectory from (0, 0) with initial slope w0."""
    if abs(w0) > 1.0:
        raise ValidationError("initial slope must lie in [-1, 1]")
    if h is None:
        h = domain.l / 2000.0
    if h > domain.l / 100.0:
        raise ValidationError("step size too coarse; need h <= l/100")
    yl, wl, xs, ys, ws = _integrate(field, domain, np.asarray(w0, float), h, record=True)
    return ShootingSolution(
        w0=float(w0),
        xs=xs,
        ys=ys,
        ws=ws,
        endpoint_error=float(yl - domain.b),
    )


def solve_bvp(
    field: AlphaField,
    domain: RectangleDomain,
    tol: float = 1e-10,
    scan_points: int = 512,
    h: float | None = None,
) -> list[ShootingSolution]:
    """All boundary-value solutions found by scan plus bisection.

    Scans y(l) - b over scan_points + 1 uniform initial slopes including
    the endpoints +-1, where the miss is +-l - b with strict signs, so at
    least one bracket always exists. Each sign change is bisected until
    the endpoint miss is within tol.
    """
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    if scan_points < 16:
        raise ValidationError("need at least 16 scan points")
    if h is None:
        h = domain.l / 2000.0

    grid = np.linspace(-1.0, 1.0, scan_points + 1)
    miss, _, _, _, _ = _integrate(field, domain, grid, h, record=False)
    miss = miss - domain.b

    roots: list[float] = []
    exact = np.nonzero(np.abs(miss) <= tol)[0]
    roots.extend(float(grid[i]) for i in exact)

    sign = np.sign(miss)
    flips = np.nonzero((sign[:-1] * sign[1:]) < 0)[0]
    lo = grid[flips].copy()
    hi = grid[flips + 1].copy()
    f_lo = miss[flips].copy()
    if lo.size:
        found = np.zeros(lo.size, dtype=bool)
        best = 0.5 * (lo + hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f_mid, _, _, _, _ = _integrate(field, domain, mid, h, record=False)
            f_mid = f_mid - domain.b
            hit = (np.abs(f_mid) <= tol) & ~found
            best = np.where(hit, mid, best)
            found |= hit
            left = (f_lo * f_mid) < 0
            hi = np.where(left, mid, hi)
            lo = np.where(left, lo, mid)
            f_lo = np.where(left, f_lo, f_mid)
            if np.all(found) or np.max(hi - lo) < 1e-15:
                break
        best = np.where(found, best, 0.5 * (lo + hi))
        roots.extend(float(v) for v in best)

    roots = sorted(roots)
    spacing = 2.0 / scan_points
    dedup: list[float] = []
    for r in roots:
        if dedup and abs(r - dedup[-1]) < 0.5 * spacing:
            continue
        dedup.append(r)
    gaps = np.diff(dedup)
    if gaps.size and np.min(gaps) < spacing:
        warnings.warn(
            f"roots closer than the scan resolution {spacing}; increase scan_points",
            stacklevel=2,
        )

    return [shoot(field, domain, w0, h) for w0 in dedup]
