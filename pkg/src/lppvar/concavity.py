"""Sufficient conditions for strict concavity of the functional, hence
uniqueness of its maximizer.

Two checks are provided. The direct condition samples

    alpha_yy < 0   and   -alpha * alpha_yy >= (1/2) * alpha_y^2

over the rectangle. The Hessian check fixes an abscissa x0 and verifies
that z(y, w) = alpha(x0, y) * gamma(w) has two negative Hessian
eigenvalues on a (y, w) grid: trace condition s = alpha gamma'' +
alpha_yy gamma < 0 and determinant condition p = alpha alpha_yy gamma
gamma'' - (alpha_y gamma')^2 > 0. The direct condition suffices because
the shape-function ratio (gamma')^2 / (-gamma gamma'') never exceeds 1/4,
strictly below 1/2; `gamma_ratio_sup` measures that ratio numerically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ValidationError
from .fields import AlphaField
from .geometry import gamma, gamma_derivatives

# gamma'' diverges at |w| = 1; the excluded band only strengthens
# concavity in w, so clipping it is conservative.
W_EDGE = 1e-3


@dataclass
class ConcavityReport:
    satisfied: bool
    violations: list = dc_field(default_factory=list)
    min_margin: float = np.inf
    margins: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.satisfied != (len(self.violations) == 0):
            raise ValidationError("report inconsistent: satisfied iff no violations")

    def to_json(self) -> str:
        worst = sorted(self.violations, key=lambda v: v["margin"])[:16]
        return json.dumps(
            {
                "satisfied": self.satisfied,
                "min_margins": self.margins,
                "worst_points": worst,
            },
            sort_keys=True,
        )


def _domain_grid(field: AlphaField, grid_density: int):
    d = field.domain
    xs = np.linspace(0.0, d.l, grid_density)
    lo, hi = d.y_bounds(xs)
    t = np.linspace(0.0, 1.0, grid_density)[:, None]
    ys = lo[None, :] * (1.0 - t) + hi[None, :] * t
    xg = np.broadcast_to(xs[None, :], ys.shape)
    return xg, ys


def check_condition(field: AlphaField, grid_density: int = 256) -> ConcavityReport:
    """Sample the sufficient condition over the whole rectangle.

    Margins reported: min(-alpha_yy) (must be > 0) and
    min(-alpha*alpha_yy - alpha_y^2/2) (must be >= 0).
    """
    if grid_density < 2:
        raise ValidationError("grid density must be at least 2")
    xg, yg = _domain_grid(field, grid_density)
    xg, yg = field.domain.project(xg, yg)
    alpha = field.evaluate(xg, yg)
    _, ay = field.gradient(xg, yg)
    ayy = field.second_y(xg, yg)

    m_yy = -ayy
    m_combo = -alpha * ayy - 0.5 * np.square(ay)
    bad = (m_yy <= 0.0) | (m_combo < 0.0)
    violations = []
    if np.any(bad):
        idx = np.argwhere(bad)
        order = np.argsort(np.minimum(m_yy, m_combo)[bad])
        flat = idx[order]
        for a, b in flat[:256]:
            violations.append(
                {
                    "x": float(xg[a, b]),
                    "y": float(yg[a, b]),
                    "margin": float(min(m_yy[a, b], m_combo[a, b])),
                    "failed": "alpha_yy" if m_yy[a, b] <= 0 else "combined",
                }
            )
    margins = {
        "neg_alpha_yy": float(m_yy.min()),
        "combined": float(m_combo.min()),
    }
    return ConcavityReport(
        satisfied=not bool(np.any(bad)),
        violations=violations,
        min_margin=float(min(m_yy.min(), m_combo.min())),
        margins=margins,
    )


def hessian_eigen_check(
    field: AlphaField, x0: float, grid_density: int = 256
) -> ConcavityReport:
    """Negative-definiteness of the Hessian of alpha(x0, y) gamma(w)."""
    d = field.domain
    if not (0.0 < x0 < d.l):
        raise ValidationError("x0 must be interior to (0, l)")
    lo, hi = d.y_bounds(x0)
    ys = np.linspace(lo, hi, grid_density)
    ws = np.linspace(-1.0 + W_EDGE, 1.0 - W_EDGE, grid_density)
    x = np.full_like(ys, x0)
    x, ys = d.project(x, ys)
    alpha = np.asarray(field.evaluate(x, ys))[:, None]
    ay = np.asarray(field.gradient(x, ys)[1])[:, None]
    ayy = np.asarray(field.second_y(x, ys))[:, None]
    g = np.asarray(gamma(ws))[None, :]
    g1, g2 = gamma_derivatives(ws)
    g1 = g1[None, :]
    g2 = g2[None, :]

    s = alpha * g2 + ayy * g
    p = alpha * ayy * g * g2 - np.square(ay * g1)
    bad = (s >= 0.0) | (p <= 0.0)
    violations = []
    if np.any(bad):
        idx = np.argwhere(bad)
        margin = np.minimum(-s, p)
        order = np.argsort(margin[bad])
        for a, b in idx[order][:256]:
            violations.append(
                {
                    "x": float(x0),
                    "y": float(ys[a]),
                    "w": float(ws[b]),
                    "margin": float(margin[a, b]),
                    "failed": "trace" if s[a, b] >= 0 else "determinant",
                }
            )
    margins = {"neg_trace": float((-s).min()), "determinant": float(p.min())}
    return ConcavityReport(
        satisfied=not bool(np.any(bad)),
        violations=violations,
        min_margin=float(min((-s).min(), p.min())),
        margins=margins,
    )


def gamma_ratio_sup(coarse: int = 100001, zoom_rounds: int = 40) -> tuple[float, float]:
    """Numerical sup over w of (gamma')^2 / (-gamma gamma'') and its argmax.

    Scans [0, 1 - W_EDGE] (the ratio is even in w), then zooms on the
    argmax. The analytic value is 1/4, attained at |w| = sqrt(3)/2.
    """
    lo, hi = 0.0, 1.0 - W_EDGE

    def ratio(w):
        g = gamma(w)
        g1, g2 = gamma_derivatives(w)
        return np.square(g1) / (-g * g2)

    ws = np.linspace(lo, hi, coarse)
    vals = ratio(ws)
    i = int(np.argmax(vals))
    best_w = float(ws[i])
    step = (hi - lo) / (coarse - 1)
    for _ in range(zoom_rounds):
        a = max(lo, best_w - step)
        z = min(hi, best_w + step)
        ws = np.linspace(a, z, 33)
        vals = ratio(ws)
        i = int(np.argmax(vals))
        best_w = float(ws[i])
        step = (z - a) / 32.0
        if step < 1e-14:
            break
    return float(ratio(np.asarray(best_w))), best_w
