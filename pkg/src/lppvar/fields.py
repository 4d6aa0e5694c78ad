"""Inhomogeneity fields alpha(x, y) on a rectangle domain.

Two kinds are supported:

* analytic presets with closed-form values and (where smooth) exact
  derivatives,
* gridded fields: a rectangular sample array over the bounding box of Q,
  bilinearly interpolated, with central finite differences for
  derivatives (step = mesh size).

Evaluation is defined exactly on Q; querying outside Q raises DomainError
rather than extrapolating. Derivative fallbacks and y-profiles use the raw
underlying formula/interpolant, which extends naturally past the slanted
boundary of Q.

Grid file format (plain text): first line ``nx ny l b``; then ny rows of
nx space-separated samples, row i holding the y-level from bottom to top.
The samples span x in [0, l] and y across the bounding box of Q(l, b).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .geometry import RectangleDomain

# Resolution of the dense sweep used to estimate alpha_min / alpha_max
# when the caller does not declare them.
_BOUND_SCAN = 301


class AlphaField:
    """A nonnegative rate profile over a rectangle domain.

    Parameters
    ----------
    domain : RectangleDomain
    f : vectorized callable (x, y) -> alpha
    fx, fy, fyy : optional exact partial derivatives; when absent,
        derivative queries use finite differences of `f` with `fd_step`.
    y_only : True when f ignores x; required by the particle-system module,
        which evaluates the profile outside Q.
    alpha_min, alpha_max : declared bounds; estimated by a dense sweep of Q
        when omitted. alpha_max is the sup of |alpha| over Q.
    """

    def __init__(
        self,
        domain: RectangleDomain,
        f: Callable,
        fx: Callable | None = None,
        fy: Callable | None = None,
        fyy: Callable | None = None,
        *,
        kind: str = "analytic-preset",
        y_only: bool = False,
        fd_step: float = 1e-5,
        alpha_min: float | None = None,
        alpha_max: float | None = None,
        recipe: tuple | None = None,
        label: str = "custom",
    ):
        if kind not in ("analytic-preset", "gridded"):
            raise ValidationError(f"unknown field kind {kind!r}")
        self.domain = domain
        self.kind = kind
        self.y_only = y_only
        self.fd_step = float(fd_step)
        self.label = label
        self._f = f
        self._fx = fx
        self._fy = fy
        self._fyy = fyy
        self._recipe = recipe

        sampled_min, sampled_max = self._scan_bounds()
        if sampled_min < -1e-9:
            raise ValidationError(
                f"field {label!r} is negative on Q (min sample {sampled_min})"
            )
        self.alpha_min = float(alpha_min) if alpha_min is not None else sampled_min
        self.alpha_max = float(alpha_max) if alpha_max is not None else sampled_max

    def _scan_bounds(self) -> tuple[float, float]:
        d = self.domain
        xs = np.linspace(0.0, d.l, _BOUND_SCAN)
        lo, hi = d.y_bounds(xs)
        t = np.linspace(0.0, 1.0, _BOUND_SCAN)[:, None]
        ys = lo[None, :] * (1.0 - t) + hi[None, :] * t
        vals = self._f(np.broadcast_to(xs[None, :], ys.shape), ys)
        vals = np.asarray(vals, dtype=float)
        return float(vals.min()), float(np.abs(vals).max())

    # -- evaluation ---------------------------------------------------------

    def _check_domain(self, x, y):
        inside = self.domain.contains(x, y)
        if not np.all(inside):
            xa, ya = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
            bad = np.argwhere(~np.atleast_1d(inside))
            i = tuple(bad[0]) if bad.size else ()
            raise DomainError(
                f"field query outside Q: (x, y) = ({np.atleast_1d(xa)[i]}, {np.atleast_1d(ya)[i]})"
            )

    @staticmethod
    def _broadcast(x, y):
        return np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def evaluate(self, x, y):
        """alpha(x, y) for points of Q; DomainError outside."""
        self._check_domain(x, y)
        xa, ya = self._broadcast(x, y)
        val = np.broadcast_to(np.asarray(self._f(xa, ya), dtype=float), xa.shape)
        if np.isscalar(x) and np.isscalar(y):
            return float(val)
        return val

    def evaluate_raw(self, x, y):
        """Underlying formula/interpolant without the Q membership check."""
        xa, ya = self._broadcast(x, y)
        return np.broadcast_to(np.asarray(self._f(xa, ya), dtype=float), xa.shape)

    def gradient(self, x, y):
        """(alpha_x, alpha_y); exact when available, else central differences."""
        self._check_domain(x, y)
        xa, ya = self._broadcast(x, y)
        ax = self._fx(xa, ya) if self._fx is not None else self._fd_x(xa, ya)
        ay = self._fy(xa, ya) if self._fy is not None else self._fd_y(xa, ya)
        if np.isscalar(x) and np.isscalar(y):
            return float(ax), float(ay)
        return (
            np.broadcast_to(np.asarray(ax, dtype=float), xa.shape),
            np.broadcast_to(np.asarray(ay, dtype=float), xa.shape),
        )

    def second_y(self, x, y):
        """alpha_yy; exact when available, else second central difference."""
        self._check_domain(x, y)
        xa, ya = self._broadcast(x, y)
        if self._fyy is not None:
            ayy = self._fyy(xa, ya)
        else:
            h = self.fd_step
            ayy = (self._f(xa, ya + h) - 2.0 * self._f(xa, ya) + self._f(xa, ya - h)) / (h * h)
        if np.isscalar(x) and np.isscalar(y):
            return float(ayy)
        return np.broadcast_to(np.asarray(ayy, dtype=float), xa.shape)

    def _fd_x(self, x, y):
        h = self.fd_step
        return (self._f(x + h, y) - self._f(x - h, y)) / (2.0 * h)

    def _fd_y(self, x, y):
        h = self.fd_step
        return (self._f(x, y + h) - self._f(x, y - h)) / (2.0 * h)

    def has_exact_derivatives(self) -> bool:
        return self._fx is not None and self._fy is not None

    def profile_y(self, y):
        """alpha as a function of y alone, valid beyond Q.

        Only meaningful for y_only fields; used for position-dependent
        particle jump rates, whose sites extend past the rectangle.
        """
        if not self.y_only:
            raise ValidationError("field is not a pure y-profile")
        ya = np.asarray(y, dtype=float)
        val = self._f(np.zeros_like(ya), ya)
        if np.isscalar(y):
            return float(val)
        return np.asarray(val, dtype=float)

    def rebind(self, domain: RectangleDomain) -> "AlphaField":
        """Same formula restricted to another rectangle (must sit inside ours)."""
        corners_x = np.array([0.0, domain.l, (domain.l + domain.b) / 2, (domain.l - domain.b) / 2])
        corners_y = np.array([0.0, domain.b, (domain.l + domain.b) / 2, -(domain.l - domain.b) / 2])
        if not np.all(self.domain.contains(corners_x, corners_y)):
            raise ValidationError("target rectangle is not contained in the field's domain")
        return AlphaField(
            domain,
            self._f,
            self._fx,
            self._fy,
            self._fyy,
            kind=self.kind,
            y_only=self.y_only,
            fd_step=self.fd_step,
            recipe=None,
            label=self.label,
        )

    def __reduce__(self):
        if self._recipe is None:
            raise TypeError(
                "only preset/gridded fields are picklable; build via make_preset or from_grid"
            )
        return (_rebuild_field, (self._recipe,))

    def __repr__(self) -> str:
        return f"AlphaField({self.label}, kind={self.kind}, domain=({self.domain.l}, {self.domain.b}))"


# -- analytic presets --------------------------------------------------------


def constant_field(domain: RectangleDomain, value: float) -> AlphaField:
    v = float(value)
    if v < 0:
        raise ValidationError("constant field must be nonnegative")
    zero = lambda x, y: np.zeros_like(np.asarray(x, float) + np.asarray(y, float))
    return AlphaField(
        domain,
        lambda x, y: np.full_like(np.asarray(x, float) + np.asarray(y, float), v),
        zero,
        zero,
        zero,
        y_only=True,
        alpha_min=v,
        alpha_max=abs(v),
        recipe=("constant", domain.l, domain.b, (v,)),
        label=f"constant({v})",
    )


def quadratic_y_field(domain: RectangleDomain, a: float, c: float) -> AlphaField:
    """alpha(x, y) = a + c * y^2."""
    a, c = float(a), float(c)
    return AlphaField(
        domain,
        lambda x, y: a + c * np.square(y),
        lambda x, y: np.zeros_like(np.asarray(x, float) + np.asarray(y, float)),
        lambda x, y: 2.0 * c * np.asarray(y, float),
        lambda x, y: np.full_like(np.asarray(x, float) + np.asarray(y, float), 2.0 * c),
        y_only=True,
        recipe=("quadratic-y", domain.l, domain.b, (a, c)),
        label=f"quadratic-y({a}, {c})",
    )


def affine_x_field(domain: RectangleDomain, a: float, c: float) -> AlphaField:
    """alpha(x, y) = a + c * x."""
    a, c = float(a), float(c)
    zero = lambda x, y: np.zeros_like(np.asarray(x, float) + np.asarray(y, float))
    return AlphaField(
        domain,
        lambda x, y: a + c * np.asarray(x, float) + 0.0 * np.asarray(y, float),
        lambda x, y: np.full_like(np.asarray(x, float) + np.asarray(y, float), c),
        zero,
        zero,
        recipe=("affine-x", domain.l, domain.b, (a, c)),
        label=f"affine-x({a}, {c})",
    )


def exp_y_field(domain: RectangleDomain, rate: float) -> AlphaField:
    """alpha(x, y) = exp(rate * y)."""
    r = float(rate)
    return AlphaField(
        domain,
        lambda x, y: np.exp(r * np.asarray(y, float)) + 0.0 * np.asarray(x, float),
        lambda x, y: np.zeros_like(np.asarray(x, float) + np.asarray(y, float)),
        lambda x, y: r * np.exp(r * np.asarray(y, float)) + 0.0 * np.asarray(x, float),
        lambda x, y: r * r * np.exp(r * np.asarray(y, float)) + 0.0 * np.asarray(x, float),
        y_only=True,
        recipe=("exp-y", domain.l, domain.b, (r,)),
        label=f"exp-y({r})",
    )


def gaussian_peaks_field(
    domain: RectangleDomain, base: float, peaks: Sequence[tuple[float, float, float]]
) -> AlphaField:
    """alpha(x, y) = base + sum_i A_i * exp(-s_i * (y - c_i)^2).

    `peaks` is a sequence of (amplitude, center, sharpness) triples.
    """
    base = float(base)
    pk = tuple((float(a), float(c), float(s)) for a, c, s in peaks)

    def f(x, y):
        ya = np.asarray(y, dtype=float)
        out = np.full_like(ya + np.asarray(x, float), base)
        for amp, cen, shp in pk:
            out = out + amp * np.exp(-shp * np.square(ya - cen))
        return out

    def fy(x, y):
        ya = np.asarray(y, dtype=float)
        out = np.zeros_like(ya + np.asarray(x, float))
        for amp, cen, shp in pk:
            out = out - 2.0 * shp * (ya - cen) * amp * np.exp(-shp * np.square(ya - cen))
        return out

    def fyy(x, y):
        ya = np.asarray(y, dtype=float)
        out = np.zeros_like(ya + np.asarray(x, float))
        for amp, cen, shp in pk:
            g = amp * np.exp(-shp * np.square(ya - cen))
            out = out + (4.0 * shp * shp * np.square(ya - cen) - 2.0 * shp) * g
        return out

    flat = tuple(v for triple in pk for v in triple)
    return AlphaField(
        domain,
        f,
        lambda x, y: np.zeros_like(np.asarray(x, float) + np.asarray(y, float)),
        fy,
        fyy,
        y_only=True,
        recipe=("gauss-peaks-y", domain.l, domain.b, (base,) + flat),
        label=f"gauss-peaks-y(base={base}, peaks={len(pk)})",
    )


def _build_gauss(domain, params):
    base = params[0]
    rest = params[1:]
    if len(rest) % 3 != 0:
        raise ValidationError("gauss-peaks-y wants: base, then (amp, center, sharpness) triples")
    peaks = [tuple(rest[i : i + 3]) for i in range(0, len(rest), 3)]
    return gaussian_peaks_field(domain, base, peaks)


PRESETS = {
    "constant": (constant_field, 1),
    "quadratic-y": (quadratic_y_field, 2),
    "affine-x": (affine_x_field, 2),
    "exp-y": (exp_y_field, 1),
    "gauss-peaks-y": (_build_gauss, None),
}


def make_preset(name: str, domain: RectangleDomain, params: Sequence[float]) -> AlphaField:
    """Build a named analytic preset; `params` is its flat parameter list."""
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    builder, arity = PRESETS[name]
    params = [float(p) for p in params]
    if arity is not None and len(params) != arity:
        raise ValidationError(f"preset {name!r} expects {arity} parameters, got {len(params)}")
    if name == "gauss-peaks-y":
        return builder(domain, params)
    return builder(domain, *params)


def _rebuild_field(recipe):
    name = recipe[0]
    if name == "grid":
        _, l, b, samples = recipe
        return gridded_field(RectangleDomain(l, b), np.asarray(samples))
    _, l, b, params = recipe
    return make_preset(name, RectangleDomain(l, b), params)


# -- gridded fields -----------------------------------------------------------


def gridded_field(domain: RectangleDomain, samples: np.ndarray) -> AlphaField:
    """Bilinear field from a (ny, nx) sample array over the bounding box of Q.

    Row 0 is the bottom y-level. Derivatives are central differences with
    step equal to the mesh size.
    """
    arr = np.array(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValidationError("gridded field needs a 2-d sample array, >= 2 per axis")
    if np.any(arr < 0):
        raise ValidationError("gridded field has negative samples")
    ny, nx = arr.shape
    y0, y1 = domain.y_extent
    hx = domain.l / (nx - 1)
    hy = (y1 - y0) / (ny - 1)
    arr.flags.writeable = False

    def f(x, y):
        u = np.clip((np.asarray(x, float)) / hx, 0.0, nx - 1.0)
        v = np.clip((np.asarray(y, float) - y0) / hy, 0.0, ny - 1.0)
        i0 = np.clip(np.floor(u).astype(int), 0, nx - 2)
        j0 = np.clip(np.floor(v).astype(int), 0, ny - 2)
        fu = u - i0
        fv = v - j0
        a00 = arr[j0, i0]
        a01 = arr[j0, i0 + 1]
        a10 = arr[j0 + 1, i0]
        a11 = arr[j0 + 1, i0 + 1]
        return (
            a00 * (1 - fu) * (1 - fv)
            + a01 * fu * (1 - fv)
            + a10 * (1 - fu) * fv
            + a11 * fu * fv
        )

    return AlphaField(
        domain,
        f,
        kind="gridded",
        fd_step=max(hx, hy),
        recipe=("grid", domain.l, domain.b, arr),
        label=f"grid({ny}x{nx})",
    )


def sample_to_grid(field: AlphaField, nx: int, ny: int) -> np.ndarray:
    """Sample a field's raw formula on the bounding-box mesh of its domain."""
    d = field.domain
    y0, y1 = d.y_extent
    X, Y = np.meshgrid(np.linspace(0.0, d.l, nx), np.linspace(y0, y1, ny))
    return np.array(field.evaluate_raw(X, Y), dtype=float)


def save_grid_file(path, domain: RectangleDomain, samples: np.ndarray) -> None:
    arr = np.asarray(samples, dtype=float)
    ny, nx = arr.shape
    with open(path, "w") as fh:
        fh.write(f"{nx} {ny} {domain.l!r} {domain.b!r}\n")
        for row in arr:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_grid_file(path) -> AlphaField:
    """Load a gridded field from the plain-text matrix format."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ValidationError("grid file header must be: nx ny l b")
        nx, ny = int(header[0]), int(header[1])
        l, b = float(header[2]), float(header[3])
        data = np.loadtxt(fh, dtype=float, ndmin=2)
    if data.shape != (ny, nx):
        raise ValidationError(
            f"grid file body has shape {data.shape}, header promised ({ny}, {nx})"
        )
    return gridded_field(RectangleDomain(l, b), data)
