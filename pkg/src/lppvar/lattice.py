"""Lattice passage-time core: reward sampling and the maximal-path solve.

Sites live on the even sublattice scaled by 1/N inside the rectangle Q:
integer pairs (i, j) with x = i/N, y = j/N, i + j even. Directed paths
step (1, +-1) from (0, 0) to (N*l, N*b) and collect the site rewards of
every site they visit, endpoints included. The passage time G is the
maximum reward sum over all such paths.

Rewards are independent exponentials with mean alpha(p)/N, realized as
alpha(p)/N times a unit exponential drawn from a counter-based stream
keyed by (seed, column), so a field sampled twice with the same seed is
bitwise identical and two fields sampled with the same seed share their
unit draws (monotone coupling).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fields import AlphaField
from .geometry import LipschitzPath, RectangleDomain

_INT_TOL = 1e-9

# Column c draws from Philox counter block c << 70; a column never consumes
# anywhere near 2^70 values, so blocks are disjoint.
_COLUMN_STRIDE_BITS = 70


def _as_lattice_int(value: float, what: str) -> int:
    r = round(value)
    if abs(value - r) > _INT_TOL * max(1.0, abs(value)):
        raise ValidationError(f"{what} = {value} is not an integer")
    return int(r)


@dataclass(frozen=True)
class LatticeSpec:
    """Mesh refinement N over a rectangle; N*l, N*b integral, N(l+b) even."""

    domain: RectangleDomain
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("N must be a positive integer")
        M = _as_lattice_int(self.N * self.domain.l, "N*l")
        B = _as_lattice_int(self.N * self.domain.b, "N*b")
        if (M + B) % 2 != 0:
            raise ValidationError(
                f"N(l+b) must be even so (l, b) is a lattice site; got N={self.N}"
            )
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "B", B)

    @classmethod
    def with_adjusted_n(cls, domain: RectangleDomain, N: int, search: int = 10000) -> "LatticeSpec":
        """Smallest valid refinement >= N for this rectangle."""
        for cand in range(max(1, N), max(1, N) + search + 1):
            try:
                return cls(domain, cand)
            except ValidationError:
                continue
        raise ValidationError(f"no admissible refinement within {search} of N={N}")

    def j_lo(self, i):
        ia = np.asarray(i)
        return np.maximum(-ia, self.B - (self.M - ia))

    def j_hi(self, i):
        ia = np.asarray(i)
        return np.minimum(ia, self.B + (self.M - ia))

    def column_size(self, i):
        return (self.j_hi(i) - self.j_lo(i)) // 2 + 1

    def column_sizes(self) -> np.ndarray:
        return self.column_size(np.arange(self.M + 1))

    def offsets(self) -> np.ndarray:
        """Flat-index offset of each column in slice order."""
        sizes = self.column_sizes()
        out = np.zeros(self.M + 2, dtype=np.int64)
        np.cumsum(sizes, out=out[1:])
        return out

    @property
    def site_count(self) -> int:
        return int(self.column_sizes().sum())

    def column_y(self, i: int) -> np.ndarray:
        j = np.arange(self.j_lo(i), self.j_hi(i) + 1, 2)
        return j / self.N


class RewardField:
    """One realization of the site rewards, stored flat in slice order
    (columns left to right, j ascending within a column)."""

    def __init__(self, spec: LatticeSpec, values: np.ndarray, seed: int):
        vals = np.ascontiguousarray(values, dtype=np.float64)
        if vals.shape != (spec.site_count,):
            raise ValidationError(
                f"reward array has {vals.shape} entries, lattice has {spec.site_count} sites"
            )
        if np.any(vals < 0):
            raise ValidationError("rewards must be nonnegative")
        vals.flags.writeable = False
        self.spec = spec
        self.values = vals
        self.seed = int(seed)

    def column(self, i: int) -> np.ndarray:
        off = self.spec.offsets()
        return self.values[off[i] : off[i + 1]]

    def value_at(self, i: int, j: int) -> float:
        lo = int(self.spec.j_lo(i))
        hi = int(self.spec.j_hi(i))
        if not (lo <= j <= hi) or (j - lo) % 2 != 0:
            raise ValidationError(f"({i}, {j}) is not a lattice site")
        return float(self.values[int(self.spec.offsets()[i]) + (j - lo) // 2])


def sample_rewards(spec: LatticeSpec, field: AlphaField, seed: int) -> RewardField:
    """Draw the reward field: independent exponentials, mean alpha(p)/N."""
    key = int(seed) & ((1 << 128) - 1)
    N = spec.N
    sizes = spec.column_sizes()
    out = np.empty(int(sizes.sum()), dtype=np.float64)
    pos = 0
    for i in range(spec.M + 1):
        n_i = int(sizes[i])
        gen = np.random.Generator(
            np.random.Philox(key=key, counter=i << _COLUMN_STRIDE_BITS)
        )
        unit = gen.standard_exponential(n_i)
        x = i / N
        # sites are in Q by construction; projection strips float noise at
        # the slanted boundary before the membership check
        px, py = field.domain.project(np.full(n_i, x), spec.column_y(i))
        alpha = field.evaluate(px, py)
        out[pos : pos + n_i] = unit * (np.asarray(alpha) / N)
        pos += n_i
    return RewardField(spec, out, seed)


class DirectedPath:
    """A directed lattice path from (0, 0) to (l, b), steps (1, +-1)/N."""

    def __init__(self, spec: LatticeSpec, js: np.ndarray):
        j = np.ascontiguousarray(js, dtype=np.int64)
        if j.shape != (spec.M + 1,):
            raise ValidationError("path must visit one site per column")
        if j[0] != 0 or j[-1] != spec.B:
            raise ValidationError("path endpoints must be (0, 0) and (l, b)")
        if np.any(np.abs(np.diff(j)) != 1):
            raise ValidationError("path steps must be (1, +-1)")
        cols = np.arange(spec.M + 1)
        if np.any(j < spec.j_lo(cols)) or np.any(j > spec.j_hi(cols)):
            raise ValidationError("path leaves the rectangle")
        j.flags.writeable = False
        self.spec = spec
        self.js = j

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.spec.M + 1) / self.spec.N

    @property
    def ys(self) -> np.ndarray:
        return self.js / self.spec.N

    def total_reward(self, rewards: RewardField) -> float:
        if rewards.spec is not self.spec and (
            rewards.spec.N != self.spec.N or rewards.spec.M != self.spec.M
        ):
            raise ValidationError("path and rewards live on different lattices")
        off = self.spec.offsets()
        lo = self.spec.j_lo(np.arange(self.spec.M + 1))
        idx = off[:-1] + (self.js - lo) // 2
        return float(rewards.values[idx].sum())


def lpp_solve(rewards: RewardField) -> tuple[float, DirectedPath]:
    """Passage time and maximal path by one dynamic-programming sweep.

    V(p) = xi_p + max over in-domain predecessors p - (1, +-1)/N, with
    V(0, 0) = xi_(0,0). On ties the upper predecessor (j + 1) wins, so the
    zero-field path is the all-upper staircase.
    """
    spec = rewards.spec
    M = spec.M
    cols = np.arange(M + 1)
    lo = np.asarray(spec.j_lo(cols))
    sizes = np.asarray(spec.column_sizes())
    off = spec.offsets()

    V = rewards.values[off[0] : off[1]].copy()
    choices: list[np.ndarray] = [np.zeros(1, dtype=bool)]
    neg_inf = -np.inf
    for i in range(1, M + 1):
        n_i = int(sizes[i])
        padded = np.concatenate(([neg_inf], V, [neg_inf]))
        c = (int(lo[i]) - int(lo[i - 1]) - 1) // 2
        v_lower = padded[1 + c : 1 + c + n_i]
        v_upper = padded[2 + c : 2 + c + n_i]
        upper = v_upper >= v_lower
        V = rewards.values[off[i] : off[i + 1]] + np.maximum(v_lower, v_upper)
        choices.append(upper)

    G = float(V[0])

    js = np.empty(M + 1, dtype=np.int64)
    js[M] = spec.B
    for i in range(M, 0, -1):
        t = (js[i] - int(lo[i])) // 2
        js[i - 1] = js[i] + 1 if choices[i][t] else js[i] - 1
    return G, DirectedPath(spec, js)


def path_sup_distance(path: DirectedPath, y: LipschitzPath) -> float:
    """Sup over lattice abscissas of |path - y|, y linearly interpolated."""
    if abs(y.l - path.spec.domain.l) > 1e-9 or abs(y.x_grid[0]) > 1e-9:
        raise ValidationError("path and candidate curve cover different intervals")
    xs = path.xs
    return float(np.max(np.abs(path.ys - y.value_at(xs))))


# -- binary replay dumps ------------------------------------------------------

_HEADER = struct.Struct("<qddQ")  # N, l, b, seed


def save_rewards(path, rewards: RewardField) -> None:
    """Binary dump: header (N, l, b, seed), then the rewards in slice order
    as little-endian float64."""
    spec = rewards.spec
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(spec.N, spec.domain.l, spec.domain.b, rewards.seed & (2**64 - 1)))
        fh.write(rewards.values.astype("<f8").tobytes())


def load_rewards(path) -> RewardField:
    with open(path, "rb") as fh:
        N, l, b, seed = _HEADER.unpack(fh.read(_HEADER.size))
        body = fh.read()
    spec = LatticeSpec(RectangleDomain(l, b), N)
    vals = np.frombuffer(body, dtype="<f8")
    return RewardField(spec, vals.astype(np.float64), seed)
