"""Reproducible experiment drivers tying the layers together.

Experiments are configured by a flat key = value text file with section
headers (configparser syntax), run replicas over (N, seed) pairs with an
optional process pool, and write deterministic artifacts into the output
directory:

* ``<name>_records.csv``: one row per replica, sorted by (N, seed), no
  timing columns, so reruns are byte-identical;
* ``<name>_summary.json``: per-N aggregates and solver references;
* ``<name>_timings.csv``: wall times, the only file allowed to differ
  between reruns;
* ``manifest.json``: config echo plus content hashes, enough to rerun.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .concavity import check_condition
from .errors import ValidationError
from .fields import AlphaField, load_grid_file, make_preset
from .geometry import LipschitzPath, RectangleDomain
from .lattice import LatticeSpec, lpp_solve, path_sup_distance, sample_rewards
from .shooting import solve_bvp
from .tasep import TasepConfig, convexity_check, crossing_times, gstar_curve
from .variational import DiscretizedPathSpace, functional_eval, variational_dp

_DEFAULT_CONFIG = """
[experiment]
name = demo

[field]
preset = quadratic-y
params = 2.0, -1.0

[domain]
l = 1.0
b = 0.0

[lattice]
n_values = 50, 100, 200
auto_adjust = false

[seeds]
count = 20

[variational]
n_x = 400
n_y = 400

[ode]
h_steps = 2000
scan_points = 512
tol = 1e-10

[riemann]
m_values = 2, 4, 8, 16, 64

[tasep]
l = 1.0
n_values = 100, 200
seed_count = 20
l_values = 0.5, 1.0, 1.5, 2.0, 2.5, 3.0
window =

[tolerances]
delta =

[output]
dir = out
"""


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


@dataclass(frozen=True)
class ConvergenceRecord:
    """One replica of a convergence experiment.

    Wall time is carried here but written to the timings sidecar, never to
    the records CSV, so data files stay byte-identical across reruns.
    """

    n: int
    seed: int
    g: float
    sup_distance: float | None
    wall_seconds: float

    def key(self):
        return (self.n, self.seed)


@dataclass
class ExperimentConfig:
    """Validated experiment settings; see the default config for the schema."""

    name: str
    domain: RectangleDomain
    field_preset: str | None
    field_params: list[float]
    grid_file: str | None
    n_values: list[int]
    seeds: list[int]
    n_x: int
    n_y: int
    ode_h_steps: int
    ode_scan_points: int
    ode_tol: float
    m_values: list[int]
    tasep_l: float
    tasep_n_values: list[int]
    tasep_seed_count: int
    tasep_l_values: list[float]
    tasep_window: tuple[int, int] | None
    delta: float | None
    out_dir: Path
    threads: int = 1
    auto_adjust_n: bool = False
    raw_text: str = ""
    extra_hashes: dict = dc_field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path | None, overrides: dict | None = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.read_string(_DEFAULT_CONFIG)
        raw = _DEFAULT_CONFIG
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise ValidationError(f"config file {p} does not exist")
            raw = p.read_text()
            try:
                parser.read_string(raw)
            except configparser.Error as exc:
                raise ValidationError(f"malformed config: {exc}") from exc
        overrides = overrides or {}

        try:
            domain = RectangleDomain(
                parser.getfloat("domain", "l"), parser.getfloat("domain", "b")
            )
            preset = parser.get("field", "preset", fallback=None)
            grid_file = parser.get("field", "grid", fallback=None)
            params = _parse_floats(parser.get("field", "params", fallback=""))
            seeds_list = parser.get("seeds", "list", fallback=None)
            if "seed_count" in overrides and overrides["seed_count"] is not None:
                seeds = list(range(int(overrides["seed_count"])))
            elif seeds_list is not None:
                seeds = _parse_ints(seeds_list)
            else:
                seeds = list(range(parser.getint("seeds", "count")))
            delta_txt = parser.get("tolerances", "delta", fallback="").strip()
            cfg = cls(
                name=parser.get("experiment", "name"),
                domain=domain,
                field_preset=preset if grid_file is None else None,
                field_params=params,
                grid_file=grid_file,
                n_values=_parse_ints(parser.get("lattice", "n_values")),
                seeds=seeds,
                n_x=parser.getint("variational", "n_x"),
                n_y=parser.getint("variational", "n_y"),
                ode_h_steps=parser.getint("ode", "h_steps"),
                ode_scan_points=parser.getint("ode", "scan_points"),
                ode_tol=parser.getfloat("ode", "tol"),
                m_values=_parse_ints(parser.get("riemann", "m_values")),
                tasep_l=parser.getfloat("tasep", "l"),
                tasep_n_values=_parse_ints(parser.get("tasep", "n_values")),
                tasep_seed_count=parser.getint("tasep", "seed_count"),
                tasep_l_values=_parse_floats(parser.get("tasep", "l_values")),
                tasep_window=(
                    tuple(_parse_ints(parser.get("tasep", "window")))
                    if parser.get("tasep", "window", fallback="").strip()
                    else None
                ),
                delta=float(delta_txt) if delta_txt else None,
                out_dir=Path(overrides.get("out") or parser.get("output", "dir")),
                threads=int(overrides.get("threads") or 1),
                auto_adjust_n=bool(
                    overrides.get("auto_adjust_n", False)
                    or parser.getboolean("lattice", "auto_adjust", fallback=False)
                ),
                raw_text=raw,
            )
        except (configparser.Error, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"invalid config: {exc}") from exc
        if cfg.grid_file is not None and not Path(cfg.grid_file).exists():
            raise ValidationError(f"grid file {cfg.grid_file} does not exist")
        return cfg

    def build_field(self) -> AlphaField:
        if self.grid_file is not None:
            field = load_grid_file(self.grid_file)
            self.extra_hashes["grid_file"] = hashlib.sha256(
                Path(self.grid_file).read_bytes()
            ).hexdigest()
            return field
        if self.field_preset is None:
            raise ValidationError("config must name a field preset or a grid file")
        return make_preset(self.field_preset, self.domain, self.field_params)

    def lattice_specs(self) -> list[LatticeSpec]:
        specs = []
        for n in self.n_values:
            if self.auto_adjust_n:
                specs.append(LatticeSpec.with_adjusted_n(self.domain, n))
            else:
                specs.append(LatticeSpec(self.domain, n))
        return specs


def write_manifest(cfg: ExperimentConfig, extra: dict | None = None) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "experiment": cfg.name,
        "config_echo": cfg.raw_text,
        "config_sha256": hashlib.sha256(cfg.raw_text.encode()).hexdigest(),
        "input_hashes": cfg.extra_hashes,
        "seeds": cfg.seeds,
    }
    if extra:
        payload.update(extra)
    path = cfg.out_dir / "manifest.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=1))
    return path


def write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row) + "\n"
            )


def write_summary(path: Path, summary: dict) -> None:
    path.write_text(json.dumps(summary, sort_keys=True, indent=1))


# replica workers are module-level so a process pool can pickle their arguments


def _replica_g(args) -> ConvergenceRecord:
    field, spec, seed = args
    t0 = time.perf_counter()
    g, _ = lpp_solve(sample_rewards(spec, field, seed))
    return ConvergenceRecord(spec.N, seed, g, None, time.perf_counter() - t0)


def _replica_g_dist(args) -> ConvergenceRecord:
    field, spec, seed, xs, ys = args
    t0 = time.perf_counter()
    g, path = lpp_solve(sample_rewards(spec, field, seed))
    dist = path_sup_distance(path, LipschitzPath(xs, ys))
    return ConvergenceRecord(spec.N, seed, g, dist, time.perf_counter() - t0)


def _run_pool(worker, tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def run_theorem1(cfg: ExperimentConfig) -> dict:
    """Monte Carlo convergence of the passage time toward the variational value.

    Records G per (N, seed); the summary carries per-N mean/std, the
    deterministic reference value, and the fraction of replicas deviating
    more than delta (default: 10% of the reference).
    """
    field = cfg.build_field()
    space = DiscretizedPathSpace.aligned(cfg.domain, cfg.n_x, cfg.n_y)
    g_star, _ = variational_dp(field, space)
    delta = cfg.delta if cfg.delta is not None else 0.1 * abs(g_star)

    tasks = [
        (field, spec, seed) for spec in cfg.lattice_specs() for seed in cfg.seeds
    ]
    records = sorted(_run_pool(_replica_g, tasks, cfg.threads), key=ConvergenceRecord.key)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(
        cfg.out_dir / "theorem1_records.csv",
        ["N", "seed", "G"],
        [(r.n, r.seed, r.g) for r in records],
    )
    write_csv(
        cfg.out_dir / "theorem1_timings.csv",
        ["N", "seed", "wall_seconds"],
        [(r.n, r.seed, r.wall_seconds) for r in records],
    )

    per_n = {}
    for spec in cfg.lattice_specs():
        gs = np.array([r.g for r in records if r.n == spec.N])
        if gs.size:
            per_n[str(spec.N)] = {
                "mean_G": float(gs.mean()),
                "std_G": float(gs.std(ddof=1)) if gs.size > 1 else 0.0,
                "abs_error_of_mean": float(abs(gs.mean() - g_star)),
                "exceedance_fraction": float(np.mean(np.abs(gs - g_star) > delta)),
                "replicas": int(gs.size),
            }
        else:
            per_n[str(spec.N)] = {"replicas": 0}
    summary = {
        "experiment": cfg.name,
        "kind": "theorem1",
        "reference_g_star": g_star,
        "delta": delta,
        "per_N": per_n,
        "replicas_total": len(records),
    }
    write_summary(cfg.out_dir / "theorem1_summary.json", summary)
    write_manifest(cfg, {"kind": "theorem1"})
    return summary


def run_theorem2(cfg: ExperimentConfig) -> dict:
    """Sup-distance of maximal lattice paths to the deterministic maximizer.

    Warns (and flags the summary) when the concavity condition fails, since
    the maximizer may then be non-unique and path convergence can stall.
    """
    field = cfg.build_field()
    report = check_condition(field, grid_density=128)
    if not report.satisfied:
        warnings.warn(
            "concavity condition fails: maximizer may be non-unique, "
            "path distances may not converge",
            stacklevel=2,
        )
    space = DiscretizedPathSpace.aligned(cfg.domain, cfg.n_x, cfg.n_y)
    g_star, y_star = variational_dp(field, space)

    ode_gap = None
    if field.alpha_min > 0:
        sols = solve_bvp(
            field,
            cfg.domain,
            tol=cfg.ode_tol,
            scan_points=cfg.ode_scan_points,
            h=cfg.domain.l / cfg.ode_h_steps,
        )
        best = max(sols, key=lambda s: functional_eval(s.to_path(), field))
        ode_gap = abs(functional_eval(best.to_path(), field) - g_star)

    tasks = [
        (field, spec, seed, y_star.x_grid, y_star.y_values)
        for spec in cfg.lattice_specs()
        for seed in cfg.seeds
    ]
    records = sorted(
        _run_pool(_replica_g_dist, tasks, cfg.threads), key=ConvergenceRecord.key
    )

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(
        cfg.out_dir / "theorem2_records.csv",
        ["N", "seed", "G", "sup_distance"],
        [(r.n, r.seed, r.g, r.sup_distance) for r in records],
    )
    write_csv(
        cfg.out_dir / "theorem2_timings.csv",
        ["N", "seed", "wall_seconds"],
        [(r.n, r.seed, r.wall_seconds) for r in records],
    )
    y_star.save_text(cfg.out_dir / "y_star.txt")

    per_n = {}
    for spec in cfg.lattice_specs():
        ds = np.array([r.sup_distance for r in records if r.n == spec.N])
        per_n[str(spec.N)] = {
            "mean_sup_distance": float(ds.mean()) if ds.size else None,
            "replicas": int(ds.size),
        }
    summary = {
        "experiment": cfg.name,
        "kind": "theorem2",
        "reference_g_star": g_star,
        "concavity_satisfied": report.satisfied,
        "ode_vs_dp_gap": ode_gap,
        "per_N": per_n,
        "replicas_total": len(records),
    }
    write_summary(cfg.out_dir / "theorem2_summary.json", summary)
    write_manifest(cfg, {"kind": "theorem2"})
    return summary


def run_crossval(cfg: ExperimentConfig) -> dict:
    """Cross-validate the discrete maximizer against the shooting solutions."""
    field = cfg.build_field()
    if field.alpha_min <= 0:
        raise ValidationError("cross-validation needs a strictly positive field")
    space = DiscretizedPathSpace.aligned(cfg.domain, cfg.n_x, cfg.n_y)
    g_star, y_star = variational_dp(field, space)
    sols = solve_bvp(
        field,
        cfg.domain,
        tol=cfg.ode_tol,
        scan_points=cfg.ode_scan_points,
        h=cfg.domain.l / cfg.ode_h_steps,
    )
    roots = []
    for sol in sols:
        p = sol.to_path()
        roots.append(
            {
                "w0": sol.w0,
                "endpoint_error": sol.endpoint_error,
                "g_value": functional_eval(p, field),
                "sup_distance_to_dp": float(
                    np.max(np.abs(p.value_at(y_star.x_grid) - y_star.y_values))
                ),
            }
        )
    best = max(roots, key=lambda r: r["g_value"])
    report = {
        "experiment": cfg.name,
        "kind": "crossval",
        "g_star_dp": g_star,
        "roots": roots,
        "best_root_w0": best["w0"],
        "gap_dp_vs_best_ode": abs(g_star - best["g_value"]),
        "best_sup_distance": best["sup_distance_to_dp"],
        "concavity_satisfied": check_condition(field, grid_density=128).satisfied,
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_summary(cfg.out_dir / "crossval_report.json", report)
    write_manifest(cfg, {"kind": "crossval"})
    return report


def run_tasep_crossing(cfg: ExperimentConfig) -> dict:
    """Crossing times T_k per replica and their LPP counterparts."""
    field = cfg.build_field()
    rows = []
    compare = {}
    for n in cfg.tasep_n_values:
        k = int(np.floor(cfg.tasep_l * n / 2))
        tcfg = TasepConfig(
            rate_field=field, N=n, particle_budget=k, window=cfg.tasep_window
        )
        crossings = []
        for seed in range(cfg.tasep_seed_count):
            times = crossing_times(tcfg, seed)
            crossings.append(times[k - 1] / n)
            for kk in range(1, k + 1):
                rows.append((n, seed, kk, float(times[kk - 1])))
        dom = RectangleDomain(cfg.tasep_l, 0.0)
        ldom_field = field.rebind(dom) if field.domain.l != cfg.tasep_l else field
        gs = []
        for seed in range(cfg.tasep_seed_count):
            spec = LatticeSpec(dom, n)
            g, _ = lpp_solve(sample_rewards(spec, ldom_field, seed))
            gs.append(g)
        compare[str(n)] = {
            "mean_crossing_rescaled": float(np.mean(crossings)),
            "mean_G": float(np.mean(gs)),
            "discrepancy": float(abs(np.mean(crossings) - np.mean(gs))),
        }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.out_dir / "tasep_crossings.csv", ["N", "seed", "k", "T_k"], rows)
    summary = {"experiment": cfg.name, "kind": "tasep-crossing", "per_N": compare}
    write_summary(cfg.out_dir / "tasep_summary.json", summary)
    write_manifest(cfg, {"kind": "tasep-crossing"})
    return summary


def run_tasep_curve(cfg: ExperimentConfig) -> dict:
    """Crossing-time curve over endpoints (l, 0) plus its convexity report."""
    big = RectangleDomain(max(cfg.tasep_l_values), 0.0)
    field = cfg.build_field()
    if field.domain.l < big.l:
        if cfg.field_preset is None:
            raise ValidationError("grid field must already cover the largest endpoint")
        field = make_preset(cfg.field_preset, big, cfg.field_params)
    curve = gstar_curve(field, cfg.tasep_l_values, cfg.n_x, cfg.n_y)
    # discretization error gauged by refinement at the largest endpoint,
    # the coarsest-resolved point of the shared grid family
    g_full = curve.g_values[-1]
    g_half, _ = variational_dp(
        field, DiscretizedPathSpace(big, max(2, cfg.n_x // 2), max(2, cfg.n_y // 2))
    )
    disc_err = float(abs(g_full - g_half))
    ok, report = convexity_check(curve, tol=5.0 * max(disc_err, 1e-12))
    slopes = curve.slopes()
    rows = [
        (float(l), float(g), float(slopes[min(i, slopes.size - 1)]))
        for i, (l, g) in enumerate(zip(curve.l_values, curve.g_values))
    ]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.out_dir / "gstar_curve.csv", ["l", "g_star", "slope"], rows)
    summary = {
        "experiment": cfg.name,
        "kind": "tasep-curve",
        "convexity": report,
        "discretization_error_estimate": disc_err,
    }
    write_summary(cfg.out_dir / "tasep_curve_summary.json", summary)
    write_manifest(cfg, {"kind": "tasep-curve"})
    return summary
