"""Command-line driver.

Subcommands: lpp, variational, ode, concavity, tasep, crossval, theorem1,
theorem2. All read the same flat config format (see experiments module);
flags override config values. Exit codes: 0 success, 2 validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .concavity import check_condition, gamma_ratio_sup, hessian_eigen_check
from .errors import ValidationError
from .lattice import lpp_solve, sample_rewards, save_rewards
from .shooting import solve_bvp
from .variational import (
    DiscretizedPathSpace,
    functional_eval,
    riemann_upper,
    variational_dp,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lppvar",
        description="Inhomogeneous last passage percolation experiments",
    )
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed-count", type=int, help="use seeds 0..count-1")
    parser.add_argument("--threads", type=int, default=1, help="replica worker pool size")
    parser.add_argument(
        "--auto-adjust-n",
        action="store_true",
        help="bump each lattice refinement up to the nearest admissible value",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("lpp", "sample rewards and solve passage times per (N, seed)"),
        ("variational", "discrete global maximizer of the limiting functional"),
        ("ode", "stationary-path boundary value problem by shooting"),
        ("concavity", "uniqueness condition and Hessian checks"),
        ("tasep", "exclusion-process crossing times or the g(l) curve"),
        ("crossval", "compare the discrete maximizer with the shooting roots"),
        ("theorem1", "Monte Carlo convergence of the passage time"),
        ("theorem2", "Monte Carlo convergence of the maximal path"),
    ]:
        p = sub.add_parser(name, help=help_text)
        if name == "tasep":
            p.add_argument(
                "--mode", choices=["crossing", "curve"], default="crossing"
            )
        if name == "lpp":
            p.add_argument("--dump-rewards", action="store_true")
    return parser


def _overrides(args) -> dict:
    return {
        "out": args.out,
        "seed_count": args.seed_count,
        "threads": args.threads,
        "auto_adjust_n": args.auto_adjust_n,
    }


def _cmd_lpp(cfg, args) -> None:
    field = cfg.build_field()
    rows = []
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for spec in cfg.lattice_specs():
        for seed in cfg.seeds:
            rewards = sample_rewards(spec, field, seed)
            g, path = lpp_solve(rewards)
            rows.append((spec.N, seed, g))
            if args.dump_rewards:
                save_rewards(cfg.out_dir / f"rewards_N{spec.N}_seed{seed}.bin", rewards)
    experiments.write_csv(cfg.out_dir / "lpp_records.csv", ["N", "seed", "G"], rows)
    experiments.write_manifest(cfg, {"kind": "lpp"})
    print(f"wrote {len(rows)} records to {cfg.out_dir / 'lpp_records.csv'}")


def _refinement_resolutions(n_x: int, n_y: int) -> list[tuple[int, int]]:
    out = []
    n = max(4, n_x // 4)
    while n <= n_x:
        out.append((n, max(4, n_y * n // n_x)))
        n *= 2
    if out[-1][0] != n_x:
        out.append((n_x, n_y))
    return out


def _cmd_variational(cfg, args) -> None:
    from .variational import refinement_study

    field = cfg.build_field()
    space = DiscretizedPathSpace.aligned(cfg.domain, cfg.n_x, cfg.n_y)
    g, y_star = variational_dp(field, space)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    y_star.save_text(cfg.out_dir / "y_star.txt")
    rows = refinement_study(
        field, cfg.domain, _refinement_resolutions(cfg.n_x, cfg.n_y)
    )
    experiments.write_csv(cfg.out_dir / "refinement.csv", ["n_x", "n_y", "g_star"], rows)
    # coarse upper bounds along the maximizer; their gap to g_star shrinks
    # with m and gauges how sharp the discrete maximum is
    upper_gaps = {str(m): riemann_upper(y_star, field, m) - g for m in cfg.m_values}
    experiments.write_summary(
        cfg.out_dir / "variational_summary.json",
        {"g_star": g, "n_x": space.n_x, "n_y": space.n_y, "upper_bound_gaps": upper_gaps},
    )
    experiments.write_manifest(cfg, {"kind": "variational"})
    print(f"g_star = {g!r}")


def _cmd_ode(cfg, args) -> None:
    field = cfg.build_field()
    sols = solve_bvp(
        field,
        cfg.domain,
        tol=cfg.ode_tol,
        scan_points=cfg.ode_scan_points,
        h=cfg.domain.l / cfg.ode_h_steps,
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for i, sol in enumerate(sols):
        sol.save_text(cfg.out_dir / f"trajectory_{i}.txt")
        rec = sol.summary()
        rec["g_value"] = functional_eval(sol.to_path(), field)
        records.append(rec)
    (cfg.out_dir / "ode_roots.json").write_text(json.dumps(records, sort_keys=True, indent=1))
    experiments.write_manifest(cfg, {"kind": "ode"})
    print(f"found {len(sols)} root(s): {[round(s.w0, 6) for s in sols]}")


def _cmd_concavity(cfg, args) -> None:
    field = cfg.build_field()
    report = check_condition(field)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "concavity_report.json").write_text(report.to_json())
    hess = hessian_eigen_check(field, x0=cfg.domain.l / 2)
    (cfg.out_dir / "hessian_report.json").write_text(hess.to_json())
    ratio, at_w = gamma_ratio_sup()
    experiments.write_manifest(cfg, {"kind": "concavity"})
    print(
        f"condition satisfied: {report.satisfied}; hessian at l/2: {hess.satisfied}; "
        f"shape-ratio sup {ratio:.8f} at |w| = {at_w:.6f}"
    )


def _cmd_tasep(cfg, args) -> None:
    if args.mode == "curve":
        summary = experiments.run_tasep_curve(cfg)
        print(json.dumps(summary["convexity"], sort_keys=True))
    else:
        summary = experiments.run_tasep_crossing(cfg)
        print(json.dumps(summary["per_N"], sort_keys=True))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = experiments.ExperimentConfig.from_file(args.config, _overrides(args))
        if args.command == "lpp":
            _cmd_lpp(cfg, args)
        elif args.command == "variational":
            _cmd_variational(cfg, args)
        elif args.command == "ode":
            _cmd_ode(cfg, args)
        elif args.command == "concavity":
            _cmd_concavity(cfg, args)
        elif args.command == "tasep":
            _cmd_tasep(cfg, args)
        elif args.command == "crossval":
            report = experiments.run_crossval(cfg)
            print(json.dumps({k: report[k] for k in ("g_star_dp", "gap_dp_vs_best_ode")}))
        elif args.command == "theorem1":
            summary = experiments.run_theorem1(cfg)
            print(json.dumps(summary["per_N"], sort_keys=True))
        elif args.command == "theorem2":
            summary = experiments.run_theorem2(cfg)
            print(json.dumps(summary["per_N"], sort_keys=True))
        else:  # pragma: no cover
            raise ValidationError(f"unknown command {args.command}")
    except (ValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
