"""Command-line front end: solve a single configuration, sweep a grid to CSV,
simulate one point, print the overhearing areas, or run the geometry
validation suite."""

from __future__ import annotations

import argparse
import sys

from . import analytical, simulator
from .config import ConfigError, load_config
from .geometry import group_counts, region_areas
from .sweep import run_sweep


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="configuration file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override sim.base_seed")
    parser.add_argument("--reps", type=int, default=None,
                        help="override sim.n_reps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbapsim",
        description="Contention-period performance model and simulator "
                    "for directional 60 GHz WLANs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the analytical model at the "
                                     "base configuration point")
    _add_common(p)

    p = sub.add_parser("sweep", help="evaluate the sweep grid and write CSV")
    _add_common(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--no-sim", action="store_true",
                   help="skip simulation columns")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel grid workers")

    p = sub.add_parser("simulate", help="replicated simulation of the base "
                                        "configuration point")
    _add_common(p)

    p = sub.add_parser("areas", help="print the overhearing region areas")
    _add_common(p)

    p = sub.add_parser("validate-geometry",
                       help="closed forms vs quadrature and Monte Carlo")
    p.add_argument("--tuples", type=int, default=50)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=20230811)
    return parser


def _apply_overrides(spec, args):
    if getattr(args, "seed", None) is not None:
        spec.base_seed = args.seed
    if getattr(args, "reps", None) is not None:
        spec.n_reps = args.reps
    return spec


def cmd_solve(args) -> int:
    spec = _apply_overrides(load_config(args.config), args)
    lam = spec.require_intensity()
    geo = spec.beam_geometry()
    dti = spec.dti()
    counts = group_counts(lam, region_areas(geo))
    sol = analytical.collision_system(counts, dti, spec.edca, p_e=spec.p_e,
                                      options=spec.solver)
    metrics = analytical.evaluate_metrics(sol, counts.total, spec.edca)
    print(f"# lambda={lam:g} nu={dti.nu:g} n_cbap={dti.n_cbap} "
          f"n_sp={dti.n_sp} N_AP={geo.n_ap_sectors} N_S={geo.n_sta_sectors} "
          f"R={geo.coverage_radius:.6g}")
    print(f"n_expected       = {counts.total:.6f}")
    print(f"group_counts     = ({counts.n1:.4f}, {counts.n2:.4f}, "
          f"{counts.n3:.4f}, {counts.n4:.4f})")
    for name in ("p_t", "p_f", "p_i", "q1", "q2", "q3", "p_c1", "p_c2",
                 "p_e", "p", "tau", "pi_tx", "b00", "p_acc"):
        print(f"{name:<16} = {getattr(sol, name):.12g}")
    for name, value in zip(("pi_a", "pi_rc", "pi_rv", "pi_o", "pi_f", "pi_s"),
                           sol.pi):
        print(f"{name:<16} = {value:.12g}")
    print(f"e_t_tx           = {sol.e_t_tx:.12g}")
    print(f"e_t_ntx          = {sol.e_t_ntx:.12g}")
    print(f"t_success        = {sol.t_success:.12g}")
    print(f"t_collision      = {sol.t_collision:.12g}")
    print(f"converged        = {sol.converged} "
          f"(iterations={sol.iterations}, residual={sol.residual:.3e})")
    print(f"throughput_bps   = {metrics.throughput_bps:.12g}")
    print(f"delay_s          = {metrics.delay_s:.12g}")
    print(f"drop_rate        = {metrics.drop_rate:.12g}")
    return 0


def cmd_sweep(args) -> int:
    spec = _apply_overrides(load_config(args.config), args)
    result = run_sweep(spec, with_sim=False if args.no_sim else None,
                       workers=args.workers)
    try:
        result.write_csv(args.out)
    except OSError as exc:
        print(f"error: cannot write CSV to {args.out}: {exc}",
              file=sys.stderr)
        return 1
    print(f"wrote {len(result.rows)} rows to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    spec = _apply_overrides(load_config(args.config), args)
    lam = spec.require_intensity()
    geo = spec.beam_geometry()
    dti = spec.dti()
    m = simulator.replicate(lam, geo, dti, spec.edca, p_e=spec.p_e,
                            duration=spec.duration, n_reps=spec.n_reps,
                            base_seed=spec.base_seed,
                            warmup_bis=spec.warmup_bis)
    print(f"# lambda={lam:g} nu={dti.nu:g} n_cbap={dti.n_cbap} "
          f"n_sp={dti.n_sp} reps={m.n_reps} seed={spec.base_seed}")
    print(f"throughput_bps   = {m.throughput_bps:.6f} +- {m.throughput_hw:.6f}")
    print(f"mean_delay_s     = {m.mean_delay:.9f} +- {m.delay_hw:.9f}")
    print(f"drop_rate        = {m.drop_rate:.6f} +- {m.drop_hw:.6f}")
    print(f"attempts         = {m.tx_attempts}")
    print(f"successes        = {m.success_count}")
    print(f"collisions       = {m.collision_count}")
    print(f"channel_errors   = {m.error_count}")
    return 0


def cmd_areas(args) -> int:
    spec = load_config(args.config)
    geo = spec.beam_geometry()
    areas = region_areas(geo)
    print(f"# N_AP={geo.n_ap_sectors} N_S={geo.n_sta_sectors} "
          f"R={geo.coverage_radius:.6g} total={areas.total:.6f}")
    for name, value in zip(("r1_uplink_only", "r2_downlink_only", "r3_both",
                            "r4_neither"), areas.as_tuple()):
        print(f"{name:<17} = {value:.6f}  ({value / areas.total:.4%})")
    if spec.intensity is not None:
        counts = group_counts(spec.intensity, areas)
        print(f"expected_counts   = ({counts.n1:.4f}, {counts.n2:.4f}, "
              f"{counts.n3:.4f}, {counts.n4:.4f}) of {counts.total:.4f}")
    return 0


def cmd_validate_geometry(args) -> int:
    from .validation import run_geometry_checks

    results = run_geometry_checks(n_tuples=args.tuples,
                                  mc_samples=args.samples, seed=args.seed)
    failures = 0
    for res in results:
        status = "PASS" if res.ok else "FAIL"
        if not res.ok:
            failures += 1
            print(f"{status} {res.name}: {res.detail}")
    by_name: dict[str, list[bool]] = {}
    for res in results:
        by_name.setdefault(res.name, []).append(res.ok)
    for name, oks in by_name.items():
        print(f"{'PASS' if all(oks) else 'FAIL'} {name} "
              f"[{sum(oks)}/{len(oks)}]")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        handler = {
            "solve": cmd_solve,
            "sweep": cmd_sweep,
            "simulate": cmd_simulate,
            "areas": cmd_areas,
            "validate-geometry": cmd_validate_geometry,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except analytical.FixedPointError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
