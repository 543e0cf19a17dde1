"""Command line entry point: ``lorentzris run`` and ``lorentzris plot-data``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .experiment import ConfigError, ExperimentConfig, emit_plot_data, run_experiment, save_results

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

CONFIG_HELP = """\
config keys (flat JSON object; CLI flags override file values):
  n_users, n_rx, n_bins, n_taps   system dimensions K, N_R, B, Q
  n_elements                      list of RIS sizes N to sweep
  snr_db                          list of SNRs in dB (noise power 10^(-snr/10))
  trials, seed, workers           Monte Carlo size, master seed, process count
  bs_position, ris_position       2-D positions in meters
  ut_center, ut_radius            disk the user terminals are drawn from
  alpha_ris, alpha_direct         pathloss exponents (F/J links, G link)
  f_min, omega_max, kappa_max     Lorentzian parameter box
  bcd_eps, bcd_max_iter           outer BCD tolerance and iteration cap
  eps_in, eps_out, mu, rho0       PDD tolerances, penalty scaling, initial penalty
  pdd_max_outer                   PDD outer iteration cap
  flat_max_iter, flat_eps         frequency-flat benchmark optimizer settings
  out_dir                         output directory
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lorentzris", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run",
        help="run the Monte Carlo comparison",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run.add_argument("--config", help="JSON config file (default: built-in profile)")
    run.add_argument("--profile", default="desk", choices=["desk", "full"], help="built-in profile used without --config")
    run.add_argument("--snr-db", type=float, nargs="+", help="override snr_db")
    run.add_argument("--elements", type=int, nargs="+", help="override n_elements")
    run.add_argument("--trials", type=int, help="override trials")
    run.add_argument("--seed", type=int, help="override seed")
    run.add_argument("--workers", type=int, help="override workers")
    run.add_argument("--out", help="override out_dir")
    run.add_argument("--verbose", action="store_true", help="log per-trial and per-iteration diagnostics")

    plot = sub.add_parser("plot-data", help="write per-figure CSVs from an aggregate table")
    plot.add_argument("--in", dest="in_dir", required=True, help="directory holding aggregate.csv")
    plot.add_argument("--out", dest="out_dir", required=True, help="output directory")
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig.profile(args.profile)
    overrides = {
        "snr_db": args.snr_db,
        "n_elements": args.elements,
        "trials": args.trials,
        "seed": args.seed,
        "workers": args.workers,
        "out_dir": args.out,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        return replace(config, verbose=args.verbose, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        if args.command == "run":
            config = _load_config(args)
            rows = run_experiment(config)
            out = save_results(rows, config, config.out_dir)
            print(f"wrote {len(rows)} rows to {out / 'results.csv'}")
        else:
            paths = emit_plot_data(args.in_dir, args.out_dir)
            print("wrote " + ", ".join(str(p) for p in paths))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
