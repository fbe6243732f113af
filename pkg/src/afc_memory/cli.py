"""Command-line front end: run, sweep, fit, bound, calibrate-snr and emit-plots."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from . import __version__
from .coherence import DecayTrace, fit_decay
from .errors import AFCMemoryError, InfeasibleError
from .harness import (
    MissingArtifactError,
    PathNotFoundError,
    SchemaError,
    StageFailure,
    calibrate_dark_rate,
    emit_plotdata,
    resolve_config,
    run_scenario,
    sweep,
)
from .harness.artifacts import write_json
from .photonics import classical_bound, classical_bound_bruteforce

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_STAGE = 3
EXIT_INFEASIBLE = 4


def _parse_values(text: str) -> List[Any]:
    """Comma-separated sweep values; each item is parsed as JSON when it can be."""
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return values


def _print_json(data: Any) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def cmd_run(args: argparse.Namespace) -> int:
    config = resolve_config(args.config)
    manifest = run_scenario(config, args.output)
    _print_json({"manifest": str(manifest.path), "summary": manifest.summary})
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args.config)
    frame = sweep(config, args.param, _parse_values(args.values), args.workers, args.output)
    print(frame.to_string(index=False))
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    trace = DecayTrace.from_csv(args.trace, time_unit=args.time_unit)
    report = fit_decay(trace, args.model, convention=args.convention, starts=args.starts, seed=args.seed)
    if not report.converged:
        logger.warning(f"Fit of {args.trace} did not converge")
    if args.output:
        write_json(args.output, report.to_dict())
    _print_json(report.to_dict())
    return EXIT_OK


def cmd_bound(args: argparse.Namespace) -> int:
    if args.bruteforce:
        value = classical_bound_bruteforce(args.mu, args.eta)
    else:
        value = classical_bound(args.mu, args.eta)
    _print_json({"mu": args.mu, "eta": args.eta, "classical_bound": value, "bruteforce": args.bruteforce})
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = resolve_config(args.config)
    result = calibrate_dark_rate(
        config,
        target_snr=args.target,
        tolerance=args.tolerance,
        scan_range=tuple(args.scan),
        seed=args.seed,
        n_trials=args.trials,
    )
    if args.output:
        write_json(args.output, result.to_dict(), config.config_hash)
    _print_json(result.to_dict())
    return EXIT_OK


def cmd_emit_plots(args: argparse.Namespace) -> int:
    written = emit_plotdata(args.manifest, args.output)
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afc-memory", description="AFC quantum memory simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one scenario")
    run.add_argument("config", help="Scenario JSON file or bundled name (e.g. fig3b)")
    run.add_argument("--output", type=Path, help="Run directory (default: output root / name)")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="Run a scenario over a list of parameter values")
    sw.add_argument("config", help="Scenario JSON file or bundled name")
    sw.add_argument("--param", required=True, help="JSON pointer, e.g. /pulse/mean_photon_number")
    sw.add_argument("--values", required=True, help="Comma-separated values, e.g. 0.3,0.6,1.2")
    sw.add_argument("--workers", type=int, default=1, help="Concurrent sweep points")
    sw.add_argument("--output", type=Path, help="Sweep directory")
    sw.set_defaults(func=cmd_sweep)

    fit = sub.add_parser("fit", help="Fit a decay model to a trace CSV")
    fit.add_argument("trace", help="CSV with time, value[, sigma] columns")
    fit.add_argument("--model", default="single_exp", choices=["single_exp", "two_pulse_echo", "triple_exp"])
    fit.add_argument("--time-unit", choices=["ms", "us", "s"], help="Override the unit in the CSV header")
    fit.add_argument("--convention", default="intensity", choices=["intensity", "amplitude"])
    fit.add_argument("--starts", type=int, default=1, help="Seeded multi-start count")
    fit.add_argument("--seed", type=int, help="Multi-start seed")
    fit.add_argument("--output", type=Path, help="Write the fit report as JSON")
    fit.set_defaults(func=cmd_fit)

    bound = sub.add_parser("bound", help="Classical measure-and-prepare fidelity bound")
    bound.add_argument("--mu", type=float, required=True, help="Mean photon number")
    bound.add_argument("--eta", type=float, required=True, help="Memory efficiency")
    bound.add_argument("--bruteforce", action="store_true", help="Use the pass-probability linear program")
    bound.set_defaults(func=cmd_bound)

    cal = sub.add_parser("calibrate-snr", help="Fit the dark-count rate to a target echo SNR")
    cal.add_argument("--config", default="fig3b", help="Storage scenario (default: fig3b)")
    cal.add_argument("--target", type=float, default=56.3, help="Target SNR")
    cal.add_argument("--tolerance", type=float, default=0.5, help="Accepted |SNR - target|")
    cal.add_argument("--scan", type=float, nargs=2, default=[1.0, 1e4], metavar=("LO", "HI"), help="Dark rate bracket (1/s)")
    cal.add_argument("--seed", type=int, help="Detection seed")
    cal.add_argument("--trials", type=int, help="Trials per evaluation")
    cal.add_argument("--output", type=Path, help="Write the calibration result as JSON")
    cal.set_defaults(func=cmd_calibrate)

    plots = sub.add_parser("emit-plots", help="Write gnuplot .dat files for a finished run")
    plots.add_argument("manifest", help="manifest.json or the run directory")
    plots.add_argument("--output", type=Path, help="Plot directory (default: <run>/plots)")
    plots.set_defaults(func=cmd_emit_plots)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return args.func(args)
    except (SchemaError, PathNotFoundError, FileNotFoundError) as e:
        logger.error(f"✗ {e}")
        return EXIT_SCHEMA
    except InfeasibleError as e:
        logger.error(f"✗ infeasible: {e}")
        return EXIT_INFEASIBLE
    except (StageFailure, MissingArtifactError, AFCMemoryError) as e:
        logger.error(f"✗ {e}")
        return EXIT_STAGE
    except ValueError as e:
        logger.error(f"✗ invalid argument: {e}")
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
