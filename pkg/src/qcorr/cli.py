"""
Command-line entry point.

Usage:
    uv run -m src.qcorr.cli scan --species half --out results/
    uv run -m src.qcorr.cli chsh --n-pairs 1000000 --seed 7
    uv run -m src.qcorr.cli events --config experiment.env --set schedule=0:0,0:pi/8
    uv run -m src.qcorr.cli twoslit --set alpha=0.5 --format json
    uv run -m src.qcorr.cli hardy
    uv run -m src.qcorr.cli selftest

Exit status: 0 success, 2 configuration error, 3 runtime or numerical error,
4 I/O error.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from .analysis import (
    ChshSettings,
    chsh_analytic,
    chsh_lhv,
    chsh_monte_carlo,
    chsh_report,
    scan_settings,
    visibility,
)
from .config import ExperimentConfig, load_config
from .continuum import SlitGeometry, coincidence_fringe, fringe_period, sample_pattern
from .errors import ConfigError, QCorrError
from .events import (
    RunConfig,
    coincidence_match,
    estimate_by_setting,
    model_correlation_at,
    run_events,
    station_streams,
)
from .export import (
    read_events_csv,
    scan_to_dict,
    write_events_csv,
    write_json,
    write_matched_csv,
    write_pattern_csv,
    write_scan_csv,
)
from .hardy_fit import fit_local_amplitudes, maximal_targets, targets_from_hardy
from .log_decorator import log_command
from .logging_config import setup_logging
from .oracle import hardy_search
from .selftest import run_selftest
from .types import PairSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

COMMANDS = ("scan", "chsh", "events", "twoslit", "hardy", "selftest")


def _spec(config: ExperimentConfig) -> PairSpec:
    return PairSpec(species=config.species, phi0=config.effective_phi0)


@log_command
def cmd_scan(config: ExperimentConfig, workers: Optional[int] = None) -> Dict[str, Any]:
    """Model P vs oracle E (and a Monte Carlo estimate when n_pairs > 0) over a grid of dtheta."""
    grid = np.linspace(config.grid_start, config.grid_stop, config.grid_points)
    report = scan_settings(_spec(config), grid, n_pairs=config.n_pairs, seed=config.seed, workers=workers)
    if config.format == "json":
        path = write_json(config.out / "scan.json", scan_to_dict(report))
    else:
        path = write_scan_csv(config.out / "scan.csv", report)
    return {"rows": len(report), "max_abs_diff": report.max_abs_diff, "files": [str(path)]}


@log_command
def cmd_chsh(config: ExperimentConfig, workers: Optional[int] = None) -> Dict[str, Any]:
    """CHSH of the model in closed form and by simulation, plus the LHV baseline."""
    spec = _spec(config)
    settings = ChshSettings(*config.chsh_angles)
    analytic = chsh_analytic(spec, settings)
    mc = chsh_monte_carlo(spec, settings, config.n_pairs, config.seed, workers)
    lhv = chsh_lhv(spec, settings, config.n_pairs, config.seed, workers)
    report = chsh_report(analytic, mc, lhv)
    report["species"] = spec.species.value
    report["phi0"] = spec.phi0
    report["seed"] = config.seed
    path = write_json(config.out / "chsh.json", report)
    return {"S": analytic.S, "mc_S": mc.S, "lhv_S": lhv.S, "files": [str(path)]}


@log_command
def cmd_events(config: ExperimentConfig, workers: Optional[int] = None) -> Dict[str, Any]:
    """Simulate both stations, write their event streams and the tag-matched pairs."""
    spec = _spec(config)
    run = RunConfig.from_tuples(
        seed=config.seed,
        n_pairs=config.n_pairs,
        schedule=config.schedule,
        spec=spec,
        schedule_mode=config.schedule_mode,
        phi_distribution=config.phi_distribution,
    )
    stream_a, stream_b = station_streams(run_events(run, workers))
    events_path = write_events_csv(config.out / "events.csv", stream_a, stream_b)
    # Correlate offline, from the recorded station streams only
    recorded = read_events_csv(events_path)
    matched = coincidence_match(recorded["A"], recorded["B"])
    estimates = [
        {
            "theta1": e.theta1,
            "theta2": e.theta2,
            "n": e.n,
            "p_hat": e.p_hat,
            "stderr": e.stderr,
            "model_P": model_correlation_at(e, spec),
            "rate_a_plus": e.rate_a_plus,
            "rate_b_plus": e.rate_b_plus,
        }
        for e in estimate_by_setting(matched)
    ]
    files = [
        events_path,
        write_matched_csv(config.out / "matched.csv", matched),
        write_json(
            config.out / "events_summary.json",
            {
                "species": spec.species.value,
                "phi0": spec.phi0,
                "seed": config.seed,
                "n_pairs": config.n_pairs,
                "n_matched": len(matched),
                "n_unmatched": matched.n_unmatched,
                "settings": estimates,
            },
        ),
    ]
    return {"n_matched": len(matched), "files": [str(p) for p in files]}


@log_command
def cmd_twoslit(config: ExperimentConfig, workers: Optional[int] = None) -> Dict[str, Any]:
    """Coincidence pattern of the double-slit pair as a function of x1 - x2."""
    geom = SlitGeometry(k=config.k, alpha=config.alpha, x0=config.x0)
    dx, pattern = sample_pattern(geom, config.dx_start, config.dx_stop, config.pattern_points)
    summary = {
        "visibility": visibility(coincidence_fringe(geom)),
        "sampled_visibility": visibility(pattern),
        "period": fringe_period(geom),
        "expected_period": geom.period,
    }
    if config.format == "json":
        data = {"geometry": {"k": geom.k, "alpha": geom.alpha, "x0": geom.x0}, **summary}
        data["dx"] = dx.tolist()
        data["pattern"] = pattern.tolist()
        path = write_json(config.out / "twoslit.json", data)
    else:
        path = write_pattern_csv(config.out / "twoslit.csv", dx, pattern)
    return {**summary, "files": [str(path)]}


@log_command
def cmd_hardy(config: ExperimentConfig, workers: Optional[int] = None) -> Dict[str, Any]:
    """Hardy search at two grid densities, then local-amplitude fits to its probabilities."""
    result = hardy_search(config.grid_density, config.refine_tolerance, workers)
    dense = hardy_search(config.dense_grid_density, config.refine_tolerance, workers)
    data: Dict[str, Any] = {
        "search": result.to_dict(),
        "dense_search": dense.to_dict(),
        "p_star_agreement": abs(result.p_star - dense.p_star) if result.feasible and dense.feasible else None,
    }
    if result.feasible:
        fit = fit_local_amplitudes(
            targets_from_hardy(result), config.fit_budget, config.seed, config.fit_starts, workers
        )
        maximal = fit_local_amplitudes(
            maximal_targets(config.species, result.settings),
            config.fit_budget,
            config.seed,
            config.fit_starts,
            workers,
        )
        data["fit"] = fit.to_dict()
        data["maximal_fit"] = maximal.to_dict()
    path = write_json(config.out / "hardy.json", data)
    summary = {"feasible": result.feasible, "p_star": result.p_star, "files": [str(path)]}
    if result.feasible:
        summary["fit_residual"] = data["fit"]["residual"]
    return summary


@log_command
def cmd_selftest(config: ExperimentConfig, workers: Optional[int] = None) -> Dict[str, Any]:
    """Run the acceptance suite and write selftest.json."""
    report = run_selftest(config, workers)
    path = write_json(config.out / "selftest.json", report.to_dict())
    failed = [c.number for c in report.criteria if c.asserted and not c.passed]
    return {"passed": report.passed, "failed": failed, "files": [str(path)]}


HANDLERS = {
    "scan": cmd_scan,
    "chsh": cmd_chsh,
    "events": cmd_events,
    "twoslit": cmd_twoslit,
    "hardy": cmd_hardy,
    "selftest": cmd_selftest,
}


def _key_value(text: str) -> tuple:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"Expected KEY=VALUE, got {text!r}")
    return key.strip(), value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcorr",
        description="Local-amplitude model of entangled-pair correlations vs quantum mechanics",
    )
    parser.add_argument("command", choices=COMMANDS, help="Experiment to run")
    parser.add_argument("--config", type=Path, help="Flat KEY=VALUE config file")
    parser.add_argument("--seed", help="Random seed (64-bit unsigned)")
    parser.add_argument("--n-pairs", dest="n_pairs", help="Number of pairs (per setting pair for chsh)")
    parser.add_argument("--species", choices=["photon", "half"], help="Particle species")
    parser.add_argument("--phi0", help="Source phase offset in radians (e.g. pi/2)")
    parser.add_argument("--out", help="Output directory (default: results)")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format for tables")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        type=_key_value,
        default=[],
        metavar="KEY=VALUE",
        help="Override any config key (repeatable)",
    )
    parser.add_argument("--threads", type=int, help="Worker threads (default: QCORR_THREADS, 0 = auto)")
    parser.add_argument("--log-level", help="Logging level (default: QCORR_LOG_LEVEL or INFO)")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the config file, then --set, then the dedicated flags."""
    overrides: Dict[str, str] = dict(args.overrides)
    for name in ("seed", "n_pairs", "species", "phi0", "out", "format"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = str(value)
    return load_config(args.config, overrides).validate_for(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        config = config_from_args(args)
        summary = HANDLERS[args.command](config, workers=args.threads)
    except ConfigError as e:
        print(f"❌ Invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"❌ I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except QCorrError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ArithmeticError, ValueError) as e:
        print(f"❌ Numerical error: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    files: List[str] = summary.get("files", [])
    for path in files:
        print(f"✅ Wrote {path}")
    if args.command == "selftest" and not summary["passed"]:
        print(f"❌ Selftest failed criteria: {summary['failed']}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
