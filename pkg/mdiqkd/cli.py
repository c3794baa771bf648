"""
Command-line entry point: ``mdiqkd --preset fig4 --out results/``.

Every flag has an ``MDIQKD_*`` environment fallback. Exit codes: 0 on success, 1 for a
configuration error, 2 for a computation error or a failed verification.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from mdiqkd import __version__
from mdiqkd.config import (
    CONFIG_SCHEMA,
    PRESET_ALIASES,
    PRESETS,
    PhotonStatisticsConfig,
    RunConfig,
    get_preset,
    load_config,
)
from mdiqkd.exceptions import ConfigError, SimulationError
from mdiqkd.protocol import Level, SourceHardware
from mdiqkd.relay import Side
from mdiqkd.sources import PhotonNumberDistribution, SourceSetting
from mdiqkd.sweep import SweepOptimizer, SweepPoint
from mdiqkd.utils import write_csv, write_json
from mdiqkd.verification import VerificationReport, run_verification

logger = logging.getLogger(__name__)

CURVE_COLUMNS = (
    "distance_km",
    "rate",
    "branch",
    "alpha_star",
    "y11_lower",
    "e11_upper",
    "q_z",
    "e_z",
    "feasible",
)
PHOTON_COLUMNS = ("n", "heralded", "triggered", "non_triggered", "thermal", "poisson")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_COMPUTATION = 2

_TRUE = {"1", "true", "yes", "on"}


def _env(name: str, default: Optional[str] = None) -> Optional[str]:
    return os.environ.get(f"MDIQKD_{name}", default)


def _env_int(name: str) -> Optional[int]:
    value = _env(name)
    if value is None or value == "":
        return None
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"MDIQKD_{name}: expected an integer, got {value!r}", "cli") from None


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the ``mdiqkd`` command."""
    presets = ", ".join(sorted(PRESETS) + sorted(PRESET_ALIASES))
    parser = argparse.ArgumentParser(
        prog="mdiqkd",
        description="Key-rate curves of MDI-QKD with heralded SPDC sources.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", type=str, default=None, help="JSON run configuration")
    source.add_argument("--preset", type=str, default=None, help=f"Bundled preset: {presets}")
    parser.add_argument("--out", type=str, default=None, help="Output directory")
    parser.add_argument(
        "--verify", action="store_true", default=None, help="Run the invariant self-checks"
    )
    parser.add_argument("--n-max", type=int, default=None, help="Photon-number truncation")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument(
        "--log-level",
        type=str,
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default INFO)",
    )
    parser.add_argument(
        "--schema", action="store_true", help="Print the configuration JSON schema and exit"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge flags, environment fallbacks and the configuration source into a RunConfig.

    Raises:
        ConfigError: If no configuration source is given or it fails validation
    """
    config_path = args.config or (None if args.preset else _env("CONFIG"))
    preset = args.preset or (None if args.config else _env("PRESET"))
    if config_path:
        config = load_config(config_path)
    elif preset:
        config = get_preset(preset)
    else:
        raise ConfigError("give --config or --preset (or MDIQKD_CONFIG / MDIQKD_PRESET)", "cli")

    n_max = args.n_max if args.n_max is not None else _env_int("N_MAX")
    threads = args.threads if args.threads is not None else _env_int("THREADS")
    overrides: Dict[str, Any] = {}
    if n_max is not None:
        overrides["n_max"] = n_max
    if threads is not None:
        overrides["threads"] = threads
    if overrides:
        config = replace(config, **overrides)
    return config


def curve_rows(points: List[SweepPoint]) -> List[List[Any]]:
    """CSV rows of one swept curve; infeasible distances report a zero rate."""
    rows = []
    for point in points:
        if point.optimum is None:
            rows.append([point.distance, 0.0, None, None, None, None, None, None, False])
            continue
        evaluation = point.optimum.evaluation
        result = point.optimum.result
        bounds = result.bounds
        rows.append(
            [
                point.distance,
                result.rate,
                result.branch.value,
                result.alpha_star,
                bounds.y11_lower if bounds is not None else None,
                bounds.e11_upper if bounds is not None else None,
                evaluation.q_z,
                evaluation.e_z,
                True,
            ]
        )
    return rows


def photon_statistics_rows(
    stats: PhotonStatisticsConfig, hardware: SourceHardware, n_max: int
) -> List[List[Any]]:
    """Photon-number probabilities of the heralded SPDC source next to a coherent source."""
    src = SourceSetting(
        mu=stats.spdc_mu,
        eta_trigger=hardware.eta_trigger,
        dark=hardware.dark,
        p_cor=stats.spdc_p_cor,
    )
    size = max(n_max, max(stats.n_values))
    heralded = PhotonNumberDistribution.heralded(src, size)
    triggered = PhotonNumberDistribution.triggered(src, size)
    non_triggered = PhotonNumberDistribution.non_triggered(src, size)
    thermal = PhotonNumberDistribution.thermal(stats.spdc_mu, size)
    poisson = PhotonNumberDistribution.poisson(stats.poisson_mu, size)
    return [
        [
            n,
            heralded.probability(n),
            triggered.probability(n),
            non_triggered.probability(n),
            thermal.probability(n),
            poisson.probability(n),
        ]
        for n in stats.n_values
    ]


def _max_tail_bound(config: RunConfig) -> float:
    bound = 0.0
    for curve, spec in config.sweep_specs():
        for candidate in spec.search_space.candidates(curve.protocol):
            for level in Level:
                if level is Level.DECOY and candidate.decoy_a is None:
                    continue
                src = candidate.source(Side.A, level)
                pnd = PhotonNumberDistribution.heralded(src, config.n_max)
                bound = max(bound, pnd.tail_bound())
    return bound


def verify(config: RunConfig) -> VerificationReport:
    """Run the invariant self-checks for the configurations of a run."""
    configs = []
    for curve, spec in config.sweep_specs():
        configs.extend(spec.search_space.candidates(curve.protocol)[:1])
    return run_verification(
        configs,
        relay=config.relay,
        n_max=config.n_max,
        samples=config.verify_samples,
        seed=config.seed,
        loss_coeff=config.loss_coeff,
        hardware_eta=config.hardware.eta_trigger,
        hardware_dark=config.hardware.dark,
    )


def run(
    config: RunConfig, out_dir: Path, verify_invariants: bool = False
) -> Dict[str, Any]:
    """
    Compute every curve of a run and write its CSVs and manifest.

    Args:
        config: Resolved run configuration
        out_dir: Output directory, created if missing
        verify_invariants: Also run the invariant self-checks

    Returns:
        The manifest written to ``manifest.json``
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    optimizer = SweepOptimizer(
        relay=config.relay, options=config.evaluation_options(), num_threads=config.threads
    )

    curves: Dict[str, Any] = {}
    for curve, spec in config.sweep_specs():
        logger.info(f"Sweeping curve {curve.name} ({curve.protocol.value})")
        points = optimizer.sweep(spec)
        path = write_csv(out_dir / f"{curve.name}.csv", CURVE_COLUMNS, curve_rows(points))
        logger.info(f"Wrote {path}")
        feasible = [p.distance for p in points if p.feasible]
        curves[curve.name] = {
            "file": path.name,
            "protocol": curve.protocol.value,
            "points": len(points),
            "feasible_points": len(feasible),
            "max_feasible_distance_km": max(feasible) if feasible else None,
        }

    photon_file = None
    if config.photon_statistics is not None:
        rows = photon_statistics_rows(config.photon_statistics, config.hardware, config.n_max)
        path = write_csv(out_dir / "photon_statistics.csv", PHOTON_COLUMNS, rows)
        logger.info(f"Wrote {path}")
        photon_file = path.name

    report = verify(config) if verify_invariants else None
    oracle_summary = None
    if report is not None:
        oracle = report.result("oracle_equivalence")
        oracle_summary = {
            "worst_relative_residual": oracle.worst_residual,
            "max_imaginary_residual": oracle.extras.get("max_imaginary_residual"),
            "max_tail_bound": oracle.extras.get("max_tail_bound"),
        }

    manifest = {
        "name": config.name,
        "version": __version__,
        "preset": config.preset,
        "config": config.to_dict(),
        "truncation": {"n_max": config.n_max, "max_tail_bound": _max_tail_bound(config)},
        "curves": curves,
        "unavailable_curves": config.unavailable_curves,
        "photon_statistics": photon_file,
        "oracle": oracle_summary,
        "verification": report.to_dict() if report is not None else None,
    }
    path = write_json(out_dir / "manifest.json", manifest)
    logger.info(f"Wrote {path}")
    return manifest


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or _env("LOG_LEVEL", "INFO"))

    if args.schema:
        sys.stdout.write(json.dumps(CONFIG_SCHEMA, indent=2, sort_keys=True) + "\n")
        return EXIT_OK

    verify_invariants = args.verify
    if verify_invariants is None:
        verify_invariants = (_env("VERIFY") or "").lower() in _TRUE
    try:
        config = resolve_config(args)
    except ConfigError as e:
        logger.error(f"configuration error: {e.describe()}")
        return EXIT_CONFIG

    out_dir = Path(args.out or _env("OUT") or "results")
    try:
        manifest = run(config, out_dir, verify_invariants)
    except ConfigError as e:
        logger.error(f"configuration error: {e.describe()}")
        return EXIT_CONFIG
    except SimulationError as e:
        logger.error(f"computation failed: {e.describe()}")
        return EXIT_COMPUTATION

    verification = manifest["verification"]
    if verification is not None and not verification["passed"]:
        failed = [name for name, r in verification["families"].items() if not r["passed"]]
        logger.error(f"verification failed: {', '.join(failed)}")
        return EXIT_COMPUTATION
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
