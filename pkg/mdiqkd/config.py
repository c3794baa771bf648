"""
Run configuration: JSON documents, named presets and their schema.

A run is a set of key-rate curves over a shared distance grid, optionally with a
photon-statistics table. ``from_dict`` validates a JSON document and ``get_preset``
builds the bundled configurations.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from mdiqkd.exceptions import ConfigError, SimulationError
from mdiqkd.finite_size import BarAssignment, FluctuationParams
from mdiqkd.gains import Basis
from mdiqkd.keyrate import RateFormula
from mdiqkd.pipeline import EvaluationOptions
from mdiqkd.protocol import Level, Protocol, SourceHardware
from mdiqkd.relay import ClosedFormVariant, MisalignmentReading, RelayParams
from mdiqkd.sources import DEFAULT_N_MAX
from mdiqkd.sweep import IntensityAxis, SearchSpace, SweepSpec

logger = logging.getLogger(__name__)

DEFAULT_DISTANCES = tuple(float(d) for d in range(0, 151, 10))

# measured (mu, p_cor) pairs of the bundled presets
HERALDED_OPTIMUM = (1.425e-3, 0.405844)
ACTIVE_DECOY = (0.577e-3, 0.432837)
MODIFIED_DECOY = (0.147577, 0.12)
MODIFIED_SIGNAL = (0.623927, 0.1)
PASSIVE_SIGNAL = (0.79, 0.1)

# curves of a preset that this package does not compute, with the reason
UNAVAILABLE_CURVES: Dict[str, Dict[str, str]] = {
    "source-comparison": {
        "infinite_wcs": "weak coherent source key rates are not built",
        "active3_wcs": "weak coherent source key rates are not built",
    },
}


@dataclass(frozen=True)
class CurveConfig:
    """
    One key-rate curve of a run.

    Attributes:
        name: Curve name, used for the CSV file name
        protocol: Decoy-state protocol
        signal: Signal intensity axis
        decoy: Decoy intensity axis, for the three-intensity protocols
        fluctuation: Finite-size parameters, modified passive protocol only
    """

    name: str
    protocol: Protocol
    signal: IntensityAxis
    decoy: Optional[IntensityAxis] = None
    fluctuation: Optional[FluctuationParams] = None

    def __post_init__(self):
        if not self.name or any(c in self.name for c in "/\\"):
            raise ConfigError(f"invalid curve name {self.name!r}", "config.CurveConfig")
        if self.protocol.requires_decoy and self.decoy is None:
            raise ConfigError(
                f"curve {self.name!r}: {self.protocol.value} needs a decoy axis",
                "config.CurveConfig",
            )
        if self.fluctuation is not None and self.protocol is not Protocol.MODIFIED_PASSIVE3:
            raise ConfigError(
                f"curve {self.name!r}: finite-size parameters need modified_passive3",
                "config.CurveConfig",
            )

    def sweep_spec(
        self,
        distances: Tuple[float, ...],
        hardware: SourceHardware,
        refinement_passes: int = 2,
        shrink_factor: float = 5.0,
    ) -> SweepSpec:
        """Sweep specification of this curve over a distance grid."""
        return SweepSpec(
            distances=distances,
            protocol=self.protocol,
            search_space=SearchSpace(signal=self.signal, decoy=self.decoy, hardware=hardware),
            fluctuation=self.fluctuation,
            refinement_passes=refinement_passes,
            shrink_factor=shrink_factor,
        )


@dataclass(frozen=True)
class PhotonStatisticsConfig:
    """Photon-number table comparing a heralded SPDC source with a coherent source."""

    spdc_mu: float = HERALDED_OPTIMUM[0]
    spdc_p_cor: float = HERALDED_OPTIMUM[1]
    poisson_mu: float = 0.5
    n_values: Tuple[int, ...] = tuple(range(11))

    def __post_init__(self):
        if not self.n_values or min(self.n_values) < 0:
            raise ConfigError("n_values must be nonempty and >= 0", "config.PhotonStatisticsConfig")


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved configuration of one run.

    Attributes:
        name: Run name
        distances: Total sender-to-sender distances in km
        relay: Relay parameters
        loss_coeff: Fiber attenuation in dB/km
        hardware: Heralding detector shared by both senders
        curves: Key-rate curves to compute
        photon_statistics: Optional photon-number table
        n_max: Truncation index
        threads: Worker threads for candidate evaluation
        options: Evaluation options; n_max and loss_coeff are taken from this config
        refinement_passes: Optimizer refinement passes
        shrink_factor: Optimizer span reduction per pass
        verify_samples: Random parameter sets checked by the oracle verification
        seed: Seed of the verification parameter grid
        preset: Name of the preset this config came from, if any
    """

    name: str = "run"
    distances: Tuple[float, ...] = DEFAULT_DISTANCES
    relay: RelayParams = field(default_factory=RelayParams)
    loss_coeff: float = 0.2
    hardware: SourceHardware = field(default_factory=SourceHardware)
    curves: Tuple[CurveConfig, ...] = ()
    photon_statistics: Optional[PhotonStatisticsConfig] = None
    n_max: int = DEFAULT_N_MAX
    threads: int = 1
    options: EvaluationOptions = field(default_factory=EvaluationOptions)
    refinement_passes: int = 2
    shrink_factor: float = 5.0
    verify_samples: int = 100
    seed: int = 20140101
    preset: Optional[str] = None

    def __post_init__(self):
        operation = "config.RunConfig"
        if not self.curves and self.photon_statistics is None:
            raise ConfigError("configuration defines no curves and no photon statistics", operation)
        if self.curves and not self.distances:
            raise ConfigError("distances: list is empty", operation)
        if any(d < 0 for d in self.distances):
            raise ConfigError("distances: values must be >= 0", operation)
        if list(self.distances) != sorted(self.distances):
            raise ConfigError("distances: values must be ascending", operation)
        names = [curve.name for curve in self.curves]
        if len(set(names)) != len(names):
            raise ConfigError(f"curves: duplicate curve names in {names}", operation)
        if self.n_max < 2:
            raise ConfigError(f"n_max: must be >= 2, got {self.n_max}", operation)
        if self.threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {self.threads}", operation)
        if self.verify_samples < 1:
            raise ConfigError("verify_samples: must be >= 1", operation)

    @property
    def unavailable_curves(self) -> Dict[str, str]:
        """Curves of this config's preset that are not computed, with the reason."""
        return dict(UNAVAILABLE_CURVES.get(self.preset or "", {}))

    def evaluation_options(self) -> EvaluationOptions:
        """Evaluation options with this config's truncation and fiber loss."""
        return replace(self.options, n_max=self.n_max, loss_coeff=self.loss_coeff)

    def sweep_specs(self) -> List[Tuple[CurveConfig, SweepSpec]]:
        return [
            (
                curve,
                curve.sweep_spec(
                    self.distances, self.hardware, self.refinement_passes, self.shrink_factor
                ),
            )
            for curve in self.curves
        ]

    def to_dict(self) -> Dict[str, Any]:
        """JSON form accepted by ``from_dict``."""
        data: Dict[str, Any] = {
            "name": self.name,
            "distances": list(self.distances),
            "relay": {
                "eta_d": self.relay.eta_d,
                "p_dark": self.relay.p_dark,
                "e_misalign": self.relay.e_misalign,
            },
            "loss_coeff": self.loss_coeff,
            "hardware": {"eta_trigger": self.hardware.eta_trigger, "dark": self.hardware.dark},
            "curves": [_curve_to_dict(curve) for curve in self.curves],
            "n_max": self.n_max,
            "threads": self.threads,
            "options": _options_to_dict(self.options),
            "search": {
                "refinement_passes": self.refinement_passes,
                "shrink_factor": self.shrink_factor,
            },
            "verify_samples": self.verify_samples,
            "seed": self.seed,
        }
        if self.photon_statistics is not None:
            stats = self.photon_statistics
            data["photon_statistics"] = {
                "spdc_mu": stats.spdc_mu,
                "spdc_p_cor": stats.spdc_p_cor,
                "poisson_mu": stats.poisson_mu,
                "n_values": list(stats.n_values),
            }
        if self.preset is not None:
            data["preset"] = self.preset
        return data


_AXIS_SCHEMA = {
    "type": "object",
    "properties": {
        "mu": {"type": "number", "minimum": 0},
        "p_cor": {"type": "number", "minimum": 0, "maximum": 1},
        "lower": {"type": "number", "minimum": 0},
        "upper": {"type": "number", "minimum": 0},
        "points": {"type": "integer", "minimum": 1},
        "log_scale": {"type": "boolean"},
        "table": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "mdiqkd run configuration",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "preset": {"type": "string"},
        "distances": {
            "oneOf": [
                {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                {
                    "type": "object",
                    "properties": {
                        "start": {"type": "number"},
                        "stop": {"type": "number"},
                        "step": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["start", "stop", "step"],
                },
            ]
        },
        "relay": {
            "type": "object",
            "properties": {
                "eta_d": {"type": "number", "minimum": 0, "maximum": 1},
                "p_dark": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "e_misalign": {"type": "number", "minimum": 0, "maximum": 0.5},
            },
            "additionalProperties": False,
        },
        "loss_coeff": {"type": "number", "minimum": 0},
        "hardware": {
            "type": "object",
            "properties": {
                "eta_trigger": {"type": "number", "minimum": 0, "maximum": 1},
                "dark": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            },
            "additionalProperties": False,
        },
        "curves": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "protocol": {"enum": [p.value for p in Protocol]},
                    "signal": _AXIS_SCHEMA,
                    "decoy": _AXIS_SCHEMA,
                    "fluctuation": {
                        "type": "object",
                        "properties": {
                            "n_alpha": {"type": "number", "minimum": 0},
                            "n_pulses": {"type": "number", "exclusiveMinimum": 0},
                            "strict": {"type": "boolean"},
                        },
                        "required": ["n_alpha", "n_pulses"],
                    },
                },
                "required": ["name", "protocol", "signal"],
            },
        },
        "photon_statistics": {
            "type": "object",
            "properties": {
                "spdc_mu": {"type": "number", "minimum": 0},
                "spdc_p_cor": {"type": "number", "minimum": 0, "maximum": 1},
                "poisson_mu": {"type": "number", "minimum": 0},
                "n_values": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
        },
        "n_max": {"type": "integer", "minimum": 2},
        "threads": {"type": "integer", "minimum": 1},
        "options": {
            "type": "object",
            "properties": {
                "variant": {"enum": [v.value for v in ClosedFormVariant]},
                "reading": {"enum": [r.value for r in MisalignmentReading]},
                "formula": {"enum": [f.value for f in RateFormula]},
                "f": {"type": "number", "minimum": 1},
                "alpha_points": {"type": "integer", "minimum": 1},
                "fold_detector_efficiency": {"type": "boolean"},
                "vacuum_basis": {"enum": [b.value for b in Basis]},
                "triggered_credit_level": {"enum": [lv.value for lv in Level]},
                "bars": {"enum": [b.value for b in BarAssignment]},
            },
            "additionalProperties": False,
        },
        "search": {
            "type": "object",
            "properties": {
                "refinement_passes": {"type": "integer", "minimum": 0},
                "shrink_factor": {"type": "number", "exclusiveMinimum": 1},
            },
        },
        "verify_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
    },
    "additionalProperties": False,
}

_TOP_LEVEL_KEYS = set(CONFIG_SCHEMA["properties"])


def _axis_to_dict(axis: IntensityAxis) -> Dict[str, Any]:
    if axis.table is not None:
        return {"table": [list(row) for row in axis.table]}
    if axis.points == 1 or axis.lower == axis.upper:
        return {"mu": axis.lower, "p_cor": axis.p_cor}
    return {
        "lower": axis.lower,
        "upper": axis.upper,
        "points": axis.points,
        "p_cor": axis.p_cor,
        "log_scale": axis.log_scale,
    }


def _curve_to_dict(curve: CurveConfig) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "name": curve.name,
        "protocol": curve.protocol.value,
        "signal": _axis_to_dict(curve.signal),
    }
    if curve.decoy is not None:
        data["decoy"] = _axis_to_dict(curve.decoy)
    if curve.fluctuation is not None:
        data["fluctuation"] = {
            "n_alpha": curve.fluctuation.n_alpha,
            "n_pulses": curve.fluctuation.n_pulses,
            "strict": curve.fluctuation.strict,
        }
    return data


def _options_to_dict(options: EvaluationOptions) -> Dict[str, Any]:
    return {
        "variant": options.variant.value,
        "reading": options.reading.value,
        "formula": options.formula.value,
        "f": options.f if not callable(options.f) else None,
        "alpha_points": options.alpha_points,
        "fold_detector_efficiency": options.fold_detector_efficiency,
        "vacuum_basis": options.vacuum_basis.value,
        "triggered_credit_level": options.triggered_credit_level.value,
        "bars": options.bars.value,
    }


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    value = data.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected an object", "config.from_dict")
    return value


def _parse_axis(data: Any, key: str) -> IntensityAxis:
    if not isinstance(data, dict):
        raise ConfigError(f"{key}: expected an object", "config.from_dict")
    unknown = set(data) - set(_AXIS_SCHEMA["properties"])
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}", "config.from_dict")
    if "table" in data:
        return IntensityAxis.from_table([tuple(row) for row in data["table"]])
    p_cor = float(data.get("p_cor", 1.0))
    if "mu" in data:
        return IntensityAxis.fixed(float(data["mu"]), p_cor)
    if "lower" not in data or "upper" not in data:
        raise ConfigError(f"{key}: give mu, lower/upper or table", "config.from_dict")
    return IntensityAxis(
        lower=float(data["lower"]),
        upper=float(data["upper"]),
        points=int(data.get("points", 25)),
        p_cor=p_cor,
        log_scale=bool(data.get("log_scale", True)),
    )


def _parse_distances(value: Any) -> Tuple[float, ...]:
    if isinstance(value, dict):
        start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        if step <= 0:
            raise ConfigError("distances.step: must be > 0", "config.from_dict")
        count = int(round((stop - start) / step)) + 1
        return tuple(start + i * step for i in range(max(count, 0)))
    if not isinstance(value, list):
        raise ConfigError("distances: expected a list or a range object", "config.from_dict")
    return tuple(float(d) for d in value)


def _parse_curve(
    data: Any, index: int, hardware: SourceHardware
) -> CurveConfig:
    key = f"curves[{index}]"
    if not isinstance(data, dict):
        raise ConfigError(f"{key}: expected an object", "config.from_dict")
    for required in ("name", "protocol", "signal"):
        if required not in data:
            raise ConfigError(f"{key}.{required}: missing", "config.from_dict")
    try:
        protocol = Protocol(data["protocol"])
    except ValueError:
        raise ConfigError(
            f"{key}.protocol: unknown protocol {data['protocol']!r}", "config.from_dict"
        ) from None
    fluctuation = None
    if data.get("fluctuation") is not None:
        fl = data["fluctuation"]
        fluctuation = FluctuationParams(
            n_alpha=float(fl["n_alpha"]),
            n_pulses=float(fl["n_pulses"]),
            eta_a=hardware.eta_trigger,
            eta_b=hardware.eta_trigger,
            dark_a=hardware.dark,
            dark_b=hardware.dark,
            strict=bool(fl.get("strict", False)),
        )
    decoy = _parse_axis(data["decoy"], f"{key}.decoy") if data.get("decoy") else None
    return CurveConfig(
        name=str(data["name"]),
        protocol=protocol,
        signal=_parse_axis(data["signal"], f"{key}.signal"),
        decoy=decoy,
        fluctuation=fluctuation,
    )


def _parse_options(data: Dict[str, Any]) -> EvaluationOptions:
    defaults = EvaluationOptions()
    return EvaluationOptions(
        variant=ClosedFormVariant(data.get("variant", defaults.variant.value)),
        reading=MisalignmentReading(data.get("reading", defaults.reading.value)),
        formula=RateFormula(data.get("formula", defaults.formula.value)),
        f=float(data["f"]) if data.get("f") is not None else defaults.f,
        alpha_points=int(data.get("alpha_points", defaults.alpha_points)),
        fold_detector_efficiency=bool(
            data.get("fold_detector_efficiency", defaults.fold_detector_efficiency)
        ),
        vacuum_basis=Basis(data.get("vacuum_basis", defaults.vacuum_basis.value)),
        triggered_credit_level=Level(
            data.get("triggered_credit_level", defaults.triggered_credit_level.value)
        ),
        bars=BarAssignment(data.get("bars", defaults.bars.value)),
    )


def from_dict(data: Dict[str, Any]) -> RunConfig:
    """
    Build and validate a RunConfig from its JSON form.

    A ``preset`` key starts from that preset; every other key overrides it.

    Args:
        data: Parsed JSON document

    Returns:
        RunConfig

    Raises:
        ConfigError: If any key is missing, unknown or out of range
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", "config.from_dict")
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "config.from_dict")
    if "preset" in data:
        merged = get_preset(str(data["preset"])).to_dict()
        merged.update(data)
        merged["preset"] = resolve_preset_name(str(data["preset"]))
        data = merged

    current = "configuration"
    try:
        current = "relay"
        relay_data = _section(data, "relay")
        relay = RelayParams(**{k: float(v) for k, v in relay_data.items()})
        current = "hardware"
        hardware = SourceHardware(**{k: float(v) for k, v in _section(data, "hardware").items()})
        current = "distances"
        distances = _parse_distances(data.get("distances", list(DEFAULT_DISTANCES)))
        current = "curves"
        raw_curves = data.get("curves", [])
        if not isinstance(raw_curves, list):
            raise ConfigError("curves: expected a list", "config.from_dict")
        curves = tuple(_parse_curve(c, i, hardware) for i, c in enumerate(raw_curves))
        current = "photon_statistics"
        stats = None
        if data.get("photon_statistics") is not None:
            stats_data = _section(data, "photon_statistics")
            stats = PhotonStatisticsConfig(
                spdc_mu=float(stats_data.get("spdc_mu", HERALDED_OPTIMUM[0])),
                spdc_p_cor=float(stats_data.get("spdc_p_cor", HERALDED_OPTIMUM[1])),
                poisson_mu=float(stats_data.get("poisson_mu", 0.5)),
                n_values=tuple(int(n) for n in stats_data.get("n_values", range(11))),
            )
        current = "options"
        options = _parse_options(_section(data, "options"))
        current = "search"
        search = _section(data, "search")
        current = "configuration"
        return RunConfig(
            name=str(data.get("name", "run")),
            distances=distances,
            relay=relay,
            loss_coeff=float(data.get("loss_coeff", 0.2)),
            hardware=hardware,
            curves=curves,
            photon_statistics=stats,
            n_max=int(data.get("n_max", DEFAULT_N_MAX)),
            threads=int(data.get("threads", 1)),
            options=options,
            refinement_passes=int(search.get("refinement_passes", 2)),
            shrink_factor=float(search.get("shrink_factor", 5.0)),
            verify_samples=int(data.get("verify_samples", 100)),
            seed=int(data.get("seed", 20140101)),
            preset=data.get("preset"),
        )
    except ConfigError:
        raise
    except SimulationError as e:
        raise ConfigError(f"{current}: {e.message}", "config.from_dict") from e
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{current}: {e}", "config.from_dict") from e


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Load a RunConfig from a JSON file.

    Raises:
        ConfigError: If the file cannot be read or fails validation
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}", "config.load_config") from e
    logger.debug(f"Loaded configuration from {path}")
    return from_dict(data)


def _fixed(setting: Tuple[float, float]) -> IntensityAxis:
    return IntensityAxis.fixed(*setting)


def _modified_curve(name: str, fluctuation: Optional[FluctuationParams] = None) -> CurveConfig:
    return CurveConfig(
        name=name,
        protocol=Protocol.MODIFIED_PASSIVE3,
        signal=_fixed(MODIFIED_SIGNAL),
        decoy=_fixed(MODIFIED_DECOY),
        fluctuation=fluctuation,
    )


def _source_comparison() -> RunConfig:
    return RunConfig(
        name="source-comparison",
        curves=(
            CurveConfig(
                name="infinite_spdc",
                protocol=Protocol.INFINITE,
                signal=IntensityAxis(
                    lower=1e-4, upper=1.0, points=25, p_cor=HERALDED_OPTIMUM[1], log_scale=True
                ),
            ),
            _modified_curve("modified_passive3"),
        ),
        preset="source-comparison",
    )


def _photon_statistics() -> RunConfig:
    return RunConfig(
        name="photon-statistics",
        distances=(),
        photon_statistics=PhotonStatisticsConfig(),
        preset="photon-statistics",
    )


def _protocol_comparison() -> RunConfig:
    return RunConfig(
        name="protocol-comparison",
        curves=(
            CurveConfig("infinite", Protocol.INFINITE, _fixed(HERALDED_OPTIMUM)),
            _modified_curve("modified_passive3"),
            CurveConfig(
                "active3", Protocol.ACTIVE3, _fixed(HERALDED_OPTIMUM), _fixed(ACTIVE_DECOY)
            ),
            CurveConfig("passive2", Protocol.PASSIVE2, _fixed(PASSIVE_SIGNAL)),
        ),
        preset="protocol-comparison",
    )


def _finite_size() -> RunConfig:
    hardware = SourceHardware()
    curves = [_modified_curve("asymptotic")]
    for exponent in (9, 10, 11, 13):
        curves.append(
            _modified_curve(
                f"n_1e{exponent}",
                FluctuationParams(
                    n_alpha=5.0,
                    n_pulses=10.0**exponent,
                    eta_a=hardware.eta_trigger,
                    eta_b=hardware.eta_trigger,
                    dark_a=hardware.dark,
                    dark_b=hardware.dark,
                ),
            )
        )
    return RunConfig(name="finite-size", curves=tuple(curves), preset="finite-size")


PRESETS = {
    "source-comparison": _source_comparison,
    "photon-statistics": _photon_statistics,
    "protocol-comparison": _protocol_comparison,
    "finite-size": _finite_size,
}

PRESET_ALIASES = {
    "fig2": "source-comparison",
    "fig3": "photon-statistics",
    "fig4": "protocol-comparison",
    "fig5": "finite-size",
}


def resolve_preset_name(name: str) -> str:
    """Map an alias to its preset name."""
    resolved = PRESET_ALIASES.get(name, name)
    if resolved not in PRESETS:
        known = sorted(PRESETS) + sorted(PRESET_ALIASES)
        raise ConfigError(
            f"unknown preset {name!r}; known: {', '.join(known)}", "config.get_preset"
        )
    return resolved


def get_preset(name: str) -> RunConfig:
    """
    Build a bundled configuration by name or alias.

    Raises:
        ConfigError: If the name is unknown
    """
    return PRESETS[resolve_preset_name(name)]()
