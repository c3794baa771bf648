"""
SPDC MDI-QKD Simulation Library

Asymptotic and finite-size key rates of measurement-device-independent quantum key
distribution with heralded spontaneous parametric down-conversion sources, under active,
passive and modified passive decoy-state estimation.
"""

from mdiqkd.config import RunConfig, CurveConfig, PhotonStatisticsConfig, get_preset, load_config
from mdiqkd.estimators import (
    DecoyBounds,
    active3_bounds,
    infinite_decoy_bounds,
    modified_passive3_bounds,
    passive2_bounds,
)
from mdiqkd.exceptions import (
    ConfigError,
    DegenerateDenominator,
    DomainExceeded,
    NoFeasibleConfig,
    PreconditionViolated,
    SimulationError,
)
from mdiqkd.finite_size import FluctuationParams, finite_modified_passive_bounds
from mdiqkd.gains import GainTable, build_gain_table
from mdiqkd.keyrate import KeyRateResult, binary_entropy
from mdiqkd.pipeline import EvaluationOptions, ProtocolEvaluation, evaluate_protocol
from mdiqkd.protocol import IntensitySetting, Protocol, ProtocolConfig, SourceHardware
from mdiqkd.relay import ChannelParams, RelayParams
from mdiqkd.sources import PhotonNumberDistribution, SourceSetting
from mdiqkd.sweep import IntensityAxis, SearchSpace, SweepOptimizer, SweepSpec
from mdiqkd.verification import VerificationReport, run_verification

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "CurveConfig",
    "PhotonStatisticsConfig",
    "get_preset",
    "load_config",
    "DecoyBounds",
    "active3_bounds",
    "infinite_decoy_bounds",
    "modified_passive3_bounds",
    "passive2_bounds",
    "ConfigError",
    "DegenerateDenominator",
    "DomainExceeded",
    "NoFeasibleConfig",
    "PreconditionViolated",
    "SimulationError",
    "FluctuationParams",
    "finite_modified_passive_bounds",
    "GainTable",
    "build_gain_table",
    "KeyRateResult",
    "binary_entropy",
    "EvaluationOptions",
    "ProtocolEvaluation",
    "evaluate_protocol",
    "IntensitySetting",
    "Protocol",
    "ProtocolConfig",
    "SourceHardware",
    "ChannelParams",
    "RelayParams",
    "PhotonNumberDistribution",
    "SourceSetting",
    "IntensityAxis",
    "SearchSpace",
    "SweepOptimizer",
    "SweepSpec",
    "VerificationReport",
    "run_verification",
]
