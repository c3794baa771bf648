"""Protocol configurations: intensity roles, source hardware and per-slot distributions."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

from mdiqkd.exceptions import ParameterValidationError
from mdiqkd.relay import Side
from mdiqkd.sources import (
    DEFAULT_N_MAX,
    DistributionFamily,
    PhotonNumberDistribution,
    SourceSetting,
)


class Protocol(Enum):
    """Decoy-state protocol."""

    INFINITE = "infinite"  # single-photon contributions known exactly
    ACTIVE3 = "active3"  # actively switched decoy, signal and vacuum
    PASSIVE2 = "passive2"  # one intensity, split by the local trigger outcome
    MODIFIED_PASSIVE3 = "modified_passive3"  # two intensities and both trigger classes

    @property
    def requires_decoy(self) -> bool:
        return self in (Protocol.ACTIVE3, Protocol.MODIFIED_PASSIVE3)


class Level(Enum):
    """Intensity role of a pulse."""

    DECOY = "decoy"  # mu
    SIGNAL = "signal"  # mu'


@dataclass(frozen=True)
class IntensitySetting:
    """Mean photon number paired with its measured pair-correlation probability."""

    mu: float
    p_cor: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.mu) or self.mu < 0:
            raise ParameterValidationError(
                f"mu must be finite and >= 0, got {self.mu}", "protocol.IntensitySetting"
            )
        if not 0.0 <= self.p_cor <= 1.0:
            raise ParameterValidationError(
                f"p_cor must lie in [0, 1], got {self.p_cor}", "protocol.IntensitySetting"
            )


@dataclass(frozen=True)
class SourceHardware:
    """Heralding detector of one sender."""

    eta_trigger: float = 0.4
    dark: float = 5e-5

    def __post_init__(self):
        if not 0.0 <= self.eta_trigger <= 1.0:
            raise ParameterValidationError(
                f"eta_trigger must lie in [0, 1], got {self.eta_trigger}",
                "protocol.SourceHardware",
            )
        if not 0.0 <= self.dark < 1.0:
            raise ParameterValidationError(
                f"dark must lie in [0, 1), got {self.dark}", "protocol.SourceHardware"
            )


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Intensities and hardware of both senders for one protocol.

    Attributes:
        protocol: Decoy-state protocol
        signal_a: Alice's signal intensity mu'_A
        signal_b: Bob's signal intensity mu'_B
        decoy_a: Alice's decoy intensity mu_A, required by the three-intensity protocols
        decoy_b: Bob's decoy intensity mu_B
        hardware_a: Alice's heralding detector
        hardware_b: Bob's heralding detector
    """

    protocol: Protocol
    signal_a: IntensitySetting
    signal_b: IntensitySetting
    decoy_a: Optional[IntensitySetting] = None
    decoy_b: Optional[IntensitySetting] = None
    hardware_a: SourceHardware = field(default_factory=SourceHardware)
    hardware_b: SourceHardware = field(default_factory=SourceHardware)

    def __post_init__(self):
        operation = "protocol.ProtocolConfig"
        if (self.decoy_a is None) != (self.decoy_b is None):
            raise ParameterValidationError(
                "decoy intensities must be given for both senders", operation
            )
        if self.protocol.requires_decoy and self.decoy_a is None:
            raise ParameterValidationError(
                f"{self.protocol.value} requires decoy intensities", operation
            )
        if self.decoy_a is None:
            return
        for side, signal, decoy in (
            ("A", self.signal_a, self.decoy_a),
            ("B", self.signal_b, self.decoy_b),
        ):
            if not signal.mu > decoy.mu > 0:
                raise ParameterValidationError(
                    f"side {side} needs signal > decoy > 0, got {signal.mu} and {decoy.mu}",
                    operation,
                )

    @classmethod
    def symmetric(
        cls,
        protocol: Protocol,
        signal: IntensitySetting,
        decoy: Optional[IntensitySetting] = None,
        hardware: Optional[SourceHardware] = None,
    ) -> "ProtocolConfig":
        """Both senders use the same intensities and hardware."""
        hardware = hardware or SourceHardware()
        return cls(
            protocol=protocol,
            signal_a=signal,
            signal_b=signal,
            decoy_a=decoy,
            decoy_b=decoy,
            hardware_a=hardware,
            hardware_b=hardware,
        )

    def intensity(self, side: Side, level: Level) -> IntensitySetting:
        """Intensity setting of one sender at one level."""
        if level is Level.SIGNAL:
            return self.signal_a if side is Side.A else self.signal_b
        setting = self.decoy_a if side is Side.A else self.decoy_b
        if setting is None:
            raise ParameterValidationError(
                f"{self.protocol.value} configuration has no decoy intensity",
                "protocol.ProtocolConfig.intensity",
            )
        return setting

    def source(self, side: Side, level: Level) -> SourceSetting:
        """Full source setting of one sender at one level."""
        setting = self.intensity(side, level)
        hardware = self.hardware_a if side is Side.A else self.hardware_b
        return SourceSetting(
            mu=setting.mu,
            eta_trigger=hardware.eta_trigger,
            dark=hardware.dark,
            p_cor=setting.p_cor,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data form for run manifests."""

        def intensity(setting: Optional[IntensitySetting]) -> Optional[Dict[str, float]]:
            if setting is None:
                return None
            return {"mu": setting.mu, "p_cor": setting.p_cor}

        def hardware(value: SourceHardware) -> Dict[str, float]:
            return {"eta_trigger": value.eta_trigger, "dark": value.dark}

        return {
            "protocol": self.protocol.value,
            "signal_a": intensity(self.signal_a),
            "signal_b": intensity(self.signal_b),
            "decoy_a": intensity(self.decoy_a),
            "decoy_b": intensity(self.decoy_b),
            "hardware_a": hardware(self.hardware_a),
            "hardware_b": hardware(self.hardware_b),
        }


@dataclass(frozen=True)
class IntensityDistributions:
    """Photon-number distributions of one family at every intensity slot."""

    signal_a: PhotonNumberDistribution
    signal_b: PhotonNumberDistribution
    decoy_a: Optional[PhotonNumberDistribution] = None
    decoy_b: Optional[PhotonNumberDistribution] = None

    @classmethod
    def for_family(
        cls,
        config: ProtocolConfig,
        family: DistributionFamily,
        n_max: int = DEFAULT_N_MAX,
    ) -> "IntensityDistributions":
        """
        Build the distributions of one family for every slot a configuration defines.

        Args:
            config: Protocol configuration
            family: HERALDED, TRIGGERED or NON_TRIGGERED
            n_max: Truncation index

        Returns:
            IntensityDistributions
        """

        def build(side: Side, level: Level) -> PhotonNumberDistribution:
            return PhotonNumberDistribution(family, config.source(side, level), n_max)

        has_decoy = config.decoy_a is not None
        return cls(
            signal_a=build(Side.A, Level.SIGNAL),
            signal_b=build(Side.B, Level.SIGNAL),
            decoy_a=build(Side.A, Level.DECOY) if has_decoy else None,
            decoy_b=build(Side.B, Level.DECOY) if has_decoy else None,
        )

    def at(self, side: Side, level: Level) -> PhotonNumberDistribution:
        """Distribution of one sender at one level."""
        if level is Level.SIGNAL:
            return self.signal_a if side is Side.A else self.signal_b
        pnd = self.decoy_a if side is Side.A else self.decoy_b
        if pnd is None:
            raise ParameterValidationError(
                "no decoy distribution available", "protocol.IntensityDistributions.at"
            )
        return pnd
