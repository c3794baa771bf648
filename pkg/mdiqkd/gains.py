"""Gain and QBER tables consumed by the decoy-state estimators."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Tuple

from mdiqkd.exceptions import ParameterValidationError
from mdiqkd.protocol import Level, Protocol, ProtocolConfig
from mdiqkd.relay import (
    ChannelParams,
    ClickProbabilities,
    ClosedFormVariant,
    EventClass,
    MisalignmentReading,
    RelayParams,
    Side,
    apply_misalignment,
    click_probs_signal_signal,
    click_probs_vacuum_signal,
    gain_from_clicks,
    intrinsic_error_gain,
    z_basis_gain,
    z_basis_gain_vacuum_signal,
)
from mdiqkd.sources import SourceSetting, heralded_prob, non_triggered_prob, triggered_prob

logger = logging.getLogger(__name__)


class Basis(Enum):
    """Measurement basis."""

    X = "X"  # phase basis, used for error estimation
    Z = "Z"  # key basis


class Pairing(Enum):
    """Which senders emit a nonvacuum pulse."""

    BOTH = "mu_mu"
    A_ONLY = "mu_0"
    B_ONLY = "0_mu"
    NEITHER = "0_0"


GainKey = Tuple[Basis, EventClass, Level, Pairing]

# (class, level) blocks each protocol reads from its table.
REQUIRED_BLOCKS: Dict[Protocol, Tuple[Tuple[EventClass, Level], ...]] = {
    Protocol.INFINITE: ((EventClass.PLAIN, Level.SIGNAL),),
    Protocol.ACTIVE3: ((EventClass.PLAIN, Level.DECOY), (EventClass.PLAIN, Level.SIGNAL)),
    Protocol.PASSIVE2: (
        (EventClass.TRIGGERED, Level.SIGNAL),
        (EventClass.NON_TRIGGERED, Level.SIGNAL),
    ),
    Protocol.MODIFIED_PASSIVE3: (
        (EventClass.TRIGGERED, Level.DECOY),
        (EventClass.TRIGGERED, Level.SIGNAL),
        (EventClass.NON_TRIGGERED, Level.SIGNAL),
    ),
}


@dataclass(frozen=True)
class GainEntry:
    """Overall gain and QBER of one intensity pairing."""

    gain: float
    qber: float

    @property
    def error_gain(self) -> float:
        return self.gain * self.qber


@dataclass
class GainTable:
    """
    Gains and QBERs keyed by basis, event class, intensity level and pairing.

    Attributes:
        distance: Total sender-to-sender distance in km
        y00: Background yield p_d^2 (two detectors must click)
        e00: Error rate of background counts
        entries: Table entries
    """

    distance: float
    y00: float
    e00: float = 0.5
    entries: Dict[GainKey, GainEntry] = field(default_factory=dict)

    def add(
        self,
        basis: Basis,
        event_class: EventClass,
        level: Level,
        pairing: Pairing,
        entry: GainEntry,
    ) -> None:
        """
        Store one entry.

        Raises:
            ParameterValidationError: If the gain or QBER lies outside [0, 1]
        """
        if not 0.0 <= entry.gain <= 1.0 or not 0.0 <= entry.qber <= 1.0:
            raise ParameterValidationError(
                f"gain table entry out of range: Q={entry.gain}, E={entry.qber}",
                "gains.GainTable.add",
            )
        self.entries[(basis, event_class, level, pairing)] = entry

    def entry(
        self, basis: Basis, event_class: EventClass, level: Level, pairing: Pairing
    ) -> GainEntry:
        key = (basis, event_class, level, pairing)
        if key not in self.entries:
            raise KeyError(
                f"gain table has no {basis.value}/{event_class.value}/{level.value}/"
                f"{pairing.value} entry"
            )
        return self.entries[key]

    def gain(self, basis: Basis, event_class: EventClass, level: Level, pairing: Pairing) -> float:
        return self.entry(basis, event_class, level, pairing).gain

    def qber(self, basis: Basis, event_class: EventClass, level: Level, pairing: Pairing) -> float:
        return self.entry(basis, event_class, level, pairing).qber

    def error_gain(
        self, basis: Basis, event_class: EventClass, level: Level, pairing: Pairing
    ) -> float:
        return self.entry(basis, event_class, level, pairing).error_gain

    def __len__(self) -> int:
        return len(self.entries)

    def to_rows(self) -> List[Dict[str, Any]]:
        """Entries as plain dictionaries, in a stable order."""
        rows = []
        for (basis, event_class, level, pairing), entry in sorted(
            self.entries.items(),
            key=lambda item: tuple(part.value for part in item[0]),
        ):
            rows.append(
                {
                    "basis": basis.value,
                    "class": event_class.value,
                    "level": level.value,
                    "pairing": pairing.value,
                    "gain": entry.gain,
                    "qber": entry.qber,
                }
            )
        return rows


def class_vacuum_probability(src: SourceSetting, event_class: EventClass) -> float:
    """Probability P_0 of a vacuum emission within an event class."""
    if event_class is EventClass.PLAIN:
        return heralded_prob(src, 0)
    if event_class is EventClass.TRIGGERED:
        return triggered_prob(src, 0)
    return non_triggered_prob(src, 0)


def x_basis_entry(
    clicks: ClickProbabilities,
    relay: RelayParams,
    reading: MisalignmentReading = MisalignmentReading.LINEAR,
) -> GainEntry:
    """Gain and misalignment-corrected QBER from four click probabilities."""
    gain = gain_from_clicks(clicks)
    if gain <= 0.0:
        return GainEntry(gain=0.0, qber=relay.e_noise)
    # the coincidence error fraction cannot exceed 1 once dark counts dominate one pair
    e_prime = min(intrinsic_error_gain(clicks) / gain, 1.0)
    return GainEntry(gain=gain, qber=apply_misalignment(e_prime, gain, relay, reading))


def _fill_block(
    table: GainTable,
    src_a: SourceSetting,
    src_b: SourceSetting,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass,
    level: Level,
    variant: ClosedFormVariant,
    reading: MisalignmentReading,
) -> None:
    x_clicks = {
        Pairing.BOTH: click_probs_signal_signal(src_a, src_b, channel, relay, event_class, variant),
        Pairing.A_ONLY: click_probs_vacuum_signal(src_a, Side.B, channel, relay, event_class),
        Pairing.B_ONLY: click_probs_vacuum_signal(src_b, Side.A, channel, relay, event_class),
    }
    for pairing, clicks in x_clicks.items():
        table.add(Basis.X, event_class, level, pairing, x_basis_entry(clicks, relay, reading))

    z_gains = {
        Pairing.BOTH: z_basis_gain(src_a, src_b, channel, relay, event_class, variant),
        Pairing.A_ONLY: z_basis_gain_vacuum_signal(src_a, Side.B, channel, relay, event_class),
        Pairing.B_ONLY: z_basis_gain_vacuum_signal(src_b, Side.A, channel, relay, event_class),
    }
    for pairing, z_gain in z_gains.items():
        table.add(Basis.Z, event_class, level, pairing, GainEntry(z_gain.q_z, z_gain.e_z))

    vacuum_gain = (
        class_vacuum_probability(src_a, event_class)
        * class_vacuum_probability(src_b, event_class)
        * table.y00
    )
    for basis in Basis:
        table.add(basis, event_class, level, Pairing.NEITHER, GainEntry(vacuum_gain, table.e00))


def build_gain_table(
    config: ProtocolConfig,
    distance: float,
    relay: RelayParams,
    loss_coeff: float = 0.2,
    variant: ClosedFormVariant = ClosedFormVariant.AVERAGED,
    reading: MisalignmentReading = MisalignmentReading.LINEAR,
) -> GainTable:
    """
    Assemble every gain and QBER a protocol's estimator and rate formula read.

    Args:
        config: Protocol configuration
        distance: Total distance between the senders in km, relay in the middle
        relay: Relay parameters
        loss_coeff: Fiber attenuation in dB/km
        variant: Closed-form variant for the signal-signal click probabilities
        reading: Misalignment reading for the X-basis QBER

    Returns:
        GainTable with all four pairings per required (class, level) block in both bases

    Raises:
        AsymmetricConfig: If the two senders differ at some level
    """
    channel = ChannelParams.symmetric(distance, loss_coeff)
    table = GainTable(distance=distance, y00=relay.p_dark**2, e00=relay.e_noise)
    for event_class, level in REQUIRED_BLOCKS[config.protocol]:
        _fill_block(
            table,
            config.source(Side.A, level),
            config.source(Side.B, level),
            channel,
            relay,
            event_class,
            level,
            variant,
            reading,
        )
    logger.debug(
        f"Built {len(table)}-entry gain table for {config.protocol.value} at {distance} km"
    )
    return table
