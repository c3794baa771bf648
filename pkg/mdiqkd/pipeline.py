"""Single protocol evaluation: gain table, decoy estimator and key-rate formula chained."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

from mdiqkd.estimators import (
    DecoyBounds,
    active3_bounds,
    infinite_decoy_bounds,
    modified_passive3_bounds,
)
from mdiqkd.exceptions import ParameterValidationError
from mdiqkd.finite_size import (
    BarAssignment,
    FluctuationParams,
    finite_modified_passive_bounds,
    fluctuated_credit_table,
)
from mdiqkd.gains import Basis, GainEntry, GainTable, Pairing, build_gain_table
from mdiqkd.keyrate import (
    DEFAULT_ALPHA_POINTS,
    DEFAULT_EFFICIENCY,
    Efficiency,
    KeyRateResult,
    RateFormula,
    rate_active3,
    rate_modified_passive3,
    rate_passive2,
    rate_unified,
    vacuum_credit,
)
from mdiqkd.protocol import IntensityDistributions, Level, Protocol, ProtocolConfig
from mdiqkd.relay import (
    ChannelParams,
    ClosedFormVariant,
    EventClass,
    MisalignmentReading,
    RelayParams,
    Side,
)
from mdiqkd.sources import DEFAULT_N_MAX, DistributionFamily, TriggerRatioSet

logger = logging.getLogger(__name__)

TableBuilder = Callable[..., GainTable]


@dataclass(frozen=True)
class EvaluationOptions:
    """
    Knobs shared by every protocol evaluation.

    Attributes:
        variant: Closed-form variant of the signal-signal click probabilities
        reading: Misalignment reading for X-basis QBERs
        formula: Rate formula for the infinite and active protocols
        f: Error-correction inefficiency
        alpha_points: Grid size of the passive vacuum-ratio minimization
        n_max: Truncation index of the photon-number distributions
        loss_coeff: Fiber attenuation in dB/km
        fold_detector_efficiency: Fold eta_D into the infinite-decoy transmittances;
            False keeps the literal channel transmittances
        vacuum_basis: Basis of the vacuum credits of the modified passive rate
        triggered_credit_level: Intensity level of the triggered vacuum credit of the
            modified passive rate
        bars: Fluctuation bar assignment for finite-size evaluations
    """

    variant: ClosedFormVariant = ClosedFormVariant.AVERAGED
    reading: MisalignmentReading = MisalignmentReading.LINEAR
    formula: RateFormula = RateFormula.UNIFIED
    f: Efficiency = DEFAULT_EFFICIENCY
    alpha_points: int = DEFAULT_ALPHA_POINTS
    n_max: int = DEFAULT_N_MAX
    loss_coeff: float = 0.2
    fold_detector_efficiency: bool = True
    vacuum_basis: Basis = Basis.X
    triggered_credit_level: Level = Level.DECOY
    bars: BarAssignment = BarAssignment.WORST_CASE

    def __post_init__(self):
        operation = "pipeline.EvaluationOptions"
        if self.alpha_points < 1:
            raise ParameterValidationError(
                f"alpha_points must be >= 1, got {self.alpha_points}", operation
            )
        if self.n_max < 2:
            raise ParameterValidationError(f"n_max must be >= 2, got {self.n_max}", operation)
        if self.loss_coeff < 0:
            raise ParameterValidationError(
                f"loss_coeff must be >= 0, got {self.loss_coeff}", operation
            )


@dataclass(frozen=True)
class ProtocolEvaluation:
    """One protocol evaluated at one distance."""

    config: ProtocolConfig
    distance: float
    gains: GainTable
    result: KeyRateResult

    @property
    def signal_entry(self) -> GainEntry:
        """Z-basis signal gain and QBER the key is distilled from."""
        if self.config.protocol in (Protocol.INFINITE, Protocol.ACTIVE3):
            event_class = EventClass.PLAIN
        else:
            event_class = EventClass.TRIGGERED
        return self.gains.entry(Basis.Z, event_class, Level.SIGNAL, Pairing.BOTH)

    @property
    def q_z(self) -> float:
        return self.signal_entry.gain

    @property
    def e_z(self) -> float:
        return self.signal_entry.qber

    @property
    def bounds(self) -> Optional[DecoyBounds]:
        return self.result.bounds


def _infinite_rate(
    config: ProtocolConfig,
    gains: GainTable,
    channel: ChannelParams,
    relay: RelayParams,
    options: EvaluationOptions,
) -> KeyRateResult:
    pnds = IntensityDistributions.for_family(config, DistributionFamily.HERALDED, options.n_max)
    signal_a, signal_b = pnds.at(Side.A, Level.SIGNAL), pnds.at(Side.B, Level.SIGNAL)
    p1a, p1b = signal_a.probability(1), signal_b.probability(1)
    terms = infinite_decoy_bounds(p1a, p1b, channel, relay, options.fold_detector_efficiency)
    y11 = terms.q11z / (p1a * p1b) if p1a * p1b > 0.0 else 0.0
    bounds = DecoyBounds(y11_lower=y11, e11_upper=terms.e11x, y11_raw=y11, e11_raw=terms.e11x)
    q0 = 0.0
    if options.formula is RateFormula.UNIFIED:
        q0 = vacuum_credit(
            gains,
            Basis.X,
            EventClass.PLAIN,
            Level.SIGNAL,
            signal_a.probability(0),
            signal_b.probability(0),
        )
    entry = gains.entry(Basis.Z, EventClass.PLAIN, Level.SIGNAL, Pairing.BOTH)
    return rate_unified(q0, terms.q11z, terms.e11x, entry.gain, entry.qber, options.f, bounds)


def evaluate_protocol(
    config: ProtocolConfig,
    distance: float,
    relay: RelayParams,
    options: Optional[EvaluationOptions] = None,
    fluctuation: Optional[FluctuationParams] = None,
    table_builder: TableBuilder = build_gain_table,
) -> ProtocolEvaluation:
    """
    Evaluate one protocol configuration at one distance.

    Args:
        config: Protocol configuration
        distance: Total distance between the senders in km
        relay: Relay parameters
        options: Evaluation options, defaults when omitted
        fluctuation: Finite-size parameters; modified passive protocol only
        table_builder: Gain-table builder with the signature of ``build_gain_table``

    Returns:
        ProtocolEvaluation

    Raises:
        SimulationError: Any typed error of the table builder, estimator or rate formula
    """
    options = options or EvaluationOptions()
    if fluctuation is not None and config.protocol is not Protocol.MODIFIED_PASSIVE3:
        raise ParameterValidationError(
            f"finite-size analysis is not defined for {config.protocol.value}",
            "pipeline.evaluate_protocol",
        )
    gains = table_builder(
        config, distance, relay, options.loss_coeff, options.variant, options.reading
    )
    channel = ChannelParams.symmetric(distance, options.loss_coeff)
    protocol = config.protocol

    if protocol is Protocol.INFINITE:
        result = _infinite_rate(config, gains, channel, relay, options)
    elif protocol is Protocol.ACTIVE3:
        pnds = IntensityDistributions.for_family(config, DistributionFamily.HERALDED, options.n_max)
        bounds = active3_bounds(gains, pnds)
        result = rate_active3(
            bounds, gains, pnds, options.f, include_vacuum=options.formula is RateFormula.UNIFIED
        )
    elif protocol is Protocol.PASSIVE2:
        pnds = IntensityDistributions.for_family(
            config, DistributionFamily.NON_TRIGGERED, options.n_max
        )
        ratios = TriggerRatioSet.from_sources(
            config.source(Side.A, Level.SIGNAL), config.source(Side.B, Level.SIGNAL)
        )
        result = rate_passive2(gains, ratios, pnds, options.f, options.alpha_points)
    else:
        triggered = IntensityDistributions.for_family(
            config, DistributionFamily.TRIGGERED, options.n_max
        )
        non_triggered = IntensityDistributions.for_family(
            config, DistributionFamily.NON_TRIGGERED, options.n_max
        )
        rate_gains = gains
        if fluctuation is None:
            bounds = modified_passive3_bounds(gains, triggered, non_triggered)
        else:
            bounds = finite_modified_passive_bounds(
                gains, triggered, non_triggered, fluctuation, options.bars, config
            )
            rate_gains = fluctuated_credit_table(
                gains,
                fluctuation,
                options.vacuum_basis,
                options.triggered_credit_level,
                config,
            )
        result = rate_modified_passive3(
            bounds,
            rate_gains,
            triggered,
            non_triggered,
            options.f,
            options.vacuum_basis,
            options.triggered_credit_level,
        )

    logger.debug(
        f"{protocol.value} at {distance} km: rate {result.rate:.6g} ({result.branch.value})"
    )
    return ProtocolEvaluation(config=config, distance=distance, gains=gains, result=result)
