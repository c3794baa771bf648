"""Statistical-fluctuation bounds for the modified passive three-intensity protocol."""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from scipy.special import erfc

from mdiqkd.estimators import (
    DecoyBounds,
    ModifiedPassiveInputs,
    check_modified_preconditions,
    modified_passive_estimate,
)
from mdiqkd.exceptions import ParameterValidationError, ZeroStatistics
from mdiqkd.gains import Basis, GainEntry, GainTable, Pairing
from mdiqkd.protocol import IntensityDistributions, Level, ProtocolConfig
from mdiqkd.relay import EventClass, Side
from mdiqkd.sources import SourceSetting, post_selection_prob

logger = logging.getLogger(__name__)


class BarAssignment(Enum):
    """How the upper/lower fluctuation bars are assigned to the measured gains."""

    PRINTED = "printed"  # fixed directions, conservative when the bound's denominator is positive
    WORST_CASE = "worst_case"  # directions follow the sign of the bound's denominator


@dataclass(frozen=True)
class ClassCounts:
    """Pulse counts of the six pairings entering the modified passive bound."""

    t_both: float
    nt_both: float
    t_a_only: float
    nt_a_only: float
    t_b_only: float
    nt_b_only: float

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value >= 0.0:
                raise ParameterValidationError(
                    f"{name} must be >= 0, got {value}", "finite_size.ClassCounts"
                )


def trigger_probability(src: SourceSetting) -> float:
    """Probability sum_n P^T_n that a sender's heralding detector fires."""
    return 0.5 * (1.0 - src.p_cor) + src.p_cor * post_selection_prob(src)


@dataclass(frozen=True)
class FluctuationParams:
    """
    Standard-deviation count and data size of a finite-key evaluation.

    Attributes:
        n_alpha: Number of standard deviations, >= 0
        n_pulses: Pulses N sent per intensity pairing
        eta_a: Alice's trigger efficiency used in the class-count split
        eta_b: Bob's trigger efficiency used in the class-count split
        dark_a: Alice's trigger dark count rate
        dark_b: Bob's trigger dark count rate
        strict: Split counts by the actual trigger probabilities of the sources
        pulse_counts: Explicit class counts, bypassing the split
    """

    n_alpha: float
    n_pulses: float
    eta_a: float = 0.4
    eta_b: float = 0.4
    dark_a: float = 5e-5
    dark_b: float = 5e-5
    strict: bool = False
    pulse_counts: Optional[ClassCounts] = None

    def __post_init__(self):
        operation = "finite_size.FluctuationParams"
        if not math.isfinite(self.n_alpha) or self.n_alpha < 0:
            raise ParameterValidationError(f"n_alpha must be >= 0, got {self.n_alpha}", operation)
        if not self.n_pulses > 0:
            raise ParameterValidationError(f"n_pulses must be > 0, got {self.n_pulses}", operation)
        for name in ("eta_a", "eta_b", "dark_a", "dark_b"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterValidationError(f"{name} must lie in [0, 1], got {value}", operation)

    def class_counts(self, config: Optional[ProtocolConfig] = None) -> ClassCounts:
        """
        Split N into triggered and non-triggered counts per pairing.

        A vacuum pulse triggers only through dark counts, so the vacuum-side factor is d
        for triggered counts and 1 - d for non-triggered ones.

        Args:
            config: Protocol configuration, required in strict mode

        Returns:
            ClassCounts
        """
        if self.pulse_counts is not None:
            return self.pulse_counts
        n = self.n_pulses
        if not self.strict:
            eta_a, eta_b, d_a, d_b = self.eta_a, self.eta_b, self.dark_a, self.dark_b
            return ClassCounts(
                t_both=eta_a * eta_b * n,
                nt_both=(1.0 - eta_a) * (1.0 - eta_b) * n,
                t_a_only=eta_a * d_b * n,
                nt_a_only=(1.0 - eta_a) * (1.0 - d_b) * n,
                t_b_only=d_a * eta_b * n,
                nt_b_only=(1.0 - d_a) * (1.0 - eta_b) * n,
            )
        if config is None:
            raise ParameterValidationError(
                "strict class counts need the protocol configuration",
                "finite_size.FluctuationParams.class_counts",
            )

        def fires(side: Side, level: Optional[Level]) -> float:
            src = config.source(side, level or Level.SIGNAL)
            return trigger_probability(src if level else src.with_mu(0.0))

        t_decoy_a, t_decoy_b = fires(Side.A, Level.DECOY), fires(Side.B, Level.DECOY)
        t_signal_a, t_signal_b = fires(Side.A, Level.SIGNAL), fires(Side.B, Level.SIGNAL)
        t_vacuum_a, t_vacuum_b = fires(Side.A, None), fires(Side.B, None)
        return ClassCounts(
            t_both=t_decoy_a * t_decoy_b * n,
            nt_both=(1.0 - t_signal_a) * (1.0 - t_signal_b) * n,
            t_a_only=t_decoy_a * t_vacuum_b * n,
            nt_a_only=(1.0 - t_signal_a) * (1.0 - t_vacuum_b) * n,
            t_b_only=t_vacuum_a * t_decoy_b * n,
            nt_b_only=(1.0 - t_vacuum_a) * (1.0 - t_signal_b) * n,
        )


@dataclass(frozen=True)
class FluctuationBand:
    """Bands around a gain and its error gain."""

    q_lo: float
    q_hi: float
    eq_lo: float
    eq_hi: float
    beta_q: float
    beta_eq: float


def fluctuation_band(q: float, e: float, n: float, n_alpha: float) -> FluctuationBand:
    """
    Gaussian fluctuation band of a gain Q and error gain EQ measured over n pulses.

    Args:
        q: Gain
        e: QBER
        n: Number of pulses behind the measurement
        n_alpha: Number of standard deviations

    Returns:
        FluctuationBand with Q (1 -+ n_alpha / sqrt(n Q)) and the analogous EQ band;
        lower bands are floored at 0

    Raises:
        ZeroStatistics: If n Q is zero while n_alpha > 0
    """
    if n_alpha < 0:
        raise ParameterValidationError(
            f"n_alpha must be >= 0, got {n_alpha}", "finite_size.fluctuation_band"
        )
    eq = q * e
    if n_alpha == 0:
        return FluctuationBand(q, q, eq, eq, 0.0, 0.0)
    if n * q <= 0.0:
        raise ZeroStatistics(
            f"no statistics to fluctuate (n={n!r}, Q={q!r})", "finite_size.fluctuation_band"
        )
    beta_q = n_alpha / math.sqrt(n * q)
    if eq > 0.0:
        beta_eq = n_alpha / math.sqrt(n * eq)
        eq_lo, eq_hi = max(0.0, eq * (1.0 - beta_eq)), eq * (1.0 + beta_eq)
    else:
        beta_eq, eq_lo, eq_hi = math.inf, 0.0, 0.0
    return FluctuationBand(
        q_lo=max(0.0, q * (1.0 - beta_q)),
        q_hi=q * (1.0 + beta_q),
        eq_lo=eq_lo,
        eq_hi=eq_hi,
        beta_q=beta_q,
        beta_eq=beta_eq,
    )


def failure_probability(n_alpha: float) -> float:
    """Two-sided normal tail mass erfc(n_alpha / sqrt(2)) beyond n_alpha deviations."""
    if n_alpha < 0:
        raise ParameterValidationError(
            f"n_alpha must be >= 0, got {n_alpha}", "finite_size.failure_probability"
        )
    return float(erfc(n_alpha / math.sqrt(2.0)))


def finite_modified_passive_bounds(
    gains: GainTable,
    triggered: IntensityDistributions,
    non_triggered: IntensityDistributions,
    fl: FluctuationParams,
    bars: BarAssignment = BarAssignment.WORST_CASE,
    config: Optional[ProtocolConfig] = None,
) -> DecoyBounds:
    """
    Modified passive bounds with every measured gain moved to its fluctuation bar.

    Yield terms move in the direction that lowers Y11; the error gains move in the
    direction that raises E11. With n_alpha = 0 the result equals
    ``modified_passive3_bounds``.

    Args:
        gains: Asymptotic gain table
        triggered: Triggered distributions
        non_triggered: Non-triggered distributions
        fl: Fluctuation parameters
        bars: Bar assignment
        config: Protocol configuration, needed for strict class counts

    Returns:
        DecoyBounds

    Raises:
        ZeroStatistics: If a measured quantity has no counts behind it
        PreconditionViolated: If the estimator's ratio checks fail
    """
    probs = check_modified_preconditions(triggered, non_triggered)
    nominal = ModifiedPassiveInputs.from_table(gains)
    counts = fl.class_counts(config)
    t, nt = EventClass.TRIGGERED, EventClass.NON_TRIGGERED

    def band(basis: Basis, event_class: EventClass, level: Level, pairing: Pairing, n: float):
        entry = gains.entry(basis, event_class, level, pairing)
        return fluctuation_band(entry.gain, entry.qber, n, fl.n_alpha)

    q_t = band(Basis.Z, t, Level.DECOY, Pairing.BOTH, counts.t_both)
    q_t_a0 = band(Basis.Z, t, Level.DECOY, Pairing.A_ONLY, counts.t_a_only)
    q_t_0b = band(Basis.Z, t, Level.DECOY, Pairing.B_ONLY, counts.t_b_only)
    q_nt = band(Basis.Z, nt, Level.SIGNAL, Pairing.BOTH, counts.nt_both)
    q_nt_a0 = band(Basis.Z, nt, Level.SIGNAL, Pairing.A_ONLY, counts.nt_a_only)
    q_nt_0b = band(Basis.Z, nt, Level.SIGNAL, Pairing.B_ONLY, counts.nt_b_only)
    eq_t = band(Basis.X, t, Level.DECOY, Pairing.BOTH, counts.t_both)
    eq_t_a0 = band(Basis.X, t, Level.DECOY, Pairing.A_ONLY, counts.t_a_only)
    eq_t_0b = band(Basis.X, t, Level.DECOY, Pairing.B_ONLY, counts.t_b_only)

    # a negative denominator reverses which bar lowers the yield bound
    printed = bars is BarAssignment.PRINTED or probs.denominator > 0.0

    def pick(value: FluctuationBand, upper: bool) -> float:
        return value.q_hi if upper == printed else value.q_lo

    inputs = replace(
        nominal,
        q_t=pick(q_t, True),
        q_t_a0=pick(q_t_a0, False),
        q_t_0b=pick(q_t_0b, False),
        q_nt=pick(q_nt, False),
        q_nt_a0=pick(q_nt_a0, True),
        q_nt_0b=pick(q_nt_0b, True),
        eq_t=eq_t.eq_hi,
        eq_t_a0=eq_t_a0.eq_lo,
        eq_t_0b=eq_t_0b.eq_lo,
    )
    bounds = modified_passive_estimate(inputs, probs)
    diagnostics = dict(bounds.diagnostics)
    diagnostics.update(
        {
            "n_alpha": fl.n_alpha,
            "n_pulses": fl.n_pulses,
            "beta_q_t": q_t.beta_q,
            "beta_q_nt": q_nt.beta_q,
            "beta_eq_t": eq_t.beta_eq,
        }
    )
    logger.debug(
        f"finite-size bounds at N={fl.n_pulses:.3g}: Y11 {bounds.y11_lower:.6g}, "
        f"E11 {bounds.e11_upper:.6g}"
    )
    return replace(bounds, diagnostics=diagnostics)


def fluctuated_credit_table(
    gains: GainTable,
    fl: FluctuationParams,
    vacuum_basis: Basis = Basis.X,
    triggered_level: Level = Level.DECOY,
    config: Optional[ProtocolConfig] = None,
) -> GainTable:
    """
    Copy of a gain table with the vacuum-credit gains moved to their lower bars.

    The credit of the modified passive rate is a lower bound, so the single-sender
    pairings behind it (triggered at ``triggered_level``, non-triggered at the signal
    level) take q_lo. Triggered pairings use the triggered single-sender counts at
    either level. Every other entry is kept.

    Raises:
        ZeroStatistics: If a credit pairing has no counts behind it
    """
    counts = fl.class_counts(config)
    blocks = (
        (EventClass.TRIGGERED, triggered_level, counts.t_a_only, counts.t_b_only),
        (EventClass.NON_TRIGGERED, Level.SIGNAL, counts.nt_a_only, counts.nt_b_only),
    )
    table = replace(gains, entries=dict(gains.entries))
    for event_class, level, n_a_only, n_b_only in blocks:
        for pairing, n in ((Pairing.A_ONLY, n_a_only), (Pairing.B_ONLY, n_b_only)):
            entry = gains.entry(vacuum_basis, event_class, level, pairing)
            lower = fluctuation_band(entry.gain, entry.qber, n, fl.n_alpha).q_lo
            table.add(vacuum_basis, event_class, level, pairing, GainEntry(lower, entry.qber))
    return table
