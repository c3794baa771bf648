"""Secret-key-rate formulas of the infinite, active, passive and modified passive protocols."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy.special import xlogy

from mdiqkd.estimators import (
    DecoyBounds,
    PassiveTerms,
    error_fractions,
    passive2_bounds,
    passive_alpha_max,
    passive_terms,
    yield_fraction,
)
from mdiqkd.exceptions import DegenerateDenominator, DomainError, EmptyAlphaDomain
from mdiqkd.gains import Basis, GainTable, Pairing
from mdiqkd.protocol import IntensityDistributions, Level
from mdiqkd.relay import EventClass, Side
from mdiqkd.sources import TriggerRatioSet

logger = logging.getLogger(__name__)

DEFAULT_EFFICIENCY = 1.16
DEFAULT_ALPHA_POINTS = 1000

Efficiency = Union[float, Callable[[float], float]]


class RateBranch(Enum):
    """Which key-rate branch produced the reported rate."""

    SINGLE = "single"  # protocols with one rate expression
    TRIGGERED = "triggered"  # key from triggered signal events only
    BOTH = "both"  # key from triggered and non-triggered signal events


class RateFormula(Enum):
    """Rate formula applied to the infinite and active protocols."""

    UNIFIED = "unified"  # with the vacuum credit Q_0
    PROTOCOL = "protocol"  # single-photon term minus leakage only


@dataclass(frozen=True)
class KeyRateResult:
    """
    Secret key rate of one protocol evaluation.

    Attributes:
        rate: Secret bits per pulse pair, floored at 0
        raw_rate: Rate before flooring
        branch: Winning rate branch
        alpha_star: Minimizing vacuum ratio of the passive protocol, if any
        components: Positive, leakage and vacuum terms of the winning branch
        bounds: Decoy bounds the rate was built from
    """

    rate: float
    raw_rate: float
    branch: RateBranch = RateBranch.SINGLE
    alpha_star: Optional[float] = None
    components: Dict[str, float] = field(default_factory=dict)
    bounds: Optional[DecoyBounds] = None

    @property
    def feasible(self) -> bool:
        return self.rate > 0.0


def binary_entropy(x: float) -> float:
    """
    Binary Shannon entropy H(x) in bits.

    Args:
        x: Probability

    Returns:
        -x log2 x - (1 - x) log2(1 - x), with H(0) = H(1) = 0

    Raises:
        DomainError: If x lies outside [0, 1]
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"entropy argument must lie in [0, 1], got {x}", "keyrate.binary_entropy")
    return float(-(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)) / np.log(2.0))


def _entropy_array(values: np.ndarray) -> np.ndarray:
    values = np.clip(values, 0.0, 1.0)
    return -(xlogy(values, values) + xlogy(1.0 - values, 1.0 - values)) / np.log(2.0)


def _efficiency(f: Efficiency, error: float) -> float:
    return float(f(error)) if callable(f) else float(f)


def leakage(q: float, e: float, f: Efficiency = DEFAULT_EFFICIENCY) -> float:
    """Error-correction leakage Q f(E) H(E)."""
    return q * _efficiency(f, e) * binary_entropy(e)


def privacy_term(q11: float, e11: float) -> float:
    """Q11 [1 - H(e11)] with e11 capped at 1/2."""
    return q11 * (1.0 - binary_entropy(min(e11, 0.5)))


def vacuum_credit(
    gains: GainTable,
    basis: Basis,
    event_class: EventClass,
    level: Level,
    p0a: float,
    p0b: float,
) -> float:
    """Q_0 = P0(A) Q_0B + P0(B) Q_A0 - P0(A) P0(B) Y00 of one block."""
    q_a0 = gains.gain(basis, event_class, level, Pairing.A_ONLY)
    q_0b = gains.gain(basis, event_class, level, Pairing.B_ONLY)
    return p0a * q_0b + p0b * q_a0 - p0a * p0b * gains.y00


def rate_unified(
    q0: float,
    q11z: float,
    e11x: float,
    qz: float,
    ez: float,
    f: Efficiency = DEFAULT_EFFICIENCY,
    bounds: Optional[DecoyBounds] = None,
) -> KeyRateResult:
    """
    Comparison rate R = Q_0 + Q11 [1 - H(E11)] - Q f(E) H(E).

    Args:
        q0: Vacuum credit
        q11z: Single-photon-pair gain in the Z basis
        e11x: Single-photon-pair error rate in the X basis
        qz: Overall Z-basis gain
        ez: Overall Z-basis QBER
        f: Error-correction inefficiency, constant or a function of the QBER
        bounds: Decoy bounds to attach to the result

    Returns:
        KeyRateResult floored at 0
    """
    positive = privacy_term(q11z, e11x)
    leak = leakage(qz, ez, f)
    raw = q0 + positive - leak
    return KeyRateResult(
        rate=max(0.0, raw),
        raw_rate=raw,
        components={"vacuum": q0, "positive": positive, "leakage": leak},
        bounds=bounds,
    )


def rate_active3(
    bounds: DecoyBounds,
    gains: GainTable,
    pnds: IntensityDistributions,
    f: Efficiency = DEFAULT_EFFICIENCY,
    include_vacuum: bool = False,
) -> KeyRateResult:
    """
    Active three-intensity rate from the signal-level gains.

    Args:
        bounds: Output of ``active3_bounds``
        gains: Gain table with the PLAIN signal block
        pnds: Heralded distributions
        f: Error-correction inefficiency
        include_vacuum: Add the X-basis vacuum credit of the signal pulses

    Returns:
        KeyRateResult
    """
    signal_a = pnds.at(Side.A, Level.SIGNAL)
    signal_b = pnds.at(Side.B, Level.SIGNAL)
    q11 = signal_a.probability(1) * signal_b.probability(1) * bounds.y11_lower
    q0 = 0.0
    if include_vacuum:
        q0 = vacuum_credit(
            gains,
            Basis.X,
            EventClass.PLAIN,
            Level.SIGNAL,
            signal_a.probability(0),
            signal_b.probability(0),
        )
    entry = gains.entry(Basis.Z, EventClass.PLAIN, Level.SIGNAL, Pairing.BOTH)
    return rate_unified(q0, q11, bounds.e11_upper, entry.gain, entry.qber, f, bounds)


@dataclass(frozen=True)
class _BranchMinimum:
    value: float
    alpha: float


def _passive_objectives(
    z_terms: PassiveTerms,
    x_terms: PassiveTerms,
    ratios: TriggerRatioSet,
    alphas: np.ndarray,
    e00: float,
):
    xi = np.maximum(np.asarray(yield_fraction(z_terms, ratios, alphas), dtype=float), 0.0)
    eps_t, eps_nt = error_fractions(x_terms, ratios, alphas, e00)
    eps = np.minimum(np.minimum(eps_t, eps_nt), 0.5)
    secure = xi * (1.0 - _entropy_array(eps))
    triggered = ratios.r00 * alphas + ratios.r11 * secure
    both = (1.0 + ratios.r00) * alphas + (1.0 + ratios.r11) * secure
    return triggered, both


def _grid_minimum(values: np.ndarray, alphas: np.ndarray) -> _BranchMinimum:
    index = int(np.argmin(values))
    return _BranchMinimum(value=float(values[index]), alpha=float(alphas[index]))


def rate_passive2(
    gains: GainTable,
    ratios: TriggerRatioSet,
    pnds: IntensityDistributions,
    f: Efficiency = DEFAULT_EFFICIENCY,
    alpha_points: int = DEFAULT_ALPHA_POINTS,
) -> KeyRateResult:
    """
    Passive two-intensity rate, the larger of its triggered and both-classes branches.

    The unobservable vacuum ratio alpha is minimized over a uniform grid on
    [0, alpha_max], endpoints included.

    Args:
        gains: Gain table with triggered and non-triggered signal blocks
        ratios: Trigger ratios of the signal sources
        pnds: Non-triggered distributions at the signal slots
        f: Error-correction inefficiency
        alpha_points: Grid size over the alpha interval

    Returns:
        KeyRateResult with alpha_star of the winning branch

    Raises:
        EmptyAlphaDomain: If the alpha interval is empty
    """
    operation = "keyrate.rate_passive2"
    x_terms = passive_terms(gains, Basis.X)
    z_terms = passive_terms(gains, Basis.Z)
    if x_terms.q_nt <= 0.0 or z_terms.q_nt <= 0.0:
        raise EmptyAlphaDomain("non-triggered gain is zero", operation)
    alpha_max = passive_alpha_max(x_terms, ratios)
    if alpha_max < 0.0:
        raise EmptyAlphaDomain(f"alpha interval [0, {alpha_max!r}] is empty", operation)
    if alpha_max == 0.0:
        alphas = np.zeros(1)
    else:
        alphas = np.linspace(0.0, alpha_max, max(int(alpha_points), 2))

    triggered, both = _passive_objectives(z_terms, x_terms, ratios, alphas, gains.e00)
    best_t = _grid_minimum(triggered, alphas)
    best_both = _grid_minimum(both, alphas)

    leak_t = leakage(z_terms.q_t, z_terms.e_t, f)
    leak_nt = leakage(z_terms.q_nt, z_terms.e_nt, f)
    rate_t = z_terms.q_nt * best_t.value - leak_t
    rate_both = z_terms.q_nt * best_both.value - leak_t - leak_nt

    if rate_t >= rate_both:
        branch, raw, best, leak = RateBranch.TRIGGERED, rate_t, best_t, leak_t
    else:
        branch, raw, best, leak = RateBranch.BOTH, rate_both, best_both, leak_t + leak_nt
    try:
        bounds = passive2_bounds(gains, ratios, min(best.alpha, alpha_max), pnds)
    except DegenerateDenominator:
        # no positive X-basis yield fraction at alpha*: nothing certifies single photons
        bounds = DecoyBounds(
            y11_lower=0.0,
            e11_upper=1.0,
            precondition_ok=False,
            y11_raw=0.0,
            e11_raw=float("inf"),
            diagnostics={"alpha": best.alpha, "alpha_max": alpha_max},
        )
    logger.debug(f"passive2 branches: triggered {rate_t:.6g}, both {rate_both:.6g}")
    return KeyRateResult(
        rate=max(0.0, raw),
        raw_rate=raw,
        branch=branch,
        alpha_star=best.alpha,
        components={
            "positive": z_terms.q_nt * best.value,
            "leakage": leak,
            "rate_triggered": rate_t,
            "rate_both": rate_both,
            "alpha_max": alpha_max,
        },
        bounds=bounds,
    )


def rate_modified_passive3(
    bounds: DecoyBounds,
    gains: GainTable,
    triggered: IntensityDistributions,
    non_triggered: IntensityDistributions,
    f: Efficiency = DEFAULT_EFFICIENCY,
    vacuum_basis: Basis = Basis.X,
    triggered_credit_level: Level = Level.DECOY,
) -> KeyRateResult:
    """
    Modified passive rate, the larger of its triggered and both-classes branches.

    Key is distilled from signal pulses and pays leakage on their Z-basis gains. The
    triggered vacuum credit is read from the triggered decoy pairs with P0^T(mu); the
    non-triggered one from the non-triggered signal pairs with P0^NT(mu').

    Args:
        bounds: Output of ``modified_passive3_bounds`` or its finite-size counterpart
        gains: Gain table with T/decoy, T/signal and NT/signal blocks
        triggered: Triggered distributions
        non_triggered: Non-triggered distributions
        f: Error-correction inefficiency
        vacuum_basis: Basis of the gains behind the vacuum credits
        triggered_credit_level: Intensity level of the triggered vacuum credit;
            Level.SIGNAL reads it from the triggered signal pairs instead

    Returns:
        KeyRateResult
    """
    t, nt = EventClass.TRIGGERED, EventClass.NON_TRIGGERED
    terms = {}
    credit_levels = {t: triggered_credit_level, nt: Level.SIGNAL}
    for event_class, pnds in ((t, triggered), (nt, non_triggered)):
        signal_a = pnds.at(Side.A, Level.SIGNAL)
        signal_b = pnds.at(Side.B, Level.SIGNAL)
        level = credit_levels[event_class]
        credit = vacuum_credit(
            gains,
            vacuum_basis,
            event_class,
            level,
            pnds.at(Side.A, level).probability(0),
            pnds.at(Side.B, level).probability(0),
        )
        q11 = signal_a.probability(1) * signal_b.probability(1) * bounds.y11_lower
        entry = gains.entry(Basis.Z, event_class, Level.SIGNAL, Pairing.BOTH)
        terms[event_class] = (
            credit,
            privacy_term(q11, bounds.e11_upper),
            leakage(entry.gain, entry.qber, f),
        )

    credit_t, positive_t, leak_t = terms[t]
    credit_nt, positive_nt, leak_nt = terms[nt]
    rate_t = credit_t + positive_t - leak_t
    rate_both = rate_t + credit_nt + positive_nt - leak_nt
    if rate_t >= rate_both:
        branch, raw = RateBranch.TRIGGERED, rate_t
        components = {"vacuum": credit_t, "positive": positive_t, "leakage": leak_t}
    else:
        branch, raw = RateBranch.BOTH, rate_both
        components = {
            "vacuum": credit_t + credit_nt,
            "positive": positive_t + positive_nt,
            "leakage": leak_t + leak_nt,
        }
    components.update(
        {
            "rate_triggered": rate_t,
            "rate_both": rate_both,
            "vacuum_triggered": credit_t,
            "vacuum_non_triggered": credit_nt,
        }
    )
    return KeyRateResult(
        rate=max(0.0, raw),
        raw_rate=raw,
        branch=branch,
        components=components,
        bounds=bounds,
    )
