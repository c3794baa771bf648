"""
Decoy-state estimators for the single-photon-pair yield and error rate.

Every estimator either returns a ``DecoyBounds`` or raises a typed error from
``mdiqkd.exceptions``. Bounds are clamped to [0, 1]; the unclamped values stay in
``y11_raw`` / ``e11_raw``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Union

import numpy as np

from mdiqkd.exceptions import DegenerateDenominator, ParameterValidationError, PreconditionViolated
from mdiqkd.gains import Basis, GainTable, Pairing
from mdiqkd.protocol import IntensityDistributions, Level
from mdiqkd.relay import ChannelParams, EventClass, RelayParams, Side, transmittance
from mdiqkd.sources import PhotonNumberDistribution, TriggerRatioSet

logger = logging.getLogger(__name__)

DENOMINATOR_RTOL = 1e-14
PRECONDITION_RTOL = 1e-12
# probabilities below this are treated as numerically absent when checking ratio chains
CHAIN_FLOOR = 1e-200


@dataclass(frozen=True)
class DecoyBounds:
    """
    Single-photon-pair bounds produced by a decoy-state estimator.

    Attributes:
        y11_lower: Lower bound on the single-photon-pair yield, clamped to [0, 1]
        e11_upper: Upper bound on the single-photon-pair error rate, clamped to [0, 1]
        precondition_ok: Whether the estimator's ratio preconditions held
        y11_raw: Yield bound before clamping
        e11_raw: Error bound before clamping
        diagnostics: Intermediate quantities of the estimate
    """

    y11_lower: float
    e11_upper: float
    precondition_ok: bool = True
    y11_raw: float = 0.0
    e11_raw: float = 0.0
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def clamped(self) -> bool:
        """True when either bound was moved onto [0, 1]."""
        return self.y11_lower != self.y11_raw or self.e11_upper != self.e11_raw


@dataclass(frozen=True)
class InfiniteDecoyTerms:
    """Single-photon-pair gain and error when the decoy analysis is exact."""

    q11z: float
    e11x: float


def _clamp(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def _make_bounds(
    y11_raw: float, e11_raw: float, diagnostics: Dict[str, float], operation: str
) -> DecoyBounds:
    bounds = DecoyBounds(
        y11_lower=_clamp(y11_raw),
        e11_upper=_clamp(e11_raw),
        precondition_ok=True,
        y11_raw=y11_raw,
        e11_raw=e11_raw,
        diagnostics=diagnostics,
    )
    if bounds.clamped:
        logger.debug(
            f"{operation}: clamped bounds (Y11 raw {y11_raw:.6g}, E11 raw {e11_raw:.6g})"
        )
    return bounds


def _guarded_difference(first: float, second: float, operation: str) -> float:
    """Return first - second, raising when the difference is lost in rounding."""
    scale = max(abs(first), abs(second))
    difference = first - second
    if scale == 0.0 or abs(difference) <= DENOMINATOR_RTOL * scale:
        raise DegenerateDenominator(
            f"bracket {first!r} - {second!r} vanishes within a relative {DENOMINATOR_RTOL}",
            operation,
        )
    return difference


def _error_bound(numerator: float, p1a: float, p1b: float, y11: float) -> float:
    if y11 <= 0.0 or p1a * p1b <= 0.0:
        return math.inf
    return numerator / (p1a * p1b * y11)


def _check_ratio_order(lhs: Tuple[float, float], rhs: Tuple[float, float], operation: str) -> None:
    """Check lhs[0]/lhs[1] <= rhs[0]/rhs[1] by cross multiplication."""
    left = lhs[0] * rhs[1]
    right = rhs[0] * lhs[1]
    if lhs[1] <= 0.0 or rhs[1] <= 0.0:
        raise DegenerateDenominator("ratio precondition has a zero denominator", operation)
    if left > right * (1.0 + PRECONDITION_RTOL):
        raise PreconditionViolated(
            f"ratio precondition fails: {lhs[0] / lhs[1]:.12g} > {rhs[0] / rhs[1]:.12g}",
            operation,
        )


def infinite_decoy_bounds(
    p1a: float,
    p1b: float,
    channel: ChannelParams,
    relay: RelayParams,
    include_detector_efficiency: bool = True,
) -> InfiniteDecoyTerms:
    """
    Single-photon-pair gain and error rate of the ideal infinite decoy-state protocol.

    Args:
        p1a: Alice's single-photon probability
        p1b: Bob's single-photon probability
        channel: Fiber links
        relay: Relay parameters
        include_detector_efficiency: Use eta_D times the channel transmittance on each
            side, as the gain table does; False keeps the literal channel transmittances

    Returns:
        InfiniteDecoyTerms with Q11 in the Z basis and E11 in the X basis
    """
    for name, value in (("p1a", p1a), ("p1b", p1b)):
        if not 0.0 <= value <= 1.0:
            raise ParameterValidationError(
                f"{name} must lie in [0, 1], got {value}", "estimators.infinite_decoy_bounds"
            )
    eta_a = transmittance(channel, Side.A)
    eta_b = transmittance(channel, Side.B)
    if include_detector_efficiency:
        eta_a *= relay.eta_d
        eta_b *= relay.eta_d
    p_d = relay.p_dark
    bracket = (
        0.5 * eta_a * eta_b
        - (2.0 * eta_a + 3.0 * eta_b - 3.0 * eta_a * eta_b) * p_d
        + 4.0 * (1.0 - eta_a) * (1.0 - eta_b) * p_d**2
    )
    q11 = max(0.0, p1a * p1b * (1.0 - p_d) ** 2 * bracket)
    e_0, e_d = relay.e_noise, relay.e_misalign
    if q11 == 0.0:
        return InfiniteDecoyTerms(q11z=0.0, e11x=e_0)
    e11 = e_0 - (e_0 - e_d) * (1.0 - p_d) ** 2 * p1a * p1b * eta_a * eta_b / (2.0 * q11)
    return InfiniteDecoyTerms(q11z=q11, e11x=_clamp(e11))


def model_single_photon_terms(
    channel: ChannelParams, relay: RelayParams, include_detector_efficiency: bool = True
) -> InfiniteDecoyTerms:
    """Single-photon-pair yield Y11 and error e11 of the relay model (P1 = 1 on both sides)."""
    return infinite_decoy_bounds(1.0, 1.0, channel, relay, include_detector_efficiency)


def _vacuum_corrected_gain(
    gains: GainTable,
    basis: Basis,
    event_class: EventClass,
    level: Level,
    p0a: float,
    p0b: float,
) -> float:
    """Q - (P0(A) Q_0B + P0(B) Q_A0 - P0(A) P0(B) Y00)."""
    q = gains.gain(basis, event_class, level, Pairing.BOTH)
    q_a0 = gains.gain(basis, event_class, level, Pairing.A_ONLY)
    q_0b = gains.gain(basis, event_class, level, Pairing.B_ONLY)
    return q - (p0a * q_0b + p0b * q_a0 - p0a * p0b * gains.y00)


def _error_numerator(
    gains: GainTable, event_class: EventClass, level: Level, p0a: float, p0b: float
) -> float:
    """EQ - P0(A) EQ_0B - P0(B) EQ_A0 + P0(A) P0(B) E00 Y00 in the X basis."""
    eq = gains.error_gain(Basis.X, event_class, level, Pairing.BOTH)
    eq_a0 = gains.error_gain(Basis.X, event_class, level, Pairing.A_ONLY)
    eq_0b = gains.error_gain(Basis.X, event_class, level, Pairing.B_ONLY)
    return eq - p0a * eq_0b - p0b * eq_a0 + p0a * p0b * gains.e00 * gains.y00


def active3_bounds(gains: GainTable, pnds: IntensityDistributions) -> DecoyBounds:
    """
    Three-intensity bound on Y11 (Z basis) and E11 (X basis).

    Args:
        gains: Gain table with PLAIN blocks at both levels
        pnds: Heralded distributions at the decoy and signal slots

    Returns:
        DecoyBounds

    Raises:
        PreconditionViolated: If the two-intensity ratio ordering fails
        DegenerateDenominator: If the bound's bracket vanishes
    """
    operation = "estimators.active3_bounds"
    decoy_a, decoy_b = pnds.at(Side.A, Level.DECOY), pnds.at(Side.B, Level.DECOY)
    signal_a, signal_b = pnds.at(Side.A, Level.SIGNAL), pnds.at(Side.B, Level.SIGNAL)
    p0a, p1a, p2a = (decoy_a.probability(n) for n in range(3))
    p0b, p1b, p2b = (decoy_b.probability(n) for n in range(3))
    s0a, s1a, s2a = (signal_a.probability(n) for n in range(3))
    s0b, s1b, s2b = (signal_b.probability(n) for n in range(3))

    _check_ratio_order((s1a * s2b, p1a * p2b), (s2a * s1b, p2a * p1b), operation)
    bracket = _guarded_difference(s2b * p1b, p2b * s1b, operation)
    denominator = s1a * p1a * bracket
    if denominator == 0.0:
        raise DegenerateDenominator("single-photon probabilities vanish", operation)

    cls = EventClass.PLAIN

    def single_photon_yield(basis: Basis) -> Tuple[float, float, float]:
        decoy_term = _vacuum_corrected_gain(gains, basis, cls, Level.DECOY, p0a, p0b)
        signal_term = _vacuum_corrected_gain(gains, basis, cls, Level.SIGNAL, s0a, s0b)
        y11 = (s1a * s2b * decoy_term - p1a * p2b * signal_term) / denominator
        return y11, decoy_term, signal_term

    y11_raw, decoy_term, signal_term = single_photon_yield(Basis.Z)
    # E11 lives in the X basis, so its denominator takes the X-basis yield
    y11_x, _, _ = single_photon_yield(Basis.X)

    error_numerator = _error_numerator(gains, cls, Level.DECOY, p0a, p0b)
    e11_raw = _error_bound(error_numerator, p1a, p1b, y11_x)
    diagnostics = {
        "q0_decoy": gains.gain(Basis.Z, cls, Level.DECOY, Pairing.BOTH) - decoy_term,
        "q0_signal": gains.gain(Basis.Z, cls, Level.SIGNAL, Pairing.BOTH) - signal_term,
        "denominator": denominator,
        "error_numerator": error_numerator,
        "y11_x": y11_x,
    }
    return _make_bounds(y11_raw, e11_raw, diagnostics, operation)


@dataclass(frozen=True)
class PassiveTerms:
    """Normalized differences the passive estimator is built from, in one basis."""

    q_nt: float
    q_t: float
    e_nt: float
    e_t: float
    q_delta_nt: float
    q_delta_t: float
    e_delta_nt: float
    e_delta_t: float


def passive_terms(gains: GainTable, basis: Basis, level: Level = Level.SIGNAL) -> PassiveTerms:
    """
    Collect Q_delta and E_delta of the triggered and non-triggered classes.

    Both triggered and non-triggered differences are normalized by the non-triggered
    signal gain Q^(nt). A zero Q^(nt) yields zero differences.
    """

    def entry(cls: EventClass, pairing: Pairing):
        return gains.entry(basis, cls, level, pairing)

    nt, t = EventClass.NON_TRIGGERED, EventClass.TRIGGERED
    q_nt = entry(nt, Pairing.BOTH).gain
    q_t = entry(t, Pairing.BOTH).gain
    if q_nt <= 0.0:
        return PassiveTerms(q_nt, q_t, gains.e00, entry(t, Pairing.BOTH).qber, 0.0, 0.0, 0.0, 0.0)

    def delta(cls: EventClass, attr: str) -> float:
        both = getattr(entry(cls, Pairing.BOTH), attr)
        a_only = getattr(entry(cls, Pairing.A_ONLY), attr)
        b_only = getattr(entry(cls, Pairing.B_ONLY), attr)
        return (both - a_only - b_only) / q_nt

    return PassiveTerms(
        q_nt=q_nt,
        q_t=q_t,
        e_nt=entry(nt, Pairing.BOTH).qber,
        e_t=entry(t, Pairing.BOTH).qber,
        q_delta_nt=delta(nt, "gain"),
        q_delta_t=delta(t, "gain"),
        e_delta_nt=delta(nt, "error_gain"),
        e_delta_t=delta(t, "error_gain"),
    )


ArrayLike = Union[float, np.ndarray]


def yield_fraction(terms: PassiveTerms, ratios: TriggerRatioSet, alpha: ArrayLike) -> ArrayLike:
    """xi(alpha) = ((r_min - r00) alpha + r_min Q_delta_nt - Q_delta_t) / (r_min - r11)."""
    r_min = ratios.r_min
    _guarded_difference(r_min, ratios.r11, "estimators.yield_fraction")
    return ((r_min - ratios.r00) * alpha + r_min * terms.q_delta_nt - terms.q_delta_t) / (
        r_min - ratios.r11
    )


def error_fractions(
    terms: PassiveTerms, ratios: TriggerRatioSet, alpha: ArrayLike, e00: float
) -> Tuple[ArrayLike, ArrayLike]:
    """
    The two error bounds eps_t(alpha) and eps_nt(alpha) from X-basis terms.

    Where xi(alpha) <= 0 both bounds are infinite.
    """
    xi = np.asarray(yield_fraction(terms, ratios, alpha), dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    positive = xi > 0.0
    safe_xi = np.where(positive, xi, 1.0)
    eps_t = np.where(
        positive,
        (terms.e_delta_t + alpha * ratios.r00 * e00) / (ratios.r11 * safe_xi),
        np.inf,
    )
    eps_nt = np.where(positive, (terms.e_delta_nt + alpha * e00) / safe_xi, np.inf)
    if eps_t.ndim == 0:
        return float(eps_t), float(eps_nt)
    return eps_t, eps_nt


def passive_alpha_max(terms: PassiveTerms, ratios: TriggerRatioSet) -> float:
    """Upper end of the vacuum-ratio interval, min{2 Q_t E_t / (r00 Q_nt), 2 E_nt}."""
    candidates = [2.0 * terms.e_nt]
    if ratios.r00 > 0.0 and terms.q_nt > 0.0:
        candidates.append(2.0 * terms.q_t * terms.e_t / (ratios.r00 * terms.q_nt))
    return min(candidates)


def passive_yield_fraction(
    gains: GainTable, ratios: TriggerRatioSet, alpha: float, basis: Basis = Basis.Z
) -> float:
    """xi(alpha) in one basis; NaN instead of an error when the ratios are degenerate."""
    try:
        return float(yield_fraction(passive_terms(gains, basis), ratios, alpha))
    except DegenerateDenominator:
        return math.nan


def passive2_bounds(
    gains: GainTable,
    ratios: TriggerRatioSet,
    vacuum_ratio: float,
    pnds: IntensityDistributions,
) -> DecoyBounds:
    """
    Passive two-intensity bound at a given vacuum ratio alpha.

    Args:
        gains: Gain table with triggered and non-triggered signal blocks
        ratios: Trigger ratios r00, r11, r12, r21 of the signal sources
        vacuum_ratio: alpha = Q00^(nt) / Q^(nt)
        pnds: Non-triggered distributions at the signal slots

    Returns:
        DecoyBounds; y11_lower is xi_Z(alpha) Q^(nt)_Z / (P1^NT(A) P1^NT(B))

    Raises:
        PreconditionViolated: If alpha lies outside its admissible interval
        DegenerateDenominator: If r_min equals r11 or xi_X(alpha) <= 0
    """
    operation = "estimators.passive2_bounds"
    x_terms = passive_terms(gains, Basis.X)
    z_terms = passive_terms(gains, Basis.Z)
    alpha_max = passive_alpha_max(x_terms, ratios)
    if not 0.0 <= vacuum_ratio <= alpha_max * (1.0 + PRECONDITION_RTOL):
        raise PreconditionViolated(
            f"vacuum ratio {vacuum_ratio!r} outside [0, {alpha_max!r}]", operation
        )

    xi_z = float(yield_fraction(z_terms, ratios, vacuum_ratio))
    xi_x = float(yield_fraction(x_terms, ratios, vacuum_ratio))
    if xi_x <= 0.0:
        raise DegenerateDenominator(
            f"X-basis yield fraction {xi_x!r} is not positive at alpha={vacuum_ratio!r}", operation
        )
    eps_t, eps_nt = error_fractions(x_terms, ratios, vacuum_ratio, gains.e00)

    p1a = pnds.at(Side.A, Level.SIGNAL).probability(1)
    p1b = pnds.at(Side.B, Level.SIGNAL).probability(1)
    q11_nt = xi_z * z_terms.q_nt
    y11_raw = q11_nt / (p1a * p1b) if p1a * p1b > 0.0 else 0.0
    diagnostics = {
        "alpha": vacuum_ratio,
        "alpha_max": alpha_max,
        "xi_z": xi_z,
        "xi_x": xi_x,
        "eps_t": eps_t,
        "eps_nt": eps_nt,
        "r_min": ratios.r_min,
        "q11_nt": q11_nt,
        "q_delta_t": z_terms.q_delta_t,
        "q_delta_nt": z_terms.q_delta_nt,
    }
    return _make_bounds(y11_raw, min(eps_t, eps_nt), diagnostics, operation)


@dataclass(frozen=True)
class ModifiedPassiveInputs:
    """
    Measured quantities the modified passive estimate reads.

    Gains are Z-basis values of the triggered decoy and non-triggered signal blocks; the
    error gains are X-basis values of the triggered decoy block.
    """

    q_t: float
    q_t_a0: float
    q_t_0b: float
    q_nt: float
    q_nt_a0: float
    q_nt_0b: float
    eq_t: float
    eq_t_a0: float
    eq_t_0b: float
    y00: float
    e00: float = 0.5

    @classmethod
    def from_table(cls, gains: GainTable) -> "ModifiedPassiveInputs":
        t, nt = EventClass.TRIGGERED, EventClass.NON_TRIGGERED

        def gain(basis: Basis, event_class: EventClass, level: Level, pairing: Pairing):
            return gains.gain(basis, event_class, level, pairing)

        def error_gain(pairing: Pairing) -> float:
            return gains.error_gain(Basis.X, t, Level.DECOY, pairing)

        return cls(
            q_t=gain(Basis.Z, t, Level.DECOY, Pairing.BOTH),
            q_t_a0=gain(Basis.Z, t, Level.DECOY, Pairing.A_ONLY),
            q_t_0b=gain(Basis.Z, t, Level.DECOY, Pairing.B_ONLY),
            q_nt=gain(Basis.Z, nt, Level.SIGNAL, Pairing.BOTH),
            q_nt_a0=gain(Basis.Z, nt, Level.SIGNAL, Pairing.A_ONLY),
            q_nt_0b=gain(Basis.Z, nt, Level.SIGNAL, Pairing.B_ONLY),
            eq_t=error_gain(Pairing.BOTH),
            eq_t_a0=error_gain(Pairing.A_ONLY),
            eq_t_0b=error_gain(Pairing.B_ONLY),
            y00=gains.y00,
            e00=gains.e00,
        )


@dataclass(frozen=True)
class ModifiedPassiveProbabilities:
    """P0, P1 and P2 of the triggered decoy and non-triggered signal slots."""

    t_a: Tuple[float, float, float]
    t_b: Tuple[float, float, float]
    nt_a: Tuple[float, float, float]
    nt_b: Tuple[float, float, float]

    @classmethod
    def from_distributions(
        cls, triggered: IntensityDistributions, non_triggered: IntensityDistributions
    ) -> "ModifiedPassiveProbabilities":
        def first_three(pnd: PhotonNumberDistribution) -> Tuple[float, float, float]:
            return (pnd.probability(0), pnd.probability(1), pnd.probability(2))

        return cls(
            t_a=first_three(triggered.at(Side.A, Level.DECOY)),
            t_b=first_three(triggered.at(Side.B, Level.DECOY)),
            nt_a=first_three(non_triggered.at(Side.A, Level.SIGNAL)),
            nt_b=first_three(non_triggered.at(Side.B, Level.SIGNAL)),
        )

    @property
    def denominator(self) -> float:
        """P1^NT(mu'_A) P1^T(mu_A) [P2^T(mu_B) P1^NT(mu'_B) - P2^NT(mu'_B) P1^T(mu_B)]."""
        bracket = _guarded_difference(
            self.t_b[2] * self.nt_b[1],
            self.nt_b[2] * self.t_b[1],
            "estimators.modified_passive3_bounds",
        )
        return self.nt_a[1] * self.t_a[1] * bracket


def ratio_chain_violations(
    triggered: IntensityDistributions, non_triggered: IntensityDistributions
) -> List[str]:
    """
    Names of the signal/decoy ratio chains that are not nondecreasing in k.

    Each chain P_k(signal slot) / P_k(decoy slot) is checked for k >= 1 up to the
    smaller of the truncation index and the non-triggered validity bounds involved.
    """
    chains = [
        ("A: T(signal)/NT(decoy)", triggered.signal_a, non_triggered.decoy_a),
        ("A: NT(signal)/NT(decoy)", non_triggered.signal_a, non_triggered.decoy_a),
        ("B: T(signal)/T(decoy)", triggered.signal_b, triggered.decoy_b),
        ("B: NT(signal)/NT(decoy)", non_triggered.signal_b, non_triggered.decoy_b),
    ]
    violations = []
    for name, numerator, denominator in chains:
        if numerator is None or denominator is None:
            raise ParameterValidationError(
                f"chain {name} needs decoy distributions", "estimators.ratio_chain_violations"
            )
        limit = min(numerator.validity_bound, denominator.validity_bound)
        top = numerator.pmf()[1 : limit + 1]
        bottom = denominator.pmf()[1 : limit + 1]
        usable = (top > CHAIN_FLOOR) & (bottom > CHAIN_FLOOR)
        # stop at the first numerically absent probability
        count = int(np.argmin(usable)) if not usable.all() else len(usable)
        ratios = top[:count] / bottom[:count]
        if np.any(ratios[1:] < ratios[:-1] * (1.0 - PRECONDITION_RTOL)):
            violations.append(name)
    return violations


def check_modified_preconditions(
    triggered: IntensityDistributions,
    non_triggered: IntensityDistributions,
    check_chains: bool = True,
) -> ModifiedPassiveProbabilities:
    """
    Run the ratio checks of the modified passive estimator.

    Returns:
        The slot probabilities the estimate needs

    Raises:
        PreconditionViolated: If a ratio chain or the ratio ordering fails
    """
    operation = "estimators.modified_passive3_bounds"
    if check_chains:
        violations = ratio_chain_violations(triggered, non_triggered)
        if violations:
            raise PreconditionViolated(
                f"ratio chains not nondecreasing: {', '.join(violations)}", operation
            )
    probs = ModifiedPassiveProbabilities.from_distributions(triggered, non_triggered)
    _check_ratio_order(
        (probs.nt_a[1] * probs.nt_b[2], probs.t_a[1] * probs.t_b[2]),
        (probs.nt_a[2] * probs.nt_b[1], probs.t_a[2] * probs.t_b[1]),
        operation,
    )
    return probs


def modified_passive_estimate(
    inputs: ModifiedPassiveInputs, probs: ModifiedPassiveProbabilities
) -> DecoyBounds:
    """
    Evaluate the modified passive bound from (possibly fluctuated) measured inputs.

    Args:
        inputs: Measured gains and error gains
        probs: Slot probabilities, already checked

    Returns:
        DecoyBounds
    """
    operation = "estimators.modified_passive3_bounds"
    denominator = probs.denominator
    if denominator == 0.0:
        raise DegenerateDenominator("single-photon probabilities vanish", operation)
    t0a, t1a, t2a = probs.t_a
    t0b, t1b, t2b = probs.t_b
    n0a, n1a, n2a = probs.nt_a
    n0b, n1b, n2b = probs.nt_b

    q0_t = t0b * inputs.q_t_a0 + t0a * inputs.q_t_0b - t0a * t0b * inputs.y00
    q0_nt = n0b * inputs.q_nt_a0 + n0a * inputs.q_nt_0b - n0a * n0b * inputs.y00
    y11_raw = (
        t1a * t2b * (inputs.q_nt - q0_nt) - n1a * n2b * (inputs.q_t - q0_t)
    ) / denominator

    error_numerator = (
        inputs.eq_t
        - t0a * inputs.eq_t_0b
        - t0b * inputs.eq_t_a0
        + t0a * t0b * inputs.e00 * inputs.y00
    )
    e11_raw = _error_bound(error_numerator, t1a, t1b, y11_raw)
    diagnostics = {
        "q0_t": q0_t,
        "q0_nt": q0_nt,
        "denominator": denominator,
        "error_numerator": error_numerator,
    }
    return _make_bounds(y11_raw, e11_raw, diagnostics, operation)


def modified_passive3_bounds(
    gains: GainTable,
    triggered: IntensityDistributions,
    non_triggered: IntensityDistributions,
    check_chains: bool = True,
) -> DecoyBounds:
    """
    Modified passive three-intensity bound on Y11 (Z basis) and E11 (X basis).

    The triggered decoy and non-triggered signal events share single-photon yields; Y11
    comes from their Z-basis gains and E11 from the triggered decoy X-basis error gains.

    Args:
        gains: Gain table with T/decoy and NT/signal blocks
        triggered: Triggered distributions at both slots
        non_triggered: Non-triggered distributions at both slots
        check_chains: Verify the signal/decoy ratio chains

    Returns:
        DecoyBounds

    Raises:
        PreconditionViolated: If a ratio chain or the ratio ordering fails
        DegenerateDenominator: If the bound's bracket vanishes
    """
    probs = check_modified_preconditions(triggered, non_triggered, check_chains)
    return modified_passive_estimate(ModifiedPassiveInputs.from_table(gains), probs)
