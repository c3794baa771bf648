"""
Relay detector response for phase-encoded MDI-QKD with SPDC sources.

The four threshold detectors (r0, r1, s0, s1) sit behind two 50:50 beam splitters. Click
probabilities here are the closed forms obtained after averaging over the unobservable
relative phase of the two senders, evaluated on the symmetric domain (identical sources,
identical fiber lengths). Brute-force counterparts live in ``mdiqkd.oracles``.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from mdiqkd.exceptions import AsymmetricConfig, ParameterValidationError
from mdiqkd.sources import SourceSetting, post_selection_prob

SYMMETRY_RTOL = 1e-12


class Side(Enum):
    """Sender side."""

    A = "A"  # Alice
    B = "B"  # Bob


class EventClass(Enum):
    """Which photon-number weights a gain is conditioned on."""

    PLAIN = "plain"  # heralded state, every emitted pulse kept
    TRIGGERED = "triggered"  # joint with a local trigger
    NON_TRIGGERED = "non_triggered"  # joint with no local trigger


class ClosedFormVariant(Enum):
    """Which constant terms the symmetric click-probability closed form keeps."""

    AVERAGED = "averaged"  # exact phase average of the photon-number series
    PRINTED = "printed"  # adds the constant +-p_d/(2z) dark-count corrections


class MisalignmentReading(Enum):
    """How the misalignment relation for the X-basis QBER is resolved."""

    LINEAR = "linear"  # E solved from E = E' + e_d (1 - E / e_0)
    SUBSTITUTED = "substituted"  # E = E' + e_d (1 - E' / e_0)


@dataclass(frozen=True)
class ChannelParams:
    """
    Fiber links from each sender to the relay.

    Attributes:
        loss_coeff: Fiber attenuation in dB/km
        length_ac: Length of Alice's fiber in km
        length_bc: Length of Bob's fiber in km
    """

    loss_coeff: float = 0.2
    length_ac: float = 0.0
    length_bc: float = 0.0

    def __post_init__(self):
        for name in ("loss_coeff", "length_ac", "length_bc"):
            value = getattr(self, name)
            if math.isnan(value) or value < 0:
                raise ParameterValidationError(
                    f"{name} must be >= 0, got {value}", "relay.ChannelParams"
                )

    @classmethod
    def symmetric(cls, distance: float, loss_coeff: float = 0.2) -> "ChannelParams":
        """Relay placed halfway along a total sender-to-sender distance."""
        return cls(loss_coeff=loss_coeff, length_ac=0.5 * distance, length_bc=0.5 * distance)

    @property
    def distance(self) -> float:
        return self.length_ac + self.length_bc


@dataclass(frozen=True)
class RelayParams:
    """
    Relay detector and alignment parameters.

    Attributes:
        eta_d: Detector efficiency
        p_dark: Dark count probability per detector
        e_misalign: Misalignment error probability e_d
        e_noise: Error rate of background noise, fixed at 1/2
    """

    eta_d: float = 0.145
    p_dark: float = 3e-6
    e_misalign: float = 0.015
    e_noise: float = 0.5

    def __post_init__(self):
        operation = "relay.RelayParams"
        if not 0.0 <= self.eta_d <= 1.0:
            raise ParameterValidationError(f"eta_d must lie in [0, 1], got {self.eta_d}", operation)
        if not 0.0 <= self.p_dark < 1.0:
            raise ParameterValidationError(
                f"p_dark must lie in [0, 1), got {self.p_dark}", operation
            )
        if not 0.0 <= self.e_misalign <= 0.5:
            raise ParameterValidationError(
                f"e_misalign must lie in [0, 0.5], got {self.e_misalign}", operation
            )
        if self.e_noise != 0.5:
            raise ParameterValidationError(f"e_noise must be 0.5, got {self.e_noise}", operation)


@dataclass(frozen=True)
class ClickProbabilities:
    """Click probabilities of the four relay detectors."""

    d_r0: float
    d_r1: float
    d_s0: float
    d_s1: float

    def __post_init__(self):
        for name in ("d_r0", "d_r1", "d_s0", "d_s1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterValidationError(
                    f"{name} must lie in [0, 1], got {value}", "relay.ClickProbabilities"
                )


@dataclass(frozen=True)
class CoefficientSet:
    """
    Shorthands for one sender's photon-number weights at the relay.

    Every supported class has weights of the form
    offset * delta_n0 + scale * [A * thermal_n(mu) + B * thermal_n(mu) (1 - eta)^n], and a
    Bernoulli loss of transmittance t maps them to
    a_n = scale * [A x^n / (1 + x)^(n + 1) + B u^n / z^(n + 1)] for n >= 1.

    Attributes:
        event_class: Class the weights belong to
        mu: Mean photon number of the source
        transmittance: Fraction t of the pulse reaching one detector pair
        eta_trigger: Trigger efficiency of the source
        eta_d: Relay detector efficiency
        offset: Uncorrelated vacuum weight
        scale: Weight of the correlated component
        fired_weight: Coefficient A of the thermal term
        silent_weight: Coefficient B of the trigger-miss term
    """

    event_class: EventClass
    mu: float
    transmittance: float
    eta_trigger: float
    eta_d: float
    offset: float
    scale: float
    fired_weight: float
    silent_weight: float
    x: float
    z: float
    u: float
    v: float
    w: float

    @classmethod
    def build(
        cls,
        src: SourceSetting,
        event_class: EventClass,
        transmittance: float,
        relay: RelayParams,
    ) -> "CoefficientSet":
        """
        Build the shorthands for a source seen through transmittance t.

        Args:
            src: Source setting
            event_class: Weight family
            transmittance: Fraction of the pulse reaching one detector pair
            relay: Relay parameters (for eta_d)

        Returns:
            CoefficientSet
        """
        offset, scale, fired, silent = _class_constants(src, event_class)
        x = src.mu * transmittance
        z = 1.0 + x + src.mu * src.eta_trigger - x * src.eta_trigger
        u = x * (1.0 - src.eta_trigger)
        v = x * (1.0 - relay.eta_d)
        w = u * (1.0 - relay.eta_d)
        return cls(
            event_class=event_class,
            mu=src.mu,
            transmittance=transmittance,
            eta_trigger=src.eta_trigger,
            eta_d=relay.eta_d,
            offset=offset,
            scale=scale,
            fired_weight=fired,
            silent_weight=silent,
            x=x,
            z=z,
            u=u,
            v=v,
            w=w,
        )

    @property
    def a0(self) -> float:
        """Vacuum weight after the channel."""
        return self.offset + self.scale * (
            self.fired_weight / (1.0 + self.x) + self.silent_weight / self.z
        )

    def weights(self, n_max: int) -> np.ndarray:
        """Photon-number weights a_0..a_n_max after the channel."""
        n = np.arange(1, n_max + 1, dtype=float)
        tail = self.scale * (
            self.fired_weight * np.power(self.x, n) / np.power(1.0 + self.x, n + 1)
            + self.silent_weight * np.power(self.u, n) / np.power(self.z, n + 1)
        )
        return np.concatenate(([self.a0], tail))

    def c1(self, p_dark: float) -> float:
        """Sum over n >= 1 of (a_n / scale) times the photon click probability."""
        x, z, u, v, w = self.x, self.z, self.u, self.v, self.w
        thermal = x / (1.0 + x) - (1.0 - p_dark) * v / ((1.0 + x) * (1.0 + x * self.eta_d))
        missed = u / (z * (z - u)) - (1.0 - p_dark) * w / (z * (z - w))
        return self.fired_weight * thermal + self.silent_weight * missed

    def c2(self, p_dark: float) -> float:
        """Constant dark-count correction kept by the printed closed form."""
        return -0.5 * p_dark * (self.fired_weight / (1.0 + self.x) + self.silent_weight / self.z)

    def consistency_residual(self) -> float:
        """|u (1 - eta_d) - v (1 - eta_trigger)|; zero up to rounding."""
        return abs(self.w - self.v * (1.0 - self.eta_trigger))


def _class_constants(src: SourceSetting, event_class: EventClass):
    """(offset, scale, A, B) of a class' photon-number weights."""
    if event_class is EventClass.PLAIN:
        post = post_selection_prob(src)
        if post == 0.0:
            return 1.0, 0.0, 0.0, 0.0
        return 1.0 - src.p_cor, src.p_cor / post, 1.0 + src.dark, -1.0
    offset = 0.5 * (1.0 - src.p_cor)
    if event_class is EventClass.TRIGGERED:
        return offset, src.p_cor, 1.0 + src.dark, -1.0
    return offset, src.p_cor, -src.dark, 1.0


def vacuum_weight(src: SourceSetting, event_class: EventClass) -> float:
    """Class weight of a vacuum pulse from a sender using the same source hardware."""
    if event_class is EventClass.PLAIN:
        return 1.0
    offset = 0.5 * (1.0 - src.p_cor)
    if event_class is EventClass.TRIGGERED:
        return offset + src.p_cor * src.dark
    return offset + src.p_cor * (1.0 - src.dark)


def transmittance(channel: ChannelParams, side: Side) -> float:
    """
    Fiber transmittance 10^(-alpha l / 10) for one sender.

    Args:
        channel: Channel parameters
        side: Sender side

    Returns:
        Transmittance in [0, 1]
    """
    length = channel.length_ac if side is Side.A else channel.length_bc
    return 10.0 ** (-channel.loss_coeff * length / 10.0)


def click_prob_photon(relay: RelayParams, n: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Probability that a detector clicks when n photons reach it.

    Args:
        relay: Relay parameters
        n: Photon number, scalar or array

    Returns:
        1 - (1 - p_d)(1 - eta_d)^n, exactly p_d at n = 0
    """
    counts = np.asarray(n, dtype=float)
    values = 1.0 - (1.0 - relay.p_dark) * np.power(1.0 - relay.eta_d, counts)
    values = np.where(counts == 0, relay.p_dark, values)
    if values.ndim == 0:
        return float(values)
    return values


def _clip(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def check_symmetric(
    src_a: SourceSetting, src_b: SourceSetting, channel: ChannelParams, operation: str
) -> None:
    """
    Verify that both senders are identical up to a relative 1e-12.

    Raises:
        AsymmetricConfig: If any source or channel parameter differs
    """
    pairs = [
        ("mu", src_a.mu, src_b.mu),
        ("p_cor", src_a.p_cor, src_b.p_cor),
        ("dark", src_a.dark, src_b.dark),
        ("eta_trigger", src_a.eta_trigger, src_b.eta_trigger),
        ("transmittance", transmittance(channel, Side.A), transmittance(channel, Side.B)),
    ]
    for name, value_a, value_b in pairs:
        if not math.isclose(value_a, value_b, rel_tol=SYMMETRY_RTOL, abs_tol=0.0):
            raise AsymmetricConfig(
                f"{name} differs between senders ({value_a!r} vs {value_b!r}); "
                "use the series oracle instead",
                operation,
            )


def symmetric_clicks(
    coeffs: CoefficientSet, p_dark: float, variant: ClosedFormVariant
) -> ClickProbabilities:
    """Closed-form click probabilities for two identical senders."""
    c1 = coeffs.scale * coeffs.c1(p_dark)
    c2 = coeffs.scale * coeffs.c2(p_dark) if variant is ClosedFormVariant.PRINTED else 0.0
    d0 = _clip(2.0 * coeffs.a0 * p_dark + c1 + c2)
    d1 = _clip(c1 - c2)
    return ClickProbabilities(d_r0=d0, d_r1=d1, d_s0=d0, d_s1=d1)


def vacuum_signal_clicks(
    coeffs: CoefficientSet, vacuum: float, p_dark: float
) -> ClickProbabilities:
    """Closed-form click probabilities when one sender emits a vacuum pulse of weight vacuum."""
    root_vacuum = math.sqrt(vacuum)
    root_signal = math.sqrt(max(coeffs.a0, 0.0))
    shared = 0.5 * coeffs.scale * coeffs.c1(p_dark)
    d0 = _clip(0.5 * (root_vacuum + root_signal) ** 2 * p_dark + shared)
    d1 = _clip(0.5 * (root_vacuum - root_signal) ** 2 * p_dark + shared)
    return ClickProbabilities(d_r0=d0, d_r1=d1, d_s0=d0, d_s1=d1)


def click_probs_signal_signal(
    src_a: SourceSetting,
    src_b: SourceSetting,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
    variant: ClosedFormVariant = ClosedFormVariant.AVERAGED,
) -> ClickProbabilities:
    """
    Detector click probabilities when both senders emit signal pulses.

    Args:
        src_a: Alice's source setting
        src_b: Bob's source setting
        channel: Fiber links
        relay: Relay parameters
        event_class: Weight family of both senders
        variant: Constant-term variant of the closed form

    Returns:
        ClickProbabilities with d_r0 = d_s0 and d_r1 = d_s1

    Raises:
        AsymmetricConfig: If the two senders differ
    """
    check_symmetric(src_a, src_b, channel, "relay.click_probs_signal_signal")
    coeffs = CoefficientSet.build(src_a, event_class, 0.5 * transmittance(channel, Side.A), relay)
    return symmetric_clicks(coeffs, relay.p_dark, variant)


def click_probs_vacuum_signal(
    src: SourceSetting,
    vacuum_side: Side,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
) -> ClickProbabilities:
    """
    Detector click probabilities when one sender emits vacuum.

    Args:
        src: Source setting of the sender that emits a signal
        vacuum_side: Side that sends the vacuum pulse
        channel: Fiber links
        relay: Relay parameters
        event_class: Weight family of both senders

    Returns:
        ClickProbabilities; no interference term survives
    """
    signal_side = Side.B if vacuum_side is Side.A else Side.A
    coeffs = CoefficientSet.build(
        src, event_class, 0.5 * transmittance(channel, signal_side), relay
    )
    return vacuum_signal_clicks(coeffs, vacuum_weight(src, event_class), relay.p_dark)


def gain_from_clicks(clicks: ClickProbabilities) -> float:
    """Probability that exactly one detector of each pair clicks."""
    r_pair = clicks.d_r0 * (1.0 - clicks.d_r1) + (1.0 - clicks.d_r0) * clicks.d_r1
    s_pair = clicks.d_s0 * (1.0 - clicks.d_s1) + (1.0 - clicks.d_s0) * clicks.d_s1
    return r_pair * s_pair


def expanded_signal_gain(
    src_a: SourceSetting,
    src_b: SourceSetting,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
    variant: ClosedFormVariant = ClosedFormVariant.AVERAGED,
) -> float:
    """
    Signal-signal gain from the expanded shorthand form.

    Written as [C0 + 2 P C1 - 2 C0 P (C1 - C2) - 2 P^2 (C1^2 - C2^2)]^2 with C0 = 2 a0 p_d; an
    independent code path to ``gain_from_clicks(click_probs_signal_signal(...))``.
    """
    check_symmetric(src_a, src_b, channel, "relay.expanded_signal_gain")
    coeffs = CoefficientSet.build(src_a, event_class, 0.5 * transmittance(channel, Side.A), relay)
    p_dark = relay.p_dark
    c0 = 2.0 * coeffs.a0 * p_dark
    p = coeffs.scale
    c1 = coeffs.c1(p_dark)
    c2 = coeffs.c2(p_dark) if variant is ClosedFormVariant.PRINTED else 0.0
    pair = c0 + 2.0 * p * c1 - 2.0 * c0 * p * (c1 - c2) - 2.0 * p**2 * (c1**2 - c2**2)
    return pair**2


def intrinsic_error_gain(clicks: ClickProbabilities) -> float:
    """Error gain E'Q = 2 D_r0 (1 - D_r1)(1 - D_s1) D_s0 before misalignment."""
    return 2.0 * clicks.d_r0 * (1.0 - clicks.d_r1) * (1.0 - clicks.d_s1) * clicks.d_s0


def apply_misalignment(
    e_prime: float,
    q: float,
    relay: RelayParams,
    reading: MisalignmentReading = MisalignmentReading.LINEAR,
) -> float:
    """
    Add misalignment errors to an intrinsic QBER.

    Args:
        e_prime: Intrinsic error rate E' in [0, 1]
        q: Gain the error rate refers to; a zero gain carries no error information
        relay: Relay parameters
        reading: How the self-referential relation is resolved

    Returns:
        QBER E

    Raises:
        ParameterValidationError: If e_prime lies outside [0, 1]
    """
    if not 0.0 <= e_prime <= 1.0:
        raise ParameterValidationError(
            f"intrinsic error rate must lie in [0, 1], got {e_prime}", "relay.apply_misalignment"
        )
    if q <= 0.0:
        return relay.e_noise
    e_d, e_0 = relay.e_misalign, relay.e_noise
    if reading is MisalignmentReading.SUBSTITUTED:
        return e_prime + e_d * (1.0 - e_prime / e_0)
    return (e_prime + e_d) / (1.0 + e_d / e_0)


@dataclass(frozen=True)
class ZBasisGain:
    """Z-basis gain split into its coincidence and error paths."""

    q_z: float
    e_z: float
    q_c: float
    q_e: float

    @classmethod
    def from_paths(cls, q_c: float, q_e: float, relay: RelayParams) -> "ZBasisGain":
        """Combine the coincidence and error paths with E_Z Q_Z = e_d Q^C + (1 - e_d) Q^E."""
        q_z = q_c + q_e
        if q_z <= 0.0:
            return cls(q_z=0.0, e_z=relay.e_noise, q_c=q_c, q_e=q_e)
        e_z = (relay.e_misalign * q_c + (1.0 - relay.e_misalign) * q_e) / q_z
        return cls(q_z=q_z, e_z=e_z, q_c=q_c, q_e=q_e)


def z_basis_gain(
    src_a: SourceSetting,
    src_b: SourceSetting,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
    variant: ClosedFormVariant = ClosedFormVariant.AVERAGED,
) -> ZBasisGain:
    """
    Z-basis gain and QBER when both senders emit signal pulses.

    Without interference each sender's pulse reaches its own detector, so the coincidence path
    is 2 (1 - D_A)(1 - D_B) D_A D_B at half transmittance. The error path uses the
    full-transmittance shorthands and is weighted by 2 p_d (1 - p_d).

    Raises:
        AsymmetricConfig: If the two senders differ
    """
    check_symmetric(src_a, src_b, channel, "relay.z_basis_gain")
    p_dark = relay.p_dark
    eta_c = transmittance(channel, Side.A)
    half = CoefficientSet.build(src_a, event_class, 0.5 * eta_c, relay)
    full = CoefficientSet.build(src_a, event_class, eta_c, relay)
    d_z = _clip(half.a0 * p_dark + half.scale * half.c1(p_dark))
    q_c = 2.0 * (1.0 - d_z) ** 2 * d_z**2
    primed = symmetric_clicks(full, p_dark, variant)
    q_e = 2.0 * p_dark * (1.0 - p_dark) * primed.d_r0 * (1.0 - primed.d_r1)
    return ZBasisGain.from_paths(q_c, q_e, relay)


def z_basis_gain_vacuum_signal(
    src: SourceSetting,
    vacuum_side: Side,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
) -> ZBasisGain:
    """Z-basis gain and QBER when one sender emits vacuum."""
    signal_side = Side.B if vacuum_side is Side.A else Side.A
    p_dark = relay.p_dark
    eta_c = transmittance(channel, signal_side)
    vacuum = vacuum_weight(src, event_class)
    half = CoefficientSet.build(src, event_class, 0.5 * eta_c, relay)
    full = CoefficientSet.build(src, event_class, eta_c, relay)
    d_vacuum = _clip(vacuum * p_dark)
    d_signal = _clip(half.a0 * p_dark + half.scale * half.c1(p_dark))
    q_c = 2.0 * (1.0 - d_vacuum) * (1.0 - d_signal) * d_vacuum * d_signal
    primed = vacuum_signal_clicks(full, vacuum, p_dark)
    q_e = 2.0 * p_dark * (1.0 - p_dark) * primed.d_r0 * (1.0 - primed.d_r1)
    return ZBasisGain.from_paths(q_c, q_e, relay)
