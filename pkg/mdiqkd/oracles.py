"""
Brute-force oracles for the relay closed forms.

The oracles never use the closed-form shorthands. Photon-number weights come from the
``mdiqkd.sources`` distributions pushed through explicit Bernoulli transforms. Click
probabilities are written before the phase average, as functions of the relative phase
between the senders. The average is then taken by composite trapezoid quadrature over
[0, 2 pi].
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from mdiqkd.relay import (
    ChannelParams,
    ClickProbabilities,
    EventClass,
    RelayParams,
    Side,
    ZBasisGain,
    click_prob_photon,
    transmittance,
)
from mdiqkd.sources import (
    DEFAULT_N_MAX,
    DistributionFamily,
    PhotonNumberDistribution,
    SourceSetting,
    loss_transform,
)

DEFAULT_NODES = 2048

_CLASS_FAMILIES = {
    EventClass.PLAIN: DistributionFamily.HERALDED,
    EventClass.TRIGGERED: DistributionFamily.TRIGGERED,
    EventClass.NON_TRIGGERED: DistributionFamily.NON_TRIGGERED,
}


@dataclass(frozen=True)
class OracleClicks:
    """Phase-averaged click probabilities with their numerical residuals."""

    clicks: ClickProbabilities
    imaginary_residual: float
    tail_bound: float


def class_distribution(
    src: SourceSetting, event_class: EventClass, n_max: int = DEFAULT_N_MAX
) -> PhotonNumberDistribution:
    """Unclamped photon-number distribution behind an event class."""
    return PhotonNumberDistribution(_CLASS_FAMILIES[event_class], src, n_max, clamp_tail=False)


def photon_weights(
    src: SourceSetting,
    event_class: EventClass,
    eta: float,
    n_max: int = DEFAULT_N_MAX,
) -> np.ndarray:
    """Class weights of a source after a channel of transmittance eta."""
    return loss_transform(class_distribution(src, event_class, n_max), eta).pmf()


def vacuum_weights(
    src: SourceSetting, event_class: EventClass, n_max: int = DEFAULT_N_MAX
) -> np.ndarray:
    """Class weights of a vacuum pulse sent with the same hardware as src."""
    weights = np.zeros(n_max + 1)
    weights[0] = class_distribution(src.with_mu(0.0), event_class, n_max).probability(0)
    return weights


def series_click_probabilities(
    weights_a: np.ndarray,
    weights_b: np.ndarray,
    relay: RelayParams,
    delta_phi: float = 0.0,
    nodes: int = DEFAULT_NODES,
    tail_bound: float = 0.0,
) -> OracleClicks:
    """
    Phase-averaged click probabilities from explicit photon-number weights.

    At relative phase theta the r-pair detectors see
    D_r0/1(theta) = T0/K0 p_d + sum_n [(a_n + b_n)/2 +- sqrt(a_n b_n) cos(n theta)] D_n,
    with sqrt(T0), sqrt(K0) = sqrt(a_0/2) +- sqrt(b_0/2). The s pair sees theta + delta_phi.

    Args:
        weights_a: Alice's weights a_0..a_N at the relay
        weights_b: Bob's weights b_0..b_N at the relay
        relay: Relay parameters
        delta_phi: Encoding phase difference, 0 or pi
        nodes: Number of trapezoid panels over [0, 2 pi]
        tail_bound: Truncation tail bound to carry into the result

    Returns:
        OracleClicks
    """
    size = max(len(weights_a), len(weights_b))
    a = np.zeros(size)
    b = np.zeros(size)
    a[: len(weights_a)] = weights_a
    b[: len(weights_b)] = weights_b
    detect = click_prob_photon(relay, np.arange(size))

    constructive = (math.sqrt(a[0] / 2.0) + math.sqrt(b[0] / 2.0)) ** 2
    destructive = (math.sqrt(a[0] / 2.0) - math.sqrt(b[0] / 2.0)) ** 2
    incoherent = float(np.sum(0.5 * (a[1:] + b[1:]) * detect[1:]))
    amplitude = np.sqrt(np.clip(a[1:] * b[1:], 0.0, None)) * detect[1:]
    orders = np.arange(1, size)

    theta = np.linspace(0.0, 2.0 * math.pi, nodes + 1)
    r_phase = np.exp(1j * np.outer(theta, orders)) @ amplitude
    s_phase = np.exp(1j * np.outer(theta + delta_phi, orders)) @ amplitude
    r_mean = trapezoid(r_phase, theta) / (2.0 * math.pi)
    s_mean = trapezoid(s_phase, theta) / (2.0 * math.pi)

    def clip(value: float) -> float:
        return min(max(value, 0.0), 1.0)

    clicks = ClickProbabilities(
        d_r0=clip(constructive * relay.p_dark + incoherent + r_mean.real),
        d_r1=clip(destructive * relay.p_dark + incoherent - r_mean.real),
        d_s0=clip(constructive * relay.p_dark + incoherent + s_mean.real),
        d_s1=clip(destructive * relay.p_dark + incoherent - s_mean.real),
    )
    residual = max(abs(r_mean.imag), abs(s_mean.imag))
    return OracleClicks(clicks=clicks, imaginary_residual=float(residual), tail_bound=tail_bound)


def series_z_basis(
    half_a: np.ndarray,
    half_b: np.ndarray,
    full_a: np.ndarray,
    full_b: np.ndarray,
    relay: RelayParams,
    nodes: int = DEFAULT_NODES,
) -> ZBasisGain:
    """
    Z-basis gain as a product of per-sender marginals.

    Args:
        half_a: Alice's weights at half the channel transmittance
        half_b: Bob's weights at half the channel transmittance
        full_a: Alice's weights at the full channel transmittance
        full_b: Bob's weights at the full channel transmittance
        relay: Relay parameters
        nodes: Quadrature panels for the error path

    Returns:
        ZBasisGain
    """
    d_a = float(np.dot(half_a, click_prob_photon(relay, np.arange(len(half_a)))))
    d_b = float(np.dot(half_b, click_prob_photon(relay, np.arange(len(half_b)))))
    q_c = 2.0 * (1.0 - d_a) * (1.0 - d_b) * d_a * d_b
    primed = series_click_probabilities(full_a, full_b, relay, nodes=nodes).clicks
    q_e = 2.0 * relay.p_dark * (1.0 - relay.p_dark) * primed.d_r0 * (1.0 - primed.d_r1)
    return ZBasisGain.from_paths(q_c, q_e, relay)


def _tail(src: SourceSetting, event_class: EventClass, n_max: int) -> float:
    return class_distribution(src, event_class, n_max).tail_bound()


def oracle_signal_signal(
    src_a: SourceSetting,
    src_b: SourceSetting,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
    n_max: int = DEFAULT_N_MAX,
    nodes: int = DEFAULT_NODES,
) -> OracleClicks:
    """Series oracle for the signal-signal click probabilities; accepts asymmetric inputs."""
    weights_a = photon_weights(src_a, event_class, 0.5 * transmittance(channel, Side.A), n_max)
    weights_b = photon_weights(src_b, event_class, 0.5 * transmittance(channel, Side.B), n_max)
    tail = max(_tail(src_a, event_class, n_max), _tail(src_b, event_class, n_max))
    return series_click_probabilities(weights_a, weights_b, relay, nodes=nodes, tail_bound=tail)


def oracle_vacuum_signal(
    src: SourceSetting,
    vacuum_side: Side,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
    n_max: int = DEFAULT_N_MAX,
    nodes: int = DEFAULT_NODES,
) -> OracleClicks:
    """Series oracle for the vacuum-signal click probabilities."""
    signal_side = Side.B if vacuum_side is Side.A else Side.A
    signal = photon_weights(src, event_class, 0.5 * transmittance(channel, signal_side), n_max)
    vacuum = vacuum_weights(src, event_class, n_max)
    if vacuum_side is Side.A:
        weights_a, weights_b = vacuum, signal
    else:
        weights_a, weights_b = signal, vacuum
    tail = _tail(src, event_class, n_max)
    return series_click_probabilities(weights_a, weights_b, relay, nodes=nodes, tail_bound=tail)


def oracle_z_basis(
    src_a: SourceSetting,
    src_b: SourceSetting,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
    n_max: int = DEFAULT_N_MAX,
    nodes: int = DEFAULT_NODES,
) -> ZBasisGain:
    """Product-of-marginals oracle for the signal-signal Z-basis gain."""
    eta_a = transmittance(channel, Side.A)
    eta_b = transmittance(channel, Side.B)
    return series_z_basis(
        photon_weights(src_a, event_class, 0.5 * eta_a, n_max),
        photon_weights(src_b, event_class, 0.5 * eta_b, n_max),
        photon_weights(src_a, event_class, eta_a, n_max),
        photon_weights(src_b, event_class, eta_b, n_max),
        relay,
        nodes=nodes,
    )


def oracle_z_basis_vacuum_signal(
    src: SourceSetting,
    vacuum_side: Side,
    channel: ChannelParams,
    relay: RelayParams,
    event_class: EventClass = EventClass.PLAIN,
    n_max: int = DEFAULT_N_MAX,
    nodes: int = DEFAULT_NODES,
) -> ZBasisGain:
    """Product-of-marginals oracle for a vacuum-signal Z-basis gain."""
    signal_side = Side.B if vacuum_side is Side.A else Side.A
    eta = transmittance(channel, signal_side)
    vacuum = vacuum_weights(src, event_class, n_max)
    half = photon_weights(src, event_class, 0.5 * eta, n_max)
    full = photon_weights(src, event_class, eta, n_max)
    if vacuum_side is Side.A:
        return series_z_basis(vacuum, half, vacuum, full, relay, nodes=nodes)
    return series_z_basis(half, vacuum, full, vacuum, relay, nodes=nodes)
