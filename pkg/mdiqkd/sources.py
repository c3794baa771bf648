"""Photon-number statistics of heralded SPDC sources and their loss transforms."""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy.special import gammaln, xlogy
from scipy.stats import binom, poisson

from mdiqkd.exceptions import DomainExceeded, ParameterValidationError

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 80


@dataclass(frozen=True)
class SourceSetting:
    """
    Physical parameters of one SPDC arm at one intensity.

    Attributes:
        mu: Mean photon number per mode
        eta_trigger: Efficiency of the local heralding detector
        dark: Dark count rate of the heralding detector
        p_cor: Probability that a trigger heralds a genuinely correlated pair
    """

    mu: float
    eta_trigger: float = 0.4
    dark: float = 5e-5
    p_cor: float = 1.0

    def __post_init__(self):
        operation = "sources.SourceSetting"
        if not math.isfinite(self.mu) or self.mu < 0:
            raise ParameterValidationError(f"mu must be finite and >= 0, got {self.mu}", operation)
        if not 0.0 <= self.eta_trigger <= 1.0:
            raise ParameterValidationError(
                f"eta_trigger must lie in [0, 1], got {self.eta_trigger}", operation
            )
        if not 0.0 <= self.dark < 1.0:
            raise ParameterValidationError(f"dark must lie in [0, 1), got {self.dark}", operation)
        if not 0.0 <= self.p_cor <= 1.0:
            raise ParameterValidationError(f"p_cor must lie in [0, 1], got {self.p_cor}", operation)

    @property
    def post_selection(self) -> float:
        """Probability that the heralding detector fires."""
        return post_selection_prob(self)

    def with_mu(self, mu: float) -> "SourceSetting":
        """Return a copy of this setting at a different mean photon number."""
        return replace(self, mu=mu)


class DistributionFamily(Enum):
    """Photon-number distribution families."""

    THERMAL = "thermal"  # single-mode thermal, Bose-Einstein
    HERALDED = "heralded"  # conditional state given a trigger
    TRIGGERED = "triggered"  # joint probability of n photons and a trigger
    NON_TRIGGERED = "non_triggered"  # joint probability of n photons and no trigger
    POISSON = "poisson"  # weak coherent reference


def post_selection_prob(src: SourceSetting) -> float:
    """
    Probability that the heralding detector fires for a source setting.

    Evaluates 1 + d - 1/(1 + mu*eta) in the cancellation-free form d + mu*eta/(1 + mu*eta).

    Args:
        src: Source setting

    Returns:
        Post-selection probability
    """
    gain = src.mu * src.eta_trigger
    return src.dark + gain / (1.0 + gain)


def thermal_prob(mean: float, n: int) -> float:
    """Single-mode thermal probability mean^n / (1 + mean)^(n + 1)."""
    return float(np.exp(xlogy(n, mean) - (n + 1) * np.log1p(mean)))


def _thermal_vector(mean: float, n_max: int) -> np.ndarray:
    """Thermal probabilities for n = 0..n_max, computed in log space."""
    n = np.arange(n_max + 1, dtype=float)
    return np.exp(xlogy(n, mean) - (n + 1) * np.log1p(mean))


def _herald_weights(src: SourceSetting, n: np.ndarray, fired: bool) -> np.ndarray:
    """Probability that the heralding detector fires (or stays silent) given n pair photons."""
    no_click = np.power(1.0 - src.eta_trigger, n)
    if fired:
        return 1.0 - no_click + src.dark
    return no_click - src.dark


def _mixture_constants(family: DistributionFamily, src: SourceSetting) -> Tuple[float, float]:
    """Vacuum offset and correlated-component scale of a heralded-type family."""
    if family is DistributionFamily.HERALDED:
        post = post_selection_prob(src)
        if post == 0.0:
            # Nothing ever heralds; the conditional state is taken to be vacuum.
            return 1.0, 0.0
        return 1.0 - src.p_cor, src.p_cor / post
    return 0.5 * (1.0 - src.p_cor), src.p_cor


def _source_vector(
    family: DistributionFamily, src: SourceSetting, n_max: int, clamp: bool
) -> np.ndarray:
    """Probabilities n = 0..n_max of a heralded, triggered or non-triggered family."""
    n = np.arange(n_max + 1, dtype=float)
    fired = family is not DistributionFamily.NON_TRIGGERED
    offset, scale = _mixture_constants(family, src)
    values = scale * _thermal_vector(src.mu, n_max) * _herald_weights(src, n, fired)
    values[0] += offset
    if clamp and np.any(values < 0):
        logger.debug(
            f"Clamping {int(np.sum(values < 0))} negative non-triggered probabilities to 0"
        )
        values = np.clip(values, 0.0, None)
    return values


def heralded_prob(src: SourceSetting, n: int) -> float:
    """
    Photon-number probability of the heralded (conditional) SPDC state.

    Args:
        src: Source setting
        n: Photon number

    Returns:
        P_n for the heralded state
    """
    return float(_source_vector(DistributionFamily.HERALDED, src, n, clamp=False)[n])


def triggered_prob(src: SourceSetting, n: int) -> float:
    """Joint probability of n photons and a trigger."""
    return float(_source_vector(DistributionFamily.TRIGGERED, src, n, clamp=False)[n])


def non_triggered_prob(src: SourceSetting, n: int, clamp: bool = True) -> float:
    """
    Joint probability of n photons and no trigger.

    Args:
        src: Source setting
        n: Photon number
        clamp: Clamp the negative tail (where (1 - eta)^n < d) to 0

    Returns:
        P^NT_n
    """
    return float(_source_vector(DistributionFamily.NON_TRIGGERED, src, n, clamp=clamp)[n])


def poisson_prob(mean: float, n: int) -> float:
    """Poisson probability e^-mean * mean^n / n!."""
    return float(np.exp(xlogy(n, mean) - mean - gammaln(n + 1)))


def validity_bound(src: SourceSetting, n_max: int = DEFAULT_N_MAX) -> int:
    """
    Largest photon number up to which the non-triggered distribution stays positive.

    Args:
        src: Source setting
        n_max: Truncation index

    Returns:
        Largest n <= n_max with (1 - eta)^k > d for every 1 <= k <= n
    """
    if src.p_cor == 0.0:
        return 0
    bound = 0
    for k in range(1, n_max + 1):
        if (1.0 - src.eta_trigger) ** k <= src.dark:
            break
        bound = k
    return bound


@dataclass(frozen=True)
class TriggerRatio:
    """Ratio of triggered to non-triggered probability at one photon number."""

    n: int
    r_n: float


def trigger_ratio(src: SourceSetting, n: int) -> TriggerRatio:
    """
    Compute r_n = P^T_n / P^NT_n.

    Args:
        src: Source setting
        n: Photon number

    Returns:
        TriggerRatio for n

    Raises:
        DomainExceeded: If the raw non-triggered probability is not positive
    """
    denominator = non_triggered_prob(src, n, clamp=False)
    if denominator <= 0.0:
        raise DomainExceeded(
            f"non-triggered probability at n={n} is {denominator:.3e}; cap n at "
            f"{validity_bound(src, max(n, 1))}",
            "sources.trigger_ratio",
        )
    return TriggerRatio(n=n, r_n=triggered_prob(src, n) / denominator)


@dataclass(frozen=True)
class TriggerRatioSet:
    """Pair ratios r_nm = r_n(A) * r_m(B) used by the passive estimator."""

    r00: float
    r11: float
    r12: float
    r21: float

    @property
    def r_min(self) -> float:
        """Smaller of r_12 and r_21."""
        return min(self.r12, self.r21)

    @classmethod
    def from_sources(cls, src_a: SourceSetting, src_b: SourceSetting) -> "TriggerRatioSet":
        """Build the pair ratios from both senders' source settings."""
        ra = [trigger_ratio(src_a, n).r_n for n in range(3)]
        rb = [trigger_ratio(src_b, n).r_n for n in range(3)]
        return cls(r00=ra[0] * rb[0], r11=ra[1] * rb[1], r12=ra[1] * rb[2], r21=ra[2] * rb[1])


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """
    Truncated photon-number distribution with an optional chain of loss stages.

    Attributes:
        family: Distribution family
        params: Defining SourceSetting, or the scalar mean for thermal and Poisson
        n_max: Truncation index for series evaluations
        losses: Transmittances applied in order through Bernoulli transforms
        clamp_tail: Clamp the negative non-triggered tail to 0
    """

    family: DistributionFamily
    params: Union[SourceSetting, float]
    n_max: int = DEFAULT_N_MAX
    losses: Tuple[float, ...] = ()
    clamp_tail: bool = True

    def __post_init__(self):
        scalar = self.family in (DistributionFamily.THERMAL, DistributionFamily.POISSON)
        if scalar and isinstance(self.params, SourceSetting):
            raise ParameterValidationError(
                f"{self.family.value} distributions take a scalar mean",
                "sources.PhotonNumberDistribution",
            )
        if not scalar and not isinstance(self.params, SourceSetting):
            raise ParameterValidationError(
                f"{self.family.value} distributions take a SourceSetting",
                "sources.PhotonNumberDistribution",
            )
        if scalar and (not math.isfinite(self.params) or self.params < 0):
            raise ParameterValidationError(
                f"mean must be finite and >= 0, got {self.params}",
                "sources.PhotonNumberDistribution",
            )
        if self.n_max < 1:
            raise ParameterValidationError(
                f"n_max must be >= 1, got {self.n_max}", "sources.PhotonNumberDistribution"
            )

    @classmethod
    def thermal(cls, mean: float, n_max: int = DEFAULT_N_MAX) -> "PhotonNumberDistribution":
        return cls(DistributionFamily.THERMAL, float(mean), n_max)

    @classmethod
    def poisson(cls, mean: float, n_max: int = DEFAULT_N_MAX) -> "PhotonNumberDistribution":
        return cls(DistributionFamily.POISSON, float(mean), n_max)

    @classmethod
    def heralded(cls, src: SourceSetting, n_max: int = DEFAULT_N_MAX) -> "PhotonNumberDistribution":
        return cls(DistributionFamily.HERALDED, src, n_max)

    @classmethod
    def triggered(
        cls, src: SourceSetting, n_max: int = DEFAULT_N_MAX
    ) -> "PhotonNumberDistribution":
        return cls(DistributionFamily.TRIGGERED, src, n_max)

    @classmethod
    def non_triggered(
        cls, src: SourceSetting, n_max: int = DEFAULT_N_MAX, clamp_tail: bool = True
    ) -> "PhotonNumberDistribution":
        return cls(DistributionFamily.NON_TRIGGERED, src, n_max, clamp_tail=clamp_tail)

    @property
    def source(self) -> SourceSetting:
        """The defining source setting."""
        if not isinstance(self.params, SourceSetting):
            raise ParameterValidationError(
                f"{self.family.value} distribution has no source setting",
                "sources.PhotonNumberDistribution",
            )
        return self.params

    @property
    def mean(self) -> float:
        """Mean photon number per mode of the underlying (lossless) source."""
        if isinstance(self.params, SourceSetting):
            return self.params.mu
        return float(self.params)

    @property
    def validity_bound(self) -> int:
        """Largest photon number with a positive raw probability."""
        if self.family is DistributionFamily.NON_TRIGGERED:
            return validity_bound(self.source, self.n_max)
        return self.n_max

    def pmf(self) -> np.ndarray:
        """Probabilities for n = 0..n_max."""
        return _cached_pmf(self).copy()

    def probability(self, n: int) -> float:
        """
        Probability of exactly n photons.

        Args:
            n: Photon number

        Returns:
            Probability; beyond n_max a lossy distribution reports 0
        """
        if n < 0:
            raise ParameterValidationError(
                f"photon number must be >= 0, got {n}",
                "sources.PhotonNumberDistribution.probability",
            )
        if n <= self.n_max:
            return float(_cached_pmf(self)[n])
        if self.losses:
            return 0.0
        return float(_base_vector(self.family, self.params, n, self.clamp_tail)[n])

    def total_mass(self) -> float:
        """Sum of the truncated probabilities."""
        return float(np.sum(_cached_pmf(self)))

    def tail_bound(self) -> float:
        """Upper bound on the probability mass beyond n_max."""
        if self.family is DistributionFamily.POISSON:
            return float(poisson.sf(self.n_max, self.mean))
        ratio = self.mean / (1.0 + self.mean)
        thermal_tail = ratio ** (self.n_max + 1)
        if self.family is DistributionFamily.THERMAL:
            return thermal_tail
        src = self.source
        scale = src.p_cor * (1.0 + src.dark)
        if self.family is DistributionFamily.HERALDED:
            post = post_selection_prob(src)
            if post == 0.0:
                return 0.0
            scale /= post
        return min(1.0, scale * thermal_tail)


def _base_vector(
    family: DistributionFamily, params: Union[SourceSetting, float], n_max: int, clamp: bool
) -> np.ndarray:
    """Lossless probabilities n = 0..n_max of any family."""
    if family is DistributionFamily.THERMAL:
        return _thermal_vector(params, n_max)
    if family is DistributionFamily.POISSON:
        n = np.arange(n_max + 1, dtype=float)
        return np.exp(xlogy(n, params) - params - gammaln(n + 1))
    return _source_vector(family, params, n_max, clamp)


@lru_cache(maxsize=4096)
def _cached_pmf(pnd: PhotonNumberDistribution) -> np.ndarray:
    vector = _base_vector(pnd.family, pnd.params, pnd.n_max, pnd.clamp_tail)
    for eta in pnd.losses:
        vector = bernoulli_transform(vector, eta)
    vector.setflags(write=False)
    return vector


@lru_cache(maxsize=256)
def _bernoulli_matrix(size: int, eta: float) -> np.ndarray:
    """B[n, k] = C(k, n) eta^n (1 - eta)^(k - n)."""
    k = np.arange(size)
    matrix = binom.pmf(k[:, None], k[None, :], eta)
    matrix.setflags(write=False)
    return matrix


def bernoulli_transform(pmf: np.ndarray, eta: float) -> np.ndarray:
    """
    Apply a lossy channel of transmittance eta to a truncated distribution.

    Each photon survives independently with probability eta, so the output probability of
    n photons is sum_k C(k, n) eta^n (1 - eta)^(k - n) p_k.

    Args:
        pmf: Probabilities for n = 0..len(pmf) - 1
        eta: Transmittance in [0, 1]

    Returns:
        Transformed probabilities on the same support
    """
    if not 0.0 <= eta <= 1.0:
        raise ParameterValidationError(
            f"transmittance must lie in [0, 1], got {eta}", "sources.bernoulli_transform"
        )
    vector = np.asarray(pmf, dtype=float)
    return _bernoulli_matrix(vector.size, float(eta)) @ vector


def loss_transform(pnd: PhotonNumberDistribution, eta: float) -> PhotonNumberDistribution:
    """
    Distribution after a lossy channel of transmittance eta.

    Thermal light stays thermal with mean mu*eta. Every other family gains a Bernoulli stage.

    Args:
        pnd: Input distribution
        eta: Transmittance in [0, 1]

    Returns:
        Output distribution
    """
    if not 0.0 <= eta <= 1.0:
        raise ParameterValidationError(
            f"transmittance must lie in [0, 1], got {eta}", "sources.loss_transform"
        )
    if eta == 1.0:
        return pnd
    if pnd.family is DistributionFamily.THERMAL:
        return replace(pnd, params=pnd.mean * eta)
    return replace(pnd, losses=pnd.losses + (float(eta),))
