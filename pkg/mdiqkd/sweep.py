"""Distance sweeps with per-distance intensity optimization."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mdiqkd.exceptions import NoFeasibleConfig, ParameterValidationError, SimulationError
from mdiqkd.finite_size import FluctuationParams
from mdiqkd.gains import build_gain_table
from mdiqkd.keyrate import KeyRateResult
from mdiqkd.pipeline import EvaluationOptions, ProtocolEvaluation, TableBuilder, evaluate_protocol
from mdiqkd.protocol import IntensitySetting, Protocol, ProtocolConfig, SourceHardware
from mdiqkd.relay import RelayParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntensityAxis:
    """
    Candidate intensities along one role (signal or decoy).

    Either a range [lower, upper] sampled with ``points`` values at a fixed p_cor, or an
    explicit table of (mu, p_cor) rows.

    Attributes:
        lower: Smallest mean photon number of the range
        upper: Largest mean photon number of the range
        points: Samples across the range
        p_cor: Correlation probability paired with every range value
        table: Explicit (mu, p_cor) rows; overrides the range
        log_scale: Sample the range geometrically
    """

    lower: float = 0.0
    upper: float = 0.0
    points: int = 1
    p_cor: float = 1.0
    table: Optional[Tuple[Tuple[float, float], ...]] = None
    log_scale: bool = True

    def __post_init__(self):
        operation = "sweep.IntensityAxis"
        if self.table is not None:
            if not self.table:
                raise ParameterValidationError("intensity table is empty", operation)
            for mu, p_cor in self.table:
                IntensitySetting(mu, p_cor)
            return
        if not 0.0 <= self.lower <= self.upper or not math.isfinite(self.upper):
            raise ParameterValidationError(
                f"need 0 <= lower <= upper, got [{self.lower}, {self.upper}]", operation
            )
        if self.points < 1:
            raise ParameterValidationError(f"points must be >= 1, got {self.points}", operation)
        if self.log_scale and self.points > 1 and self.lower <= 0.0:
            raise ParameterValidationError("a log-scale range needs lower > 0", operation)
        IntensitySetting(self.lower, self.p_cor)

    @classmethod
    def fixed(cls, mu: float, p_cor: float = 1.0) -> "IntensityAxis":
        return cls(lower=mu, upper=mu, points=1, p_cor=p_cor)

    @classmethod
    def from_table(cls, rows: Sequence[Tuple[float, float]]) -> "IntensityAxis":
        return cls(table=tuple((float(mu), float(p_cor)) for mu, p_cor in rows))

    def values(self) -> List[IntensitySetting]:
        """Candidate intensity settings in increasing order of mu."""
        if self.table is not None:
            return [IntensitySetting(mu, p_cor) for mu, p_cor in sorted(self.table)]
        if self.points == 1 or self.lower == self.upper:
            return [IntensitySetting(self.lower, self.p_cor)]
        if self.log_scale:
            grid = np.geomspace(self.lower, self.upper, self.points)
        else:
            grid = np.linspace(self.lower, self.upper, self.points)
        return [IntensitySetting(float(mu), self.p_cor) for mu in grid]

    def refined(self, center: float, shrink_factor: float) -> "IntensityAxis":
        """
        Shrink a range axis around center by shrink_factor, staying inside the range.

        Tables and single-valued axes are returned unchanged.
        """
        if self.table is not None or self.points == 1 or self.lower == self.upper:
            return self
        if self.log_scale:
            half = 0.5 * math.log(self.upper / self.lower) / shrink_factor
            lower = max(self.lower, center * math.exp(-half))
            upper = min(self.upper, center * math.exp(half))
        else:
            half = 0.5 * (self.upper - self.lower) / shrink_factor
            lower = max(self.lower, center - half)
            upper = min(self.upper, center + half)
        return IntensityAxis(lower, upper, self.points, self.p_cor, None, self.log_scale)


@dataclass(frozen=True)
class SearchSpace:
    """Signal and decoy axes searched for one protocol, shared by both senders."""

    signal: IntensityAxis
    decoy: Optional[IntensityAxis] = None
    hardware: SourceHardware = field(default_factory=SourceHardware)

    def candidates(self, protocol: Protocol) -> List[ProtocolConfig]:
        """Symmetric configurations with signal > decoy wherever a decoy is searched."""
        decoys: List[Optional[IntensitySetting]] = [None]
        if self.decoy is not None:
            decoys = list(self.decoy.values())
        elif protocol.requires_decoy:
            raise ParameterValidationError(
                f"{protocol.value} needs a decoy axis", "sweep.SearchSpace.candidates"
            )
        configs = []
        for signal in self.signal.values():
            for decoy in decoys:
                if decoy is not None and not signal.mu > decoy.mu > 0.0:
                    continue
                configs.append(ProtocolConfig.symmetric(protocol, signal, decoy, self.hardware))
        return configs

    def refined(self, incumbent: ProtocolConfig, shrink_factor: float) -> "SearchSpace":
        """Shrink every range axis around the incumbent configuration."""
        decoy = self.decoy
        if decoy is not None and incumbent.decoy_a is not None:
            decoy = decoy.refined(incumbent.decoy_a.mu, shrink_factor)
        return SearchSpace(
            signal=self.signal.refined(incumbent.signal_a.mu, shrink_factor),
            decoy=decoy,
            hardware=self.hardware,
        )


@dataclass(frozen=True)
class SweepSpec:
    """
    Distances and search space of one curve.

    Attributes:
        distances: Total sender-to-sender distances in km
        protocol: Decoy-state protocol
        search_space: Candidate intensities
        fluctuation: Finite-size parameters, if any
        refinement_passes: Refinement passes after the coarse grid
        shrink_factor: Span reduction per refinement pass
        symmetric: Give both senders the same intensities; the closed-form gains
            exist only for symmetric configurations
    """

    distances: Tuple[float, ...]
    protocol: Protocol
    search_space: SearchSpace
    fluctuation: Optional[FluctuationParams] = None
    refinement_passes: int = 2
    shrink_factor: float = 5.0
    symmetric: bool = True

    def __post_init__(self):
        operation = "sweep.SweepSpec"
        if not self.distances:
            raise ParameterValidationError("distance list is empty", operation)
        if any(not math.isfinite(d) or d < 0 for d in self.distances):
            raise ParameterValidationError("distances must be finite and >= 0", operation)
        if any(later < earlier for earlier, later in zip(self.distances, self.distances[1:])):
            raise ParameterValidationError(
                f"distances must be ascending, got {list(self.distances)}", operation
            )
        if not self.symmetric:
            raise ParameterValidationError(
                "sweeps evaluate closed-form gains, which need symmetric senders", operation
            )
        if self.refinement_passes < 0:
            raise ParameterValidationError("refinement_passes must be >= 0", operation)
        if not self.shrink_factor > 1.0:
            raise ParameterValidationError("shrink_factor must be > 1", operation)


@dataclass(frozen=True)
class OptimizationResult:
    """Best configuration found at one distance."""

    config: ProtocolConfig
    result: KeyRateResult
    evaluation: ProtocolEvaluation
    pass_rates: Tuple[float, ...] = ()


@dataclass(frozen=True)
class SweepPoint:
    """Outcome of one distance of a sweep."""

    distance: float
    optimum: Optional[OptimizationResult] = None
    reason: Optional[str] = None

    @property
    def feasible(self) -> bool:
        return self.optimum is not None

    @property
    def rate(self) -> float:
        return self.optimum.result.rate if self.optimum else 0.0


def _tie_key(evaluation: ProtocolEvaluation) -> Tuple[float, float, float]:
    config = evaluation.config
    decoy = config.decoy_a.mu if config.decoy_a is not None else 0.0
    return (-evaluation.result.rate, config.signal_a.mu, decoy)


class SweepOptimizer:
    """
    Grid-and-refine intensity optimizer.

    Each distance is searched on the coarse grid of the search space, then refined
    ``refinement_passes`` times around the incumbent. Candidates whose evaluation raises
    a typed error or yields a zero rate count as infeasible.
    """

    def __init__(
        self,
        relay: Optional[RelayParams] = None,
        options: Optional[EvaluationOptions] = None,
        num_threads: int = 1,
        table_builder: TableBuilder = build_gain_table,
    ):
        """
        Initialize the optimizer.

        Args:
            relay: Relay parameters, defaults when omitted
            options: Evaluation options, defaults when omitted
            num_threads: Worker threads for candidate evaluation
            table_builder: Gain-table builder handed to ``evaluate_protocol``
        """
        if num_threads < 1:
            raise ParameterValidationError(
                f"num_threads must be >= 1, got {num_threads}", "sweep.SweepOptimizer"
            )
        self.relay = relay or RelayParams()
        self.options = options or EvaluationOptions()
        self.num_threads = num_threads
        self.table_builder = table_builder

    def _evaluate(
        self, config: ProtocolConfig, distance: float, fluctuation: Optional[FluctuationParams]
    ) -> Optional[ProtocolEvaluation]:
        try:
            evaluation = evaluate_protocol(
                config, distance, self.relay, self.options, fluctuation, self.table_builder
            )
        except SimulationError as e:
            logger.debug(
                f"candidate {config.to_dict()} infeasible at {distance} km: {e.describe()}"
            )
            return None
        if evaluation.result.rate <= 0.0:
            return None
        return evaluation

    def _evaluate_all(
        self,
        configs: List[ProtocolConfig],
        distance: float,
        fluctuation: Optional[FluctuationParams],
    ) -> List[Optional[ProtocolEvaluation]]:
        def run(config: ProtocolConfig) -> Optional[ProtocolEvaluation]:
            return self._evaluate(config, distance, fluctuation)

        if self.num_threads == 1 or len(configs) <= 1:
            return [run(config) for config in configs]
        with ThreadPoolExecutor(max_workers=self.num_threads) as executor:
            return list(executor.map(run, configs))

    def optimize_at_distance(
        self,
        distance: float,
        protocol: Protocol,
        search_space: SearchSpace,
        fluctuation: Optional[FluctuationParams] = None,
        refinement_passes: int = 2,
        shrink_factor: float = 5.0,
    ) -> OptimizationResult:
        """
        Find the highest-rate configuration at one distance.

        Args:
            distance: Total distance in km
            protocol: Decoy-state protocol
            search_space: Candidate intensities
            fluctuation: Finite-size parameters, if any
            refinement_passes: Refinement passes after the coarse grid
            shrink_factor: Span reduction per pass

        Returns:
            OptimizationResult; ties break on (rate desc, signal mu asc, decoy mu asc)

        Raises:
            NoFeasibleConfig: If no coarse-grid candidate has a positive rate
        """
        space = search_space
        incumbent: Optional[ProtocolEvaluation] = None
        pass_rates = []
        for pass_index in range(refinement_passes + 1):
            if incumbent is not None:
                space = space.refined(incumbent.config, shrink_factor)
            configs = space.candidates(protocol)
            if incumbent is not None and incumbent.config not in configs:
                configs.append(incumbent.config)
            evaluations = self._evaluate_all(configs, distance, fluctuation)
            feasible = [e for e in evaluations if e is not None]
            pass_rates.append(len(feasible) / len(configs) if configs else 0.0)
            if incumbent is not None:
                feasible.append(incumbent)
            if not feasible:
                raise NoFeasibleConfig(
                    f"no feasible {protocol.value} configuration at {distance} km "
                    f"among {len(configs)} candidates",
                    "sweep.optimize_at_distance",
                )
            incumbent = min(feasible, key=_tie_key)
            logger.debug(
                f"pass {pass_index} at {distance} km: rate {incumbent.result.rate:.6g} "
                f"(signal {incumbent.config.signal_a.mu:.6g})"
            )
        return OptimizationResult(
            config=incumbent.config,
            result=incumbent.result,
            evaluation=incumbent,
            pass_rates=tuple(pass_rates),
        )

    def sweep(self, spec: SweepSpec) -> List[SweepPoint]:
        """
        Optimize every distance of a sweep.

        Infeasible distances are recorded with their reason rather than raised.
        """
        points = []
        for distance in spec.distances:
            try:
                optimum = self.optimize_at_distance(
                    distance,
                    spec.protocol,
                    spec.search_space,
                    spec.fluctuation,
                    spec.refinement_passes,
                    spec.shrink_factor,
                )
            except NoFeasibleConfig as e:
                logger.warning(e.describe())
                points.append(SweepPoint(distance=distance, reason=e.message))
                continue
            logger.info(
                f"{spec.protocol.value} at {distance} km: rate {optimum.result.rate:.6g}"
            )
            points.append(SweepPoint(distance=distance, optimum=optimum))
        return points


def optimize_at_distance(
    distance: float,
    protocol: Protocol,
    search_space: SearchSpace,
    relay: Optional[RelayParams] = None,
    options: Optional[EvaluationOptions] = None,
    fluctuation: Optional[FluctuationParams] = None,
    refinement_passes: int = 2,
    shrink_factor: float = 5.0,
    table_builder: TableBuilder = build_gain_table,
    num_threads: int = 1,
) -> OptimizationResult:
    """Module-level form of ``SweepOptimizer.optimize_at_distance``."""
    optimizer = SweepOptimizer(relay, options, num_threads, table_builder)
    return optimizer.optimize_at_distance(
        distance, protocol, search_space, fluctuation, refinement_passes, shrink_factor
    )


def sweep(
    spec: SweepSpec,
    table_builder: TableBuilder = build_gain_table,
    relay: Optional[RelayParams] = None,
    options: Optional[EvaluationOptions] = None,
    num_threads: int = 1,
) -> List[SweepPoint]:
    """Module-level form of ``SweepOptimizer.sweep``."""
    return SweepOptimizer(relay, options, num_threads, table_builder).sweep(spec)
