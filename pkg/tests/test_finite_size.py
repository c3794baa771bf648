"""Tests for the statistical-fluctuation analysis."""

import pytest

from mdiqkd.estimators import modified_passive3_bounds
from mdiqkd.exceptions import ParameterValidationError, ZeroStatistics
from mdiqkd.finite_size import (
    BarAssignment,
    ClassCounts,
    FluctuationParams,
    failure_probability,
    finite_modified_passive_bounds,
    fluctuation_band,
    trigger_probability,
)
from mdiqkd.gains import build_gain_table
from mdiqkd.pipeline import evaluate_protocol
from mdiqkd.protocol import (
    IntensityDistributions,
    IntensitySetting,
    Level,
    Protocol,
    ProtocolConfig,
)
from mdiqkd.relay import RelayParams, Side
from mdiqkd.sources import DistributionFamily, SourceSetting

MODIFIED = ProtocolConfig.symmetric(
    Protocol.MODIFIED_PASSIVE3,
    IntensitySetting(0.623927, 0.1),
    IntensitySetting(0.147577, 0.12),
)


class TestFailureProbability:
    """Test cases for failure_probability."""

    def test_reference_values(self):
        """Test the two-sided tail at three and five deviations."""
        assert failure_probability(5.0) == pytest.approx(5.733e-7, rel=1e-3)
        assert failure_probability(3.0) == pytest.approx(2.6998e-3, rel=1e-4)
        assert failure_probability(0.0) == 1.0

    def test_negative_deviation(self):
        """Test that a negative deviation count is rejected."""
        with pytest.raises(ParameterValidationError):
            failure_probability(-1.0)


class TestFluctuationBand:
    """Test cases for fluctuation_band."""

    def test_zero_deviation_is_exact(self):
        """Test that n_alpha = 0 leaves the measurement untouched."""
        band = fluctuation_band(1e-3, 0.02, 1e9, 0.0)
        assert band.q_lo == band.q_hi == 1e-3
        assert band.eq_lo == band.eq_hi == pytest.approx(2e-5)

    def test_band_width(self):
        """Test Q (1 -+ n_alpha / sqrt(N Q))."""
        band = fluctuation_band(1e-2, 0.1, 1e6, 5.0)
        beta = 5.0 / (1e6 * 1e-2) ** 0.5
        assert band.beta_q == pytest.approx(beta)
        assert band.q_lo == pytest.approx(1e-2 * (1.0 - beta))
        assert band.q_hi == pytest.approx(1e-2 * (1.0 + beta))

    def test_lower_band_floored(self):
        """Test that a band wider than the value stops at 0."""
        band = fluctuation_band(1e-6, 0.5, 1e3, 5.0)
        assert band.q_lo == 0.0
        assert band.eq_lo == 0.0

    def test_zero_statistics(self):
        """Test ZeroStatistics when no counts stand behind a gain."""
        with pytest.raises(ZeroStatistics):
            fluctuation_band(0.0, 0.5, 1e9, 5.0)

    def test_zero_error_gain(self):
        """Test that an error-free measurement has an empty error band."""
        band = fluctuation_band(1e-3, 0.0, 1e9, 5.0)
        assert band.eq_lo == band.eq_hi == 0.0


class TestFluctuationParams:
    """Test cases for FluctuationParams and class counts."""

    def test_validation(self):
        """Test that negative deviations and empty data sizes are rejected."""
        with pytest.raises(ParameterValidationError):
            FluctuationParams(n_alpha=-1.0, n_pulses=1e9)
        with pytest.raises(ParameterValidationError):
            FluctuationParams(n_alpha=5.0, n_pulses=0.0)

    def test_class_counts_split(self):
        """Test the split of N by trigger efficiency and dark counts."""
        counts = FluctuationParams(n_alpha=5.0, n_pulses=1e10).class_counts()
        assert counts.t_both == pytest.approx(0.16e10)
        assert counts.nt_both == pytest.approx(0.36e10)
        assert counts.t_a_only == pytest.approx(0.4 * 5e-5 * 1e10)
        assert counts.nt_a_only == pytest.approx(0.6 * (1.0 - 5e-5) * 1e10)
        assert counts.t_b_only == counts.t_a_only
        assert counts.nt_b_only == counts.nt_a_only

    def test_explicit_counts(self):
        """Test that explicit class counts bypass the split."""
        explicit = ClassCounts(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
        fl = FluctuationParams(n_alpha=5.0, n_pulses=1e10, pulse_counts=explicit)
        assert fl.class_counts() is explicit

    def test_negative_count_rejected(self):
        """Test that class counts must be nonnegative."""
        with pytest.raises(ParameterValidationError):
            ClassCounts(1.0, -2.0, 3.0, 4.0, 5.0, 6.0)

    def test_strict_counts_need_config(self):
        """Test that strict counts require a protocol configuration."""
        fl = FluctuationParams(n_alpha=5.0, n_pulses=1e10, strict=True)
        with pytest.raises(ParameterValidationError):
            fl.class_counts()

    def test_strict_counts(self):
        """Test the split by the sources' actual trigger probabilities."""
        fl = FluctuationParams(n_alpha=5.0, n_pulses=1e10, strict=True)
        counts = fl.class_counts(MODIFIED)
        decoy = trigger_probability(MODIFIED.source(Side.A, Level.DECOY))
        assert counts.t_both == pytest.approx(decoy * decoy * 1e10)

    def test_trigger_probability_of_vacuum(self):
        """Test that a vacuum pump fires only through dark counts."""
        src = SourceSetting(mu=0.0, p_cor=1.0)
        assert trigger_probability(src) == pytest.approx(5e-5)


class TestFiniteBounds:
    """Test cases for finite_modified_passive_bounds."""

    def setup_method(self):
        """Set up test fixtures."""
        self.relay = RelayParams()
        self.triggered = IntensityDistributions.for_family(MODIFIED, DistributionFamily.TRIGGERED)
        self.non_triggered = IntensityDistributions.for_family(
            MODIFIED, DistributionFamily.NON_TRIGGERED
        )
        self.gains = build_gain_table(MODIFIED, 20.0, self.relay)
        self.asymptotic = modified_passive3_bounds(self.gains, self.triggered, self.non_triggered)

    def _finite(self, fl: FluctuationParams, bars: BarAssignment = BarAssignment.WORST_CASE):
        return finite_modified_passive_bounds(
            self.gains, self.triggered, self.non_triggered, fl, bars
        )

    def test_zero_deviation_matches_asymptotic(self):
        """Test that n_alpha = 0 reproduces the asymptotic bounds."""
        bounds = self._finite(FluctuationParams(n_alpha=0.0, n_pulses=1e9))
        assert bounds.y11_lower == pytest.approx(self.asymptotic.y11_lower, rel=1e-12)
        assert bounds.e11_upper == pytest.approx(self.asymptotic.e11_upper, rel=1e-12)

    def test_large_data_converges(self):
        """Test convergence to the asymptotic bounds as N grows."""
        bounds = self._finite(FluctuationParams(n_alpha=5.0, n_pulses=1e44))
        assert bounds.y11_lower == pytest.approx(self.asymptotic.y11_lower, rel=1e-6)
        assert bounds.e11_upper == pytest.approx(self.asymptotic.e11_upper, rel=1e-6)

    def test_fluctuations_are_pessimistic(self):
        """Test that finite data never improves either bound."""
        bounds = self._finite(FluctuationParams(n_alpha=5.0, n_pulses=1e10))
        assert bounds.y11_lower <= self.asymptotic.y11_lower
        assert bounds.e11_upper >= self.asymptotic.e11_upper
        assert bounds.diagnostics["n_alpha"] == 5.0

    def test_more_data_tightens_bounds(self):
        """Test that the yield bound grows with the data size."""
        small = self._finite(FluctuationParams(n_alpha=5.0, n_pulses=1e11))
        large = self._finite(FluctuationParams(n_alpha=5.0, n_pulses=1e13))
        assert small.y11_lower <= large.y11_lower

    def test_printed_bars(self):
        """Test that the printed bar assignment evaluates."""
        bounds = self._finite(FluctuationParams(n_alpha=5.0, n_pulses=1e13), BarAssignment.PRINTED)
        assert 0.0 <= bounds.y11_lower <= 1.0

    def test_zero_counts_raise(self):
        """Test ZeroStatistics when a pairing has no pulses behind it."""
        explicit = ClassCounts(1e10, 1e10, 0.0, 1e10, 1e10, 1e10)
        fl = FluctuationParams(n_alpha=5.0, n_pulses=1e10, pulse_counts=explicit)
        with pytest.raises(ZeroStatistics):
            self._finite(fl)

    def test_only_modified_protocol(self):
        """Test that other protocols reject a fluctuation analysis."""
        active = ProtocolConfig.symmetric(
            Protocol.ACTIVE3, IntensitySetting(1.425e-3, 0.405844), IntensitySetting(0.577e-3)
        )
        with pytest.raises(ParameterValidationError):
            evaluate_protocol(
                active, 10.0, self.relay, fluctuation=FluctuationParams(n_alpha=5.0, n_pulses=1e10)
            )

    def test_pipeline_finite_rate_below_asymptotic(self):
        """Test that the finite-size rate does not exceed the asymptotic one."""
        fl = FluctuationParams(n_alpha=5.0, n_pulses=1e11)
        finite = evaluate_protocol(MODIFIED, 20.0, self.relay, fluctuation=fl).result
        asymptotic = evaluate_protocol(MODIFIED, 20.0, self.relay).result
        assert finite.rate <= asymptotic.rate

    def test_finite_triggered_credit_below_asymptotic(self):
        """Test that few triggered vacuum counts shrink the triggered vacuum credit."""
        fl = FluctuationParams(n_alpha=5.0, n_pulses=1e9)
        finite = evaluate_protocol(MODIFIED, 25.0, self.relay, fluctuation=fl).result
        asymptotic = evaluate_protocol(MODIFIED, 25.0, self.relay).result
        assert finite.components["vacuum_triggered"] < asymptotic.components["vacuum_triggered"]
        assert finite.rate <= asymptotic.rate

    def test_finite_rate_grows_with_data(self):
        """Test that the finite-size rate is nondecreasing in the data size."""
        rates = [
            evaluate_protocol(
                MODIFIED,
                25.0,
                self.relay,
                fluctuation=FluctuationParams(n_alpha=5.0, n_pulses=n),
            ).result.rate
            for n in (1e9, 1e10, 1e11, 1e13)
        ]
        assert all(a <= b for a, b in zip(rates, rates[1:]))

    def test_finite_rate_approaches_asymptotic(self):
        """Test that the finite-size rate meets the asymptotic one at large N."""
        fl = FluctuationParams(n_alpha=5.0, n_pulses=1e20)
        finite = evaluate_protocol(MODIFIED, 25.0, self.relay, fluctuation=fl).result
        asymptotic = evaluate_protocol(MODIFIED, 25.0, self.relay).result
        parts = asymptotic.components
        credit = parts["vacuum_triggered"] + parts["vacuum_non_triggered"]
        assert abs(finite.raw_rate - asymptotic.raw_rate) <= 1e-3 * credit
        assert finite.components["vacuum_triggered"] == pytest.approx(
            parts["vacuum_triggered"], rel=1e-3
        )
