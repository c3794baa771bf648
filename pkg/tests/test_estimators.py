"""Tests for the decoy-state estimators."""

import math

import numpy as np
import pytest

from mdiqkd.estimators import (
    DecoyBounds,
    ModifiedPassiveProbabilities,
    PassiveTerms,
    active3_bounds,
    check_modified_preconditions,
    error_fractions,
    infinite_decoy_bounds,
    model_single_photon_terms,
    modified_passive3_bounds,
    passive2_bounds,
    passive_alpha_max,
    passive_terms,
    passive_yield_fraction,
    ratio_chain_violations,
    yield_fraction,
)
from mdiqkd.exceptions import (
    DegenerateDenominator,
    ParameterValidationError,
    PreconditionViolated,
)
from mdiqkd.gains import Basis, Pairing, build_gain_table
from mdiqkd.protocol import (
    IntensityDistributions,
    IntensitySetting,
    Level,
    Protocol,
    ProtocolConfig,
)
from mdiqkd.relay import (
    ChannelParams,
    CoefficientSet,
    EventClass,
    RelayParams,
    Side,
    transmittance,
)
from mdiqkd.sources import DistributionFamily, TriggerRatioSet

INFINITE = ProtocolConfig.symmetric(Protocol.INFINITE, IntensitySetting(1.425e-3, 0.405844))
ACTIVE = ProtocolConfig.symmetric(
    Protocol.ACTIVE3,
    IntensitySetting(1.425e-3, 0.405844),
    IntensitySetting(0.577e-3, 0.432837),
)
MODIFIED = ProtocolConfig.symmetric(
    Protocol.MODIFIED_PASSIVE3,
    IntensitySetting(0.623927, 0.1),
    IntensitySetting(0.147577, 0.12),
)


def _collapsed(pnds: IntensityDistributions) -> IntensityDistributions:
    """Distributions whose decoy slot repeats the signal slot."""
    return IntensityDistributions(
        signal_a=pnds.signal_a,
        signal_b=pnds.signal_b,
        decoy_a=pnds.signal_a,
        decoy_b=pnds.signal_b,
    )


def _swapped(pnds: IntensityDistributions) -> IntensityDistributions:
    """Distributions with the signal and decoy slots exchanged."""
    return IntensityDistributions(
        signal_a=pnds.decoy_a,
        signal_b=pnds.decoy_b,
        decoy_a=pnds.signal_a,
        decoy_b=pnds.signal_b,
    )


class TestDecoyBounds:
    """Test cases for DecoyBounds."""

    def test_clamped_flag(self):
        """Test that clamping is reported when a raw bound left [0, 1]."""
        bounds = DecoyBounds(y11_lower=0.0, e11_upper=1.0, y11_raw=-0.1, e11_raw=1.0)
        assert bounds.clamped

    def test_unclamped_flag(self):
        """Test that in-range bounds are not reported as clamped."""
        bounds = DecoyBounds(y11_lower=0.01, e11_upper=0.1, y11_raw=0.01, e11_raw=0.1)
        assert not bounds.clamped


class TestInfiniteDecoy:
    """Test cases for infinite_decoy_bounds."""

    def test_noiseless_relay(self):
        """Test the closed form without dark counts."""
        relay = RelayParams(p_dark=0.0)
        terms = infinite_decoy_bounds(0.4, 0.3, ChannelParams.symmetric(0.0), relay)
        assert terms.q11z == pytest.approx(0.5 * 0.4 * 0.3 * relay.eta_d**2)
        assert terms.e11x == pytest.approx(relay.e_misalign)

    def test_zero_single_photon_probability(self):
        """Test that no single photons give the noise error rate."""
        terms = infinite_decoy_bounds(0.0, 0.3, ChannelParams.symmetric(10.0), RelayParams())
        assert terms.q11z == 0.0
        assert terms.e11x == 0.5

    def test_invalid_probability(self):
        """Test that a P1 outside [0, 1] is rejected."""
        with pytest.raises(ParameterValidationError):
            infinite_decoy_bounds(1.2, 0.3, ChannelParams.symmetric(10.0), RelayParams())

    def test_error_rate_stays_near_misalignment(self):
        """Test that e11 stays within 1e-3 of e_d out to 150 km."""
        relay = RelayParams()
        errors = [
            model_single_photon_terms(
                ChannelParams.symmetric(d), relay, include_detector_efficiency=False
            ).e11x
            for d in (0.0, 50.0, 100.0, 150.0)
        ]
        assert all(abs(e - relay.e_misalign) < 1e-3 for e in errors)

    def test_detector_efficiency_lowers_yield(self):
        """Test that folding eta_D into the transmittances lowers Q11."""
        channel = ChannelParams.symmetric(20.0)
        relay = RelayParams()
        plain = infinite_decoy_bounds(0.5, 0.5, channel, relay, include_detector_efficiency=False)
        folded = infinite_decoy_bounds(0.5, 0.5, channel, relay)
        assert folded.q11z < plain.q11z

    @pytest.mark.parametrize("distance", [0.0, 25.0, 50.0, 100.0])
    def test_single_photon_gain_fits_inside_z_gain(self, distance):
        """Test Q11 (1 - D)^2 <= Q_Z, with D the single-detector click probability."""
        relay = RelayParams()
        channel = ChannelParams.symmetric(distance)
        src = INFINITE.source(Side.A, Level.SIGNAL)
        p1 = IntensityDistributions.for_family(INFINITE, DistributionFamily.HERALDED).at(
            Side.A, Level.SIGNAL
        ).probability(1)
        half = CoefficientSet.build(
            src, EventClass.PLAIN, 0.5 * transmittance(channel, Side.A), relay
        )
        d = half.a0 * relay.p_dark + half.scale * half.c1(relay.p_dark)
        q_z = build_gain_table(INFINITE, distance, relay).gain(
            Basis.Z, EventClass.PLAIN, Level.SIGNAL, Pairing.BOTH
        )
        terms = infinite_decoy_bounds(p1, p1, channel, relay)
        assert 0.0 < terms.q11z * (1.0 - d) ** 2 <= q_z

    def test_literal_transmittances_overshoot_z_gain(self):
        """Test that leaving eta_D out inflates Q11 far above the table's Z gain."""
        relay = RelayParams()
        channel = ChannelParams.symmetric(25.0)
        p1 = IntensityDistributions.for_family(INFINITE, DistributionFamily.HERALDED).at(
            Side.A, Level.SIGNAL
        ).probability(1)
        q_z = build_gain_table(INFINITE, 25.0, relay).gain(
            Basis.Z, EventClass.PLAIN, Level.SIGNAL, Pairing.BOTH
        )
        literal = infinite_decoy_bounds(p1, p1, channel, relay, include_detector_efficiency=False)
        assert literal.q11z > 10.0 * q_z


class TestActive3:
    """Test cases for active3_bounds."""

    def setup_method(self):
        """Set up test fixtures."""
        self.relay = RelayParams()
        self.pnds = IntensityDistributions.for_family(ACTIVE, DistributionFamily.HERALDED)

    @pytest.mark.parametrize("distance", [0.0, 25.0, 50.0, 75.0, 100.0])
    def test_bounds_bracket_model_terms(self, distance):
        """Test that the estimate never exceeds the single-photon model yield."""
        gains = build_gain_table(ACTIVE, distance, self.relay)
        bounds = active3_bounds(gains, self.pnds)
        truth = model_single_photon_terms(ChannelParams.symmetric(distance), self.relay)
        assert 0.0 < bounds.y11_lower <= truth.q11z
        assert bounds.e11_upper >= truth.e11x
        assert bounds.precondition_ok

    def test_error_bound_divides_by_x_basis_yield(self):
        """Test that E11 is normalized by the X-basis single-photon yield."""
        gains = build_gain_table(ACTIVE, 25.0, self.relay)
        bounds = active3_bounds(gains, self.pnds)
        y11_x = bounds.diagnostics["y11_x"]
        p1a = self.pnds.at(Side.A, Level.DECOY).probability(1)
        p1b = self.pnds.at(Side.B, Level.DECOY).probability(1)
        assert y11_x > 0.0
        assert y11_x != pytest.approx(bounds.y11_raw, rel=1e-3)
        expected = bounds.diagnostics["error_numerator"] / (p1a * p1b * y11_x)
        assert bounds.e11_raw == pytest.approx(expected, rel=1e-12)

    def test_equal_intensities_degenerate(self):
        """Test that identical decoy and signal distributions have no bound."""
        gains = build_gain_table(ACTIVE, 10.0, self.relay)
        with pytest.raises(DegenerateDenominator):
            active3_bounds(gains, _collapsed(self.pnds))


class TestPassiveTerms:
    """Test cases for the passive estimator building blocks."""

    def setup_method(self):
        """Set up test fixtures."""
        self.ratios = TriggerRatioSet(r00=0.1, r11=0.2, r12=0.5, r21=0.6)
        self.terms = PassiveTerms(
            q_nt=0.5,
            q_t=0.1,
            e_nt=0.2,
            e_t=0.3,
            q_delta_nt=1.0,
            q_delta_t=0.0,
            e_delta_nt=0.05,
            e_delta_t=0.1,
        )

    def test_yield_fraction(self):
        """Test xi at alpha = 0 and its linear growth."""
        assert yield_fraction(self.terms, self.ratios, 0.0) == pytest.approx(0.5 / 0.3)
        slope = yield_fraction(self.terms, self.ratios, 1.0) - yield_fraction(
            self.terms, self.ratios, 0.0
        )
        assert slope == pytest.approx(0.4 / 0.3)

    def test_error_fractions(self):
        """Test both error bounds at alpha = 0."""
        eps_t, eps_nt = error_fractions(self.terms, self.ratios, 0.0, 0.5)
        assert eps_t == pytest.approx(0.1 / (0.2 * 0.5 / 0.3))
        assert eps_nt == pytest.approx(0.05 / (0.5 / 0.3))

    def test_error_fractions_vectorised(self):
        """Test the array form of the error bounds."""
        alphas = np.linspace(0.0, 0.4, 5)
        eps_t, eps_nt = error_fractions(self.terms, self.ratios, alphas, 0.5)
        assert eps_t.shape == (5,)
        assert eps_nt.shape == (5,)

    def test_nonpositive_yield_fraction_gives_infinite_error(self):
        """Test that xi <= 0 yields infinite error bounds."""
        terms = PassiveTerms(0.5, 0.1, 0.2, 0.3, 0.0, 1.0, 0.05, 0.1)
        eps_t, eps_nt = error_fractions(terms, self.ratios, 0.0, 0.5)
        assert math.isinf(eps_t)
        assert math.isinf(eps_nt)

    def test_alpha_max(self):
        """Test the upper end of the vacuum-ratio interval."""
        assert passive_alpha_max(self.terms, self.ratios) == pytest.approx(0.4)

    def test_degenerate_ratios(self):
        """Test that r_min = r11 has no yield fraction."""
        ratios = TriggerRatioSet(r00=0.1, r11=0.5, r12=0.5, r21=0.7)
        with pytest.raises(DegenerateDenominator):
            yield_fraction(self.terms, ratios, 0.1)


class TestPassive2:
    """Test cases for passive2_bounds."""

    def setup_method(self):
        """Set up test fixtures."""
        self.relay = RelayParams()
        self.config = ProtocolConfig.symmetric(Protocol.PASSIVE2, IntensitySetting(0.79, 0.1))
        self.gains = build_gain_table(self.config, 20.0, self.relay)
        self.pnds = IntensityDistributions.for_family(
            self.config, DistributionFamily.NON_TRIGGERED
        )
        self.ratios = TriggerRatioSet.from_sources(
            self.config.source(Side.A, Level.SIGNAL), self.config.source(Side.B, Level.SIGNAL)
        )

    def test_negative_alpha_rejected(self):
        """Test that a negative vacuum ratio is outside the admissible interval."""
        with pytest.raises(PreconditionViolated):
            passive2_bounds(self.gains, self.ratios, -0.1, self.pnds)

    def test_alpha_above_interval_rejected(self):
        """Test that alpha above its maximum is rejected."""
        alpha_max = passive_alpha_max(passive_terms(self.gains, Basis.X), self.ratios)
        with pytest.raises(PreconditionViolated):
            passive2_bounds(self.gains, self.ratios, 2.0 * alpha_max + 0.1, self.pnds)

    def test_yield_fraction_helper(self):
        """Test that the helper matches the direct computation."""
        direct = yield_fraction(passive_terms(self.gains, Basis.Z), self.ratios, 0.01)
        assert passive_yield_fraction(self.gains, self.ratios, 0.01) == pytest.approx(direct)

    @pytest.mark.parametrize("distance", [0.0, 25.0, 50.0, 75.0, 100.0])
    def test_vacuum_free_estimate_below_model_yield(self, distance):
        """Test xi(0) Q^(nt) <= P1^NT(A) P1^NT(B) Y11 against the single-photon model."""
        gains = build_gain_table(self.config, distance, self.relay)
        xi = passive_yield_fraction(gains, self.ratios, 0.0)
        q_nt = gains.gain(Basis.Z, EventClass.NON_TRIGGERED, Level.SIGNAL, Pairing.BOTH)
        p1a = self.pnds.at(Side.A, Level.SIGNAL).probability(1)
        p1b = self.pnds.at(Side.B, Level.SIGNAL).probability(1)
        truth = model_single_photon_terms(ChannelParams.symmetric(distance), self.relay)
        assert not math.isnan(xi)
        assert xi * q_nt <= p1a * p1b * truth.q11z

    def test_yield_fraction_helper_degenerate(self):
        """Test that degenerate ratios give NaN instead of raising."""
        ratios = TriggerRatioSet(r00=0.1, r11=0.5, r12=0.5, r21=0.7)
        assert math.isnan(passive_yield_fraction(self.gains, ratios, 0.01))


class TestModifiedPassive3:
    """Test cases for modified_passive3_bounds."""

    def setup_method(self):
        """Set up test fixtures."""
        self.relay = RelayParams()
        self.triggered = IntensityDistributions.for_family(MODIFIED, DistributionFamily.TRIGGERED)
        self.non_triggered = IntensityDistributions.for_family(
            MODIFIED, DistributionFamily.NON_TRIGGERED
        )

    def test_chains_hold_for_reference_intensities(self):
        """Test that signal above decoy gives nondecreasing ratio chains."""
        assert ratio_chain_violations(self.triggered, self.non_triggered) == []

    def test_swapped_intensities_break_chains(self):
        """Test that exchanging signal and decoy violates the ratio chains."""
        violations = ratio_chain_violations(
            _swapped(self.triggered), _swapped(self.non_triggered)
        )
        assert "B: T(signal)/T(decoy)" in violations
        assert "B: NT(signal)/NT(decoy)" in violations
        with pytest.raises(PreconditionViolated):
            check_modified_preconditions(_swapped(self.triggered), _swapped(self.non_triggered))

    def test_chains_need_decoy_slots(self):
        """Test that chains cannot be checked without decoy distributions."""
        bare = IntensityDistributions(
            signal_a=self.triggered.signal_a, signal_b=self.triggered.signal_b
        )
        with pytest.raises(ParameterValidationError):
            ratio_chain_violations(bare, self.non_triggered)

    @pytest.mark.parametrize("distance", [0.0, 25.0, 50.0])
    def test_bounds_bracket_model_terms(self, distance):
        """Test that the estimate never exceeds the single-photon model yield."""
        gains = build_gain_table(MODIFIED, distance, self.relay)
        bounds = modified_passive3_bounds(gains, self.triggered, self.non_triggered)
        truth = model_single_photon_terms(ChannelParams.symmetric(distance), self.relay)
        assert bounds.y11_lower <= truth.q11z
        assert bounds.e11_upper >= truth.e11x
        assert "denominator" in bounds.diagnostics

    def test_identical_distributions_degenerate(self):
        """Test that one distribution in every slot leaves a vanishing bracket."""
        collapsed = _collapsed(self.triggered)
        gains = build_gain_table(MODIFIED, 10.0, self.relay)
        with pytest.raises(DegenerateDenominator):
            modified_passive3_bounds(gains, collapsed, collapsed)

    def test_denominator_guard(self):
        """Test the guarded bracket of the slot probabilities."""
        slot = (0.5, 0.3, 0.1)
        probs = ModifiedPassiveProbabilities(t_a=slot, t_b=slot, nt_a=slot, nt_b=slot)
        with pytest.raises(DegenerateDenominator):
            _ = probs.denominator
