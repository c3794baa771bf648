"""Tests for the key-rate formulas."""

import pytest

from mdiqkd.exceptions import DomainError, EmptyAlphaDomain
from mdiqkd.gains import Basis, GainEntry, Pairing, build_gain_table
from mdiqkd.keyrate import (
    KeyRateResult,
    RateBranch,
    RateFormula,
    binary_entropy,
    leakage,
    privacy_term,
    rate_passive2,
    rate_unified,
    vacuum_credit,
)
from mdiqkd.pipeline import EvaluationOptions, evaluate_protocol
from mdiqkd.protocol import (
    IntensityDistributions,
    IntensitySetting,
    Level,
    Protocol,
    ProtocolConfig,
)
from mdiqkd.relay import EventClass, RelayParams, Side
from mdiqkd.sources import DistributionFamily, TriggerRatioSet

INFINITE = ProtocolConfig.symmetric(Protocol.INFINITE, IntensitySetting(1.425e-3, 0.405844))
ACTIVE = ProtocolConfig.symmetric(
    Protocol.ACTIVE3,
    IntensitySetting(1.425e-3, 0.405844),
    IntensitySetting(0.577e-3, 0.432837),
)
PASSIVE = ProtocolConfig.symmetric(Protocol.PASSIVE2, IntensitySetting(0.79, 0.1))
MODIFIED = ProtocolConfig.symmetric(
    Protocol.MODIFIED_PASSIVE3,
    IntensitySetting(0.623927, 0.1),
    IntensitySetting(0.147577, 0.12),
)


class TestBinaryEntropy:
    """Test cases for binary_entropy."""

    def test_known_values(self):
        """Test H at a few reference points."""
        assert binary_entropy(0.11) == pytest.approx(0.49991, abs=1e-5)
        assert binary_entropy(0.5) == pytest.approx(1.0, rel=1e-15)
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_symmetry(self):
        """Test H(x) = H(1 - x)."""
        assert binary_entropy(0.2) == pytest.approx(binary_entropy(0.8), rel=1e-14)

    @pytest.mark.parametrize("x", [-0.1, 1.1])
    def test_out_of_domain(self, x):
        """Test DomainError outside [0, 1]."""
        with pytest.raises(DomainError):
            binary_entropy(x)


class TestRateTerms:
    """Test cases for leakage, privacy_term and rate_unified."""

    def test_leakage_constant_efficiency(self):
        """Test Q f H(E) with a constant f."""
        assert leakage(1e-3, 0.5, 1.16) == pytest.approx(1.16e-3)

    def test_leakage_callable_efficiency(self):
        """Test that f may depend on the QBER."""
        assert leakage(1e-3, 0.5, lambda e: 1.0 + e) == pytest.approx(1.5e-3)

    def test_privacy_term_caps_error(self):
        """Test that error rates above 1/2 certify nothing."""
        assert privacy_term(1e-3, 0.7) == 0.0
        assert privacy_term(1e-3, 0.0) == pytest.approx(1e-3)

    def test_rate_floored(self):
        """Test that a negative raw rate is floored at 0."""
        result = rate_unified(0.0, 1e-6, 0.3, 1e-3, 0.2)
        assert result.raw_rate < 0.0
        assert result.rate == 0.0
        assert not result.feasible

    def test_rate_components(self):
        """Test that the rate is the sum of its components."""
        result = rate_unified(1e-5, 1e-3, 0.02, 2e-3, 0.01)
        parts = result.components
        assert result.raw_rate == pytest.approx(
            parts["vacuum"] + parts["positive"] - parts["leakage"]
        )
        assert result.feasible
        assert result.branch is RateBranch.SINGLE

    def test_result_defaults(self):
        """Test the KeyRateResult defaults."""
        result = KeyRateResult(rate=0.0, raw_rate=0.0)
        assert result.alpha_star is None
        assert result.bounds is None


class TestProtocolRates:
    """Test cases for the per-protocol rates through evaluate_protocol."""

    def setup_method(self):
        """Set up test fixtures."""
        self.relay = RelayParams()

    def test_infinite_rate_positive_and_decreasing(self):
        """Test that the infinite-decoy rate is positive and falls with distance."""
        rates = [evaluate_protocol(INFINITE, d, self.relay).result.rate for d in (0, 20, 40)]
        assert rates[0] > 0.0
        assert rates[0] > rates[1] > rates[2]

    def test_protocol_formula_drops_vacuum_credit(self):
        """Test that the protocol formula has no vacuum term."""
        options = EvaluationOptions(formula=RateFormula.PROTOCOL)
        unified = evaluate_protocol(INFINITE, 20.0, self.relay).result
        plain = evaluate_protocol(INFINITE, 20.0, self.relay, options).result
        assert plain.components["vacuum"] == 0.0
        assert unified.components["vacuum"] >= 0.0
        assert plain.raw_rate <= unified.raw_rate

    def test_active_not_above_infinite(self):
        """Test that finite decoys never beat exact single-photon terms."""
        active = evaluate_protocol(ACTIVE, 20.0, self.relay).result
        infinite = evaluate_protocol(INFINITE, 20.0, self.relay).result
        assert active.rate <= infinite.rate

    def test_passive2_branches(self):
        """Test that passive2 reports the larger of its two branches."""
        result = evaluate_protocol(PASSIVE, 20.0, self.relay).result
        parts = result.components
        assert result.branch in (RateBranch.TRIGGERED, RateBranch.BOTH)
        assert result.raw_rate == max(parts["rate_triggered"], parts["rate_both"])
        assert 0.0 <= result.alpha_star <= parts["alpha_max"]
        assert result.rate == max(0.0, result.raw_rate)

    def test_passive2_grid_size(self):
        """Test that a one-point grid still covers both alpha endpoints."""
        options = EvaluationOptions(alpha_points=1)
        result = evaluate_protocol(PASSIVE, 20.0, self.relay, options).result
        assert result.alpha_star in (0.0, result.components["alpha_max"])

    def test_modified_branches(self):
        """Test that the modified passive rate picks the larger branch."""
        result = evaluate_protocol(MODIFIED, 20.0, self.relay).result
        parts = result.components
        assert result.branch in (RateBranch.TRIGGERED, RateBranch.BOTH)
        assert result.raw_rate == max(parts["rate_triggered"], parts["rate_both"])
        assert result.bounds is not None

    def test_modified_vacuum_basis_option(self):
        """Test that the vacuum credits may be read from the Z basis."""
        options = EvaluationOptions(vacuum_basis=Basis.Z)
        result = evaluate_protocol(MODIFIED, 20.0, self.relay, options).result
        assert result.rate >= 0.0

    def test_modified_triggered_credit_reads_decoy_pairs(self):
        """Test that the triggered vacuum credit comes from the triggered decoy pairs."""
        evaluation = evaluate_protocol(MODIFIED, 20.0, self.relay)
        triggered = IntensityDistributions.for_family(MODIFIED, DistributionFamily.TRIGGERED)
        expected = vacuum_credit(
            evaluation.gains,
            Basis.X,
            EventClass.TRIGGERED,
            Level.DECOY,
            triggered.at(Side.A, Level.DECOY).probability(0),
            triggered.at(Side.B, Level.DECOY).probability(0),
        )
        credit = evaluation.result.components["vacuum_triggered"]
        assert credit == pytest.approx(expected, rel=1e-12)

    def test_modified_triggered_credit_level_option(self):
        """Test that signal-level triggered credits exceed the decoy-level ones."""
        options = EvaluationOptions(triggered_credit_level=Level.SIGNAL)
        signal = evaluate_protocol(MODIFIED, 20.0, self.relay, options).result
        decoy = evaluate_protocol(MODIFIED, 20.0, self.relay).result
        assert signal.components["vacuum_triggered"] > decoy.components["vacuum_triggered"]
        assert signal.components["vacuum_non_triggered"] == pytest.approx(
            decoy.components["vacuum_non_triggered"], rel=1e-12
        )

    def test_passive2_zero_non_triggered_gain(self):
        """Test that a vanishing non-triggered gain leaves no alpha interval."""
        gains = build_gain_table(PASSIVE, 20.0, self.relay)
        for basis in Basis:
            gains.add(
                basis,
                EventClass.NON_TRIGGERED,
                Level.SIGNAL,
                Pairing.BOTH,
                GainEntry(0.0, 0.5),
            )
        src = PASSIVE.source(Side.A, Level.SIGNAL)
        ratios = TriggerRatioSet.from_sources(src, src)
        pnds = IntensityDistributions.for_family(PASSIVE, DistributionFamily.NON_TRIGGERED)
        with pytest.raises(EmptyAlphaDomain) as exc_info:
            rate_passive2(gains, ratios, pnds)
        assert exc_info.value.operation == "keyrate.rate_passive2"
