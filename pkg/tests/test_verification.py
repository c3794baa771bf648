"""Tests for the numerical self-checks."""

import pytest

from mdiqkd.relay import RelayParams
from mdiqkd.sources import SourceSetting
from mdiqkd.verification import (
    InvariantResult,
    VerificationReport,
    _result,
    check_bound_sandwich,
    check_finite_size_consistency,
    check_loss_semigroup,
    check_normalization,
    check_trigger_ratio_monotonicity,
    check_two_path_identity,
    random_parameter_sets,
)


class TestRandomParameterSets:
    """Test cases for random_parameter_sets."""

    def test_deterministic(self):
        """Test that a seed reproduces the same draw."""
        assert random_parameter_sets(5, seed=3) == random_parameter_sets(5, seed=3)
        assert random_parameter_sets(5, seed=3) != random_parameter_sets(5, seed=4)

    def test_ranges(self):
        """Test the sampling ranges and the hardware settings."""
        params = random_parameter_sets(50, seed=11, eta_trigger=0.5, dark=1e-6)
        assert len(params) == 50
        for param in params:
            assert 1e-4 <= param.source.mu <= 1.0
            assert 0.05 <= param.source.p_cor <= 1.0
            assert 0.0 <= param.distance <= 150.0
            assert param.source.eta_trigger == 0.5
            assert param.source.dark == 1e-6


class TestReport:
    """Test cases for InvariantResult and VerificationReport."""

    def setup_method(self):
        """Set up test fixtures."""
        self.ok = InvariantResult("normalization", True, 1e-15, 1e-10, 3)
        self.bad = InvariantResult(
            "oracle_equivalence", False, 1e-3, 1e-9, 4, extras={"max_tail_bound": 1e-20}
        )

    def test_passed(self):
        """Test that one failed family fails the report."""
        assert VerificationReport((self.ok,)).passed
        report = VerificationReport((self.ok, self.bad))
        assert not report.passed
        assert report.failures == [self.bad]

    def test_lookup(self):
        """Test finding a family by name."""
        report = VerificationReport((self.ok, self.bad))
        assert report.result("oracle_equivalence") is self.bad
        with pytest.raises(KeyError):
            report.result("missing")

    def test_to_dict(self):
        """Test that extras are merged into the family entry."""
        data = VerificationReport((self.ok, self.bad)).to_dict()
        assert data["passed"] is False
        assert data["families"]["oracle_equivalence"]["max_tail_bound"] == 1e-20
        assert data["families"]["normalization"]["checked"] == 3

    def test_result_helper(self):
        """Test the residual reduction and the detail override."""
        assert _result("x", [1e-12, 1e-11], 1e-10).passed
        assert not _result("x", [1e-9], 1e-10).passed
        failed = _result("x", [], 1e-10, "nothing checked")
        assert not failed.passed
        assert failed.worst_residual == 0.0


class TestInvariantFamilies:
    """Test cases for the individual invariant families."""

    def setup_method(self):
        """Set up test fixtures."""
        self.relay = RelayParams()
        self.params = random_parameter_sets(5, seed=7)
        self.sources = [SourceSetting(mu=0.1), SourceSetting(mu=0.62, p_cor=0.1)]

    def test_normalization(self):
        """Test that every family sums to 1 at the default truncation."""
        result = check_normalization(self.sources, n_max=80)
        assert result.passed
        assert result.checked == 10

    def test_normalization_detects_truncation(self):
        """Test that a truncation far too small fails."""
        result = check_normalization([SourceSetting(mu=1.0)], n_max=5)
        assert not result.passed
        assert result.worst_residual > 1e-3

    def test_trigger_ratio_monotonicity(self):
        """Test the ratio ordering below the validity bound."""
        assert check_trigger_ratio_monotonicity(self.sources, n_max=80).passed

    def test_loss_semigroup(self):
        """Test that chained losses compose."""
        assert check_loss_semigroup(self.params, n_max=40).passed

    def test_two_path_identity(self):
        """Test the click path against the expanded gain."""
        result = check_two_path_identity(self.params, self.relay)
        assert result.passed
        assert result.checked == 5 * 3 * 2

    def test_bound_sandwich_reference_config(self):
        """Test the sandwich on the reference modified passive setting."""
        result = check_bound_sandwich([], self.relay, n_max=80)
        assert result.passed
        assert result.checked > 0

    def test_finite_size_consistency(self):
        """Test the zero-deviation and large-N limits."""
        assert check_finite_size_consistency([], self.relay, n_max=80).passed
