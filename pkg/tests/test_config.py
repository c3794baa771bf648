"""Tests for run configurations and presets."""

import json

import pytest

from mdiqkd.config import (
    CONFIG_SCHEMA,
    DEFAULT_DISTANCES,
    PRESET_ALIASES,
    PRESETS,
    CurveConfig,
    PhotonStatisticsConfig,
    RunConfig,
    from_dict,
    get_preset,
    load_config,
    resolve_preset_name,
)
from mdiqkd.exceptions import ConfigError
from mdiqkd.finite_size import FluctuationParams
from mdiqkd.protocol import Level, Protocol
from mdiqkd.relay import ClosedFormVariant
from mdiqkd.sweep import IntensityAxis


def _curve(name: str = "c") -> dict:
    return {"name": name, "protocol": "infinite", "signal": {"mu": 1.425e-3, "p_cor": 0.4}}


class TestPresets:
    """Test cases for the bundled presets."""

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_build(self, name):
        """Test that every preset builds and names itself."""
        config = get_preset(name)
        assert config.preset == name
        assert config.curves or config.photon_statistics is not None

    @pytest.mark.parametrize("alias, name", sorted(PRESET_ALIASES.items()))
    def test_aliases(self, alias, name):
        """Test that aliases resolve to their presets."""
        assert resolve_preset_name(alias) == name
        assert get_preset(alias) == get_preset(name)

    def test_unknown_preset(self):
        """Test that an unknown preset lists the known names."""
        with pytest.raises(ConfigError) as exc_info:
            get_preset("fig9")
        assert "protocol-comparison" in str(exc_info.value)

    def test_protocol_comparison_curves(self):
        """Test the four curves of the protocol comparison."""
        config = get_preset("fig4")
        protocols = {curve.name: curve.protocol for curve in config.curves}
        assert protocols == {
            "infinite": Protocol.INFINITE,
            "modified_passive3": Protocol.MODIFIED_PASSIVE3,
            "active3": Protocol.ACTIVE3,
            "passive2": Protocol.PASSIVE2,
        }
        assert config.distances == DEFAULT_DISTANCES

    def test_finite_size_curves(self):
        """Test the data sizes of the finite-size preset."""
        config = get_preset("finite-size")
        sizes = [c.fluctuation.n_pulses for c in config.curves if c.fluctuation is not None]
        assert sizes == [1e9, 1e10, 1e11, 1e13]
        assert all(c.fluctuation.n_alpha == 5.0 for c in config.curves if c.fluctuation)

    def test_photon_statistics_preset(self):
        """Test that the photon-statistics preset has no curves."""
        config = get_preset("fig3")
        assert config.curves == ()
        assert config.photon_statistics == PhotonStatisticsConfig()

    def test_source_comparison_marks_coherent_curves(self):
        """Test that the source comparison lists its coherent-source curves as not built."""
        config = get_preset("fig2")
        assert set(config.unavailable_curves) == {"infinite_wcs", "active3_wcs"}
        assert not set(config.unavailable_curves) & {c.name for c in config.curves}
        assert get_preset("fig4").unavailable_curves == {}
        assert from_dict({"curves": [_curve()]}).unavailable_curves == {}

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_round_trip(self, name):
        """Test that the JSON form rebuilds the same configuration."""
        config = get_preset(name)
        assert from_dict(json.loads(json.dumps(config.to_dict()))) == config


class TestFromDict:
    """Test cases for from_dict."""

    def test_minimal(self):
        """Test a configuration with a single curve."""
        config = from_dict({"curves": [_curve()]})
        assert config.distances == DEFAULT_DISTANCES
        assert config.curves[0].signal == IntensityAxis.fixed(1.425e-3, 0.4)
        assert config.preset is None

    def test_unknown_key(self):
        """Test that unknown top-level keys are rejected."""
        with pytest.raises(ConfigError):
            from_dict({"curves": [_curve()], "colour": "blue"})

    def test_not_an_object(self):
        """Test that a JSON array is rejected."""
        with pytest.raises(ConfigError):
            from_dict([_curve()])

    def test_empty_distances(self):
        """Test that curves need at least one distance."""
        with pytest.raises(ConfigError):
            from_dict({"curves": [_curve()], "distances": []})

    def test_descending_distances(self):
        """Test that the distance grid must be ascending."""
        with pytest.raises(ConfigError) as exc_info:
            from_dict({"curves": [_curve()], "distances": [50, 0]})
        assert "ascending" in str(exc_info.value)

    def test_distance_range(self):
        """Test the start/stop/step form of the distance grid."""
        config = from_dict({"curves": [_curve()], "distances": {"start": 0, "stop": 20, "step": 5}})
        assert config.distances == (0.0, 5.0, 10.0, 15.0, 20.0)

    def test_misalignment_out_of_range(self):
        """Test that e_d above 1/2 is reported under the relay section."""
        with pytest.raises(ConfigError) as exc_info:
            from_dict({"curves": [_curve()], "relay": {"e_misalign": 0.6}})
        assert "relay" in str(exc_info.value)

    def test_unknown_protocol(self):
        """Test that an unknown protocol names the curve."""
        curve = dict(_curve(), protocol="bb84")
        with pytest.raises(ConfigError) as exc_info:
            from_dict({"curves": [curve]})
        assert "curves[0]" in str(exc_info.value)

    def test_missing_decoy(self):
        """Test that three-intensity curves need a decoy axis."""
        curve = dict(_curve(), protocol="active3")
        with pytest.raises(ConfigError):
            from_dict({"curves": [curve]})

    def test_duplicate_curve_names(self):
        """Test that curve names must be unique."""
        with pytest.raises(ConfigError):
            from_dict({"curves": [_curve("a"), _curve("a")]})

    def test_unknown_axis_key(self):
        """Test that axis objects reject unknown keys."""
        curve = dict(_curve(), signal={"mean": 0.1})
        with pytest.raises(ConfigError):
            from_dict({"curves": [curve]})

    def test_range_axis(self):
        """Test a sampled signal range."""
        curve = dict(_curve(), signal={"lower": 1e-4, "upper": 1.0, "points": 9, "p_cor": 0.4})
        config = from_dict({"curves": [curve]})
        assert len(config.curves[0].signal.values()) == 9

    def test_options(self):
        """Test that evaluation options are parsed."""
        config = from_dict({"curves": [_curve()], "options": {"variant": "printed"}})
        assert config.options.variant is ClosedFormVariant.PRINTED

    def test_bad_option_value(self):
        """Test that an unknown enum value is a configuration error."""
        with pytest.raises(ConfigError) as exc_info:
            from_dict({"curves": [_curve()], "options": {"variant": "exact"}})
        assert "options" in str(exc_info.value)

    def test_default_options(self):
        """Test the folded infinite-decoy reference and the decoy-level triggered credit."""
        options = from_dict({"curves": [_curve()]}).options
        assert options.fold_detector_efficiency
        assert options.triggered_credit_level is Level.DECOY

    def test_triggered_credit_level_option(self):
        """Test that the triggered credit may be read from the signal pairs."""
        config = from_dict(
            {"curves": [_curve()], "options": {"triggered_credit_level": "signal"}}
        )
        assert config.options.triggered_credit_level is Level.SIGNAL
        assert from_dict(config.to_dict()) == config

    def test_preset_with_overrides(self):
        """Test that explicit keys override a preset."""
        config = from_dict({"preset": "fig4", "distances": [0, 50], "n_max": 40})
        assert config.preset == "protocol-comparison"
        assert config.distances == (0.0, 50.0)
        assert config.n_max == 40
        assert len(config.curves) == 4

    def test_fluctuation_uses_hardware(self):
        """Test that finite-size curves inherit the heralding hardware."""
        curve = {
            "name": "n_1e10",
            "protocol": "modified_passive3",
            "signal": {"mu": 0.623927, "p_cor": 0.1},
            "decoy": {"mu": 0.147577, "p_cor": 0.12},
            "fluctuation": {"n_alpha": 5, "n_pulses": 1e10},
        }
        config = from_dict({"curves": [curve], "hardware": {"eta_trigger": 0.5}})
        assert config.curves[0].fluctuation.eta_a == 0.5

    def test_evaluation_options_carry_run_settings(self):
        """Test that truncation and fiber loss flow into the evaluation options."""
        config = from_dict({"curves": [_curve()], "n_max": 30, "loss_coeff": 0.18})
        options = config.evaluation_options()
        assert options.n_max == 30
        assert options.loss_coeff == 0.18


class TestRunConfig:
    """Test cases for RunConfig validation."""

    def setup_method(self):
        """Set up test fixtures."""
        self.curve = CurveConfig("c", Protocol.INFINITE, IntensityAxis.fixed(1.425e-3))

    def test_nothing_to_compute(self):
        """Test that a run needs curves or photon statistics."""
        with pytest.raises(ConfigError):
            RunConfig()

    def test_thread_count(self):
        """Test that at least one thread is required."""
        with pytest.raises(ConfigError):
            RunConfig(curves=(self.curve,), threads=0)

    def test_truncation(self):
        """Test that n_max below 2 is rejected."""
        with pytest.raises(ConfigError):
            RunConfig(curves=(self.curve,), n_max=1)

    def test_curve_name(self):
        """Test that curve names cannot contain path separators."""
        with pytest.raises(ConfigError):
            CurveConfig("a/b", Protocol.INFINITE, IntensityAxis.fixed(1e-3))

    def test_fluctuation_only_for_modified(self):
        """Test that only modified passive curves take finite-size parameters."""
        with pytest.raises(ConfigError):
            CurveConfig(
                "c",
                Protocol.INFINITE,
                IntensityAxis.fixed(1e-3),
                fluctuation=FluctuationParams(n_alpha=5.0, n_pulses=1e10),
            )

    def test_sweep_specs(self):
        """Test that every curve gets a sweep over the run distances."""
        config = RunConfig(curves=(self.curve,), distances=(0.0, 10.0), refinement_passes=1)
        ((curve, spec),) = config.sweep_specs()
        assert curve is self.curve
        assert spec.distances == (0.0, 10.0)
        assert spec.refinement_passes == 1


class TestLoadConfig:
    """Test cases for load_config and the schema."""

    def test_load(self, tmp_path):
        """Test loading a configuration file."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"name": "demo", "curves": [_curve()]}))
        assert load_config(path).name == "demo"

    def test_missing_file(self, tmp_path):
        """Test that a missing file is a configuration error."""
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        """Test that malformed JSON is a configuration error."""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_schema_lists_every_key(self):
        """Test that the schema covers every key of a serialized run."""
        data = get_preset("fig5").to_dict()
        assert set(data) <= set(CONFIG_SCHEMA["properties"])
        json.dumps(CONFIG_SCHEMA)
