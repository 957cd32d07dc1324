import math
from pathlib import Path

import pytest
import yaml

from faraday_sim.constants import DEFAULT_PRESET_FILE
from faraday_sim.definition import RunConfig, render_config
from faraday_sim.exceptions.config import ConfigurationError, PresetError, UnknownKeyError


@pytest.fixture
def config_file(tmp_path):
    def write(text):
        path = tmp_path.joinpath("run.yaml")
        path.write_text(text)
        return path

    return write


def test_empty_document_uses_defaults(preset):
    config = RunConfig(None, preset)
    assert config.spin == 4.0
    assert config.probe.scattering_time == 1e-3


@pytest.mark.parametrize(
    "loaded, error",
    argvalues=[
        ([1, 2], ConfigurationError),
        ({"probes": {}}, UnknownKeyError),
        ({"spin": 4.25}, ConfigurationError),
        ({"spin": True}, ConfigurationError),
        ({"spin": 0}, ConfigurationError),
    ],
    ids=[
        "not a mapping",
        "unknown section",
        "spin not a half-integer",
        "boolean spin",
        "zero spin",
    ],
)
def test_invalid_documents(loaded, error, preset):
    with pytest.raises(error):
        RunConfig(loaded, preset)


def test_digest_is_stable_under_key_reordering(preset):
    first = RunConfig(
        {"probe": {"scattering_time": 2e-3, "polarization_angle": 0}, "grid": {"n_points": 100}},
        preset,
    )
    second = RunConfig(
        {"grid": {"n_points": 100}, "probe": {"polarization_angle": 0, "scattering_time": 2e-3}},
        preset,
    )
    assert first.digest == second.digest
    assert len(first.digest) == 64


def test_digest_includes_defaults(preset):
    explicit = RunConfig({"polarimeter": {"n_trials": 128}}, preset)
    assert explicit.digest == RunConfig({}, preset).digest
    assert RunConfig({"polarimeter": {"n_trials": 64}}, preset).digest != explicit.digest


def test_resolved_is_plain_data(preset):
    resolved = RunConfig({}, preset).resolved()
    assert yaml.safe_load(yaml.safe_dump(resolved)) == resolved
    assert resolved["preset"]["gf"] == preset.gf


def test_with_override_replaces_exclusive_keys(preset):
    config = RunConfig({"probe": {"scattering_rate": 500.0}}, preset)
    overridden = config.with_override(
        "probe.scattering_time", 2e-3, drop=("scattering_rate", "intensity_ratio")
    )
    assert overridden.probe.scattering_time == 2e-3
    assert overridden.probe.scattering_rate is None
    assert config.probe.scattering_rate == 500.0


def test_with_override_replaces_whole_sections(preset):
    config = RunConfig({"ensemble": {"plateau_time": 0.01}}, preset)
    assert config.with_override("ensemble", {}).ensemble.larmor_spread == 0.0


def test_from_file_renders_preset_values(config_file, preset):
    path = config_file(
        "probe:\n"
        "  linewidth: {{ gamma_rad_per_s }}\n"
        "  polarization_angle: {{ critical_angle_deg }}\n"
        "  scattering_time: 1e-3\n"
    )
    config = RunConfig.from_file(path, seed=9)
    assert config.probe.linewidth == pytest.approx(preset.gamma_rad_per_s)
    assert config.probe.polarization_angle == pytest.approx(math.degrees(math.atan(math.sqrt(2))))
    assert config.polarimeter.rng_seed == 9


def test_from_file_without_path_uses_defaults():
    explicit = RunConfig.from_file(None, DEFAULT_PRESET_FILE)
    assert RunConfig.from_file(None).digest == explicit.digest


def test_undefined_template_variable_is_a_config_error(preset):
    with pytest.raises(ConfigurationError, match="render"):
        render_config("probe:\n  linewidth: {{ linewidth_of_doom }}\n", preset)


def test_invalid_yaml_is_a_config_error(preset):
    with pytest.raises(ConfigurationError, match="YAML"):
        render_config("probe: [unclosed\n", preset)


def test_missing_preset_is_a_preset_error(tmp_path):
    with pytest.raises(PresetError):
        RunConfig.from_file(None, preset_path=tmp_path.joinpath("nope.json"))


def test_missing_config_file_is_an_os_error(tmp_path):
    with pytest.raises(OSError):
        RunConfig.from_file(tmp_path.joinpath("missing.yaml"))


def test_smoketest_template_renders():
    template = Path(__file__).parents[3].joinpath("smoketests", "template.yaml")
    config = RunConfig.from_file(template)
    assert config.probe.polarization_angle == pytest.approx(math.degrees(math.atan(math.sqrt(2))))
    assert config.scan.values == pytest.approx([0.1, 1.0, 10.0])
    assert config.ensemble.larmor_spread == pytest.approx(math.sqrt(2) / 1e-2)
