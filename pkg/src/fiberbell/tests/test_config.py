"""Unit tests for :mod:`fiberbell.config`"""

import json
from textwrap import dedent

import numpy as np
import pytest
import toml

from fiberbell.config import (
    DEFAULT_CONFIG,
    TomlArrayLinesEncoder,
    build_capillary,
    build_channel,
    build_detection,
    build_quadrature,
    build_state,
    channel_gamma,
    channel_values,
    dump_config,
    get_modified_config,
    load_config,
    load_presets,
    replace_log_level_name,
    validate_config,
)
from fiberbell.modes import FIRST_ORDER_BASIS, HG00, HG10, QuadratureSpec
from fiberbell.utils import UM
from fiberbell.verification import ConfigError


@pytest.mark.parametrize(
    "list_value, expect",
    [
        ([], "[\n]"),
        (["HG00"], '[\n    "HG00",\n]'),
        (["HG10", "HG01"], '[\n    "HG10",\n    "HG01",\n]'),
        ([0.0, 45.0, -45.0], "[\n    0.0,\n    45.0,\n    -45.0,\n]"),
    ],
)
def test_toml_array_lines_encoder(list_value, expect):
    result = TomlArrayLinesEncoder().dump_list(list_value)

    assert result == expect


@pytest.mark.parametrize(
    "log_level, expect",
    [
        (0, "NOTSET"),
        (10, "DEBUG"),
        (20, "INFO"),
        (30, "WARNING"),
        (40, "ERROR"),
        (50, "CRITICAL"),
        ("DEBUG", "DEBUG"),
        ("WARNING", "WARNING"),
    ],
)
def test_replace_log_level_name(log_level, expect):
    config = {"log_level": log_level}

    replace_log_level_name(config)

    assert config["log_level"] == expect


def test_load_config_without_path():
    result = load_config(None)

    assert result == DEFAULT_CONFIG
    assert result is not DEFAULT_CONFIG
    assert result["state"] is not DEFAULT_CONFIG["state"]


def test_load_toml_config(tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text(
        dedent(
            """
            seed = 3
            log_level = "INFO"

            [state]
            modes = ["HG00", "HG10", "HG01"]
            schmidt = [2, 1, 1]

            [channel]
            preset = "hollow-30cm"
            mix = 0.5

            [fringe]
            betas_deg = [0, 90]
            """
        )
    )

    result = load_config(str(path))

    assert result["seed"] == 3
    assert result["log_level"] == "INFO"
    assert result["state"]["schmidt"] == [2.0, 1.0, 1.0]
    assert result["state"]["waist_mm"] == 0.8
    assert result["channel"] == {"preset": "hollow-30cm", "mix": 0.5}
    assert result["fringe"]["betas_deg"] == [0.0, 90.0]
    assert result["fringe"]["alpha_step_deg"] == 5.0


def test_load_json_config(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"noiseless": True, "detection": {"pair_rate": 500}}))

    result = load_config(str(path))

    assert result["noiseless"] is True
    assert result["detection"]["pair_rate"] == 500.0


@pytest.mark.parametrize(
    "content, message",
    [
        ("[state]\nwasit_mm = 1.0\n", "Unknown configuration key state.wasit_mm"),
        ("[channel]\nlength = 1.0\n", "Unknown configuration key channel.length"),
        ('[detection]\npair_rate = "fast"\n', "detection.pair_rate must be a number"),
        ('[fringe]\nbetas_deg = [0.0, "x"]\n', "fringe.betas_deg[1] must be a number"),
        ("[chsh]\nmaximize = 1\n", "chsh.maximize must be a boolean"),
        ("[dip]\nmax_order = 2.5\n", "dip.max_order must be an integer"),
        ("seed = true\n", "seed must be an integer"),
        ("state = 3\n", "state must be a table"),
        ("[fringe]\nbetas_deg = 0.0\n", "fringe.betas_deg must be a list"),
        ("[channel]\nmix = \"lots\"\n", "channel.mix must be a number"),
        ('log_level = "LOUD"\n', "log_level must name a logging level"),
        ("seed = = 3\n", "Can't read configuration"),
    ],
)
def test_invalid_config(tmp_path, content, message):
    path = tmp_path / "experiment.toml"
    path.write_text(content)

    with pytest.raises(ConfigError) as exc_info:
        load_config(str(path))

    assert message in str(exc_info.value)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"))


def test_json_config_must_be_a_table(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text("[1, 2]")

    with pytest.raises(ConfigError):
        load_config(str(path))


@pytest.mark.parametrize(
    "values, expect",
    [
        ({}, {}),
        ({"seed": 0}, {}),
        ({"seed": 4}, {"seed": 4}),
        ({"state": {"waist_mm": 1.0}}, {"state": {"waist_mm": 1.0}}),
        (
            {"chsh": {"maximize": False, "alpha1_deg": 0.0}},
            {"chsh": {"maximize": False}},
        ),
        ({"channel": {"mix": 0.1}}, {"channel": {"mix": 0.1}}),
    ],
)
def test_get_modified_config(values, expect):
    result = get_modified_config(validate_config(values))

    assert result == expect


def test_dump_config():
    config = {"seed": 1, "state": {"modes": ["HG00", "HG10"], "waist_mm": 0.8}}

    result = dump_config(config)

    assert '    "HG10",\n' in result
    assert "[state]\n" in result
    assert toml.loads(result) == config


def test_presets():
    presets = load_presets()

    assert set(presets) >= {"ideal", "hollow-30cm", "paper-30cm"}
    assert presets["hollow-30cm"]["mix"] == 0.58
    assert presets["paper-30cm"] == presets["hollow-30cm"]
    assert "aliases" not in presets


def test_channel_values_apply_overrides():
    config = validate_config({"channel": {"preset": "hollow-30cm", "mix": 0.2}})

    result = channel_values(config)

    assert result["mix"] == 0.2
    assert result["theta_rot_deg"] == 6.0


def test_unknown_preset():
    config = validate_config({"channel": {"preset": "lab-5m"}})

    with pytest.raises(ConfigError):
        channel_values(config)


@pytest.mark.parametrize("preset", ["hollow-30cm", "paper-30cm"])
def test_build_preset_channel(preset):
    config = validate_config({"channel": {"preset": preset}})

    result = build_channel(config, FIRST_ORDER_BASIS)

    assert result.t == pytest.approx((1.0, np.sqrt(0.92), np.sqrt(0.92)))
    assert result.theta_rot == pytest.approx(np.radians(6.0))
    assert result.mix == 0.58
    assert result.gamma == pytest.approx(0.870, abs=1e-3)
    assert result.length_m == 0.3


@pytest.mark.parametrize(
    "values, expect",
    [
        ({}, 1.0),
        ({"gamma": 0.5, "delay_ps_per_m": 1.5, "filter_fwhm_nm": 1.0}, 0.5),
        (
            {
                "delay_ps_per_m": 1.5,
                "length_m": 0.0,
                "filter_center_nm": 826.1,
                "filter_fwhm_nm": 1.0,
            },
            1.0,
        ),
    ],
)
def test_channel_gamma(values, expect):
    assert channel_gamma(values) == pytest.approx(expect)


def test_invalid_channel_value():
    config = validate_config({"channel": {"mix": 1.5}})

    with pytest.raises(ConfigError) as exc_info:
        build_channel(config, FIRST_ORDER_BASIS)

    assert "channel" in str(exc_info.value)


def test_build_state():
    config = validate_config({"state": {"modes": ["HG00", "HG10"], "schmidt": [3, 4]}})

    result = build_state(config)

    assert result.basis == (HG00, HG10)
    np.testing.assert_allclose(np.diag(result.coeffs), [0.6, 0.8])


@pytest.mark.parametrize(
    "state",
    [
        {"modes": ["HG00", "HG10"], "schmidt": [1.0]},
        {"modes": ["HG00", "LG10"], "schmidt": [1.0, 1.0]},
        {"modes": ["HG00", "HG00"], "schmidt": [1.0, 1.0]},
        {"modes": ["HG00", "HG10"], "schmidt": [0.0, 0.0]},
    ],
)
def test_invalid_state(state):
    config = validate_config({"state": state})

    with pytest.raises(ConfigError):
        build_state(config)


def test_build_detection():
    config = validate_config({"seed": 12})

    result = build_detection(config)

    assert result.accidentals == pytest.approx(2.0)
    assert result.rng_seed == 12


def test_build_detection_needs_two_singles_rates():
    config = validate_config({"detection": {"singles_rates": [1e4]}})

    with pytest.raises(ConfigError):
        build_detection(config)


def test_build_quadrature():
    config = validate_config({})

    assert build_quadrature(config) == QuadratureSpec(6.0, 200)
    assert build_quadrature(config, "dip") == QuadratureSpec(8.0, 240)


def test_build_capillary():
    result = build_capillary(validate_config({}))

    assert result.r == pytest.approx(12.5 * UM)


def test_invalid_capillary():
    with pytest.raises(ConfigError):
        build_capillary(validate_config({"dispersion": {"n_clad": 0.9}}))
