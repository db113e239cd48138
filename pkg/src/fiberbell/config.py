"""Load, validate and save experiment configuration in TOML or JSON format

A configuration file holds one table per concern. Missing keys take their values from
:data:`DEFAULT_CONFIG`; unknown keys and values of the wrong type are rejected with a
:class:`~fiberbell.verification.ConfigError` naming the dotted key path. Units follow
the key names: degrees, millimeters, micrometers, nanometers, seconds, ps/m and meters.

"""

import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, cast

import numpy as np
import toml

from fiberbell.dispersion import (
    CapillaryParams,
    FilterShape,
    SpectralFilter,
    coherence_factor,
)
from fiberbell.measurement import DetectionConfig
from fiberbell.modes import BeamGeometry, ModeIndex, QuadratureSpec, parse_mode
from fiberbell.state import FiberChannel, TwoPhotonState, spdc_state
from fiberbell.utils import MM, NM, NS, PS, UM
from fiberbell.verification import ConfigError, ZeroStateError

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).with_name("presets.toml")
PRESET_VERSION = 1


class TomlArrayLinesEncoder(toml.TomlEncoder):  # type: ignore[name-defined]
    """Format TOML so list items are each on their own line"""

    def dump_list(self, v: List[object]) -> str:
        """Format a list value"""
        items = "".join(f"\n    {self.dump_value(item)}," for item in v)
        return f"[{items}\n]"


FiberbellConfig = Dict[str, Any]

DEFAULT_CONFIG: FiberbellConfig = {
    "seed": 0,
    "log_level": "WARNING",
    "noiseless": False,
    "state": {
        "modes": ["HG00", "HG10", "HG01"],
        "schmidt": [1.0, 1.0, 1.0],
        "waist_mm": 0.8,
    },
    "channel": {"preset": "ideal"},
    "detection": {
        "pair_rate": 2000.0,
        "integration_time_s": 10.0,
        "coincidence_window_ns": 2.0,
        "singles_rates": [1e4, 1e4],
    },
    "quadrature": {"extent": 6.0, "points": 200},
    "fringe": {
        "betas_deg": [0.0, 45.0, 90.0, -45.0],
        "alpha_start_deg": 0.0,
        "alpha_stop_deg": 360.0,
        "alpha_step_deg": 5.0,
        "delta_pp_mm": 0.0,
        "delta_smf_mm": 0.0,
    },
    "chsh": {
        "alpha1_deg": 0.0,
        "alpha2_deg": -45.0,
        "beta_start_deg": 0.0,
        "beta_stop_deg": 180.0,
        "beta_step_deg": 1.0,
        "maximize": True,
    },
    "dip": {
        "delta_pp_mm": [0.0, 0.4, 0.8],
        "scan_start_mm": -2.4,
        "scan_stop_mm": 3.2,
        "scan_step_mm": 0.02,
        "phi_a_deg": 90.0,
        "phi_b_deg": 90.0,
        "max_order": 20,
        "extent": 8.0,
        "points": 240,
        "smoothing": 1,
        "order_effects": False,
    },
    "dispersion": {
        "radius_um": 12.5,
        "wavelength_nm": 826.0,
        "n_clad": 1.45,
        "length_m": 0.3,
        "filter_center_nm": 826.1,
        "filter_fwhm_nm": 1.0,
        "filter_shape": "gaussian",
    },
    "fit": {
        "parameters": ["theta_rot", "mix", "mix_axis"],
        "observations": "",
    },
    "output": {"out_dir": "results", "svg": True},
}

# Channel keys override the preset and have no defaults of their own
CHANNEL_OVERRIDES: Dict[str, type] = {
    "order_power_loss": float,
    "theta_rot_deg": float,
    "mix": float,
    "mix_axis_deg": float,
    "gamma": float,
    "length_m": float,
    "delay_ps_per_m": float,
    "filter_center_nm": float,
    "filter_fwhm_nm": float,
    "filter_shape": str,
}


def _type_name(expected: type) -> str:
    return {float: "a number", int: "an integer", bool: "a boolean", str: "a string"}[
        expected
    ]


def _check_scalar(path: str, value: object, expected: type) -> object:
    if expected is float and isinstance(value, (int, float)) and not isinstance(
        value, bool
    ):
        return float(value)
    if expected is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if expected in (bool, str) and isinstance(value, expected):
        return value
    raise ConfigError(f"{path} must be {_type_name(expected)}, got {value!r}")


def _check_value(path: str, value: object, default: object) -> object:
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path} must be a list, got {value!r}")
        item_type = type(default[0]) if default else str
        return [
            _check_scalar(f"{path}[{index}]", item, item_type)
            for index, item in enumerate(value)
        ]
    return _check_scalar(path, value, type(default))


def _merge(
    defaults: Mapping[str, object], values: Mapping[str, object], prefix: str = ""
) -> Dict[str, object]:
    merged = copy.deepcopy(dict(defaults))
    for key, value in values.items():
        path = f"{prefix}{key}"
        if prefix == "channel." and key in CHANNEL_OVERRIDES:
            merged[key] = _check_scalar(path, value, CHANNEL_OVERRIDES[key])
        elif key not in defaults:
            raise ConfigError(f"Unknown configuration key {path}")
        elif isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path} must be a table, got {value!r}")
            merged[key] = _merge(
                cast(Mapping[str, object], defaults[key]), value, f"{path}."
            )
        else:
            merged[key] = _check_value(path, value, defaults[key])
    return merged


def replace_log_level_name(config: FiberbellConfig) -> None:
    """Replace numeric log level in configuration with the name of the log level"""
    if isinstance(config.get("log_level"), int):
        config["log_level"] = logging.getLevelName(config["log_level"])


def validate_config(values: Mapping[str, object]) -> FiberbellConfig:
    """Merge configuration values over the defaults, checking keys and types"""
    config = _merge(DEFAULT_CONFIG, values)
    replace_log_level_name(config)
    if not isinstance(logging.getLevelName(config["log_level"]), int):
        raise ConfigError(
            f"log_level must name a logging level, got {config['log_level']!r}"
        )
    return config


def load_config(path: Optional[str]) -> FiberbellConfig:
    """Load the experiment configuration from a TOML or JSON file

    :param path: The configuration file; ``.json`` files are parsed as JSON, anything
                 else as TOML. ``None`` returns the default configuration.

    """
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    config_path = Path(path)
    try:
        if config_path.suffix == ".json":
            values = json.loads(config_path.read_text(encoding="utf-8"))
        else:
            values = toml.load(config_path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"Can't read configuration from {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"The configuration in {path} must be a table")
    logger.debug("Loaded configuration from %s", path)
    return validate_config(values)


def get_modified_config(config: FiberbellConfig) -> FiberbellConfig:
    """Return configuration options which are set to non-default values"""

    def differing(
        values: Mapping[str, object], defaults: Mapping[str, object]
    ) -> Dict[str, object]:
        result: Dict[str, object] = {}
        for key, value in values.items():
            default = defaults.get(key)
            if isinstance(value, dict) and isinstance(default, dict):
                nested = differing(value, default)
                if nested:
                    result[key] = nested
            elif value != default:
                result[key] = value
        return result

    return differing(config, DEFAULT_CONFIG)


def dump_config(config: FiberbellConfig) -> str:
    """Return the configuration in TOML format"""
    return toml.dumps(config, encoder=TomlArrayLinesEncoder())  # type: ignore[call-arg]


def load_presets() -> Dict[str, Dict[str, object]]:
    """Return the channel presets by name, including the aliases of presets"""
    presets = toml.load(PRESETS_PATH)
    version = presets.pop("preset_version", None)
    if version != PRESET_VERSION:
        raise ConfigError(
            f"{PRESETS_PATH} has preset_version {version}, expected {PRESET_VERSION}"
        )
    for alias, name in presets.pop("aliases", {}).items():
        presets[alias] = presets[name]
    return presets


def channel_values(config: FiberbellConfig) -> Dict[str, object]:
    """Return the channel preset with the overrides from the configuration applied"""
    channel = dict(config["channel"])
    name = channel.pop("preset")
    presets = load_presets()
    if name not in presets:
        raise ConfigError(
            f"channel.preset {name!r} is not one of {', '.join(sorted(presets))}"
        )
    values = {**presets[name], **channel}
    for key, value in values.items():
        _check_scalar(f"channel.{key}", value, CHANNEL_OVERRIDES[key])
    return values


def build_geometry(config: FiberbellConfig) -> BeamGeometry:
    try:
        return BeamGeometry(config["state"]["waist_mm"] * MM)
    except ValueError as exc:
        raise ConfigError(f"state.waist_mm: {exc}") from exc


def build_quadrature(
    config: FiberbellConfig, section: str = "quadrature"
) -> QuadratureSpec:
    return QuadratureSpec(
        float(config[section]["extent"]), int(config[section]["points"])
    )


def parse_modes(labels: List[str], path: str) -> Tuple[ModeIndex, ...]:
    try:
        return tuple(parse_mode(label) for label in labels)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def build_state(config: FiberbellConfig) -> TwoPhotonState:
    """Build the Schmidt-form two-photon state of the ``[state]`` table"""
    modes = parse_modes(config["state"]["modes"], "state.modes")
    weights = config["state"]["schmidt"]
    if len(weights) != len(modes):
        raise ConfigError(
            f"state.schmidt has {len(weights)} coefficients for {len(modes)} modes"
        )
    try:
        return spdc_state(list(zip(modes, weights)))
    except (ValueError, ZeroStateError) as exc:
        raise ConfigError(f"state: {exc}") from exc


def build_spectral_filter(values: Mapping[str, object], path: str) -> SpectralFilter:
    try:
        return SpectralFilter(
            cast(float, values["filter_center_nm"]) * NM,
            cast(float, values["filter_fwhm_nm"]) * NM,
            FilterShape(values.get("filter_shape", "gaussian")),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def channel_gamma(values: Mapping[str, object]) -> float:
    """Return the explicit ``gamma``, or the coherence left by intermodal dispersion"""
    if "gamma" in values:
        return cast(float, values["gamma"])
    if "delay_ps_per_m" not in values or "filter_fwhm_nm" not in values:
        return 1.0
    return coherence_factor(
        cast(float, values["delay_ps_per_m"]) * PS,
        cast(float, values.get("length_m", 0.0)),
        build_spectral_filter(values, "channel"),
    )


def build_channel(
    config: FiberbellConfig, basis: Tuple[ModeIndex, ...]
) -> FiberChannel:
    """Instantiate the configured channel on a mode basis"""
    values = channel_values(config)
    try:
        channel = FiberChannel.per_order(
            basis,
            cast(float, values.get("order_power_loss", 1.0)),
            theta_rot=float(np.radians(cast(float, values.get("theta_rot_deg", 0.0)))),
            mix=cast(float, values.get("mix", 0.0)),
            gamma=channel_gamma(values),
            mix_axis=float(np.radians(cast(float, values.get("mix_axis_deg", 0.0)))),
            length_m=cast(float, values.get("length_m", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from exc
    logger.debug("Fiber channel %s", channel)
    return channel


def build_detection(config: FiberbellConfig) -> DetectionConfig:
    detection = config["detection"]
    singles = detection["singles_rates"]
    if len(singles) != 2:
        raise ConfigError(
            f"detection.singles_rates needs two rates, got {len(singles)}"
        )
    try:
        return DetectionConfig(
            detection["pair_rate"],
            detection["integration_time_s"],
            detection["coincidence_window_ns"] * NS,
            (singles[0], singles[1]),
            config["seed"],
        )
    except ValueError as exc:
        raise ConfigError(f"detection: {exc}") from exc


def build_capillary(config: FiberbellConfig) -> CapillaryParams:
    dispersion = config["dispersion"]
    try:
        return CapillaryParams(
            dispersion["radius_um"] * UM,
            dispersion["wavelength_nm"] * NM,
            dispersion["n_clad"],
        )
    except ValueError as exc:
        raise ConfigError(f"dispersion: {exc}") from exc
