"""Fiberbell - simulate fiber transport of spatially entangled photon pairs"""

import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from fiberbell.analyzer import AnalyzerSetting, analyzer_vector
from fiberbell.bell import ChshSettings, s_maximize, s_scan
from fiberbell.calibration import FitProblem, FitResult, default_parameter, fit_channel
from fiberbell.command_line import parse_command_line
from fiberbell.config import (
    FiberbellConfig,
    build_capillary,
    build_channel,
    build_detection,
    build_geometry,
    build_quadrature,
    build_spectral_filter,
    build_state,
    dump_config,
)
from fiberbell.dispersion import (
    capillary_intermodal_delay,
    coherence_factor,
    effective_index_offset,
)
from fiberbell.measurement import (
    CoincidenceRecord,
    Dip,
    FringeFit,
    coincidence_probability,
    find_dip,
    fit_fringe,
    fringe_scan,
    simulate_counts,
    single_probability,
)
from fiberbell.modes import mode_basis
from fiberbell.output import (
    DIP_COLUMNS,
    DISPERSION_COLUMNS,
    FRINGE_COLUMNS,
    SCAN_COLUMNS,
    fringe_rows,
    plot_dip,
    plot_fringes,
    plot_scan,
    read_observations,
    scan_rows,
    write_csv,
    write_fit_result,
)
from fiberbell.state import Arm, transport_arm_a, uniform_spdc_state
from fiberbell.utils import MM, PS, inclusive_range
from fiberbell.verification import ConfigError, NoDipFoundError, NumericalValidityError

logger = logging.getLogger(__name__)

EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

# Seed streams of the experiments, so that their counts are independent
FRINGE_STREAM, CHSH_STREAM, DIP_STREAM = 0, 1, 2


def _out_dir(config: FiberbellConfig) -> Path:
    return Path(config["output"]["out_dir"])


def _fringe_template(config: FiberbellConfig) -> AnalyzerSetting:
    fringe = config["fringe"]
    return AnalyzerSetting(
        0.0,
        fringe["delta_pp_mm"] * MM,
        fringe["delta_smf_mm"] * MM,
        build_geometry(config),
    )


def cmd_fringe(config: FiberbellConfig) -> Dict[float, FringeFit]:
    """Scan analyzer A for each fixed analyzer B angle and fit the fringes

    :return: The fit of the coincidence probability fringe per analyzer B angle

    """
    state = build_state(config)
    rho = transport_arm_a(state.density(), build_channel(config, state.basis))
    fringe = config["fringe"]
    alphas = np.radians(
        inclusive_range(
            fringe["alpha_start_deg"],
            fringe["alpha_stop_deg"],
            fringe["alpha_step_deg"],
        )
    )
    template = _fringe_template(config)
    detection = build_detection(config)
    quadrature = build_quadrature(config)
    curves: Dict[float, List[CoincidenceRecord]] = {}
    fits: Dict[float, FringeFit] = {}
    rows: List[Sequence[object]] = []
    for index, beta_deg in enumerate(fringe["betas_deg"]):
        setting_b = AnalyzerSetting(float(np.radians(beta_deg)), geom=template.geom)
        records = fringe_scan(
            rho,
            setting_b,
            alphas,
            template,
            detection,
            config["noiseless"],
            (FRINGE_STREAM, index),
            quadrature,
        )
        curves[beta_deg] = records
        rows.extend(fringe_rows(beta_deg, records))
        probabilities = [record.expected_rate for record in records]
        fits[beta_deg] = fit_fringe(alphas, probabilities)
        counts_fit = fit_fringe(alphas, [record.counts for record in records])
        print(
            f"beta {beta_deg:g} deg: visibility {fits[beta_deg].visibility:.4f}"
            f" (counts {counts_fit.visibility:.4f}),"
            f" phase {np.degrees(fits[beta_deg].theta):.2f} deg"
        )
    out_dir = _out_dir(config)
    write_csv(out_dir / "fringe.csv", FRINGE_COLUMNS, rows)
    if config["output"]["svg"]:
        plot_fringes(out_dir / "fringe.svg", curves)
    return fits


def cmd_chsh_scan(config: FiberbellConfig) -> None:
    """Map S over ``(beta1, beta2)`` and search the maximum over all four angles"""
    state = build_state(config)
    rho = transport_arm_a(state.density(), build_channel(config, state.basis))
    chsh = config["chsh"]
    betas = np.radians(
        inclusive_range(
            chsh["beta_start_deg"], chsh["beta_stop_deg"], chsh["beta_step_deg"]
        )
    )
    geom = build_geometry(config)
    detection = build_detection(config)
    quadrature = build_quadrature(config)
    scan = s_scan(
        rho,
        float(np.radians(chsh["alpha1_deg"])),
        float(np.radians(chsh["alpha2_deg"])),
        betas,
        config["noiseless"],
        detection,
        (CHSH_STREAM,),
        geom,
        quadrature,
    )
    beta1, beta2, s_max, delta_s = scan.argmax()
    print(
        f"scan maximum S = {s_max:.4f} ± {delta_s:.4f}"
        f" at beta1 = {np.degrees(beta1):g} deg,"
        f" beta2 = {np.degrees(beta2):g} deg; {int(scan.violated.sum())} of"
        f" {scan.violated.size} pixels violate S <= 2"
    )
    out_dir = _out_dir(config)
    write_csv(out_dir / "chsh_scan.csv", SCAN_COLUMNS, scan_rows(scan))
    if config["output"]["svg"]:
        alphas_deg = (chsh["alpha1_deg"], chsh["alpha2_deg"])
        plot_scan(out_dir / "chsh_scan.svg", scan, alphas_deg)
    if chsh["maximize"]:
        initial = ChshSettings(
            float(np.radians(chsh["alpha1_deg"])),
            float(np.radians(chsh["alpha2_deg"])),
            beta1,
            beta2,
        )
        best = s_maximize(rho, initial, detection, geom, quadrature)
        angles = ", ".join(f"{angle:.2f}" for angle in best.settings.degrees())
        print(f"maximum S = {best.s:.4f} ± {best.delta_s:.4f} at ({angles}) deg")


def cmd_dip(config: FiberbellConfig) -> Dict[float, Dip]:
    """Scan the detection fiber of arm B for each plate offset of analyzer A

    The state is the uniform Schmidt state on the ladder of ``HG_m0`` modes, which
    resolves the position correlation of the photons along the scan direction. Unless
    ``dip.order_effects`` is set, the fiber rotates and mixes the degenerate pair but
    its mode-dependent attenuation and the dephasing between mode orders are left out.

    :return: The dip found in the theory curve per plate offset in meters. Offsets
             without a dip are missing.

    """
    dip_config = config["dip"]
    basis = mode_basis(dip_config["max_order"], ladder=True)
    state = uniform_spdc_state(basis)
    channel = build_channel(config, basis)
    if not dip_config["order_effects"]:
        channel = channel.order_independent()
    rho = transport_arm_a(state.density(), channel)
    geom = build_geometry(config)
    quadrature = build_quadrature(config, "dip")
    detection = build_detection(config)
    positions = (
        inclusive_range(
            dip_config["scan_start_mm"],
            dip_config["scan_stop_mm"],
            dip_config["scan_step_mm"],
        )
        * MM
    )
    phi_a = float(np.radians(dip_config["phi_a_deg"]))
    phi_b = float(np.radians(dip_config["phi_b_deg"]))
    curves: Dict[float, Dict[str, np.ndarray]] = {}
    dips: Dict[float, Dip] = {}
    rows: List[Sequence[object]] = []
    for index, delta_pp_mm in enumerate(dip_config["delta_pp_mm"]):
        delta_pp = delta_pp_mm * MM
        setting_a = AnalyzerSetting(phi_a, delta_pp, geom=geom)
        a = analyzer_vector(setting_a, basis, quadrature)
        p_single_a = single_probability(rho, a, Arm.A)
        curve: Dict[str, List[float]] = {
            "delta_smf": [],
            "theory": [],
            "counts_norm": [],
        }
        for step, delta_smf in enumerate(positions):
            setting_b = AnalyzerSetting(
                phi_b, 0.0, delta_smf, geom, plate_present=False
            )
            b = analyzer_vector(setting_b, basis, quadrature)
            probability = coincidence_probability(rho, a, b)
            p_single_b = single_probability(rho, b, Arm.B)
            record = simulate_counts(
                probability,
                detection,
                (DIP_STREAM, index, step),
                (p_single_a, p_single_b),
                noiseless=config["noiseless"],
            )
            theory = probability / p_single_b if p_single_b > 0 else 0.0
            counts_norm = record.counts / record.singles_b if record.singles_b else 0.0
            curve["delta_smf"].append(delta_smf)
            curve["theory"].append(theory)
            curve["counts_norm"].append(counts_norm)
            rows.append((delta_pp_mm, delta_smf / MM, probability, counts_norm, theory))
        curves[delta_pp] = {key: np.array(values) for key, values in curve.items()}
        try:
            counts_dip = find_dip(
                positions, curve["counts_norm"], dip_config["smoothing"]
            )
            counts_visibility = f"{counts_dip.visibility:.3f}"
        except NoDipFoundError:
            logger.warning(
                "No dip in the simulated counts for ΔPP = %s mm", delta_pp_mm
            )
            counts_visibility = "n/a"
        try:
            dips[delta_pp] = find_dip(positions, curve["theory"])
        except NoDipFoundError:
            logger.warning("No dip in the theory curve for ΔPP = %s mm", delta_pp_mm)
            print(f"delta_pp {delta_pp_mm:g} mm: no dip (counts {counts_visibility})")
            continue
        print(
            f"delta_pp {delta_pp_mm:g} mm:"
            f" dip at {dips[delta_pp].position / MM:.3f} mm,"
            f" visibility {dips[delta_pp].visibility:.3f} (counts {counts_visibility})"
        )
    out_dir = _out_dir(config)
    write_csv(out_dir / "dip.csv", DIP_COLUMNS, rows)
    if config["output"]["svg"]:
        plot_dip(out_dir / "dip.svg", curves)
    return dips


def cmd_dispersion(config: FiberbellConfig) -> float:
    """Print the capillary intermodal delay and the coherence it leaves

    :return: The coherence factor between the first two mode orders

    """
    params = build_capillary(config)
    dispersion = config["dispersion"]
    spectral_filter = build_spectral_filter(dispersion, "dispersion")
    delay = capillary_intermodal_delay(params)
    length = dispersion["length_m"]
    gamma = coherence_factor(delay, length, spectral_filter)
    coherence_time = spectral_filter.coherence_time()
    print(
        f"intermodal delay {delay / PS:.4f} ps/m"
        f" (u/kr = {params.paraxial_ratio():.4f})"
    )
    print(
        f"n_eff - 1: {effective_index_offset(params, params.u1):.4e} (fundamental),"
        f" {effective_index_offset(params, params.u2):.4e} (first higher)"
    )
    print(f"total delay over {length:g} m: {delay * length / PS:.4f} ps")
    print(f"filter coherence time {coherence_time / PS:.4f} ps, gamma {gamma:.6f}")
    write_csv(
        _out_dir(config) / "dispersion.csv",
        DISPERSION_COLUMNS,
        [
            (
                delay / PS,
                length,
                delay * length / PS,
                coherence_time / PS,
                gamma,
                params.paraxial_ratio(),
            )
        ],
    )
    return gamma


def cmd_fit(config: FiberbellConfig) -> FitResult:
    """Fit the free channel parameters to the counts of a fringe CSV"""
    observations = config["fit"]["observations"]
    if not observations:
        raise ConfigError("fit.observations must name a fringe CSV file to fit")
    template_a = _fringe_template(config)
    template_b = AnalyzerSetting(0.0, geom=template_a.geom)
    try:
        records = read_observations(Path(observations), template_a, template_b)
    except OSError as exc:
        raise ConfigError(f"fit.observations: {exc}") from exc
    state = build_state(config)
    try:
        problem = FitProblem(
            records,
            [default_parameter(name) for name in config["fit"]["parameters"]],
            state,
            build_channel(config, state.basis),
            build_detection(config),
            build_quadrature(config),
            config["seed"],
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"fit: {exc}") from exc
    result = fit_channel(problem)
    errors = result.standard_errors
    for name, value in result.estimates.items():
        print(f"{name} = {value:.6g} ± {errors[name]:.2g}")
    print(f"residual {result.residual:.6g} after {result.iterations} evaluations")
    write_fit_result(_out_dir(config) / "fit.json", result)
    return result


COMMANDS: Dict[str, Callable[[FiberbellConfig], object]] = {
    "fringe": cmd_fringe,
    "chsh-scan": cmd_chsh_scan,
    "dip": cmd_dip,
    "dispersion": cmd_dispersion,
    "fit": cmd_fit,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse the command line and run the requested experiment

    :param argv: The command line arguments to the ``simulate`` command
    :return: 0 on success, 2 for an invalid configuration and 3 if a computation turned
             out to be numerically invalid

    """
    if argv is None:
        argv = sys.argv[1:]
    try:
        args, config, config_nondefault = parse_command_line(argv)
    except ConfigError as exc:
        logging.basicConfig()
        logger.error("%s", exc)
        return EXIT_CONFIG_ERROR
    logging.basicConfig(level=args.log_level)
    if args.log_level == logging.INFO:
        formatter = logging.Formatter("%(levelname)s: %(message)s")
        logging.getLogger().handlers[0].setFormatter(formatter)

    # Make sure we don't get excessive debug log output from Matplotlib
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    if args.log_level <= logging.DEBUG:
        print("\n# Effective configuration:\n")
        print(dump_config(config))
        print("\n# Configuration options which differ from defaults:\n")
        print(dump_config(config_nondefault))
        print("\n")

    try:
        COMMANDS[args.command](config)
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG_ERROR
    except NumericalValidityError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL_ERROR
    return 0


if __name__ == "__main__":
    RETVAL = main()
    sys.exit(RETVAL)
