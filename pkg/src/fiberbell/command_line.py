"""Command line parsing for the ``simulate`` command"""

import logging
from argparse import ArgumentParser, Namespace
from typing import List, Mapping, Optional, Tuple

from fiberbell.argparse_helpers import CommandListFormatter, VerbosityAction
from fiberbell.config import (
    FiberbellConfig,
    get_modified_config,
    load_config,
    replace_log_level_name,
)
from fiberbell.version import __version__

COMMANDS = {
    "fringe": "Coincidence fringes of the degenerate modes after the fiber",
    "chsh-scan": "CHSH S-parameter map over the two analyzer B angles",
    "dip": "Nonlocal dip scanning the detection fiber of arm B",
    "dispersion": "Intermodal delay of a hollow capillary and the resulting coherence",
    "fit": "Fit fiber channel parameters to observed fringe counts",
}


def _make_common_parser(defaults: Mapping[str, object]) -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "-c",
        "--config",
        metavar="PATH",
        help="Read the experiment configuration from a TOML or JSON file",
    )
    common.add_argument(
        "-o",
        "--out-dir",
        metavar="PATH",
        dest="out_dir",
        help="Write CSV, JSON and SVG results into this directory [default: results]",
    )
    common.add_argument(
        "--seed",
        type=int,
        help="Seed for simulated photon counts [default: 0]",
    )
    common.add_argument(
        "--noiseless",
        action="store_true",
        help="Use expected counts instead of drawing Poisson-distributed ones",
    )
    common.add_argument(
        "-v",
        "--verbose",
        dest="log_level",
        action=VerbosityAction,
        const=-10,
        help="Show steps taken and intermediate results",
    )
    common.add_argument(
        "-q",
        "--quiet",
        dest="log_level",
        action=VerbosityAction,
        const=10,
        help="Reduce amount of output",
    )
    common.set_defaults(**defaults)
    return common


def make_argument_parser(
    defaults: Optional[Mapping[str, object]] = None
) -> ArgumentParser:
    """Create the argument parser object

    :param defaults: Default values for the common options, usually taken from the
                     experiment configuration file

    """
    description = [
        "Simulate fiber transport of spatially entangled photon pairs:",
        *(f"- `{name}`: {help_text}" for name, help_text in COMMANDS.items()),
    ]
    parser = ArgumentParser(
        prog="simulate",
        description="\n".join(description),
        formatter_class=CommandListFormatter,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=__version__,
        help="Show the version of `fiberbell`",
    )
    common = _make_common_parser(defaults or {})
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, help_text in COMMANDS.items():
        subparser = subparsers.add_parser(
            name, parents=[common], help=help_text, description=help_text
        )
        if name == "fit":
            subparser.add_argument(
                "--observations",
                metavar="PATH",
                help="Fringe CSV with the observed counts [default: fit.observations]",
            )
    return parser


def config_defaults(config: FiberbellConfig) -> dict:
    """Return parser defaults for the options which the configuration also holds"""
    return {
        "seed": config["seed"],
        "noiseless": config["noiseless"],
        "out_dir": config["output"]["out_dir"],
        "log_level": logging.getLevelName(config["log_level"]),
    }


def apply_arguments(config: FiberbellConfig, args: Namespace) -> FiberbellConfig:
    """Return the configuration with command line options taking precedence"""
    effective = {**config, "output": dict(config["output"]), "fit": dict(config["fit"])}
    effective["seed"] = args.seed
    effective["noiseless"] = args.noiseless
    effective["log_level"] = args.log_level
    effective["output"]["out_dir"] = args.out_dir
    if getattr(args, "observations", None):
        effective["fit"]["observations"] = args.observations
    replace_log_level_name(effective)
    return effective


def parse_command_line(
    argv: List[str],
) -> Tuple[Namespace, FiberbellConfig, FiberbellConfig]:
    """Return the parsed command line, using defaults from a configuration file

    Also return the effective configuration which combines defaults, the configuration
    read from the path given in ``--config``, and command line arguments.

    Finally, also return the configuration options which differ from defaults.

    """
    # 1. Parse the command line once to find the configuration file
    args = make_argument_parser().parse_args(argv)

    # 2. Load and validate the configuration, failing before any computation
    config = load_config(args.config)

    # 3. Use configuration as defaults for re-parsing command line arguments
    args = make_argument_parser(config_defaults(config)).parse_args(argv)
    effective = apply_arguments(config, args)
    return args, effective, get_modified_config(effective)
