#!/usr/bin/env python3
"""
Critical Tori - Main Entry Point
Builds critical curves on spheres, their Hopf and binormal-evolution tori,
and verifies the geometric identities they satisfy.
"""

import sys
import argparse
import logging
from typing import Dict, List, Optional

from config import PipelineConfig, apply_overrides, parse_config_file, parse_tolerance_flags
from errors import ConfigError, CriticalToriError, format_error_context
from pipeline import SUBCOMMANDS, run

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# (flag, config key, help)
FLAGS = [
    ('--energy', 'energy', 'Energy kind (extended_blaschke, total_curvature_type, astigmatism, '
                           'exponential, q_elastic, bending)'),
    ('--lambda', 'lambda', 'Energy index lambda'),
    ('--q', 'q', 'Exponent of the q-elastic energy'),
    ('--epsilon', 'epsilon', 'Sign of the total-curvature-type energy'),
    ('--rho', 'rho', 'Curvature of the base sphere (0 for the plane)'),
    ('--d', 'd', 'First-integral constant'),
    ('--m', 'm', 'Lobes of the closed curve'),
    ('--n', 'n', 'Windings of the closed curve'),
    ('--n-samples', 'n_samples', 'Samples per curvature period (power of two)'),
    ('--n-t', 'n_t', 'Samples along the orbits or fibers (power of two)'),
    ('--m-covers', 'm_covers', 'Covers of the base curve for the Hopf torus'),
    ('--a', 'a', 'BCV base curvature parameter'),
    ('--b', 'b', 'BCV bundle curvature parameter'),
    ('--output-dir', 'output_dir', 'Directory for artifacts'),
    ('--workers', 'workers', 'Threads for the closure scan'),
    ('--stages', 'stages', 'Comma-separated stages for the `stages` subcommand'),
]


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per pipeline stage."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-c', '--config', help='Key-value config file; flags override its values')
    for flag, key, text in FLAGS:
        common.add_argument(flag, dest=key, default=None, help=text)
    common.add_argument('--strict', action='store_const', const='true', default=None,
                        help='Raise instead of warning on sheared lifts, aperiodic orbits and zero curvature')
    common.add_argument('--tol', action='append', metavar='NAME=VALUE',
                        help='Override a check tolerance (repeatable)')
    common.add_argument('-v', '--verbose', action='store_true', help='Enable debug logging')

    parser = argparse.ArgumentParser(
        description="Critical curves on spheres and the tori they generate",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py profile --energy extended_blaschke --lambda 0 --rho 4 --d 2
  python main.py close --m 3 --n 2 --rho 4
  python main.py figure1 --output-dir figure1
  python main.py verify
        """
    )
    parser.add_argument('--version', action='version', version='critical-tori 1.0')
    commands = parser.add_subparsers(dest='subcommand', required=True)
    helps = {
        'profile': 'Build a curvature profile and check its Euler-Lagrange equation',
        'close': 'Search the closed curve gamma_{m,n}',
        'lift': 'Hopf lift and vertical torus (H = kappa/2)',
        'evolve': 'Binormal-evolution torus and its Weingarten relation',
        'recover': 'Recover the energy from the evolution torus',
        'verify': 'Run the acceptance suite',
        'figure1': 'Blaschke gamma_{3,2}: curve, minimal torus and Hopf torus',
        'stages': 'Run the configured stages on one shared curve',
    }
    for name in list(SUBCOMMANDS) + ['stages']:
        commands.add_parser(name, parents=[common], help=helps[name])
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file (if any), then flags."""
    config = parse_config_file(args.config) if args.config else PipelineConfig()
    overrides: Dict[str, Optional[str]] = {key: getattr(args, key) for _, key, _ in FLAGS}
    overrides['strict'] = args.strict
    overrides.update(parse_tolerance_flags(args.tol))
    return apply_overrides(config, overrides)


def read_source_lines(path: Optional[str]) -> List[str]:
    if not path:
        return []
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return handle.read().split('\n')
    except OSError:
        return []


def print_config_error(error: ConfigError, source_lines: List[str]):
    print(f"Configuration Error: {error}")
    context = format_error_context(source_lines, error.line, error.column)
    if context:
        print(context)


def main(argv: Optional[List[str]] = None) -> int:
    """Main function handling command-line interface."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')

    source_lines: List[str] = []
    try:
        config = load_config(args)
        source_lines = config.source_lines
        if args.verbose:
            print(f"Running {args.subcommand}...")
        result = run(args.subcommand, config)
    except ConfigError as e:
        print_config_error(e, source_lines or read_source_lines(args.config))
        return EXIT_CONFIG
    except CriticalToriError as e:
        print(f"Error: {e}")
        return EXIT_FAILED
    except Exception as e:
        logging.getLogger(__name__).debug("unexpected failure", exc_info=True)
        print(f"Unexpected error: {e}")
        return EXIT_FAILED

    print(result.report.generate_report())
    for path in result.artifacts:
        print(f"wrote {path}")
    if not result.passed:
        failed = ", ".join(check.name for check in result.report.failures())
        print(f"Failed checks: {failed}")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
