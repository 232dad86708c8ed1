"""
nlskg - Klein-Gordon wave packets and their NLS envelope approximation
Copyright (C) 2026 The nlskg authors

This file is part of nlskg.

nlskg is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

nlskg is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with nlskg. If not, see <https://www.gnu.org/licenses/>.
"""

"""
Command line entry point.

    nlskg validate|residual|energy-check|identities|nonresonance|coeffs [options]

Exit code 0 when every asserted threshold passes, 1 when one fails and 2
on invalid input or a numerical failure.
"""

import argparse
import logging
import sys

from .classes.errors import NlskgError
from .classes.harness import (ExperimentConfig, run_coefficients, run_energy_check, run_identity_suite,
                              run_nonresonance_scan, run_residual_sweep, run_validation, write_report)

logger = logging.getLogger(__name__)

COMMANDS = {
    "validate": run_validation,
    "residual": run_residual_sweep,
    "energy-check": run_energy_check,
    "identities": run_identity_suite,
    "nonresonance": run_nonresonance_scan,
    "coeffs": run_coefficients,
}


def _eps_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma separated numbers, got '{}'".format(text))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nlskg",
        description="Klein-Gordon wave packets and their NLS envelope approximation.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    parser.add_argument("--eps", type=_eps_list,
                        help="comma separated decreasing eps values; for energy-check the first one is used")
    parser.add_argument("--k0", type=float, help="carrier wavenumber")
    parser.add_argument("--s", type=int, help="Sobolev index")
    parser.add_argument("--T0", type=float, help="final slow time")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed of the random trials")
    parser.add_argument("--workers", type=int, help="parallel eps runs")
    parser.add_argument("--dt-halving-check", action="store_true", default=None,
                        help="rerun the largest eps at dt/2")
    parser.add_argument("--synthetic", action="store_true",
                        help="validate: replace the solver by the synthetic self-test")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parser


def load_config(args):
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    overrides = {"k0": args.k0, "s": args.s, "T0": args.T0, "output_dir": args.out, "seed": args.seed,
                 "workers": args.workers, "dt_halving_check": args.dt_halving_check}
    if args.eps is not None:
        key = {"residual": "residual_eps_list", "coeffs": "residual_eps_list",
               "energy-check": "energy_eps"}.get(args.command, "eps_list")
        overrides[key] = args.eps[0] if key == "energy_eps" else args.eps
    return cfg.with_overrides(**overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")

    try:
        cfg = load_config(args)
        if args.command == "validate":
            report = run_validation(cfg, solver="synthetic" if args.synthetic else "kg")
        else:
            report = COMMANDS[args.command](cfg)
        write_report(report, cfg.output_dir)
    except NlskgError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return 2

    failed = [name for name, ok in report.flags.items() if not ok]
    if failed:
        logger.error("failed checks: %s", ", ".join(failed))
        return 1
    logger.info("all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
