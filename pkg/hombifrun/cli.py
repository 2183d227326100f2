# hombif command-line interface.
# Copyright (C) 2024 hombif authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along
# with this program; if not, write to the Free Software Foundation, Inc.,
# 51 Franklin Street, Fifth Floor, Boston, MA 02110-1301 USA.

import argparse
import sys

from hombif import __version__
from hombif.helpers import ConfigError
from hombifrun.config import LOGLEVELS, parse_config
from hombifrun.main import COMMANDS, run
from hombifrun.report import dumps


def get_parser():
    parser = argparse.ArgumentParser(
        prog='hombif',
        description="Detect, certify and continue homoclinic bifurcations "
                    "from a prescribed branch of bounded solutions.")
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    parser.add_argument('command', choices=sorted(COMMANDS),
                        help="what to compute")
    parser.add_argument('--config', metavar='PATH',
                        help="YAML run configuration, defaults to "
                             "$HOMBIF_CONFIG")
    parser.add_argument('--out', metavar='DIR',
                        help="directory for the result files")
    parser.add_argument('--lambda-min', type=float, metavar='LAMBDA',
                        help="left end of the parameter window")
    parser.add_argument('--lambda-max', type=float, metavar='LAMBDA',
                        help="right end of the parameter window")
    parser.add_argument('--grid-step', type=float, metavar='STEP',
                        help="spacing of the Evans scan grid")
    parser.add_argument('--horizon', type=float, metavar='T',
                        help="truncation horizon of the dichotomy "
                             "computations")
    parser.add_argument('--seed', type=int,
                        help="seed of the random samples")
    parser.add_argument('--loglevel', choices=LOGLEVELS)
    return parser


parser = get_parser()


def main(argv=None):
    args = parser.parse_args(argv)
    overrides = {
        'out': args.out,
        'lambda_min': args.lambda_min,
        'lambda_max': args.lambda_max,
        'grid_step': args.grid_step,
        'horizon': args.horizon,
        'seed': args.seed,
        'loglevel': args.loglevel,
    }
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as err:
        data = err.to_dict()
        data['exit_code'] = err.exit_code
        sys.stdout.write(dumps(data))
        return err.exit_code
    return run(args.command, cfg)
