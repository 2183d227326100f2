# hombif runner configuration management.
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

import math
import os

import numpy as np
import yaml

from hombif.core import linear_system
from hombif.helpers import ConfigError, load_config_file, merge_dict
from hombif.homoclinic import ContinuationOptions
from hombif.oracle import ExampleConfig, example_system, param_interval

DEFAULTS = {
    # example-{linear,abs,sin,tan} or a name from SYSTEMS
    'system': 'example-linear',
    'beta': 1.0,
    'n': 2,
    'lambda': [-2.0, 2.0],
    'grid_step': 0.05,
    'horizon': 20.0,
    'tol': 1e-10,
    'window': 1.0,
    'gap_threshold': 1e2,
    'zero_tol': 1e-8,
    'refine_tol': 1e-6,
    'cluster_tol': 1e-5,
    # degrees
    'angle_cap': 60.0,
    'max_depth': 6,
    'workers': 1,
    'seed': 0,
    'out': 'hombif-out',
    'loglevel': 'info',
    'bifurcations': {
        # [lambda_minus, lambda_plus] pairs, the scan window when empty
        'parity': [],
    },
    'branch': {
        # critical values to switch at, all certified ones when empty
        'seeds': [],
        'bvp_horizon': 20.0,
        'mesh_step': 0.02,
        'newton_tol': 1e-8,
        'triviality_floor': 1e-6,
        'norm_cap': 1e6,
        'amplitude': 1e-2,
        'ds0': 0.02,
        'ds_max': 0.1,
        'ds_min': 1e-7,
        'max_steps': 2000,
        'param_margin': 1e-3,
        'domain_margin': 1e-6,
        'crossing_resolution': 2e-2,
        'match_tol': 1e-2,
    },
    'dichotomy': {
        'samples': 5,
        'constants': True,
    },
    'verify': {
        'subspace_samples': 20,
    },
}

LOGLEVELS = ['debug', 'info', 'warning', 'error', 'critical']

# name -> (factory, parameter interval)
SYSTEMS = {
    'saddle': (lambda: linear_system(
        lambda _t, lam: np.array([[-1.0, 0.0], [lam, 1.0]]), 2,
        name="saddle"), (-math.inf, math.inf)),
}


def register_system(name, factory, interval=(-math.inf, math.inf)):
    SYSTEMS[name] = (factory, interval)


class ParseError(ConfigError):
    def __init__(self, message, key=None, line=None):
        super(ParseError, self).__init__(message, key=key, line=line)
        self.key = key
        self.line = line


class ValidationError(ConfigError):
    def __init__(self, violations):
        super(ValidationError, self).__init__(
            "invalid configuration: " + "; ".join(violations),
            violations=violations)
        self.violations = violations


class RunConfig(object):
    """ Fully defaulted and validated run configuration """

    def __init__(self, data):
        self.data = data

    def __getitem__(self, key):
        return self.data[key]

    @property
    def out(self):
        return self.data['out']

    @property
    def window(self):
        lo, hi = self.data['lambda']
        return float(lo), float(hi)

    @property
    def example(self):
        return self.data['system'].startswith('example-')

    def example_config(self):
        return ExampleConfig(beta=float(self.data['beta']), n=self.data['n'],
                             gamma_kind=self.data['system'][len('example-'):])

    def system_spec(self):
        if self.example:
            return example_system(self.example_config())
        return SYSTEMS[self.data['system']][0]()

    def grid(self):
        lo, hi = self.window
        count = int(round((hi - lo) / self.data['grid_step']))
        return np.linspace(lo, hi, count + 1)

    def scan_options(self):
        data = self.data
        return {
            'T': data['horizon'],
            'zero_tol': data['zero_tol'],
            'refine_tol': data['refine_tol'],
            'gap_threshold': data['gap_threshold'],
            'tol': data['tol'],
            'window': data['window'],
            'angle_cap': math.radians(data['angle_cap']),
            'max_depth': data['max_depth'],
            'workers': data['workers'],
        }

    def continuation_options(self):
        branch = self.data['branch']
        return ContinuationOptions(
            horizon=branch['bvp_horizon'],
            dichotomy_horizon=self.data['horizon'],
            gap_threshold=self.data['gap_threshold'],
            tol=self.data['tol'],
            window=self.data['window'],
            mesh_step=branch['mesh_step'],
            newton_tol=branch['newton_tol'],
            triviality_floor=branch['triviality_floor'],
            norm_cap=branch['norm_cap'],
            amplitude=branch['amplitude'],
            ds0=branch['ds0'],
            ds_max=branch['ds_max'],
            ds_min=branch['ds_min'],
            max_steps=branch['max_steps'],
            param_margin=branch['param_margin'],
            domain_margin=branch['domain_margin'],
            crossing_resolution=branch['crossing_resolution'],
            lambda_window=self.window,
        )


def _check_keys(document, defaults, key_lines, prefix=""):
    for key, value in document.items():
        path = prefix + str(key)
        if key not in defaults:
            raise ParseError("unknown configuration key '{0}'".format(path),
                             key=path, line=key_lines.get(path))
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ParseError("'{0}' must be a mapping".format(path),
                                 key=path, line=key_lines.get(path))
            _check_keys(value, defaults[key], key_lines, path + ".")


def _set_dotted(config, key, value):
    node = config
    parts = key.split('.')
    for part in parts[:-1]:
        node = node[part]
    node[parts[-1]] = value


def _positive(violations, config, *keys):
    for key in keys:
        node = config
        for part in key.split('.'):
            node = node[part]
        if not isinstance(node, (int, float)) or not node > 0:
            violations.append("{0} must be positive".format(key))


def system_interval(config):
    name = config['system']
    if name.startswith('example-'):
        return param_interval(name[len('example-'):])
    return SYSTEMS[name][1]


def validate(config):
    """ Collect every violated invariant, raise one ValidationError """
    violations = []
    name = config['system']
    known = name in SYSTEMS or name in ('example-' + k for k in
                                        ('linear', 'abs', 'sin', 'tan'))
    if not known:
        violations.append("unknown system '{0}'".format(name))
    if config['beta'] == 0:
        violations.append("beta must be nonzero")
    n = config['n']
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        violations.append("n must be an integer >= 2")

    _positive(violations, config, 'grid_step', 'horizon', 'tol', 'window',
              'zero_tol', 'refine_tol', 'cluster_tol', 'workers')
    _positive(violations, config, *('branch.' + k for k in (
        'bvp_horizon', 'mesh_step', 'newton_tol', 'triviality_floor',
        'norm_cap', 'amplitude', 'ds0', 'ds_max', 'ds_min', 'max_steps',
        'param_margin', 'domain_margin', 'crossing_resolution',
        'match_tol')))
    if not config['gap_threshold'] > 1:
        violations.append("gap_threshold must exceed 1")
    if not 0 < config['angle_cap'] < 90:
        violations.append("angle_cap must lie in (0, 90) degrees")
    if config['loglevel'] not in LOGLEVELS:
        violations.append("loglevel must be one of " + ", ".join(LOGLEVELS))

    window = config['lambda']
    if not isinstance(window, list) or len(window) != 2:
        violations.append("lambda must be a [min, max] pair")
    else:
        lo, hi = window
        if not lo < hi:
            violations.append("lambda window must be increasing")
        elif known:
            left, right = system_interval(config)
            if not (left < lo and hi < right):
                violations.append(
                    "lambda window [{0:g}, {1:g}] leaves the parameter "
                    "interval ({2:g}, {3:g})".format(lo, hi, left, right))

    for pair in config['bifurcations']['parity']:
        if not isinstance(pair, list) or len(pair) != 2 or \
                not pair[0] < pair[1]:
            violations.append("parity endpoints must be increasing pairs")

    if violations:
        raise ValidationError(violations)


def parse_config(path=None, overrides=None):
    """
    Load PATH (YAML) over DEFAULTS, apply the OVERRIDES dict (dotted keys) and
    validate.  Without PATH the HOMBIF_CONFIG environment variable is used,
    and plain defaults when that is unset too.
    """
    if path is None:
        path = os.environ.get('HOMBIF_CONFIG')
    document, key_lines = {}, {}
    if path is not None:
        try:
            document, key_lines = load_config_file(path)
        except yaml.YAMLError as err:
            mark = getattr(err, 'problem_mark', None)
            raise ParseError("cannot parse {0}: {1}".format(path, err),
                             line=mark.line + 1 if mark else None)
        except OSError as err:
            raise ParseError("cannot read {0}: {1}".format(path, err))
    _check_keys(document, DEFAULTS, key_lines)

    config = merge_dict(DEFAULTS, document)
    overrides = dict(overrides or {})
    ends = (overrides.pop('lambda_min', None),
            overrides.pop('lambda_max', None))
    for key, value in overrides.items():
        if value is not None:
            _set_dotted(config, key, value)
    if isinstance(config['lambda'], (list, tuple)):
        config['lambda'] = list(config['lambda'])
        for index, value in enumerate(ends):
            if value is not None and len(config['lambda']) == 2:
                config['lambda'][index] = value
    validate(config)
    return RunConfig(config)
