# Helpers shared by the hombif library and its runner.
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

import copy
import os

import numpy as np
import yaml


class StateSetException(Exception):
    def __init__(self, message):
        super(StateSetException, self).__init__(message)
        self.message = message


class StateSetMeta(type):
    def __getattr__(self, name):
        if name in self.values:
            return name.lower()
        values = ', '.join(map(lambda x: "'" + x + "'", self.values))
        msg = "invalid value '{0}' for StateSet({1})".format(name, values)
        raise StateSetException(msg)

    def __getitem__(self, name):
        return self.__getattr__(name.upper())

    def __contains__(self, value):
        return str(value).upper() in self.values


StateSet = StateSetMeta(str('StateSet'), (), {
    '__doc__': 'Set of states',
    'values': [],
    })


class HalfLine(StateSet):
    values = [
        'PLUS',
        'MINUS',
    ]


class Event(StateSet):
    """ How one end of a continuation run terminated """
    values = [
        'RETURNS_TO_TRIVIAL',
        'PARAM_BOUNDARY',
        'DOMAIN_BOUNDARY',
        'NORM_CAP',
        'STEP_LIMIT',
        # the run left the configured lambda window
        'WINDOW_EXIT',
        # unexplored end of a one-directional run
        'SEED',
    ]


class Classification(StateSet):
    values = [
        # alternative (b), the continuum comes back to the trivial branch
        'RETURNS',
        'UNBOUNDED',
        'DOMAIN_BOUNDARY',
        'INCONCLUSIVE',
    ]


class HombifError(Exception):
    """
    Base of all errors raised by the library.  The ``details`` dict is what
    ends up in the machine-readable error report.
    """
    exit_code = 1

    def __init__(self, message, **details):
        super(HombifError, self).__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        return {
            'error': type(self).__name__,
            'message': self.message,
            'details': {k: _plain(v) for k, v in self.details.items()},
        }


class NumericalError(HombifError):
    exit_code = 3


class ConfigError(HombifError):
    exit_code = 2


class Inconclusive(HombifError):
    exit_code = 4


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(x) for x in value]
    return value


def merge_dict(origin, override):
    def _merge_dict(origin, override):
        """
        Merge simple dict recursively.  If the node is non-dict, return itself,
        otherwise recurse down for each item.
        """
        if isinstance(origin, dict) and isinstance(override, dict):
            for k, v in override.items():
                if k in origin:
                    origin[k] = _merge_dict(origin[k], v)
                else:
                    origin[k] = copy.deepcopy(v)
            return origin

        return copy.deepcopy(override)
    old = copy.deepcopy(origin)
    new = copy.deepcopy(override)
    return _merge_dict(old, new)


def load_config_file(path):
    """
    Load the YAML document from PATH.  Return the (config, key_lines) pair where
    key_lines maps dotted key paths to 1-based line numbers.
    """
    if 'BUILD_MANPAGES_RUNNING' in os.environ:
        return {}, {}

    with open(path, 'r') as fd:
        text = fd.read()

    config = yaml.safe_load(text)
    if not config:
        return {}, {}
    if not isinstance(config, dict):
        raise yaml.YAMLError("Configuration is not dictionary")
    return config, _key_lines(yaml.compose(text))


def _key_lines(node, prefix=""):
    lines = {}
    if not isinstance(node, yaml.MappingNode):
        return lines
    for key_node, value_node in node.value:
        path = prefix + str(key_node.value)
        lines[path] = key_node.start_mark.line + 1
        lines.update(_key_lines(value_node, path + "."))
    return lines


def orthonormalize(vectors, tol=1e-12):
    """
    Modified Gram-Schmidt on the columns of VECTORS, in column order.  Return
    None when a column collapses below TOL (relative to its original norm).
    """
    basis = np.array(vectors, dtype=float, copy=True)
    for i in range(basis.shape[1]):
        original = np.linalg.norm(basis[:, i])
        for j in range(i):
            basis[:, i] -= np.dot(basis[:, j], basis[:, i]) * basis[:, j]
        norm = np.linalg.norm(basis[:, i])
        if original == 0.0 or norm <= tol * max(original, 1.0):
            return None
        basis[:, i] /= norm
    return basis


def sign(value, zero_tol=0.0):
    """ Sign in {-1, 0, +1}, zero when |value| < zero_tol """
    if abs(value) < zero_tol or value == 0.0:
        return 0
    return 1 if value > 0 else -1
