# Artifact writers of the hombif runner.
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

import csv
import json
import math
import os

import numpy as np


def format_cell(value):
    """ Floats with 17 significant digits so the files round-trip exactly """
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return '{:.17g}'.format(float(value))
    return str(value)


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError("cannot serialize {0!r}".format(value))


def _float_token(value):
    if not math.isfinite(value):
        return json.dumps(value)
    text = '{:.17g}'.format(value)
    if not any(c in text for c in '.en'):
        # keep the float type when reading back
        text += '.0'
    return text


def _encode(value, depth):
    if isinstance(value, (np.ndarray, np.generic)):
        value = _json_default(value)
    if value is None or isinstance(value, (bool, str)):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _float_token(value)
    inner = '\n' + ' ' * 4 * (depth + 1)
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = ['{0}: {1}'.format(json.dumps(str(k)), _encode(v, depth + 1))
                 for k, v in value.items()]
    elif isinstance(value, (list, tuple)):
        if not value:
            return '[]'
        items = [_encode(v, depth + 1) for v in value]
    else:
        return _encode(_json_default(value), depth)
    close = '\n' + ' ' * 4 * depth
    brackets = '{}' if isinstance(value, dict) else '[]'
    return brackets[0] + inner + (',' + inner).join(items) + close + \
        brackets[1]


def dumps(data):
    """
    Indented JSON with floats printed like format_cell, 17 significant
    digits, so the files round-trip exactly.
    """
    return _encode(data, 0) + "\n"


class Artifacts(object):
    """ Files written into the output directory by one command """

    def __init__(self, outdir):
        self.outdir = outdir
        self.files = []
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.outdir, name)

    def _record(self, name):
        if name not in self.files:
            self.files.append(name)

    def write_csv(self, name, header, rows):
        with open(self.path(name), 'w', newline='', encoding='utf-8') as fd:
            writer = csv.writer(fd, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(v) for v in row])
        self._record(name)

    def write_json(self, name, data):
        with open(self.path(name), 'w', encoding='utf-8') as fd:
            fd.write(dumps(data))
        self._record(name)

    def read_json(self, name):
        with open(self.path(name), 'r', encoding='utf-8') as fd:
            return json.load(fd)

    def write_manifest(self, command, complete):
        with open(self.path('MANIFEST'), 'w', encoding='utf-8') as fd:
            fd.write(dumps({
                'command': command,
                'files': list(self.files),
                'complete': complete,
            }))
